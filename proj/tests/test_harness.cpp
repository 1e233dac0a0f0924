// SPDX-License-Identifier: Apache-2.0
//
// nbsplit — wideband near-field channel estimation with beam-split-aware
// sparse recovery
// Copyright (C) 2026 the nbsplit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "nbsplit/harness.hpp"

using namespace nbsplit;
using Catch::Approx;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.n_antennas = 16;
    cfg.n_subcarriers = 3;
    cfg.n_users = 1;
    cfg.n_paths = 1;
    cfg.n_pilots = 4;
    cfg.grid_q_phi = 16;
    cfg.grid_q_r = 2;
    cfg.trials = 3;
    cfg.snr_db_list = {0.0, 10.0};
    cfg.estimators = {Estimator::kNbaOmp, Estimator::kNfOmp};
    cfg.master_seed = 77;
    return cfg;
}

std::string csv_without_seconds(const SweepResult& result) {
    std::ostringstream os;
    emit_csv(os, result);
    std::istringstream is(os.str());
    std::string line, out;
    while (std::getline(is, line))
        out += line.substr(0, line.rfind(',')) + "\n";
    return out;
}

} // namespace

TEST_CASE("run_sweep is deterministic given the master seed") {
    const ExperimentConfig cfg = tiny_config();
    const SweepResult a = run_sweep(cfg);
    const SweepResult b = run_sweep(cfg);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t p = 0; p < a.points.size(); ++p) {
        CHECK(a.points[p].noise_var == b.points[p].noise_var);
        for (std::size_t c = 0; c < a.points[p].cells.size(); ++c) {
            CHECK(a.points[p].cells[c].mean_nmse_lin == b.points[p].cells[c].mean_nmse_lin);
            CHECK(a.points[p].cells[c].se_lin == b.points[p].cells[c].se_lin);
        }
    }
    CHECK(csv_without_seconds(a) == csv_without_seconds(b));

    ExperimentConfig other = cfg;
    other.master_seed = 78;
    CHECK(csv_without_seconds(run_sweep(other)) != csv_without_seconds(a));
}

TEST_CASE("run_sweep is independent of the thread count") {
    ExperimentConfig cfg = tiny_config();
    cfg.trials = 8;
    cfg.threads = 1;
    const SweepResult serial = run_sweep(cfg);
    cfg.threads = 4;
    const SweepResult parallel = run_sweep(cfg);
    for (std::size_t p = 0; p < serial.points.size(); ++p)
        for (std::size_t c = 0; c < serial.points[p].cells.size(); ++c) {
            CHECK(serial.points[p].cells[c].mean_nmse_lin ==
                  parallel.points[p].cells[c].mean_nmse_lin);
            CHECK(serial.points[p].cells[c].se_lin == parallel.points[p].cells[c].se_lin);
        }
}

TEST_CASE("disjoint trial blocks pool to the single-run mean") {
    ExperimentConfig whole = tiny_config();
    whole.trials = 5;
    ExperimentConfig head = whole;
    head.trials = 3;
    ExperimentConfig tail = whole;
    tail.trials = 2;
    tail.trial_offset = 3;

    const SweepResult w = run_sweep(whole);
    const SweepResult h = run_sweep(head);
    const SweepResult t = run_sweep(tail);
    for (std::size_t p = 0; p < w.points.size(); ++p)
        for (std::size_t c = 0; c < w.points[p].cells.size(); ++c) {
            const double pooled = (3.0 * h.points[p].cells[c].mean_nmse_lin +
                                   2.0 * t.points[p].cells[c].mean_nmse_lin) /
                                  5.0;
            CHECK(pooled == Approx(w.points[p].cells[c].mean_nmse_lin).epsilon(1e-9));
        }
}

TEST_CASE("csv: empty result and exact round-trip") {
    SweepResult empty;
    std::ostringstream os;
    emit_csv(os, empty);
    CHECK(os.str() == "sweep_value,estimator,nmse_db,stderr_db,trials,seconds\n");

    const SweepResult result = run_sweep(tiny_config());
    std::ostringstream full;
    emit_csv(full, result);
    std::istringstream is(full.str());
    std::string line;
    std::getline(is, line); // header
    std::size_t row = 0;
    std::vector<const CellResult*> cells;
    std::vector<double> values;
    for (const auto& point : result.points)
        for (const auto& cell : point.cells) {
            cells.push_back(&cell);
            values.push_back(point.sweep_value);
        }
    while (std::getline(is, line)) {
        REQUIRE(row < cells.size());
        std::istringstream ls(line);
        std::string field;
        std::getline(ls, field, ',');
        CHECK(std::stod(field) == values[row]); // %.17g round-trips exactly
        std::getline(ls, field, ',');
        CHECK(field == to_string(cells[row]->estimator));
        std::getline(ls, field, ',');
        CHECK(std::stod(field) == cells[row]->mean_nmse_db);
        std::getline(ls, field, ',');
        CHECK(std::stod(field) == cells[row]->stderr_db);
        std::getline(ls, field, ',');
        CHECK(std::stoi(field) == cells[row]->trials);
        ++row;
    }
    CHECK(row == cells.size());
}

TEST_CASE("csv quoting") {
    CHECK(detail::csv_quote("plain") == "plain");
    CHECK(detail::csv_quote("a,b") == "\"a,b\"");
    CHECK(detail::csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("manifest carries every config field and the orientation") {
    const ExperimentConfig cfg = tiny_config().resolved();
    const SweepResult result = run_sweep(cfg);
    const nlohmann::json manifest = make_manifest(cfg, result);

    CHECK(manifest["version"] == std::string(kVersion));
    CHECK(manifest["eta_orientation"] == "inverse");
    CHECK(manifest["eta_orientation_scores"].contains("forward"));

    const nlohmann::json expected = config_to_json(cfg);
    REQUIRE(manifest.contains("config"));
    for (auto it = expected.begin(); it != expected.end(); ++it) {
        INFO("config field " << it.key());
        REQUIRE(manifest["config"].contains(it.key()));
        CHECK(manifest["config"][it.key()] == it.value());
    }
    CHECK(manifest["points"].size() == result.points.size());
    CHECK(manifest["cells"].size() == result.points.size() * cfg.estimators.size());
}

TEST_CASE("pilot overhead accounting reproduces the full-sounding ratio") {
    const ExperimentConfig paper = ExperimentConfig::paper_scale();
    CHECK(paper.pilot_uses(Estimator::kNbaOmp) == 8);
    CHECK(paper.pilot_uses(Estimator::kNfOmp) == 8);
    CHECK(paper.pilot_uses(Estimator::kFfOmp) == 8);
    CHECK(paper.pilot_uses(Estimator::kLs) == 256);
    CHECK(paper.pilot_uses(Estimator::kMmse) == 256);
    const nlohmann::json manifest =
        make_manifest(paper, SweepResult{SweepAxis::kSnrDb, {}, OrientationSelection{}});
    CHECK(manifest["overhead"]["full_to_omp_ratio"] == Approx(32.0));
}

TEST_CASE("config files parse, reject unknown keys, honor comments") {
    std::istringstream is(
        "# comment line\n"
        "n_antennas = 32\n"
        "carrier_hz = 3.0e11   # trailing comment\n"
        "estimators = nba-omp, mmse\n"
        "snr_db_list = -5, 0, 5\n"
        "sweep_axis = bandwidth_hz\n"
        "bandwidth_hz_list = 1e9,2e9\n"
        "master_seed = 123456789012345\n"
        "\n"
        "trials = 7\n");
    const ExperimentConfig cfg = parse_config(is);
    CHECK(cfg.n_antennas == 32);
    CHECK(cfg.carrier_hz == 3.0e11);
    REQUIRE(cfg.estimators.size() == 2);
    CHECK(cfg.estimators[0] == Estimator::kNbaOmp);
    CHECK(cfg.estimators[1] == Estimator::kMmse);
    CHECK(cfg.snr_db_list == std::vector<double>{-5.0, 0.0, 5.0});
    CHECK(cfg.sweep_axis == SweepAxis::kBandwidthHz);
    CHECK(cfg.master_seed == 123456789012345ULL);
    CHECK(cfg.trials == 7);

    std::istringstream unknown("bogus_key = 3\n");
    CHECK_THROWS_AS(parse_config(unknown), std::invalid_argument);
    std::istringstream malformed("n_antennas 32\n");
    CHECK_THROWS_AS(parse_config(malformed), std::invalid_argument);
    std::istringstream bad_value("n_antennas = many\n");
    CHECK_THROWS_AS(parse_config(bad_value), std::invalid_argument);
    std::istringstream bad_estimator("estimators = nba-omp, amp\n");
    CHECK_THROWS_AS(parse_config(bad_estimator), std::invalid_argument);
}

TEST_CASE("resolved config fills the derived defaults") {
    ExperimentConfig cfg;
    const ExperimentConfig rc = cfg.resolved();
    const double fraunhofer = fraunhofer_distance(rc.array_config());
    CHECK(rc.grid_q_phi == 2 * rc.n_antennas);
    CHECK(rc.scene_r_min_m == Approx(0.2 * fraunhofer));
    CHECK(rc.scene_r_max_m == Approx(0.9 * fraunhofer));
    CHECK(rc.grid_r_min_m == Approx(0.05 * fraunhofer));
    CHECK(rc.grid_r_max_m == Approx(fraunhofer));

    ExperimentConfig bad = cfg;
    bad.trials = 0;
    CHECK_THROWS_AS(bad.resolved(), std::invalid_argument);
    bad = cfg;
    bad.estimators.clear();
    CHECK_THROWS_AS(bad.resolved(), std::invalid_argument);
    bad = cfg;
    bad.snr_db_list.clear();
    CHECK_THROWS_AS(bad.resolved(), std::invalid_argument);
    bad = cfg;
    bad.n_pilots = 1; // fewer pilots than paths
    CHECK_THROWS_AS(bad.resolved(), std::invalid_argument);
    bad = cfg;
    bad.scene_r_max_m = 100.0; // beyond the near field
    CHECK_THROWS_AS(bad.resolved(), std::invalid_argument);
}

TEST_CASE("thread resolution: explicit, environment, fallback") {
    CHECK(resolve_threads(3) == 3);
    setenv("NBSPLIT_THREADS", "2", 1);
    CHECK(resolve_threads(0) == 2);
    CHECK(resolve_threads(5) == 5); // explicit wins over the environment
    unsetenv("NBSPLIT_THREADS");
    CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("parallel_for covers every index exactly once") {
    std::vector<std::atomic<int>> hits(257);
    for (auto& h : hits)
        h = 0;
    parallel_for(257, 7, [&](int i) { hits[i].fetch_add(1); });
    for (const auto& h : hits)
        CHECK(h.load() == 1);
}

TEST_CASE("every estimator's NMSE is non-increasing in SNR") {
    ExperimentConfig cfg;
    cfg.n_antennas = 32;
    cfg.n_subcarriers = 8;
    cfg.n_users = 1;
    cfg.n_paths = 2;
    cfg.n_pilots = 8;
    cfg.grid_q_phi = 64;
    cfg.grid_q_r = 3;
    cfg.trials = 200;
    cfg.snr_db_list = {0.0, 5.0, 10.0, 15.0, 20.0};
    cfg.estimators = {Estimator::kNbaOmp, Estimator::kNfOmp, Estimator::kFfOmp, Estimator::kLs,
                      Estimator::kMmse};
    cfg.master_seed = 11;
    const SweepResult sweep = run_sweep(cfg);
    REQUIRE(sweep.points.size() == 5);
    for (std::size_t e = 0; e < cfg.estimators.size(); ++e)
        for (std::size_t p = 1; p < sweep.points.size(); ++p) {
            INFO(to_string(cfg.estimators[e]) << " between " << sweep.points[p - 1].sweep_value
                                              << " and " << sweep.points[p].sweep_value
                                              << " dB SNR");
            CHECK(sweep.points[p].cells[e].mean_nmse_db <=
                  sweep.points[p - 1].cells[e].mean_nmse_db + 0.5);
        }
}

TEST_CASE("estimator name round-trip") {
    for (Estimator e : {Estimator::kNbaOmp, Estimator::kNfOmp, Estimator::kFfOmp, Estimator::kLs,
                        Estimator::kMmse})
        CHECK(estimator_from_string(to_string(e)) == e);
    CHECK_THROWS_AS(estimator_from_string("amp"), std::invalid_argument);
}
