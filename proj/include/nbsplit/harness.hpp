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
//
// Experiment configuration, seeded Monte-Carlo sweeps (NMSE vs SNR and
// NMSE vs bandwidth), CSV emission and the run manifest.

#ifndef NBSPLIT_HARNESS_HPP
#define NBSPLIT_HARNESS_HPP

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nbsplit/array.hpp"
#include "nbsplit/channel.hpp"
#include "nbsplit/dictionary.hpp"
#include "nbsplit/estimators.hpp"
#include "nbsplit/rng.hpp"
#include "nbsplit/version.hpp"

namespace nbsplit {

enum class Estimator { kNbaOmp, kNfOmp, kFfOmp, kLs, kMmse };

inline const char* to_string(Estimator e) {
    switch (e) {
    case Estimator::kNbaOmp: return "nba-omp";
    case Estimator::kNfOmp: return "nf-omp";
    case Estimator::kFfOmp: return "ff-omp";
    case Estimator::kLs: return "ls";
    case Estimator::kMmse: return "mmse";
    }
    return "?";
}

inline Estimator estimator_from_string(const std::string& name) {
    for (Estimator e : {Estimator::kNbaOmp, Estimator::kNfOmp, Estimator::kFfOmp, Estimator::kLs,
                        Estimator::kMmse})
        if (name == to_string(e))
            return e;
    throw std::invalid_argument("unknown estimator: " + name +
                                " (expected nba-omp, nf-omp, ff-omp, ls or mmse)");
}

enum class SweepAxis { kSnrDb, kBandwidthHz };

inline const char* to_string(SweepAxis a) {
    return a == SweepAxis::kSnrDb ? "snr_db" : "bandwidth_hz";
}

// Full experiment description. Zero-valued scene/grid bounds are resolved
// from the array's Fraunhofer distance (see resolved()). Defaults are the
// desk-scale profile; paper_scale() gives the full-size setup.
struct ExperimentConfig {
    // array
    int n_antennas = 64;
    double carrier_hz = 300e9;
    ApertureConvention aperture_convention = ApertureConvention::kNTimesSpacing;
    // ofdm
    double bandwidth_hz = 30e9;
    int n_subcarriers = 16;
    // scene
    int n_users = 2;
    int n_paths = 3;
    double scene_r_min_m = 0.0; // 0 -> 0.2 F
    double scene_r_max_m = 0.0; // 0 -> 0.9 F
    double k_abs_per_m = 0.0;
    // pilots
    int n_pilots = 16;
    std::uint64_t pilot_seed = 1;
    // dictionary grid
    int grid_q_phi = 0;        // 0 -> 2 N
    int grid_q_r = 5;
    double grid_r_min_m = 0.0; // 0 -> 0.05 F
    double grid_r_max_m = 0.0; // 0 -> F
    // sweep
    std::vector<Estimator> estimators = {Estimator::kNbaOmp, Estimator::kNfOmp,
                                         Estimator::kFfOmp, Estimator::kMmse};
    SweepAxis sweep_axis = SweepAxis::kSnrDb;
    std::vector<double> snr_db_list = {0.0, 10.0, 20.0};
    std::vector<double> bandwidth_hz_list = {5e9, 15e9, 30e9, 50e9};
    double fixed_snr_db = 10.0; // SNR used by the bandwidth sweep
    int trials = 100;
    int trial_offset = 0;
    std::uint64_t master_seed = 1;
    int covariance_draws = 1000;
    int threads = 0; // 0 -> NBSPLIT_THREADS env var, else hardware concurrency
    std::string out_dir = "out";

    static ExperimentConfig paper_scale() {
        ExperimentConfig cfg;
        cfg.n_antennas = 256;
        cfg.n_subcarriers = 128;
        cfg.n_users = 8;
        cfg.n_paths = 3;
        cfg.n_pilots = 8;
        cfg.scene_r_min_m = 5.0;
        cfg.scene_r_max_m = 30.0;
        return cfg;
    }

    ArrayConfig array_config() const {
        ArrayConfig arr = ArrayConfig::half_wavelength(n_antennas, carrier_hz);
        arr.aperture_convention = aperture_convention;
        return arr;
    }

    // Copy with every derived field filled in.
    ExperimentConfig resolved() const {
        ExperimentConfig cfg = *this;
        const double fraunhofer = fraunhofer_distance(cfg.array_config());
        if (cfg.scene_r_min_m <= 0.0)
            cfg.scene_r_min_m = 0.2 * fraunhofer;
        if (cfg.scene_r_max_m <= 0.0)
            cfg.scene_r_max_m = 0.9 * fraunhofer;
        if (cfg.grid_q_phi <= 0)
            cfg.grid_q_phi = 2 * cfg.n_antennas;
        if (cfg.grid_r_min_m <= 0.0)
            cfg.grid_r_min_m = 0.05 * fraunhofer;
        if (cfg.grid_r_max_m <= 0.0)
            cfg.grid_r_max_m = fraunhofer;
        cfg.validate();
        return cfg;
    }

    void validate() const {
        array_config(); // throws on bad array parameters
        if (n_subcarriers < 1)
            throw std::invalid_argument("config: n_subcarriers must be >= 1");
        if (n_users < 1 || n_paths < 1)
            throw std::invalid_argument("config: need at least one user and one path");
        if (n_pilots < n_paths)
            throw std::invalid_argument("config: need n_pilots >= n_paths");
        if (trials < 1)
            throw std::invalid_argument("config: trials must be >= 1");
        if (estimators.empty())
            throw std::invalid_argument("config: empty estimator list");
        const auto& sweep =
            sweep_axis == SweepAxis::kSnrDb ? snr_db_list : bandwidth_hz_list;
        if (sweep.empty())
            throw std::invalid_argument("config: empty sweep list");
        const double fraunhofer = fraunhofer_distance(array_config());
        if (scene_r_max_m > 0.0 && scene_r_max_m > fraunhofer * (1.0 + 1e-12))
            throw std::invalid_argument("config: scene ranges reach beyond the near field");
    }

    // Channel uses spent on pilot signaling: OMP-family estimators consume the
    // P sounding beams; LS/MMSE need a full sounding of at least N uses.
    int pilot_uses(Estimator e) const {
        if (e == Estimator::kLs || e == Estimator::kMmse)
            return std::max(n_antennas, n_pilots);
        return n_pilots;
    }
};

struct CellResult {
    Estimator estimator = Estimator::kNbaOmp;
    double mean_nmse_db = 0.0;
    double stderr_db = 0.0;    // delta-method image of the linear standard error
    double mean_nmse_lin = 0.0;
    double se_lin = 0.0;       // standard error of the linear mean
    int trials = 0;
    int errors = 0;
    int pilot_uses = 0;
    double seconds = 0.0;      // summed estimator compute time across trials
};

struct PointResult {
    double sweep_value = 0.0;
    double noise_var = 0.0;     // resolved sigma_n^2 at this point
    double signal_power = 0.0;  // mean per-entry received power anchoring it
    std::vector<CellResult> cells;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::kSnrDb;
    std::vector<PointResult> points;
    OrientationSelection orientation;
};

// Runs fn(0..n-1) on a small worker pool. Used for Monte-Carlo trials; the
// caller owns result slots indexed by trial, so scheduling order never
// affects the reduction.
inline void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
    n_threads = std::max(1, std::min(n_threads, n));
    if (n_threads == 1) {
        for (int i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t)
        workers.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                fn(i);
        });
    for (auto& w : workers)
        w.join();
}

inline int resolve_threads(int configured) {
    if (configured > 0)
        return configured;
    if (const char* env = std::getenv("NBSPLIT_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0)
            return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace detail {

struct PointEngines {
    std::optional<NbaDictionary> nba_dict;
    std::optional<SiDictionary> nf_dict;
    std::optional<SiDictionary> ff_dict;
    std::optional<OmpEngine> nba;
    std::optional<OmpEngine> nf;
    std::optional<OmpEngine> ff;
    std::optional<LsEstimator> ls;
    std::optional<MmseEstimator> mmse;
    PilotConfig pilot_omp;
    PilotConfig pilot_full;
};

} // namespace detail

// Deterministic seeded sweep: every (point, trial) cell draws its scene and
// noise from seeds mixed out of (master seed, point index, trial index), so
// results are independent of execution order and thread count.
inline SweepResult run_sweep(const ExperimentConfig& raw_config) {
    const ExperimentConfig config = raw_config.resolved();
    const ArrayConfig arr = config.array_config();
    const int n_threads = resolve_threads(config.threads);

    const bool axis_snr = config.sweep_axis == SweepAxis::kSnrDb;
    const std::vector<double>& sweep = axis_snr ? config.snr_db_list : config.bandwidth_hz_list;

    SweepResult result;
    result.axis = config.sweep_axis;

    // Orientation oracle runs once, at the widest bandwidth of the sweep.
    {
        double max_bw = config.bandwidth_hz;
        if (!axis_snr)
            for (double b : config.bandwidth_hz_list)
                max_bw = std::max(max_bw, b);
        const OfdmGrid oracle_ofdm(config.carrier_hz, max_bw, config.n_subcarriers);
        const PolarGrid oracle_grid = build_grid(config.grid_q_phi, config.grid_q_r,
                                                 config.grid_r_min_m, config.grid_r_max_m, arr);
        result.orientation = select_eta_orientation(oracle_grid, oracle_ofdm, arr);
    }

    bool want[5] = {false, false, false, false, false};
    for (Estimator e : config.estimators)
        want[static_cast<int>(e)] = true;

    for (std::size_t point = 0; point < sweep.size(); ++point) {
        const double snr_db = axis_snr ? sweep[point] : config.fixed_snr_db;
        const double bandwidth = axis_snr ? config.bandwidth_hz : sweep[point];

        const OfdmGrid ofdm(config.carrier_hz, bandwidth, config.n_subcarriers);
        // SNR = 1 / sigma_n^2 relative to the mean per-entry received power
        // of the scene ensemble (seeded, so the scale is reproducible)
        const double signal_power = mean_entry_power(
            arr, ofdm, config.n_paths, config.scene_r_min_m, config.scene_r_max_m,
            config.k_abs_per_m, 200, derive_seed(config.master_seed, 0x504f57, point));
        const double sigma2 = signal_power * std::pow(10.0, -snr_db / 10.0);
        const PolarGrid grid = build_grid(config.grid_q_phi, config.grid_q_r,
                                          config.grid_r_min_m, config.grid_r_max_m, arr);

        detail::PointEngines eng;
        eng.pilot_omp = make_pilot_config(derive_seed(config.pilot_seed, 1), config.n_pilots,
                                          config.n_antennas, sigma2);
        const bool want_full = want[static_cast<int>(Estimator::kLs)] ||
                               want[static_cast<int>(Estimator::kMmse)];
        if (want_full)
            eng.pilot_full = make_orthogonal_pilot_config(
                derive_seed(config.pilot_seed, 2),
                std::max(config.n_antennas, config.n_pilots), config.n_antennas, sigma2);
        if (want[static_cast<int>(Estimator::kNbaOmp)]) {
            eng.nba_dict = build_nba_dictionary(grid, ofdm, arr, result.orientation.selected);
            eng.nba.emplace(*eng.nba_dict, eng.pilot_omp);
        }
        if (want[static_cast<int>(Estimator::kNfOmp)]) {
            eng.nf_dict = build_si_dictionary(grid, arr, SiFamily::kNearField);
            eng.nf.emplace(*eng.nf_dict, ofdm, eng.pilot_omp);
        }
        if (want[static_cast<int>(Estimator::kFfOmp)]) {
            eng.ff_dict = build_si_dictionary(grid, arr, SiFamily::kFarField);
            eng.ff.emplace(*eng.ff_dict, ofdm, eng.pilot_omp);
        }
        if (want[static_cast<int>(Estimator::kLs)])
            eng.ls.emplace(eng.pilot_full);
        if (want[static_cast<int>(Estimator::kMmse)]) {
            const auto cov = sample_channel_covariance(
                arr, ofdm, config.n_paths, config.scene_r_min_m, config.scene_r_max_m,
                config.k_abs_per_m, config.covariance_draws,
                derive_seed(config.master_seed, 0x436f76, point));
            eng.mmse.emplace(eng.pilot_full, cov);
        }

        const int n_est = static_cast<int>(config.estimators.size());
        std::vector<std::vector<double>> nmse_lin(n_est,
                                                  std::vector<double>(config.trials, 0.0));
        std::vector<std::vector<char>> failed(n_est, std::vector<char>(config.trials, 0));
        std::vector<std::vector<double>> seconds(n_est,
                                                 std::vector<double>(config.trials, 0.0));

        parallel_for(config.trials, n_threads, [&](int trial) {
            const std::uint64_t trial_seed =
                derive_seed(config.master_seed, point, config.trial_offset + trial);
            const UserScene scene =
                draw_scene(derive_seed(trial_seed, 1), config.n_users, config.n_paths,
                           config.scene_r_min_m, config.scene_r_max_m, config.k_abs_per_m);
            const ChannelRealization channel = assemble_channel(scene, ofdm, arr);
            const auto y_omp = observe(eng.pilot_omp, channel, derive_seed(trial_seed, 2));
            std::vector<std::vector<Eigen::VectorXcd>> y_full;
            if (want_full)
                y_full = observe(eng.pilot_full, channel, derive_seed(trial_seed, 3));

            for (int e = 0; e < n_est; ++e) {
                const Estimator which = config.estimators[e];
                const auto start = std::chrono::steady_clock::now();
                try {
                    std::vector<Eigen::MatrixXcd> h_hat;
                    h_hat.reserve(channel.h.size());
                    for (int k = 0; k < channel.n_users(); ++k) {
                        switch (which) {
                        case Estimator::kNbaOmp:
                            h_hat.push_back(eng.nba->estimate(y_omp[k], config.n_paths).h_hat);
                            break;
                        case Estimator::kNfOmp:
                            h_hat.push_back(eng.nf->estimate(y_omp[k], config.n_paths).h_hat);
                            break;
                        case Estimator::kFfOmp:
                            h_hat.push_back(eng.ff->estimate(y_omp[k], config.n_paths).h_hat);
                            break;
                        case Estimator::kLs:
                            h_hat.push_back(eng.ls->estimate(y_full[k]));
                            break;
                        case Estimator::kMmse:
                            h_hat.push_back(eng.mmse->estimate(y_full[k]));
                            break;
                        }
                    }
                    nmse_lin[e][trial] = nmse_linear(channel.h, h_hat);
                } catch (const std::exception&) {
                    failed[e][trial] = 1; // contract violations are per-cell, not fatal
                }
                seconds[e][trial] =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
            }
        });

        PointResult pr;
        pr.sweep_value = sweep[point];
        pr.noise_var = sigma2;
        pr.signal_power = signal_power;
        for (int e = 0; e < n_est; ++e) {
            CellResult cell;
            cell.estimator = config.estimators[e];
            cell.trials = config.trials;
            cell.pilot_uses = config.pilot_uses(cell.estimator);
            double sum = 0.0, sum_sq = 0.0, time_sum = 0.0;
            int ok = 0;
            for (int t = 0; t < config.trials; ++t) {
                time_sum += seconds[e][t];
                if (failed[e][t]) {
                    ++cell.errors;
                    continue;
                }
                sum += nmse_lin[e][t];
                sum_sq += nmse_lin[e][t] * nmse_lin[e][t];
                ++ok;
            }
            cell.seconds = time_sum;
            if (ok > 0) {
                cell.mean_nmse_lin = sum / ok;
                const double var =
                    ok > 1 ? std::max(0.0, (sum_sq - sum * sum / ok) / (ok - 1)) : 0.0;
                cell.se_lin = std::sqrt(var / ok);
                cell.mean_nmse_db = cell.mean_nmse_lin > std::pow(10.0, kNmseFloorDb / 10.0)
                                        ? 10.0 * std::log10(cell.mean_nmse_lin)
                                        : kNmseFloorDb;
                cell.stderr_db = cell.mean_nmse_lin > 0.0
                                     ? 10.0 / std::numbers::ln10 * cell.se_lin / cell.mean_nmse_lin
                                     : 0.0;
            }
            pr.cells.push_back(cell);
        }
        result.points.push_back(std::move(pr));
    }
    return result;
}

// ---- CSV + manifest ---------------------------------------------------------

namespace detail {

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::string format_seconds(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace detail

// One row per (sweep point, estimator). All columns except `seconds` are
// deterministic functions of (config, master seed).
inline void emit_csv(std::ostream& os, const SweepResult& result) {
    os << "sweep_value,estimator,nmse_db,stderr_db,trials,seconds\n";
    for (const auto& point : result.points)
        for (const auto& cell : point.cells)
            os << detail::format_double(point.sweep_value) << ','
               << detail::csv_quote(to_string(cell.estimator)) << ','
               << detail::format_double(cell.mean_nmse_db) << ','
               << detail::format_double(cell.stderr_db) << ',' << cell.trials << ','
               << detail::format_seconds(cell.seconds) << "\n";
}

inline void emit_csv_file(const std::string& path, const SweepResult& result) {
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("emit_csv: cannot open " + path);
    emit_csv(os, result);
    if (!os)
        throw std::runtime_error("emit_csv: write failed for " + path);
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["n_antennas"] = cfg.n_antennas;
    j["carrier_hz"] = cfg.carrier_hz;
    j["aperture_convention"] =
        cfg.aperture_convention == ApertureConvention::kNTimesSpacing ? "n_d" : "n_minus_1_d";
    j["bandwidth_hz"] = cfg.bandwidth_hz;
    j["n_subcarriers"] = cfg.n_subcarriers;
    j["n_users"] = cfg.n_users;
    j["n_paths"] = cfg.n_paths;
    j["scene_r_min_m"] = cfg.scene_r_min_m;
    j["scene_r_max_m"] = cfg.scene_r_max_m;
    j["k_abs_per_m"] = cfg.k_abs_per_m;
    j["n_pilots"] = cfg.n_pilots;
    j["pilot_seed"] = cfg.pilot_seed;
    j["grid_q_phi"] = cfg.grid_q_phi;
    j["grid_q_r"] = cfg.grid_q_r;
    j["grid_r_min_m"] = cfg.grid_r_min_m;
    j["grid_r_max_m"] = cfg.grid_r_max_m;
    std::vector<std::string> names;
    for (Estimator e : cfg.estimators)
        names.push_back(to_string(e));
    j["estimators"] = names;
    j["sweep_axis"] = to_string(cfg.sweep_axis);
    j["snr_db_list"] = cfg.snr_db_list;
    j["bandwidth_hz_list"] = cfg.bandwidth_hz_list;
    j["fixed_snr_db"] = cfg.fixed_snr_db;
    j["trials"] = cfg.trials;
    j["trial_offset"] = cfg.trial_offset;
    j["master_seed"] = cfg.master_seed;
    j["covariance_draws"] = cfg.covariance_draws;
    j["threads"] = cfg.threads;
    j["out_dir"] = cfg.out_dir;
    return j;
}

// Sidecar manifest: resolved config, code version, the oracle-selected
// mapping orientation, and the pilot-overhead accounting.
inline nlohmann::json make_manifest(const ExperimentConfig& raw_config,
                                    const SweepResult& result) {
    const ExperimentConfig cfg = raw_config.resolved();
    nlohmann::json j;
    j["version"] = kVersion;
    j["config"] = config_to_json(cfg);
    j["eta_orientation"] = to_string(result.orientation.selected);
    j["eta_orientation_scores"] = {{"forward", result.orientation.score_forward},
                                   {"inverse", result.orientation.score_inverse}};
    int full_uses = cfg.n_pilots;
    for (Estimator e : cfg.estimators)
        full_uses = std::max(full_uses, cfg.pilot_uses(e));
    j["overhead"] = {{"omp_channel_uses", cfg.n_pilots},
                     {"full_channel_uses", std::max(cfg.n_antennas, cfg.n_pilots)},
                     {"full_to_omp_ratio",
                      static_cast<double>(std::max(cfg.n_antennas, cfg.n_pilots)) /
                          cfg.n_pilots}};
    nlohmann::json points = nlohmann::json::array();
    for (const auto& point : result.points)
        points.push_back({{"sweep_value", point.sweep_value},
                          {"noise_var", point.noise_var},
                          {"signal_power", point.signal_power}});
    j["points"] = points;
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& point : result.points)
        for (const auto& cell : point.cells)
            cells.push_back({{"sweep_value", point.sweep_value},
                             {"estimator", to_string(cell.estimator)},
                             {"errors", cell.errors},
                             {"pilot_uses", cell.pilot_uses}});
    j["cells"] = cells;
    return j;
}

inline void write_manifest_file(const std::string& path, const ExperimentConfig& config,
                                const SweepResult& result) {
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("write_manifest: cannot open " + path);
    os << make_manifest(config, result).dump(2) << "\n";
}

// ---- flat key = value config files -------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

inline std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s))
        out.push_back(std::stod(item));
    return out;
}

} // namespace detail

// Applies one `key = value` setting; throws std::invalid_argument on unknown
// keys or malformed values.
inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                               const std::string& value) {
    try {
        if (key == "n_antennas") cfg.n_antennas = std::stoi(value);
        else if (key == "carrier_hz") cfg.carrier_hz = std::stod(value);
        else if (key == "aperture_convention") {
            if (value == "n_d") cfg.aperture_convention = ApertureConvention::kNTimesSpacing;
            else if (value == "n_minus_1_d")
                cfg.aperture_convention = ApertureConvention::kNMinus1TimesSpacing;
            else throw std::invalid_argument("expected n_d or n_minus_1_d");
        }
        else if (key == "bandwidth_hz") cfg.bandwidth_hz = std::stod(value);
        else if (key == "n_subcarriers") cfg.n_subcarriers = std::stoi(value);
        else if (key == "n_users") cfg.n_users = std::stoi(value);
        else if (key == "n_paths") cfg.n_paths = std::stoi(value);
        else if (key == "scene_r_min_m") cfg.scene_r_min_m = std::stod(value);
        else if (key == "scene_r_max_m") cfg.scene_r_max_m = std::stod(value);
        else if (key == "k_abs_per_m") cfg.k_abs_per_m = std::stod(value);
        else if (key == "n_pilots") cfg.n_pilots = std::stoi(value);
        else if (key == "pilot_seed") cfg.pilot_seed = std::stoull(value);
        else if (key == "grid_q_phi") cfg.grid_q_phi = std::stoi(value);
        else if (key == "grid_q_r") cfg.grid_q_r = std::stoi(value);
        else if (key == "grid_r_min_m") cfg.grid_r_min_m = std::stod(value);
        else if (key == "grid_r_max_m") cfg.grid_r_max_m = std::stod(value);
        else if (key == "estimators") {
            cfg.estimators.clear();
            for (const auto& name : detail::split_list(value))
                cfg.estimators.push_back(estimator_from_string(name));
        }
        else if (key == "sweep_axis") {
            if (value == "snr_db") cfg.sweep_axis = SweepAxis::kSnrDb;
            else if (value == "bandwidth_hz") cfg.sweep_axis = SweepAxis::kBandwidthHz;
            else throw std::invalid_argument("expected snr_db or bandwidth_hz");
        }
        else if (key == "snr_db_list") cfg.snr_db_list = detail::parse_double_list(value);
        else if (key == "bandwidth_hz_list")
            cfg.bandwidth_hz_list = detail::parse_double_list(value);
        else if (key == "fixed_snr_db") cfg.fixed_snr_db = std::stod(value);
        else if (key == "trials") cfg.trials = std::stoi(value);
        else if (key == "trial_offset") cfg.trial_offset = std::stoi(value);
        else if (key == "master_seed") cfg.master_seed = std::stoull(value);
        else if (key == "covariance_draws") cfg.covariance_draws = std::stoi(value);
        else if (key == "threads") cfg.threads = std::stoi(value);
        else if (key == "out_dir") cfg.out_dir = value;
        else throw std::invalid_argument("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw std::invalid_argument("malformed value for config key " + key + ": " + value);
    }
}

inline ExperimentConfig parse_config(std::istream& is, ExperimentConfig cfg = {}) {
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        apply_config_entry(cfg, detail::trim(line.substr(0, eq)),
                           detail::trim(line.substr(eq + 1)));
    }
    return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path, ExperimentConfig cfg = {}) {
    std::ifstream is(path);
    if (!is)
        throw std::invalid_argument("config file not readable: " + path);
    return parse_config(is, std::move(cfg));
}

} // namespace nbsplit

#endif
