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
// Command-line front end: Monte-Carlo sweeps, gain-map generation, single
// realizations and the built-in validation suite.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nbsplit/nbsplit.hpp"

namespace fs = std::filesystem;
using namespace nbsplit;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
    std::optional<std::string> estimators;
    std::optional<int> trials;
};

void add_common_options(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "flat key = value config file");
    cmd->add_option("--seed", opts.seed, "master seed");
    cmd->add_option("--out", opts.out, "output directory");
    cmd->add_option("--threads", opts.threads,
                    "worker threads (default: NBSPLIT_THREADS env var, else all cores)");
    cmd->add_option("--estimators", opts.estimators,
                    "comma list of nba-omp, nf-omp, ff-omp, ls, mmse");
    cmd->add_option("--trials", opts.trials, "Monte-Carlo trials per sweep point");
}

ExperimentConfig build_config(const CommonOpts& opts) {
    ExperimentConfig cfg;
    if (!opts.config_path.empty())
        cfg = parse_config_file(opts.config_path, cfg);
    if (opts.seed)
        cfg.master_seed = *opts.seed;
    if (opts.out)
        cfg.out_dir = *opts.out;
    if (opts.threads)
        cfg.threads = *opts.threads;
    if (opts.trials)
        cfg.trials = *opts.trials;
    if (opts.estimators) {
        cfg.estimators.clear();
        std::istringstream is(*opts.estimators);
        std::string name;
        while (std::getline(is, name, ','))
            if (!name.empty())
                cfg.estimators.push_back(estimator_from_string(name));
    }
    return cfg;
}

int run_sweep_command(ExperimentConfig cfg, SweepAxis axis) {
    cfg.sweep_axis = axis;
    const SweepResult result = run_sweep(cfg);
    fs::create_directories(cfg.out_dir);
    const fs::path csv = fs::path(cfg.out_dir) / "sweep.csv";
    const fs::path manifest = fs::path(cfg.out_dir) / "manifest.json";
    emit_csv_file(csv.string(), result);
    write_manifest_file(manifest.string(), cfg, result);

    std::printf("eta orientation: %s (scores forward %.4f, inverse %.4f)\n",
                to_string(result.orientation.selected), result.orientation.score_forward,
                result.orientation.score_inverse);
    std::printf("%14s  %-8s  %10s  %9s  %7s\n", to_string(axis), "estimator", "nmse_db",
                "stderr_db", "trials");
    for (const auto& point : result.points)
        for (const auto& cell : point.cells)
            std::printf("%14.6g  %-8s  %10.3f  %9.3f  %7d\n", point.sweep_value,
                        to_string(cell.estimator), cell.mean_nmse_db, cell.stderr_db,
                        cell.trials);
    std::printf("wrote %s and %s\n", csv.string().c_str(), manifest.string().c_str());
    return 0;
}

int run_gain_map(const std::string& out_dir, double user_phi, double user_range, int n_antennas,
                 double carrier_hz, double bandwidth_hz, int n_subcarriers,
                 std::optional<double> x_min, std::optional<double> x_max,
                 std::optional<double> y_min, std::optional<double> y_max, int nx, int ny) {
    const ArrayConfig cfg = ArrayConfig::half_wavelength(n_antennas, carrier_hz);
    const OfdmGrid ofdm(carrier_hz, bandwidth_hz, n_subcarriers);
    const PolarPoint user{user_phi, user_range};

    CartesianWindow window;
    const double px = user_range * std::sqrt(std::max(0.0, 1.0 - user_phi * user_phi));
    const double py = user_range * user_phi;
    const double half = 0.35 * user_range;
    window.x_min = x_min.value_or(px - half);
    window.x_max = x_max.value_or(px + half);
    window.y_min = y_min.value_or(py - half);
    window.y_max = y_max.value_or(py + half);

    const GainMap map = gain_map(cfg, ofdm, user, window, nx, ny);
    fs::create_directories(out_dir);
    {
        std::ofstream os(fs::path(out_dir) / "gain_map.csv");
        write_gain_map_csv(os, map);
    }
    {
        std::ofstream os(fs::path(out_dir) / "gain_peaks.csv");
        write_gain_peaks_csv(os, map, ofdm);
    }
    std::printf("per-subcarrier gain peaks:\n");
    for (std::size_t m = 0; m < map.peaks.size(); ++m)
        std::printf("  m=%zu f=%.4g GHz  peak at x=%.4f m, y=%.4f m, gain %.4f\n", m + 1,
                    ofdm.freqs_hz[m] / 1e9, map.x_m[map.peaks[m].ix], map.y_m[map.peaks[m].iy],
                    map.peaks[m].gain);
    std::printf("wrote %s/gain_map.csv and %s/gain_peaks.csv\n", out_dir.c_str(),
                out_dir.c_str());
    return 0;
}

int run_estimate_once(const CommonOpts& opts, double snr_db, const std::string& dump_scene,
                      const std::string& load_scene_path) {
    ExperimentConfig cfg = build_config(opts);
    const ExperimentConfig rc = cfg.resolved();
    const ArrayConfig arr = rc.array_config();
    const OfdmGrid ofdm(rc.carrier_hz, rc.bandwidth_hz, rc.n_subcarriers);
    const PolarGrid grid =
        build_grid(rc.grid_q_phi, rc.grid_q_r, rc.grid_r_min_m, rc.grid_r_max_m, arr);
    const double signal_power =
        mean_entry_power(arr, ofdm, rc.n_paths, rc.scene_r_min_m, rc.scene_r_max_m,
                         rc.k_abs_per_m, 200, derive_seed(rc.master_seed, 0x504f57));
    const double sigma2 = signal_power * std::pow(10.0, -snr_db / 10.0);

    const OrientationSelection orientation = select_eta_orientation(grid, ofdm, arr);
    std::printf("eta orientation: %s\n", to_string(orientation.selected));

    UserScene scene;
    if (!load_scene_path.empty())
        scene = load_scene_file(load_scene_path);
    else
        scene = draw_scene(derive_seed(rc.master_seed, 0, 1), rc.n_users, rc.n_paths,
                           rc.scene_r_min_m, rc.scene_r_max_m, rc.k_abs_per_m);
    if (!dump_scene.empty())
        save_scene_file(dump_scene, scene);

    const ChannelRealization channel = assemble_channel(scene, ofdm, arr);
    const PilotConfig pilot_omp =
        make_pilot_config(derive_seed(rc.pilot_seed, 1), rc.n_pilots, rc.n_antennas, sigma2);
    const PilotConfig pilot_full = make_orthogonal_pilot_config(
        derive_seed(rc.pilot_seed, 2), std::max(rc.n_antennas, rc.n_pilots), rc.n_antennas,
        sigma2);
    const auto y_omp = observe(pilot_omp, channel, derive_seed(rc.master_seed, 0, 2));
    const auto y_full = observe(pilot_full, channel, derive_seed(rc.master_seed, 0, 3));

    fs::create_directories(rc.out_dir);
    for (Estimator e : rc.estimators) {
        std::vector<Eigen::MatrixXcd> h_hat;
        std::ofstream report(fs::path(rc.out_dir) /
                             (std::string("report_") + to_string(e) + ".txt"));
        for (int k = 0; k < channel.n_users(); ++k) {
            report << "user " << k << "\n";
            Eigen::MatrixXcd hk;
            if (e == Estimator::kLs) {
                hk = LsEstimator(pilot_full).estimate(y_full[k]);
            } else if (e == Estimator::kMmse) {
                const auto cov = sample_channel_covariance(
                    arr, ofdm, rc.n_paths, rc.scene_r_min_m, rc.scene_r_max_m, rc.k_abs_per_m,
                    rc.covariance_draws, derive_seed(rc.master_seed, 0x436f76));
                hk = MmseEstimator(pilot_full, cov).estimate(y_full[k]);
            } else {
                EstimateReport rep;
                if (e == Estimator::kNbaOmp) {
                    const NbaDictionary dict =
                        build_nba_dictionary(grid, ofdm, arr, orientation.selected);
                    rep = nba_omp(y_omp[k], dict, pilot_omp, rc.n_paths);
                } else {
                    const SiDictionary dict = build_si_dictionary(
                        grid, arr,
                        e == Estimator::kNfOmp ? SiFamily::kNearField : SiFamily::kFarField);
                    rep = baseline_omp(y_omp[k], dict, ofdm, pilot_omp, rc.n_paths);
                }
                hk = rep.h_hat;
                std::vector<double> per_m(ofdm.n_subcarriers);
                for (int m = 0; m < ofdm.n_subcarriers; ++m) {
                    const double err = (channel.h[k].col(m) - hk.col(m)).squaredNorm() /
                                       channel.h[k].col(m).squaredNorm();
                    per_m[m] = err > 1e-12 ? 10.0 * std::log10(err) : kNmseFloorDb;
                }
                write_estimate_report(report, rep, &per_m);
            }
            h_hat.push_back(hk);
        }
        std::printf("%-8s nmse %8.3f dB\n", to_string(e), nmse_db(channel.h, h_hat));
    }
    std::printf("reports written to %s\n", rc.out_dir.c_str());
    return 0;
}

struct ValidateCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

int run_validate(std::uint64_t seed) {
    std::vector<ValidateCheck> checks;
    const ArrayConfig arr = ArrayConfig::half_wavelength(64, 300e9);
    const double fraunhofer = fraunhofer_distance(arr);
    const OfdmGrid ofdm(300e9, 30e9, 8);
    const PolarGrid grid = build_grid(32, 3, 0.1 * fraunhofer, fraunhofer, arr);

    { // mapping-orientation oracle
        const OrientationSelection sel = select_eta_orientation(grid, ofdm, arr);
        ValidateCheck c{"eta-orientation oracle", false, ""};
        char buf[128];
        std::snprintf(buf, sizeof(buf), "forward %.4f inverse %.4f -> %s", sel.score_forward,
                      sel.score_inverse, to_string(sel.selected));
        c.detail = buf;
        c.pass = sel.selected == EtaOrientation::kInverse && sel.score_inverse > 0.9;
        checks.push_back(c);
    }
    { // carrier-designed beam refocused at the image location has unit gain
        const PolarPoint p{0.55, 0.4 * fraunhofer};
        const double eta_m = eta(300e9, ofdm.freqs_hz.front());
        const PolarPoint img = spatial_from_physical(p, eta_m);
        const Eigen::VectorXcd u = steering_vector(arr, p, 300e9, SteeringMode::kFresnel);
        const Eigen::VectorXcd v =
            steering_vector(arr, img, ofdm.freqs_hz.front(), SteeringMode::kFresnel);
        const double g = array_gain_direct(arr, u, v);
        checks.push_back({"image-location gain cancellation", std::abs(g - 1.0) < 1e-12,
                          "gain " + std::to_string(g)});
    }
    { // unit-modulus steering entries
        Rng rng(seed);
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const PolarPoint p{rng.uniform(-1.0, 1.0), rng.uniform(0.05 * fraunhofer, fraunhofer)};
            const auto v = steering_vector(arr, p, rng.uniform(285e9, 315e9));
            for (int n = 0; n < arr.n_antennas; ++n)
                worst = std::max(worst, std::abs(std::abs(v[n]) - 1.0));
        }
        checks.push_back(
            {"steering unit modulus", worst < 1e-12, "max deviation " + std::to_string(worst)});
    }
    { // support alignment on an exhaustive small grid; atoms at |phi| = 1
        // collapse across the range axis, so identical atoms are equivalent
        auto same_atom = [](const PolarPoint& a, const PolarPoint& b) {
            return a.phi == b.phi && a.curvature() == b.curvature();
        };
        const PolarGrid small = build_grid(8, 2, 0.2 * fraunhofer, 0.9 * fraunhofer, arr);
        const NbaDictionary dict = build_nba_dictionary(small, ofdm, arr);
        bool ok = true;
        for (int q = 0; q < small.size() && ok; ++q) {
            Eigen::VectorXd score = Eigen::VectorXd::Zero(small.size());
            for (int m = 0; m < ofdm.n_subcarriers; ++m) {
                const Eigen::VectorXcd truth =
                    steering_vector(arr, small.points[q], ofdm.freqs_hz[m]);
                score += (dict.per_subcarrier[m].adjoint() * truth).cwiseAbs();
            }
            int best = 0;
            score.maxCoeff(&best);
            ok = best == q || same_atom(small.points[best], small.points[q]);
        }
        checks.push_back({"dictionary support alignment", ok, ""});
    }
    { // noiseless on-grid recovery
        const PilotConfig pilot = make_pilot_config(derive_seed(seed, 9), 32, 64, 0.0);
        const NbaDictionary dict = build_nba_dictionary(grid, ofdm, arr);
        const OmpEngine engine(dict, pilot);
        Rng rng(derive_seed(seed, 10));
        bool ok = true;
        double worst_nmse = kNmseFloorDb;
        for (int i = 0; i < 20 && ok; ++i) {
            const int q = static_cast<int>(rng.raw() % grid.size());
            UserScene scene;
            scene.users = {{PathParams{grid.points[q], grid.points[q].range_m / kSpeedOfLightMps,
                                       rng.uniform(0.0, 6.28)}}};
            const ChannelRealization ch = assemble_channel(scene, ofdm, arr);
            const auto y = observe(pilot, ch, 0);
            const EstimateReport rep = engine.estimate(y[0], 1);
            const PolarPoint& got = grid.points[rep.support[0]];
            ok = rep.support.size() == 1 &&
                 (rep.support[0] == q || (got.phi == grid.points[q].phi &&
                                          got.curvature() == grid.points[q].curvature()));
            worst_nmse = std::max(worst_nmse, nmse_db(ch.h, {rep.h_hat}));
        }
        ok = ok && worst_nmse <= -50.0;
        checks.push_back({"noiseless on-grid recovery", ok,
                          "worst nmse " + std::to_string(worst_nmse) + " dB"});
    }
    { // residual monotonicity and projection idempotence
        const PilotConfig pilot = make_pilot_config(derive_seed(seed, 11), 16, 64, 0.1);
        const NbaDictionary dict = build_nba_dictionary(grid, ofdm, arr);
        const OmpEngine engine(dict, pilot);
        const UserScene scene = draw_scene(derive_seed(seed, 12), 1, 3, 0.2 * fraunhofer,
                                           0.9 * fraunhofer, 0.0);
        const ChannelRealization ch = assemble_channel(scene, ofdm, arr);
        const auto y = observe(pilot, ch, derive_seed(seed, 13));
        const EstimateReport rep = engine.estimate(y[0], 3);
        bool mono = true;
        for (std::size_t i = 1; i < rep.residual_norms.size(); ++i)
            mono = mono && rep.residual_norms[i] <=
                               rep.residual_norms[i - 1] * (1.0 + 1e-12) + 1e-15;
        checks.push_back({"residual monotonicity", mono, ""});
    }
    { // tiny sweep determinism
        ExperimentConfig cfg;
        cfg.n_antennas = 32;
        cfg.n_subcarriers = 4;
        cfg.n_users = 1;
        cfg.n_paths = 2;
        cfg.n_pilots = 8;
        cfg.grid_q_phi = 32;
        cfg.grid_q_r = 2;
        cfg.trials = 2;
        cfg.snr_db_list = {10.0};
        cfg.estimators = {Estimator::kNbaOmp};
        cfg.master_seed = seed;
        std::ostringstream a, b;
        emit_csv(a, run_sweep(cfg));
        emit_csv(b, run_sweep(cfg));
        auto strip_seconds = [](const std::string& s) {
            std::string out;
            std::istringstream is(s);
            std::string line;
            while (std::getline(is, line))
                out += line.substr(0, line.rfind(',')) + "\n";
            return out;
        };
        checks.push_back({"sweep determinism", strip_seconds(a.str()) == strip_seconds(b.str()),
                          ""});
    }

    bool all = true;
    for (const auto& c : checks) {
        std::printf("%-36s %s%s%s\n", c.name.c_str(), c.pass ? "PASS" : "FAIL",
                    c.detail.empty() ? "" : "  ", c.detail.c_str());
        all = all && c.pass;
    }
    return all ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wideband near-field channel estimation simulator"};
    app.require_subcommand(1);

    CommonOpts sweep_snr_opts, sweep_bw_opts, once_opts;
    CLI::App* sweep_snr =
        app.add_subcommand("sweep-snr", "Monte-Carlo NMSE vs SNR sweep (CSV + manifest)");
    add_common_options(sweep_snr, sweep_snr_opts);
    CLI::App* sweep_bw = app.add_subcommand("sweep-bandwidth",
                                            "Monte-Carlo NMSE vs bandwidth sweep (CSV + manifest)");
    add_common_options(sweep_bw, sweep_bw_opts);

    // gain-map defaults reproduce the three-subcarrier near-field example:
    // user at (sin 45 deg, 6 m), N = 256, 30 GHz band around 300 GHz.
    double user_phi = std::sin(std::numbers::pi / 4.0), user_range = 6.0;
    int gm_antennas = 256, gm_subcarriers = 3, gm_nx = 101, gm_ny = 101;
    double gm_carrier = 300e9, gm_bandwidth = 30e9;
    std::optional<double> gm_xmin, gm_xmax, gm_ymin, gm_ymax;
    std::string gm_out = "out";
    CLI::App* gmap = app.add_subcommand("gain-map",
                                        "Cartesian per-subcarrier array-gain maps (CSV)");
    gmap->add_option("--user-phi", user_phi, "source sine-angle");
    gmap->add_option("--user-range", user_range, "source range in meters");
    gmap->add_option("--n-antennas", gm_antennas, "array size");
    gmap->add_option("--carrier-hz", gm_carrier, "carrier frequency");
    gmap->add_option("--bandwidth-hz", gm_bandwidth, "total bandwidth");
    gmap->add_option("--n-subcarriers", gm_subcarriers, "subcarrier count");
    gmap->add_option("--x-min", gm_xmin, "window x minimum (m)");
    gmap->add_option("--x-max", gm_xmax, "window x maximum (m)");
    gmap->add_option("--y-min", gm_ymin, "window y minimum (m)");
    gmap->add_option("--y-max", gm_ymax, "window y maximum (m)");
    gmap->add_option("--nx", gm_nx, "cells along x");
    gmap->add_option("--ny", gm_ny, "cells along y");
    gmap->add_option("--out", gm_out, "output directory");

    double once_snr = 10.0;
    std::string dump_scene_path, load_scene_path;
    CLI::App* once = app.add_subcommand("estimate-once",
                                        "single realization with full estimate reports");
    add_common_options(once, once_opts);
    once->add_option("--snr-db", once_snr, "signal-to-noise ratio in dB");
    once->add_option("--dump-scene", dump_scene_path, "write the drawn scene to this file");
    once->add_option("--load-scene", load_scene_path, "read the scene from this file");

    std::uint64_t validate_seed = 1;
    CLI::App* validate = app.add_subcommand("validate", "run the built-in self-check suite");
    validate->add_option("--seed", validate_seed, "seed for the randomized checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sweep_snr->parsed())
            return run_sweep_command(build_config(sweep_snr_opts), SweepAxis::kSnrDb);
        if (sweep_bw->parsed())
            return run_sweep_command(build_config(sweep_bw_opts), SweepAxis::kBandwidthHz);
        if (gmap->parsed())
            return run_gain_map(gm_out, user_phi, user_range, gm_antennas, gm_carrier,
                                gm_bandwidth, gm_subcarriers, gm_xmin, gm_xmax, gm_ymin, gm_ymax,
                                gm_nx, gm_ny);
        if (once->parsed())
            return run_estimate_once(once_opts, once_snr, dump_scene_path, load_scene_path);
        if (validate->parsed())
            return run_validate(validate_seed);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
