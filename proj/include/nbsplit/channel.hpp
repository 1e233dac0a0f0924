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

#ifndef NBSPLIT_CHANNEL_HPP
#define NBSPLIT_CHANNEL_HPP

#include <cmath>
#include <complex>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nbsplit/array.hpp"
#include "nbsplit/rng.hpp"

namespace nbsplit {

// OFDM subcarrier frequencies f_m = f_c + (B/M) (m - 1 - (M-1)/2), m = 1..M.
// Symmetric about the carrier, spacing B/M.
inline std::vector<double> subcarrier_frequencies(double carrier_hz, double bandwidth_hz,
                                                  int n_subcarriers) {
    if (n_subcarriers < 1)
        throw std::invalid_argument("subcarrier_frequencies: need at least one subcarrier");
    if (!(carrier_hz > 0.0) || bandwidth_hz < 0.0)
        throw std::invalid_argument("subcarrier_frequencies: carrier must be positive, bandwidth non-negative");
    if (bandwidth_hz >= 2.0 * carrier_hz)
        throw std::invalid_argument("subcarrier_frequencies: bandwidth too large, edge frequency not positive");
    std::vector<double> freqs(n_subcarriers);
    const double spacing = bandwidth_hz / n_subcarriers;
    const double center = 0.5 * (n_subcarriers - 1);
    for (int m = 0; m < n_subcarriers; ++m)
        freqs[m] = carrier_hz + spacing * (m - center);
    return freqs;
}

struct OfdmGrid {
    double carrier_hz = 0.0;
    double bandwidth_hz = 0.0;
    int n_subcarriers = 0;
    std::vector<double> freqs_hz;

    OfdmGrid() = default;
    OfdmGrid(double carrier, double bandwidth, int m)
        : carrier_hz(carrier), bandwidth_hz(bandwidth), n_subcarriers(m),
          freqs_hz(subcarrier_frequencies(carrier, bandwidth, m)) {}
};

// Power gain of a path: free-space spreading times molecular absorption,
// (c0 / (4 pi f r))^2 * exp(-k_abs r).
inline double path_gain_magnitude_sq(double freq_hz, double range_m, double k_abs_per_m) {
    if (!(freq_hz > 0.0) || !(range_m > 0.0))
        throw std::invalid_argument("path_gain_magnitude_sq: frequency and range must be positive");
    if (k_abs_per_m < 0.0)
        throw std::invalid_argument("path_gain_magnitude_sq: absorption coefficient must be >= 0");
    const double amp = kSpeedOfLightMps / (4.0 * std::numbers::pi * freq_hz * range_m);
    return amp * amp * std::exp(-k_abs_per_m * range_m);
}

// One propagation path. The complex gains are derived quantities:
// alpha_m = sqrt(path_gain_magnitude_sq(f_m, r, k_abs)) * exp(j phase), with
// a single frequency-flat phase per path.
struct PathParams {
    PolarPoint location;
    double delay_s = 0.0;
    double phase_rad = 0.0;
};

inline Eigen::VectorXcd path_gains(const PathParams& path, const OfdmGrid& grid,
                                   double k_abs_per_m) {
    Eigen::VectorXcd gains(grid.n_subcarriers);
    for (int m = 0; m < grid.n_subcarriers; ++m) {
        const double mag = std::sqrt(
            path_gain_magnitude_sq(grid.freqs_hz[m], path.location.range_m, k_abs_per_m));
        gains[m] = std::polar(mag, path.phase_rad);
    }
    return gains;
}

struct UserScene {
    std::vector<std::vector<PathParams>> users; // [K][L]
    double k_abs_per_m = 0.0;

    int n_users() const { return static_cast<int>(users.size()); }
};

// Random scene: phi ~ unif[-1, 1], r ~ unif[r_min, r_max], delay r / c0,
// gain phase ~ unif[0, 2 pi). Draw order is per-user, per-path,
// (phi, range, phase); fixed so a seed pins the scene exactly.
inline UserScene draw_scene(std::uint64_t seed, int n_users, int n_paths, double r_min_m,
                            double r_max_m, double k_abs_per_m = 0.0) {
    if (n_users < 1 || n_paths < 1)
        throw std::invalid_argument("draw_scene: need at least one user and one path");
    if (!(r_min_m > 0.0) || !(r_max_m >= r_min_m))
        throw std::invalid_argument("draw_scene: empty or non-positive range window");
    Rng rng(seed);
    UserScene scene;
    scene.k_abs_per_m = k_abs_per_m;
    scene.users.resize(n_users);
    for (auto& paths : scene.users) {
        paths.resize(n_paths);
        for (auto& p : paths) {
            p.location.phi = rng.uniform(-1.0, 1.0);
            p.location.range_m = rng.uniform(r_min_m, r_max_m);
            p.delay_s = p.location.range_m / kSpeedOfLightMps;
            p.phase_rad = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
    }
    return scene;
}

struct ChannelRealization {
    std::vector<Eigen::MatrixXcd> h; // per user, N x M
    UserScene scene;

    int n_users() const { return static_cast<int>(h.size()); }
};

// Per-path channel without the sqrt(N/L) scaling: column m equals
// gains[m] * (1/sqrt(N)) * steering(f_m) * exp(-j 2 pi delay f_m).
inline Eigen::MatrixXcd path_channel(const ArrayConfig& cfg, const OfdmGrid& grid,
                                     const PolarPoint& location, double delay_s,
                                     const Eigen::VectorXcd& gains,
                                     SteeringMode mode = SteeringMode::kExact) {
    if (gains.size() != grid.n_subcarriers)
        throw std::invalid_argument("path_channel: gains/subcarrier count mismatch");
    Eigen::MatrixXcd h(cfg.n_antennas, grid.n_subcarriers);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.n_antennas));
    for (int m = 0; m < grid.n_subcarriers; ++m) {
        const double fm = grid.freqs_hz[m];
        const std::complex<double> rot = std::polar(1.0, -2.0 * std::numbers::pi * delay_s * fm);
        h.col(m) = (gains[m] * rot * scale) * steering_vector(cfg, location, fm, mode);
    }
    return h;
}

// Ground-truth wideband channel: h_k[m] = sqrt(N/L) sum_l alpha_{k,m,l}
// a_{f_m}(phi_l, r_l) exp(-j 2 pi tau_l f_m). The steering response is
// evaluated at each subcarrier frequency (exact spherical by default).
inline ChannelRealization assemble_channel(const UserScene& scene, const OfdmGrid& grid,
                                           const ArrayConfig& cfg,
                                           SteeringMode mode = SteeringMode::kExact) {
    cfg.validate();
    if (scene.users.empty())
        throw std::invalid_argument("assemble_channel: empty scene");
    ChannelRealization out;
    out.scene = scene;
    out.h.reserve(scene.users.size());
    for (const auto& paths : scene.users) {
        if (paths.empty())
            throw std::invalid_argument("assemble_channel: user without paths");
        const double scale = std::sqrt(static_cast<double>(cfg.n_antennas) /
                                       static_cast<double>(paths.size()));
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(cfg.n_antennas, grid.n_subcarriers);
        for (const auto& p : paths)
            h += path_channel(cfg, grid, p.location, p.delay_s,
                              path_gains(p, grid, scene.k_abs_per_m), mode);
        out.h.push_back(scale * h);
    }
    return out;
}

// ---- scene file format ----------------------------------------------------
// Line-oriented text, full double precision. Layout:
//   # nbsplit scene v1
//   k_abs_per_m <value>
//   path <user> <phi> <range_m> <delay_s> <phase_rad>     (one line per path)

inline void save_scene(std::ostream& os, const UserScene& scene) {
    os.precision(17);
    os << "# nbsplit scene v1\n";
    os << "k_abs_per_m " << scene.k_abs_per_m << "\n";
    for (std::size_t k = 0; k < scene.users.size(); ++k)
        for (const auto& p : scene.users[k])
            os << "path " << k << ' ' << p.location.phi << ' ' << p.location.range_m << ' '
               << p.delay_s << ' ' << p.phase_rad << "\n";
}

inline UserScene load_scene(std::istream& is) {
    UserScene scene;
    std::string line;
    bool saw_kabs = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "k_abs_per_m") {
            ls >> scene.k_abs_per_m;
            saw_kabs = true;
        } else if (tag == "path") {
            std::size_t user = 0;
            PathParams p;
            ls >> user >> p.location.phi >> p.location.range_m >> p.delay_s >> p.phase_rad;
            if (ls.fail())
                throw std::invalid_argument("load_scene: malformed path record: " + line);
            if (user >= scene.users.size())
                scene.users.resize(user + 1);
            scene.users[user].push_back(p);
        } else {
            throw std::invalid_argument("load_scene: unknown record: " + line);
        }
    }
    if (!saw_kabs || scene.users.empty())
        throw std::invalid_argument("load_scene: incomplete scene file");
    for (const auto& paths : scene.users)
        if (paths.empty())
            throw std::invalid_argument("load_scene: user without paths");
    return scene;
}

inline void save_scene_file(const std::string& path, const UserScene& scene) {
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("save_scene_file: cannot open " + path);
    save_scene(os, scene);
}

inline UserScene load_scene_file(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("load_scene_file: cannot open " + path);
    return load_scene(is);
}

} // namespace nbsplit

#endif
