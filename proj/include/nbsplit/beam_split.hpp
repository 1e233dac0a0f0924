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
// Physical <-> spatial location mappings for wideband beam-split, array-gain
// evaluation (direct sum and Dirichlet-sinc closed form), and Cartesian
// gain-map generation.

#ifndef NBSPLIT_BEAM_SPLIT_HPP
#define NBSPLIT_BEAM_SPLIT_HPP

#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "nbsplit/array.hpp"
#include "nbsplit/channel.hpp"

namespace nbsplit {

// Proportional frequency deviation eta = f_c / f_m.
inline double eta(double carrier_hz, double subcarrier_hz) {
    if (!(carrier_hz > 0.0) || !(subcarrier_hz > 0.0))
        throw std::invalid_argument("eta: frequencies must be positive");
    return carrier_hz / subcarrier_hz;
}

// Where a beam designed for physical location p at the anchor frequency
// focuses at a frequency with deviation eta:
//   phi_bar = eta phi,  r_bar = (1 - eta^2 phi^2) / (eta (1 - phi^2)) r.
// Equivalently (phi, zeta) -> (eta phi, eta zeta) in curvature coordinates.
inline PolarPoint spatial_from_physical(const PolarPoint& p, double eta_value) {
    if (!(eta_value > 0.0))
        throw std::invalid_argument("spatial_from_physical: eta must be positive");
    if (!(p.range_m > 0.0))
        throw std::invalid_argument("spatial_from_physical: range must be positive");
    if (std::abs(p.phi) >= 1.0)
        throw std::invalid_argument("spatial_from_physical: range mapping singular at |phi| = 1");
    const double ep = eta_value * p.phi;
    if (std::abs(ep) >= 1.0)
        throw std::invalid_argument("spatial_from_physical: |eta phi| >= 1 has no valid range image");
    PolarPoint out;
    out.phi = ep;
    out.range_m = (1.0 - ep * ep) / (eta_value * (1.0 - p.phi * p.phi)) * p.range_m;
    return out;
}

// Exact inverse of spatial_from_physical:
//   phi = phi_bar / eta,  r = eta (1 - phi^2) / (1 - eta^2 phi^2) r_bar.
inline PolarPoint physical_from_spatial(const PolarPoint& p_bar, double eta_value) {
    if (!(eta_value > 0.0))
        throw std::invalid_argument("physical_from_spatial: eta must be positive");
    if (!(p_bar.range_m > 0.0))
        throw std::invalid_argument("physical_from_spatial: range must be positive");
    const double phi = p_bar.phi / eta_value;
    if (std::abs(phi) >= 1.0)
        throw std::invalid_argument("physical_from_spatial: |phi_bar / eta| >= 1 has no valid range image");
    if (std::abs(p_bar.phi) >= 1.0)
        throw std::invalid_argument("physical_from_spatial: range mapping singular at |phi_bar| = 1");
    PolarPoint out;
    out.phi = phi;
    out.range_m = eta_value * (1.0 - phi * phi) / (1.0 - p_bar.phi * p_bar.phi) * p_bar.range_m;
    return out;
}

// Angular and range deviation of the spatial image from the physical point.
// delta_r is r_bar - r; delta_r_proportional is the alternative
// (eta - 1) * r_bar form, kept for comparison (they disagree in sign and
// magnitude away from eta = 1).
struct SplitReport {
    double eta = 1.0;
    PolarPoint spatial;
    double delta_phi = 0.0;
    double delta_r = 0.0;
    double delta_r_proportional = 0.0;
};

inline SplitReport split_deltas(const PolarPoint& p, double eta_value) {
    SplitReport rep;
    rep.eta = eta_value;
    rep.spatial = spatial_from_physical(p, eta_value);
    rep.delta_phi = (eta_value - 1.0) * p.phi;
    rep.delta_r = rep.spatial.range_m - p.range_m;
    rep.delta_r_proportional = (eta_value - 1.0) * rep.spatial.range_m;
    return rep;
}

// Normalized array gain |u^H v|^2 / N^2 for unit-modulus steering vectors.
inline double array_gain_direct(const ArrayConfig& cfg, const Eigen::VectorXcd& u,
                                const Eigen::VectorXcd& v) {
    if (u.size() != cfg.n_antennas || v.size() != cfg.n_antennas)
        throw std::invalid_argument("array_gain_direct: vector length mismatch");
    const double n = static_cast<double>(cfg.n_antennas);
    const double ip = std::abs(u.dot(v)); // Eigen dot conjugates the first argument
    return ip * ip / (n * n);
}

namespace detail {

// extended precision so the closed form agrees with the direct phasor sum
// deep into the sidelobes
inline long double dirichlet_core(long double a, int n_antennas) {
    constexpr long double pi = 3.141592653589793238462643383279L;
    const long double s = std::sin(pi * a);
    if (std::abs(s) < 1e-14L)
        return 1.0L;
    return std::sin(n_antennas * pi * a) / (n_antennas * s);
}

} // namespace detail

// Dirichlet sinc sin(N pi a) / (N sin(pi a)); 1 at the removable
// singularities a in Z.
inline double dirichlet_sinc(double a, int n_antennas) {
    return static_cast<double>(detail::dirichlet_core(a, n_antennas));
}

// Closed-form gain |Sigma(d (f_m phi_bar - f_c phi) / c0)|^2. The quadratic
// curvature terms are dropped; the form is exact only when they cancel,
// i.e. f_m zeta_bar = f_c zeta (notably all far-field cases zeta = zeta_bar = 0).
inline double array_gain_sinc(const ArrayConfig& cfg, double phi, [[maybe_unused]] double zeta,
                              double phi_bar, [[maybe_unused]] double zeta_bar, double f_c,
                              double f_m) {
    cfg.validate();
    const long double diff = static_cast<long double>(f_m) * phi_bar -
                             static_cast<long double>(f_c) * phi;
    const long double a =
        static_cast<long double>(cfg.element_spacing_m) * diff / cfg.speed_of_light_m_s;
    const long double s = detail::dirichlet_core(a, cfg.n_antennas);
    return static_cast<double>(s * s);
}

// Argmax of the direct gain between the exact response at `source` (frequency
// f_source) and probe-frequency Fresnel steering, over a (phi, curvature)
// search grid. Curvature is sampled uniformly in 1/(2r) between the bounds.
struct GainPeak {
    PolarPoint location;
    double gain = 0.0;
};

inline GainPeak find_gain_peak(const ArrayConfig& cfg, const PolarPoint& source, double f_source,
                               double f_probe, double phi_lo, double phi_hi, int n_phi,
                               double r_lo, double r_hi, int n_curv) {
    if (n_phi < 2 || n_curv < 1 || !(phi_lo < phi_hi) || !(r_lo > 0.0) || !(r_lo <= r_hi))
        throw std::invalid_argument("find_gain_peak: invalid search window");
    const Eigen::VectorXcd truth = steering_vector(cfg, source, f_source, SteeringMode::kExact);
    const double c_lo = 1.0 / (2.0 * r_hi);
    const double c_hi = 1.0 / (2.0 * r_lo);
    GainPeak best;
    best.gain = -1.0;
    for (int i = 0; i < n_phi; ++i) {
        const double phi = phi_lo + (phi_hi - phi_lo) * i / (n_phi - 1);
        for (int j = 0; j < n_curv; ++j) {
            const double c = n_curv == 1 ? c_lo : c_lo + (c_hi - c_lo) * j / (n_curv - 1);
            // curvature samples are in 1/(2r); convert to zeta for this phi
            const double zeta = (1.0 - phi * phi) * c;
            const Eigen::VectorXcd probe = fresnel_steering(cfg, phi, zeta, f_probe);
            const double g = array_gain_direct(cfg, truth, probe);
            if (g > best.gain) {
                best.gain = g;
                best.location = PolarPoint{phi, 1.0 / (2.0 * c)};
            }
        }
    }
    return best;
}

// ---- Cartesian gain maps ---------------------------------------------------

struct CartesianWindow {
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;

    bool contains(double x, double y) const {
        return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
    }
};

// Per-subcarrier and composite array-gain maps over a Cartesian window.
// x is the broadside direction, y the array axis, both in meters from the
// first element. gain(m)(ix, iy) pairs with (x_m[ix], y_m[iy]).
struct GainMap {
    std::vector<double> x_m;
    std::vector<double> y_m;
    std::vector<Eigen::MatrixXd> per_subcarrier; // M matrices, nx x ny
    Eigen::MatrixXd composite;                   // sum over m, divided by M

    struct Peak {
        int ix = 0, iy = 0;
        double gain = 0.0;
    };
    std::vector<Peak> peaks; // per-subcarrier argmax cells
};

// For every cell, gain between the exact spherical response at `p` evaluated
// at f_m and the carrier-designed Fresnel steering toward the cell.
inline GainMap gain_map(const ArrayConfig& cfg, const OfdmGrid& ofdm, const PolarPoint& p,
                        const CartesianWindow& window, int nx, int ny) {
    cfg.validate();
    if (nx < 2 || ny < 2 || !(window.x_min < window.x_max) || !(window.y_min < window.y_max))
        throw std::invalid_argument("gain_map: empty window or resolution");
    const double px = p.range_m * std::sqrt(std::max(0.0, 1.0 - p.phi * p.phi));
    const double py = p.range_m * p.phi;
    if (!window.contains(px, py))
        throw std::invalid_argument("gain_map: window does not contain the source point");

    const int n_sub = ofdm.n_subcarriers;
    GainMap map;
    map.x_m.resize(nx);
    map.y_m.resize(ny);
    for (int i = 0; i < nx; ++i)
        map.x_m[i] = window.x_min + (window.x_max - window.x_min) * i / (nx - 1);
    for (int j = 0; j < ny; ++j)
        map.y_m[j] = window.y_min + (window.y_max - window.y_min) * j / (ny - 1);
    map.per_subcarrier.assign(n_sub, Eigen::MatrixXd::Zero(nx, ny));
    map.composite = Eigen::MatrixXd::Zero(nx, ny);
    map.peaks.assign(n_sub, GainMap::Peak{});

    std::vector<Eigen::VectorXcd> truth(n_sub);
    for (int m = 0; m < n_sub; ++m)
        truth[m] = steering_vector(cfg, p, ofdm.freqs_hz[m], SteeringMode::kExact);

    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const double x = map.x_m[i];
            const double y = map.y_m[j];
            const double r = std::hypot(x, y);
            if (r < 1e-9)
                continue; // cell at the array origin has no direction
            const double phi = y / r;
            const double zeta = (1.0 - phi * phi) / (2.0 * r);
            const Eigen::VectorXcd probe = fresnel_steering(cfg, phi, zeta, cfg.carrier_freq_hz);
            for (int m = 0; m < n_sub; ++m) {
                const double g = array_gain_direct(cfg, truth[m], probe);
                map.per_subcarrier[m](i, j) = g;
                map.composite(i, j) += g / n_sub;
                if (g > map.peaks[m].gain)
                    map.peaks[m] = GainMap::Peak{i, j, g};
            }
        }
    }
    return map;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

// CSV layout: x_m, y_m, gain_m1..gain_mM, composite.
inline void write_gain_map_csv(std::ostream& os, const GainMap& map) {
    os << "x_m,y_m";
    for (std::size_t m = 0; m < map.per_subcarrier.size(); ++m)
        os << ",gain_m" << (m + 1);
    os << ",composite\n";
    for (std::size_t i = 0; i < map.x_m.size(); ++i) {
        for (std::size_t j = 0; j < map.y_m.size(); ++j) {
            os << detail::format_double(map.x_m[i]) << ',' << detail::format_double(map.y_m[j]);
            for (const auto& g : map.per_subcarrier)
                os << ',' << detail::format_double(g(i, j));
            os << ',' << detail::format_double(map.composite(i, j)) << "\n";
        }
    }
}

// Argmax table: one row per subcarrier.
inline void write_gain_peaks_csv(std::ostream& os, const GainMap& map, const OfdmGrid& ofdm) {
    os << "subcarrier,freq_hz,x_m,y_m,gain\n";
    for (std::size_t m = 0; m < map.peaks.size(); ++m) {
        const auto& pk = map.peaks[m];
        os << (m + 1) << ',' << detail::format_double(ofdm.freqs_hz[m]) << ','
           << detail::format_double(map.x_m[pk.ix]) << ',' << detail::format_double(map.y_m[pk.iy])
           << ',' << detail::format_double(pk.gain) << "\n";
    }
}

} // namespace nbsplit

#endif
