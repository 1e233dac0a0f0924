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

#ifndef NBSPLIT_ARRAY_HPP
#define NBSPLIT_ARRAY_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nbsplit {

inline constexpr double kSpeedOfLightMps = 2.99792458e8;

// Convention for the aperture D entering the Fraunhofer distance 2 D^2 / lambda.
enum class ApertureConvention { kNTimesSpacing, kNMinus1TimesSpacing };

// Uniform linear array on the y-axis, element n (1-based) at y = (n-1) d.
// Broadside is the +x direction.
struct ArrayConfig {
    int n_antennas = 0;
    double carrier_freq_hz = 0.0;
    double element_spacing_m = 0.0;
    double speed_of_light_m_s = kSpeedOfLightMps;
    ApertureConvention aperture_convention = ApertureConvention::kNTimesSpacing;

    static ArrayConfig half_wavelength(int n_antennas, double carrier_freq_hz) {
        ArrayConfig cfg;
        cfg.n_antennas = n_antennas;
        cfg.carrier_freq_hz = carrier_freq_hz;
        cfg.element_spacing_m = 0.5 * kSpeedOfLightMps / carrier_freq_hz;
        cfg.validate();
        return cfg;
    }

    double wavelength_m() const { return speed_of_light_m_s / carrier_freq_hz; }

    double aperture_m() const {
        const int n = aperture_convention == ApertureConvention::kNTimesSpacing
                          ? n_antennas
                          : n_antennas - 1;
        return n * element_spacing_m;
    }

    void validate() const {
        if (n_antennas < 2)
            throw std::invalid_argument("ArrayConfig: n_antennas must be >= 2");
        if (!(carrier_freq_hz > 0.0))
            throw std::invalid_argument("ArrayConfig: carrier_freq_hz must be positive");
        if (!(element_spacing_m > 0.0))
            throw std::invalid_argument("ArrayConfig: element_spacing_m must be positive");
    }
};

// Location in sine-angle/range coordinates: phi = sin(angle from broadside),
// range in meters from the first array element. Physical points have
// |phi| <= 1; spatial images of physical points may fall slightly outside.
struct PolarPoint {
    double phi = 0.0;
    double range_m = 0.0;

    // Wavefront curvature proxy zeta = (1 - phi^2) / (2 r).
    double curvature() const { return (1.0 - phi * phi) / (2.0 * range_m); }

    bool is_physical() const { return std::abs(phi) <= 1.0; }
};

namespace detail {

inline void check_antenna_index(const ArrayConfig& cfg, int antenna) {
    if (antenna < 1 || antenna > cfg.n_antennas)
        throw std::out_of_range("antenna index " + std::to_string(antenna) +
                                " outside 1.." + std::to_string(cfg.n_antennas));
}

inline void check_range(const PolarPoint& p) {
    if (!(p.range_m > 0.0))
        throw std::invalid_argument("PolarPoint: range must be positive");
}

} // namespace detail

// Spherical-wavefront distance from the point to antenna n (1-based):
// sqrt(r^2 + ((n-1) d)^2 - 2 r (n-1) d phi).
inline double exact_distance(const ArrayConfig& cfg, const PolarPoint& p, int antenna) {
    detail::check_antenna_index(cfg, antenna);
    detail::check_range(p);
    const double off = (antenna - 1) * cfg.element_spacing_m;
    return std::sqrt(p.range_m * p.range_m + off * off - 2.0 * p.range_m * off * p.phi);
}

// exact_distance(n) - r, evaluated as (off^2 - 2 r off phi) / (dist + r) to
// stay accurate when off^2 << r^2.
inline double exact_distance_offset(const ArrayConfig& cfg, const PolarPoint& p, int antenna) {
    detail::check_antenna_index(cfg, antenna);
    detail::check_range(p);
    const double off = (antenna - 1) * cfg.element_spacing_m;
    const double num = off * off - 2.0 * p.range_m * off * p.phi;
    const double dist = std::sqrt(p.range_m * p.range_m + num);
    return num / (dist + p.range_m);
}

// Second-order (Fresnel) expansion: r - (n-1) d phi + ((n-1) d)^2 zeta.
inline double fresnel_distance(const ArrayConfig& cfg, const PolarPoint& p, int antenna) {
    detail::check_antenna_index(cfg, antenna);
    detail::check_range(p);
    const double off = (antenna - 1) * cfg.element_spacing_m;
    return p.range_m - off * p.phi + off * off * p.curvature();
}

enum class SteeringMode { kExact, kFresnel };

namespace detail {

// Steering phases reach thousands of radians (path lengths of hundreds of
// wavelengths); reducing the cycle count modulo 1 in extended precision
// keeps entry phases accurate to ~1e-15 rad instead of ~1e-13.
inline double phase_from_cycles(long double cycles) {
    constexpr long double two_pi = 6.283185307179586476925286766559L;
    return static_cast<double>(two_pi * std::remainder(cycles, 1.0L));
}

} // namespace detail

// Fresnel steering vector parameterized directly by (phi, curvature), so it
// stays well-defined for spatial images with |phi| > 1 where the (phi, r)
// parameterization has no valid range. Entry n (1-based):
// exp(+j 2 pi (f / c0) ((n-1) d phi - ((n-1) d)^2 zeta)). Unit modulus.
inline Eigen::VectorXcd fresnel_steering(const ArrayConfig& cfg, double phi, double curvature,
                                         double freq_hz) {
    cfg.validate();
    if (!(freq_hz > 0.0))
        throw std::invalid_argument("fresnel_steering: frequency must be positive");
    const long double inv_wavelength =
        static_cast<long double>(freq_hz) / cfg.speed_of_light_m_s;
    Eigen::VectorXcd v(cfg.n_antennas);
    for (int n = 0; n < cfg.n_antennas; ++n) {
        const long double off = n * static_cast<long double>(cfg.element_spacing_m);
        const long double cycles = inv_wavelength * (off * phi - off * off * curvature);
        v[n] = std::polar(1.0, detail::phase_from_cycles(cycles));
    }
    return v;
}

// Steering vector with unit-modulus entries and entry 1 == 1. Exact mode uses
// the spherical distances with the common factor exp(-j 2 pi (f/c0) r)
// removed; Fresnel mode is the quadratic expansion above. The 1/sqrt(N)
// normalization is applied by consumers.
inline Eigen::VectorXcd steering_vector(const ArrayConfig& cfg, const PolarPoint& p,
                                        double freq_hz, SteeringMode mode = SteeringMode::kExact) {
    cfg.validate();
    if (!(freq_hz > 0.0))
        throw std::invalid_argument("steering_vector: frequency must be positive");
    if (mode == SteeringMode::kFresnel)
        return fresnel_steering(cfg, p.phi, p.curvature(), freq_hz);
    detail::check_range(p);
    const long double inv_wavelength =
        static_cast<long double>(freq_hz) / cfg.speed_of_light_m_s;
    Eigen::VectorXcd v(cfg.n_antennas);
    for (int n = 1; n <= cfg.n_antennas; ++n)
        v[n - 1] = std::polar(
            1.0, detail::phase_from_cycles(-inv_wavelength * exact_distance_offset(cfg, p, n)));
    return v;
}

// Near/far-field boundary 2 D^2 / lambda with D per the configured convention.
inline double fraunhofer_distance(const ArrayConfig& cfg) {
    cfg.validate();
    const double d = cfg.aperture_m();
    return 2.0 * d * d / cfg.wavelength_m();
}

} // namespace nbsplit

#endif
