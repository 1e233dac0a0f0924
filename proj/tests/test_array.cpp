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

#include <cmath>
#include <complex>

#include "nbsplit/array.hpp"
#include "nbsplit/rng.hpp"

using namespace nbsplit;
using Catch::Approx;

namespace {

// Independent oracle: 2-D Euclidean distance between the point at
// (r cos(theta), r sin(theta)) and antenna n at (0, (n-1) d).
double euclidean_oracle(const ArrayConfig& cfg, const PolarPoint& p, int antenna) {
    const double theta = std::asin(p.phi);
    const double x = p.range_m * std::cos(theta);
    const double y = p.range_m * std::sin(theta);
    return std::hypot(x, y - (antenna - 1) * cfg.element_spacing_m);
}

ArrayConfig desk_array() { return ArrayConfig::half_wavelength(64, 300e9); }

ArrayConfig paper_array() { return ArrayConfig::half_wavelength(256, 300e9); }

ArrayConfig half_mm_array(int n) {
    ArrayConfig cfg;
    cfg.n_antennas = n;
    cfg.carrier_freq_hz = 300e9;
    cfg.element_spacing_m = 0.5e-3;
    return cfg;
}

} // namespace

TEST_CASE("exact distance: first antenna is the origin") {
    const ArrayConfig cfg = desk_array();
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        const PolarPoint p{rng.uniform(-1.0, 1.0), rng.uniform(0.1, 30.0)};
        CHECK(exact_distance(cfg, p, 1) == p.range_m);
        CHECK(fresnel_distance(cfg, p, 1) == p.range_m);
    }
}

TEST_CASE("exact distance: broadside symmetry value") {
    const ArrayConfig cfg = half_mm_array(256);
    const PolarPoint p{0.0, 6.0};
    CHECK(exact_distance(cfg, p, 256) == Approx(std::sqrt(36.0 + 0.1275 * 0.1275)).epsilon(1e-12));
    CHECK(exact_distance(cfg, p, 256) == Approx(6.0013547).epsilon(1e-6));
}

TEST_CASE("exact distance matches the 2-D Euclidean oracle") {
    const ArrayConfig cfg = half_mm_array(256);
    const PolarPoint spec_point{0.7071, 6.0};
    CHECK(exact_distance(cfg, spec_point, 256) ==
          Approx(euclidean_oracle(cfg, spec_point, 256)).epsilon(1e-12));
    CHECK(exact_distance(cfg, spec_point, 256) == Approx(5.910533).epsilon(1e-6));

    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const PolarPoint p{rng.uniform(-0.999, 0.999), rng.uniform(0.05, 40.0)};
        const int n = 1 + static_cast<int>(rng.raw() % cfg.n_antennas);
        CHECK(exact_distance(cfg, p, n) == Approx(euclidean_oracle(cfg, p, n)).epsilon(1e-10));
    }
}

TEST_CASE("distance argument errors") {
    const ArrayConfig cfg = desk_array();
    const PolarPoint p{0.3, 5.0};
    CHECK_THROWS_AS(exact_distance(cfg, p, 0), std::out_of_range);
    CHECK_THROWS_AS(exact_distance(cfg, p, cfg.n_antennas + 1), std::out_of_range);
    CHECK_THROWS_AS(exact_distance(cfg, PolarPoint{0.3, 0.0}, 1), std::invalid_argument);
    CHECK_THROWS_AS(fresnel_distance(cfg, PolarPoint{0.3, -1.0}, 1), std::invalid_argument);
}

TEST_CASE("fresnel distance: hand value and endfire") {
    const ArrayConfig cfg = half_mm_array(256);
    const PolarPoint p{0.7071, 6.0};
    const double off = 255 * 0.5e-3;
    const double zeta = (1.0 - 0.7071 * 0.7071) / 12.0;
    const double expected = 6.0 - off * 0.7071 + off * off * zeta;
    CHECK(fresnel_distance(cfg, p, 256) == Approx(expected).epsilon(1e-14));
    CHECK(fresnel_distance(cfg, p, 256) == Approx(5.910522).epsilon(1e-6));
    // within 1e-4 relative of the exact law at this geometry
    CHECK(std::abs(fresnel_distance(cfg, p, 256) - exact_distance(cfg, p, 256)) /
              exact_distance(cfg, p, 256) <
          1e-4);

    for (double sign : {1.0, -1.0}) {
        const PolarPoint endfire{sign, 4.0};
        for (int n : {1, 7, 200})
            CHECK(fresnel_distance(cfg, endfire, n) ==
                  Approx(4.0 - sign * (n - 1) * 0.5e-3).epsilon(1e-14));
    }
}

TEST_CASE("fresnel approximation holds through the experiment range window") {
    const ArrayConfig cfg = paper_array();
    const double fraunhofer = fraunhofer_distance(cfg);
    Rng rng(23);
    for (int i = 0; i < 300; ++i) {
        const PolarPoint p{rng.uniform(-1.0, 1.0), rng.uniform(0.05 * fraunhofer, fraunhofer)};
        const int n = 1 + static_cast<int>(rng.raw() % cfg.n_antennas);
        const double exact = exact_distance(cfg, p, n);
        CHECK(std::abs(fresnel_distance(cfg, p, n) - exact) / exact <= 1e-3);
    }
}

TEST_CASE("exact distance is monotone decreasing in phi and asymmetric") {
    const ArrayConfig cfg = desk_array();
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const double r = rng.uniform(0.2, 10.0);
        const double lo = rng.uniform(-1.0, 0.99);
        const double hi = rng.uniform(lo + 1e-6, 1.0);
        const int n = 2 + static_cast<int>(rng.raw() % (cfg.n_antennas - 1));
        CHECK(exact_distance(cfg, PolarPoint{hi, r}, n) <
              exact_distance(cfg, PolarPoint{lo, r}, n));
        if (std::abs(lo) > 1e-9)
            CHECK(exact_distance(cfg, PolarPoint{lo, r}, n) !=
                  exact_distance(cfg, PolarPoint{-lo, r}, n));
        CHECK(exact_distance(cfg, PolarPoint{lo, r}, 1) ==
              exact_distance(cfg, PolarPoint{-lo, r}, 1));
    }
}

TEST_CASE("steering vectors have unit-modulus entries and unit first entry") {
    const ArrayConfig cfg = desk_array();
    Rng rng(5);
    for (int i = 0; i < 25; ++i) {
        const PolarPoint p{rng.uniform(-1.0, 1.0), rng.uniform(0.1, 2.0)};
        const double freq = rng.uniform(270e9, 330e9);
        for (SteeringMode mode : {SteeringMode::kExact, SteeringMode::kFresnel}) {
            const Eigen::VectorXcd v = steering_vector(cfg, p, freq, mode);
            REQUIRE(v.size() == cfg.n_antennas);
            for (int n = 0; n < cfg.n_antennas; ++n)
                CHECK(std::abs(std::abs(v[n]) - 1.0) < 1e-12);
            CHECK(std::abs(v[0] - std::complex<double>(1.0, 0.0)) < 1e-12);
        }
    }
}

TEST_CASE("broadside far-field steering is the all-ones vector") {
    const ArrayConfig cfg = desk_array();
    const PolarPoint p{0.0, 1e9};
    for (SteeringMode mode : {SteeringMode::kExact, SteeringMode::kFresnel}) {
        const Eigen::VectorXcd v = steering_vector(cfg, p, 300e9, mode);
        for (int n = 0; n < cfg.n_antennas; ++n)
            CHECK(std::abs(v[n] - std::complex<double>(1.0, 0.0)) < 1e-6);
    }
}

TEST_CASE("exact and fresnel steering agree in the Fresnel regime") {
    const ArrayConfig cfg = half_mm_array(256);
    const PolarPoint p{0.7071, 6.0};
    const Eigen::VectorXcd ve = steering_vector(cfg, p, 300e9, SteeringMode::kExact);
    const Eigen::VectorXcd vf = steering_vector(cfg, p, 300e9, SteeringMode::kFresnel);
    CHECK(std::abs(ve.dot(vf)) / cfg.n_antennas >= 0.99);
}

TEST_CASE("steering vector rejects non-positive frequency") {
    const ArrayConfig cfg = desk_array();
    CHECK_THROWS_AS(steering_vector(cfg, PolarPoint{0.1, 5.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(steering_vector(cfg, PolarPoint{0.1, 5.0}, -1e9), std::invalid_argument);
}

TEST_CASE("fraunhofer distance reproduces the published array scale") {
    CHECK(fraunhofer_distance(paper_array()) == Approx(32.768).epsilon(1e-3));
    CHECK(fraunhofer_distance(paper_array()) == Approx(32.76).epsilon(1e-3));
    CHECK(fraunhofer_distance(desk_array()) == Approx(2.048).epsilon(1e-3));

    const ArrayConfig tiny = ArrayConfig::half_wavelength(2, 300e9);
    CHECK(fraunhofer_distance(tiny) == Approx(2.0 * tiny.wavelength_m()).epsilon(1e-14));

    ArrayConfig alt = paper_array();
    alt.aperture_convention = ApertureConvention::kNMinus1TimesSpacing;
    CHECK(fraunhofer_distance(alt) / fraunhofer_distance(paper_array()) ==
          Approx((255.0 * 255.0) / (256.0 * 256.0)).epsilon(1e-14));
}

TEST_CASE("array config validation") {
    ArrayConfig bad = desk_array();
    bad.n_antennas = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = desk_array();
    bad.carrier_freq_hz = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = desk_array();
    bad.element_spacing_m = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    // default spacing is half a wavelength
    const ArrayConfig cfg = desk_array();
    CHECK(cfg.element_spacing_m == Approx(0.5 * cfg.wavelength_m()).epsilon(1e-14));
}
