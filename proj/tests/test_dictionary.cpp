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
#include <cstdio>
#include <fstream>

#include "nbsplit/dictionary.hpp"
#include "nbsplit/rng.hpp"

using namespace nbsplit;
using Catch::Approx;

namespace {

bool same_atom(const PolarPoint& a, const PolarPoint& b) {
    return a.phi == b.phi && a.curvature() == b.curvature();
}

} // namespace

TEST_CASE("build_grid: degenerate range axis") {
    const ArrayConfig cfg = ArrayConfig::half_wavelength(256, 300e9);
    const PolarGrid grid = build_grid(3, 1, 10.0, 10.0, cfg);
    REQUIRE(grid.size() == 3);
    CHECK(grid.points[0].phi == -1.0);
    CHECK(grid.points[1].phi == 0.0);
    CHECK(grid.points[2].phi == 1.0);
    for (const auto& p : grid.points)
        CHECK(p.range_m == Approx(10.0).epsilon(1e-14));
}

TEST_CASE("build_grid: range samples uniform in curvature") {
    const ArrayConfig cfg = ArrayConfig::half_wavelength(256, 300e9);
    const PolarGrid grid = build_grid(2, 3, 5.0, 30.0, cfg);
    REQUIRE(grid.size() == 6);
    // curvature samples {1/60, (1/60 + 1/10)/2, 1/10} -> r {30, 8.5714..., 5}
    CHECK(grid.points[0].range_m == Approx(30.0).epsilon(1e-12));
    CHECK(grid.points[1].range_m ==
          Approx(1.0 / (0.5 * (1.0 / 60 + 1.0 / 10) * 2.0)).epsilon(1e-12));
    CHECK(grid.points[1].range_m == Approx(8.571428571).epsilon(1e-9));
    CHECK(grid.points[2].range_m == Approx(5.0).epsilon(1e-12));
    // row-major: angle outer, range inner
    CHECK(grid.points[0].phi == -1.0);
    CHECK(grid.points[3].phi == 1.0);
    CHECK(grid.points[3].range_m == Approx(30.0).epsilon(1e-12));
}

TEST_CASE("build_grid: cartesian product size and validation") {
    const ArrayConfig cfg = ArrayConfig::half_wavelength(64, 300e9);
    const double fraunhofer = fraunhofer_distance(cfg);
    CHECK(build_grid(7, 4, 0.2, 1.5, cfg).size() == 28);
    CHECK_THROWS_AS(build_grid(1, 4, 0.2, 1.5, cfg), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(4, 0, 0.2, 1.5, cfg), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(4, 2, 0.0, 1.5, cfg), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(4, 2, 1.5, 0.2, cfg), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(4, 2, 0.2, 2.0 * fraunhofer, cfg), std::invalid_argument);
}

TEST_CASE("nba dictionary: unit-norm columns and eta bookkeeping") {
    const ArrayConfig cfg = ArrayConfig::half_wavelength(32, 300e9);
    const OfdmGrid ofdm(300e9, 30e9, 5);
    const PolarGrid grid = build_grid(9, 2, 0.1, 0.5, cfg);
    const NbaDictionary dict = build_nba_dictionary(grid, ofdm, cfg);
    REQUIRE(dict.n_subcarriers() == 5);
    REQUIRE(dict.n_atoms() == 18);
    for (int m = 0; m < dict.n_subcarriers(); ++m) {
        CHECK(dict.eta_list[m] == Approx(300e9 / ofdm.freqs_hz[m]).epsilon(1e-14));
        for (int q = 0; q < dict.n_atoms(); ++q)
            CHECK(std::abs(dict.per_subcarrier[m].col(q).norm() - 1.0) < 1e-12);
    }
    // the wide-band images of phi = +-1 leave the physical angle interval
    CHECK(dict.out_of_bounds_images > 0);
}

TEST_CASE("nba dictionary at the carrier subcarrier equals the SI near-field matrix") {
    const ArrayConfig cfg = ArrayConfig::half_wavelength(32, 300e9);
    const OfdmGrid ofdm(300e9, 30e9, 5); // middle subcarrier is exactly f_c
    const PolarGrid grid = build_grid(9, 2, 0.1, 0.5, cfg);
    const NbaDictionary dict = build_nba_dictionary(grid, ofdm, cfg);
    const SiDictionary si = build_si_dictionary(grid, cfg, SiFamily::kNearField);
    REQUIRE(ofdm.freqs_hz[2] == 300e9);
    CHECK(dict.per_subcarrier[2] == si.matrix); // bitwise
}

TEST_CASE("nba dictionary with zero bandwidth repeats one matrix") {
    const ArrayConfig cfg = ArrayConfig::half_wavelength(32, 300e9);
    const OfdmGrid ofdm(300e9, 0.0, 4);
    const PolarGrid grid = build_grid(5, 2, 0.1, 0.5, cfg);
    const NbaDictionary dict = build_nba_dictionary(grid, ofdm, cfg);
    for (int m = 1; m < 4; ++m)
        CHECK(dict.per_subcarrier[m] == dict.per_subcarrier[0]);
    CHECK(dict.out_of_bounds_images == 0);
}

TEST_CASE("band-edge columns peak-correlate with their own grid point") {
    // the orientation-fixing oracle: exhaustive correlation on a 16-point grid
    const ArrayConfig cfg = ArrayConfig::half_wavelength(64, 300e9);
    const double fraunhofer = fraunhofer_distance(cfg);
    const OfdmGrid ofdm(300e9, 30e9, 8);
    const PolarGrid grid = build_grid(8, 2, 0.2 * fraunhofer, 0.9 * fraunhofer, cfg);
    const NbaDictionary dict = build_nba_dictionary(grid, ofdm, cfg, EtaOrientation::kInverse);
    const int edge = 0; // lowest subcarrier has the largest |f_m - f_c|
    for (int q = 0; q < grid.size(); ++q) {
        const Eigen::VectorXcd truth = steering_vector(cfg, grid.points[q], ofdm.freqs_hz[edge]);
        const Eigen::VectorXd corr = (dict.per_subcarrier[edge].adjoint() * truth).cwiseAbs();
        for (int other = 0; other < grid.size(); ++other) {
            if (other == q || same_atom(grid.points[other], grid.points[q]))
                continue;
            CHECK(corr[q] > corr[other]);
        }
    }
}

TEST_CASE("orientation oracle selects the inverse mapping") {
    const ArrayConfig cfg = ArrayConfig::half_wavelength(64, 300e9);
    const double fraunhofer = fraunhofer_distance(cfg);
    const OfdmGrid ofdm(300e9, 30e9, 16);
    const PolarGrid grid = build_grid(64, 3, 0.1 * fraunhofer, fraunhofer, cfg);
    const OrientationSelection sel = select_eta_orientation(grid, ofdm, cfg);
    CHECK(sel.selected == EtaOrientation::kInverse);
    CHECK(sel.score_inverse > 0.95);
    CHECK(sel.score_forward < 0.7);
    CHECK(sel.band_edge_subcarrier == 1);
}

TEST_CASE("si far-field dictionary collapses the range axis") {
    const ArrayConfig cfg = ArrayConfig::half_wavelength(32, 300e9);
    const PolarGrid grid = build_grid(11, 3, 0.1, 0.5, cfg);
    const SiDictionary ff = build_si_dictionary(grid, cfg, SiFamily::kFarField);
    CHECK(ff.n_atoms() == 11);
    REQUIRE(static_cast<int>(ff.points.size()) == 11);
    for (const auto& p : ff.points) {
        CHECK(std::isinf(p.range_m));
        CHECK(p.curvature() == 0.0);
    }
    // columns are plane waves at the design frequency
    const double scale = 1.0 / std::sqrt(32.0);
    for (int i = 0; i < ff.n_atoms(); ++i) {
        const Eigen::VectorXcd expected =
            scale * fresnel_steering(cfg, ff.points[i].phi, 0.0, cfg.carrier_freq_hz);
        CHECK((ff.matrix.col(i) - expected).norm() == 0.0);
    }
}

TEST_CASE("far-field grid coherence matches the closed-form kernel") {
    // with q_phi = N, every non-duplicate pair of plane-wave atoms has
    // coherence exactly 1/N; the +-1 endfire pair aliases to the same atom
    const int n = 64;
    const ArrayConfig cfg = ArrayConfig::half_wavelength(n, 300e9);
    const PolarGrid grid = build_grid(n, 1, 1.0, 2.0, cfg);
    const SiDictionary ff = build_si_dictionary(grid, cfg, SiFamily::kFarField);
    const Eigen::MatrixXcd gram = ff.matrix.adjoint() * ff.matrix;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double measured = std::abs(gram(i, j));
            const double predicted =
                std::abs(dirichlet_sinc(0.5 * (ff.points[i].phi - ff.points[j].phi), n));
            CHECK(measured == Approx(predicted).margin(1e-10));
            if (!(i == 0 && j == n - 1))
                CHECK(measured == Approx(1.0 / n).margin(1e-10));
        }
    CHECK(std::abs(gram(0, n - 1)) == Approx(1.0).margin(1e-12));
}

TEST_CASE("coherence profile: duplicates, phase invariance, counts") {
    Eigen::MatrixXcd dict(8, 3);
    Rng rng(4);
    for (int i = 0; i < 8; ++i) {
        dict(i, 0) = std::polar(1.0, rng.uniform(0.0, 6.28));
        dict(i, 1) = std::polar(1.0, rng.uniform(0.0, 6.28));
    }
    dict.col(0).normalize();
    dict.col(1).normalize();
    dict.col(2) = std::polar(1.0, 1.234) * dict.col(0); // duplicate up to phase
    const CoherenceProfile prof = coherence_profile(dict, 10);
    CHECK(prof.max_offdiag == Approx(1.0).margin(1e-12));
    CHECK(prof.n_pairs == 3);
    std::size_t total = 0;
    for (auto c : prof.histogram)
        total += c;
    CHECK(total == 3);

    Eigen::MatrixXcd rotated = dict;
    rotated.col(1) *= std::polar(1.0, 0.77);
    CHECK(coherence_profile(rotated, 10).max_offdiag == Approx(prof.max_offdiag).margin(1e-12));
}

TEST_CASE("near-field coherence regression bound at production scale") {
    // Regression bound measured on this construction: well-separated columns
    // (wrapped angular distance >= 4 cells and >= 1 curvature cell) stay
    // below 0.52; frozen with margin.
    const int n = 256;
    const ArrayConfig cfg = ArrayConfig::half_wavelength(n, 300e9);
    const double fraunhofer = fraunhofer_distance(cfg);
    const int q_phi = 256, q_r = 4;
    const PolarGrid grid = build_grid(q_phi, q_r, 0.05 * fraunhofer, fraunhofer, cfg);
    const SiDictionary nf = build_si_dictionary(grid, cfg, SiFamily::kNearField);
    const Eigen::MatrixXcd gram = nf.matrix.adjoint() * nf.matrix;
    double max_sep = 0.0;
    for (int a = 0; a < grid.size(); ++a)
        for (int b = a + 1; b < grid.size(); ++b) {
            const int ia = a / q_r, ja = a % q_r;
            const int ib = b / q_r, jb = b % q_r;
            int di = std::abs(ia - ib);
            di = std::min(di, (q_phi - 1) - di); // +-1 endfire atoms alias
            if (di >= 4 && std::abs(ja - jb) >= 1)
                max_sep = std::max(max_sep, std::abs(gram(a, b)));
        }
    CHECK(max_sep < 0.55);
    CHECK(max_sep > 0.35); // sanity: the bound is not vacuous
}

TEST_CASE("dictionary cache round-trips") {
    const ArrayConfig cfg = ArrayConfig::half_wavelength(16, 300e9);
    const OfdmGrid ofdm(300e9, 20e9, 3);
    const PolarGrid grid = build_grid(5, 2, 0.02, 0.12, cfg);
    const NbaDictionary dict = build_nba_dictionary(grid, ofdm, cfg);
    const std::string path = "test_dict_cache.bin";
    save_dictionary_cache(dict, path);
    const NbaDictionary back = load_dictionary_cache(path);
    std::remove(path.c_str());

    CHECK(back.array.n_antennas == 16);
    CHECK(back.ofdm.carrier_hz == dict.ofdm.carrier_hz);
    CHECK(back.ofdm.bandwidth_hz == dict.ofdm.bandwidth_hz);
    CHECK(back.orientation == dict.orientation);
    REQUIRE(back.n_atoms() == dict.n_atoms());
    REQUIRE(back.n_subcarriers() == dict.n_subcarriers());
    for (int q = 0; q < dict.n_atoms(); ++q) {
        CHECK(back.grid.points[q].phi == dict.grid.points[q].phi);
        CHECK(back.grid.points[q].range_m == dict.grid.points[q].range_m);
    }
    for (int m = 0; m < dict.n_subcarriers(); ++m) {
        CHECK(back.eta_list[m] == dict.eta_list[m]);
        // complex64 storage: single-precision round-trip
        CHECK((back.per_subcarrier[m] - dict.per_subcarrier[m]).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("dictionary cache rejects foreign files") {
    const std::string path = "test_dict_cache_bad.bin";
    {
        std::ofstream os(path, std::ios::binary);
        os << "definitely not a dictionary";
    }
    CHECK_THROWS_AS(load_dictionary_cache(path), std::runtime_error);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_dictionary_cache("no_such_file.bin"), std::runtime_error);
}
