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
// Polar dictionary grids and the per-subcarrier beam-split-aware (BSA)
// dictionaries whose q-th columns all track one physical grid point across
// subcarriers, plus the subcarrier-independent baseline dictionaries.

#ifndef NBSPLIT_DICTIONARY_HPP
#define NBSPLIT_DICTIONARY_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nbsplit/array.hpp"
#include "nbsplit/beam_split.hpp"
#include "nbsplit/channel.hpp"

namespace nbsplit {

// Fixed physical polar grid: q_phi angles uniform on [-1, 1], q_r ranges
// uniform in the curvature proxy 1/(2r). Points in row-major order, angle
// outer, range inner.
struct PolarGrid {
    std::vector<PolarPoint> points;
    int q_phi = 0;
    int q_r = 0;
    double r_min_m = 0.0;
    double r_max_m = 0.0;

    int size() const { return static_cast<int>(points.size()); }
};

// Range samples are uniform in 1/(2r) because near-field column coherence is
// governed by the quadratic phase term, which is linear in 1/r.
inline PolarGrid build_grid(int q_phi, int q_r, double r_min_m, double r_max_m,
                            const ArrayConfig& cfg) {
    cfg.validate();
    if (q_phi < 2 || q_r < 1)
        throw std::invalid_argument("build_grid: need q_phi >= 2 and q_r >= 1");
    if (!(r_min_m > 0.0) || !(r_max_m >= r_min_m))
        throw std::invalid_argument("build_grid: invalid range bounds");
    if (r_max_m > fraunhofer_distance(cfg) * (1.0 + 1e-12))
        throw std::invalid_argument("build_grid: r_max beyond the Fraunhofer distance");
    PolarGrid grid;
    grid.q_phi = q_phi;
    grid.q_r = q_r;
    grid.r_min_m = r_min_m;
    grid.r_max_m = r_max_m;
    grid.points.reserve(static_cast<std::size_t>(q_phi) * q_r);
    const double c_lo = 1.0 / (2.0 * r_max_m);
    const double c_hi = 1.0 / (2.0 * r_min_m);
    for (int i = 0; i < q_phi; ++i) {
        const double phi = -1.0 + 2.0 * i / (q_phi - 1);
        for (int j = 0; j < q_r; ++j) {
            const double c = q_r == 1 ? c_lo : c_lo + (c_hi - c_lo) * j / (q_r - 1);
            grid.points.push_back(PolarPoint{phi, 1.0 / (2.0 * c)});
        }
    }
    return grid;
}

// Direction of the per-subcarrier location mapping applied to the grid.
// kForward images grid points under eta_m = f_c / f_m; kInverse under
// 1/eta_m. The default is fixed operationally by select_eta_orientation:
// columns must peak-correlate with the exact subcarrier response from their
// own physical grid point, which selects kInverse.
enum class EtaOrientation { kForward, kInverse };

inline double oriented_eta(double eta_m, EtaOrientation orientation) {
    return orientation == EtaOrientation::kForward ? eta_m : 1.0 / eta_m;
}

inline const char* to_string(EtaOrientation o) {
    return o == EtaOrientation::kForward ? "forward" : "inverse";
}

// M per-subcarrier matrices with unit-norm columns; column q of every matrix
// tracks physical grid point q (support alignment across subcarriers).
struct NbaDictionary {
    ArrayConfig array;
    OfdmGrid ofdm;
    PolarGrid grid;
    EtaOrientation orientation = EtaOrientation::kInverse;
    std::vector<double> eta_list;                 // M values f_c / f_m
    std::vector<Eigen::MatrixXcd> per_subcarrier; // M matrices, N x Q
    // Number of (m, q) cells whose spatial image has |phi| > 1. The image is
    // retained (the Fresnel phase stays well-defined); this is a bounds note,
    // not an error.
    int out_of_bounds_images = 0;

    int n_subcarriers() const { return static_cast<int>(per_subcarrier.size()); }
    int n_atoms() const { return grid.size(); }
};

// Column (m, q): carrier-frequency Fresnel steering toward the image of grid
// point q under the oriented eta, scaled by 1/sqrt(N). In curvature
// coordinates the image is (eta' phi, eta' zeta), which keeps columns defined
// even when the ranged form of the mapping is singular (|eta' phi| >= 1).
inline NbaDictionary build_nba_dictionary(const PolarGrid& grid, const OfdmGrid& ofdm,
                                          const ArrayConfig& cfg,
                                          EtaOrientation orientation = EtaOrientation::kInverse) {
    cfg.validate();
    if (grid.points.empty())
        throw std::invalid_argument("build_nba_dictionary: empty grid");
    NbaDictionary dict;
    dict.array = cfg;
    dict.ofdm = ofdm;
    dict.grid = grid;
    dict.orientation = orientation;
    dict.eta_list.resize(ofdm.n_subcarriers);
    dict.per_subcarrier.reserve(ofdm.n_subcarriers);
    const int n = cfg.n_antennas;
    const int q_total = grid.size();
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int m = 0; m < ofdm.n_subcarriers; ++m) {
        dict.eta_list[m] = eta(ofdm.carrier_hz, ofdm.freqs_hz[m]);
        const double eta_eff = oriented_eta(dict.eta_list[m], orientation);
        Eigen::MatrixXcd mat(n, q_total);
        for (int q = 0; q < q_total; ++q) {
            const PolarPoint& p = grid.points[q];
            const double phi_img = eta_eff * p.phi;
            const double zeta_img = eta_eff * p.curvature();
            if (std::abs(phi_img) > 1.0)
                ++dict.out_of_bounds_images;
            mat.col(q) = scale * fresnel_steering(cfg, phi_img, zeta_img, cfg.carrier_freq_hz);
        }
        dict.per_subcarrier.push_back(std::move(mat));
    }
    return dict;
}

enum class SiFamily { kNearField, kFarField };

// Single subcarrier-independent dictionary matrix at the design (carrier)
// frequency. Near-field: Fresnel steering at each grid point. Far-field:
// curvature forced to zero, which collapses the range axis; duplicate
// columns are removed, leaving q_phi atoms whose reported range is +inf.
struct SiDictionary {
    ArrayConfig array;
    double design_freq_hz = 0.0;
    SiFamily family = SiFamily::kNearField;
    std::vector<PolarPoint> points;
    Eigen::MatrixXcd matrix; // N x Q (or N x q_phi for far-field)

    int n_atoms() const { return static_cast<int>(matrix.cols()); }
};

inline SiDictionary build_si_dictionary(const PolarGrid& grid, const ArrayConfig& cfg,
                                        SiFamily family) {
    cfg.validate();
    if (grid.points.empty())
        throw std::invalid_argument("build_si_dictionary: empty grid");
    SiDictionary dict;
    dict.array = cfg;
    dict.design_freq_hz = cfg.carrier_freq_hz;
    dict.family = family;
    const int n = cfg.n_antennas;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    if (family == SiFamily::kNearField) {
        dict.points = grid.points;
        dict.matrix.resize(n, grid.size());
        for (int q = 0; q < grid.size(); ++q) {
            const PolarPoint& p = grid.points[q];
            dict.matrix.col(q) =
                scale * fresnel_steering(cfg, p.phi, p.curvature(), cfg.carrier_freq_hz);
        }
    } else {
        dict.points.reserve(grid.q_phi);
        dict.matrix.resize(n, grid.q_phi);
        for (int i = 0; i < grid.q_phi; ++i) {
            const PolarPoint& p = grid.points[static_cast<std::size_t>(i) * grid.q_r];
            dict.points.push_back(PolarPoint{p.phi, std::numeric_limits<double>::infinity()});
            dict.matrix.col(i) = scale * fresnel_steering(cfg, p.phi, 0.0, cfg.carrier_freq_hz);
        }
    }
    return dict;
}

// Gram-based mutual-coherence statistics |c_i^H c_j|, i != j, for a
// unit-column dictionary matrix.
struct CoherenceProfile {
    double max_offdiag = 0.0;
    std::vector<std::size_t> histogram;
    double bin_width = 0.0;
    std::size_t n_pairs = 0;
};

inline CoherenceProfile coherence_profile(const Eigen::MatrixXcd& dict, int n_bins = 50) {
    if (dict.cols() < 2)
        throw std::invalid_argument("coherence_profile: need at least two columns");
    if (n_bins < 1)
        throw std::invalid_argument("coherence_profile: need at least one bin");
    CoherenceProfile prof;
    prof.histogram.assign(n_bins, 0);
    prof.bin_width = 1.0 / n_bins;
    const Eigen::MatrixXcd gram = dict.adjoint() * dict;
    for (Eigen::Index i = 0; i < gram.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < gram.cols(); ++j) {
            const double c = std::abs(gram(i, j));
            prof.max_offdiag = std::max(prof.max_offdiag, c);
            const int bin = std::min(n_bins - 1, static_cast<int>(c * n_bins));
            ++prof.histogram[bin];
            ++prof.n_pairs;
        }
    }
    return prof;
}

// Operational selection of the mapping direction: for the band-edge
// subcarrier, score each orientation by the mean correlation between column q
// and the exact spherical response at that subcarrier from grid point q.
// The orientation whose columns track their own grid points wins.
struct OrientationSelection {
    EtaOrientation selected = EtaOrientation::kInverse;
    double score_forward = 0.0;
    double score_inverse = 0.0;
    int band_edge_subcarrier = 0; // 1-based index of the scoring subcarrier
};

inline OrientationSelection select_eta_orientation(const PolarGrid& grid, const OfdmGrid& ofdm,
                                                   const ArrayConfig& cfg,
                                                   int max_points = 256) {
    cfg.validate();
    if (grid.points.empty())
        throw std::invalid_argument("select_eta_orientation: empty grid");
    OrientationSelection sel;
    int edge = 0;
    for (int m = 1; m < ofdm.n_subcarriers; ++m)
        if (std::abs(ofdm.freqs_hz[m] - ofdm.carrier_hz) >
            std::abs(ofdm.freqs_hz[edge] - ofdm.carrier_hz))
            edge = m;
    sel.band_edge_subcarrier = edge + 1;
    const double f_edge = ofdm.freqs_hz[edge];
    const double eta_edge = eta(ofdm.carrier_hz, f_edge);
    const int stride = std::max(1, grid.size() / max_points);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.n_antennas));
    double scores[2] = {0.0, 0.0};
    int count = 0;
    for (int q = 0; q < grid.size(); q += stride) {
        const PolarPoint& p = grid.points[q];
        const Eigen::VectorXcd truth =
            scale * steering_vector(cfg, p, f_edge, SteeringMode::kExact);
        for (EtaOrientation o : {EtaOrientation::kForward, EtaOrientation::kInverse}) {
            const double eta_eff = oriented_eta(eta_edge, o);
            const Eigen::VectorXcd col =
                scale * fresnel_steering(cfg, eta_eff * p.phi, eta_eff * p.curvature(),
                                         cfg.carrier_freq_hz);
            scores[o == EtaOrientation::kForward ? 0 : 1] += std::abs(col.dot(truth));
        }
        ++count;
    }
    sel.score_forward = scores[0] / count;
    sel.score_inverse = scores[1] / count;
    sel.selected = sel.score_inverse >= sel.score_forward ? EtaOrientation::kInverse
                                                          : EtaOrientation::kForward;
    return sel;
}

// ---- binary dictionary cache ------------------------------------------------
// Amortizes construction across Monte-Carlo sweeps. Layout (little-endian):
//   char[8]  magic "NBADCT01"
//   u32      n_antennas, n_subcarriers, q_total, q_phi, q_r
//   u8       orientation (0 forward, 1 inverse), u8[3] reserved
//   f64      r_min_m, r_max_m, carrier_hz, bandwidth_hz, element_spacing_m,
//            speed_of_light_m_s
//   f64[M]   eta values
//   f64[2Q]  grid points (phi, range) pairs
//   M matrices of N x Q complex64 (float32 re, im), row-major.

namespace detail {

inline constexpr char kDictMagic[8] = {'N', 'B', 'A', 'D', 'C', 'T', '0', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is)
        throw std::runtime_error("dictionary cache: truncated file");
    return v;
}

} // namespace detail

inline void save_dictionary_cache(const NbaDictionary& dict, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("save_dictionary_cache: cannot open " + path);
    os.write(detail::kDictMagic, sizeof(detail::kDictMagic));
    detail::write_pod(os, static_cast<std::uint32_t>(dict.array.n_antennas));
    detail::write_pod(os, static_cast<std::uint32_t>(dict.n_subcarriers()));
    detail::write_pod(os, static_cast<std::uint32_t>(dict.n_atoms()));
    detail::write_pod(os, static_cast<std::uint32_t>(dict.grid.q_phi));
    detail::write_pod(os, static_cast<std::uint32_t>(dict.grid.q_r));
    const std::uint8_t orient = dict.orientation == EtaOrientation::kInverse ? 1 : 0;
    detail::write_pod(os, orient);
    const std::uint8_t pad[3] = {0, 0, 0};
    os.write(reinterpret_cast<const char*>(pad), 3);
    detail::write_pod(os, dict.grid.r_min_m);
    detail::write_pod(os, dict.grid.r_max_m);
    detail::write_pod(os, dict.ofdm.carrier_hz);
    detail::write_pod(os, dict.ofdm.bandwidth_hz);
    detail::write_pod(os, dict.array.element_spacing_m);
    detail::write_pod(os, dict.array.speed_of_light_m_s);
    for (double e : dict.eta_list)
        detail::write_pod(os, e);
    for (const auto& p : dict.grid.points) {
        detail::write_pod(os, p.phi);
        detail::write_pod(os, p.range_m);
    }
    for (const auto& mat : dict.per_subcarrier)
        for (Eigen::Index r = 0; r < mat.rows(); ++r)
            for (Eigen::Index c = 0; c < mat.cols(); ++c) {
                detail::write_pod(os, static_cast<float>(mat(r, c).real()));
                detail::write_pod(os, static_cast<float>(mat(r, c).imag()));
            }
    if (!os)
        throw std::runtime_error("save_dictionary_cache: write failed for " + path);
}

inline NbaDictionary load_dictionary_cache(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("load_dictionary_cache: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, detail::kDictMagic, sizeof(magic)) != 0)
        throw std::runtime_error("load_dictionary_cache: bad magic in " + path);
    NbaDictionary dict;
    const auto n = detail::read_pod<std::uint32_t>(is);
    const auto m = detail::read_pod<std::uint32_t>(is);
    const auto q_total = detail::read_pod<std::uint32_t>(is);
    dict.grid.q_phi = static_cast<int>(detail::read_pod<std::uint32_t>(is));
    dict.grid.q_r = static_cast<int>(detail::read_pod<std::uint32_t>(is));
    const auto orient = detail::read_pod<std::uint8_t>(is);
    char pad[3];
    is.read(pad, 3);
    dict.orientation = orient ? EtaOrientation::kInverse : EtaOrientation::kForward;
    dict.grid.r_min_m = detail::read_pod<double>(is);
    dict.grid.r_max_m = detail::read_pod<double>(is);
    const double carrier = detail::read_pod<double>(is);
    const double bandwidth = detail::read_pod<double>(is);
    dict.array.n_antennas = static_cast<int>(n);
    dict.array.carrier_freq_hz = carrier;
    dict.array.element_spacing_m = detail::read_pod<double>(is);
    dict.array.speed_of_light_m_s = detail::read_pod<double>(is);
    dict.ofdm = OfdmGrid(carrier, bandwidth, static_cast<int>(m));
    dict.eta_list.resize(m);
    for (auto& e : dict.eta_list)
        e = detail::read_pod<double>(is);
    dict.grid.points.resize(q_total);
    for (auto& p : dict.grid.points) {
        p.phi = detail::read_pod<double>(is);
        p.range_m = detail::read_pod<double>(is);
    }
    dict.per_subcarrier.assign(m, Eigen::MatrixXcd(n, q_total));
    for (auto& mat : dict.per_subcarrier)
        for (Eigen::Index r = 0; r < mat.rows(); ++r)
            for (Eigen::Index c = 0; c < mat.cols(); ++c) {
                const float re = detail::read_pod<float>(is);
                const float im = detail::read_pod<float>(is);
                mat(r, c) = std::complex<double>(re, im);
            }
    return dict;
}

} // namespace nbsplit

#endif
