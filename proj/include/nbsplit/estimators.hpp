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
// Pilot observation model, joint-subcarrier OMP over beam-split-aware and
// subcarrier-independent dictionaries, and the LS / MMSE baselines.

#ifndef NBSPLIT_ESTIMATORS_HPP
#define NBSPLIT_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nbsplit/array.hpp"
#include "nbsplit/beam_split.hpp"
#include "nbsplit/channel.hpp"
#include "nbsplit/dictionary.hpp"
#include "nbsplit/rng.hpp"

namespace nbsplit {

// Singular values below this factor times the largest are treated as zero in
// every pseudo-inverse solve (stable deflation when atoms are near-coherent).
inline constexpr double kPinvTolerance = 1e-10;

inline constexpr double kNmseFloorDb = -120.0;

// P sounding beams of unit-modulus entries scaled by 1/sqrt(N), plus the
// per-entry noise variance sigma_n^2 of the observation model.
struct PilotConfig {
    int n_pilots = 0;
    Eigen::MatrixXcd beamformer; // P x N
    double noise_var = 0.0;

    int n_antennas() const { return static_cast<int>(beamformer.cols()); }
};

// Random sounding beams: entries (1/sqrt(N)) exp(j psi) with psi i.i.d.
// uniform over the QPSK phases {0, pi/2, pi, 3 pi/2}.
inline PilotConfig make_pilot_config(std::uint64_t seed, int n_pilots, int n_antennas,
                                     double noise_var) {
    if (n_pilots < 1 || n_antennas < 1)
        throw std::invalid_argument("make_pilot_config: need P >= 1 and N >= 1");
    if (noise_var < 0.0)
        throw std::invalid_argument("make_pilot_config: negative noise variance");
    PilotConfig pilot;
    pilot.n_pilots = n_pilots;
    pilot.noise_var = noise_var;
    pilot.beamformer.resize(n_pilots, n_antennas);
    Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_antennas));
    for (int p = 0; p < n_pilots; ++p)
        for (int n = 0; n < n_antennas; ++n) {
            const auto quadrant = rng.raw() & 3u;
            static const std::complex<double> kQpsk[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
            pilot.beamformer(p, n) = scale * kQpsk[quadrant];
        }
    return pilot;
}

// Exhaustive sounding: P-point DFT columns with a random per-column phase,
// constant modulus 1/sqrt(N). F^H F = (P/N) I_N exactly (orthogonal rows
// when P = N), so the white-noise LS error is sigma^2 N^2 / P. Used for the
// full (P >= N) soundings that LS and MMSE consume.
inline PilotConfig make_orthogonal_pilot_config(std::uint64_t seed, int n_pilots, int n_antennas,
                                                double noise_var) {
    if (n_pilots < n_antennas)
        throw std::invalid_argument("make_orthogonal_pilot_config: needs P >= N");
    if (noise_var < 0.0)
        throw std::invalid_argument("make_orthogonal_pilot_config: negative noise variance");
    PilotConfig pilot;
    pilot.n_pilots = n_pilots;
    pilot.noise_var = noise_var;
    pilot.beamformer.resize(n_pilots, n_antennas);
    Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_antennas));
    for (int n = 0; n < n_antennas; ++n) {
        const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (int p = 0; p < n_pilots; ++p) {
            const double dft = -2.0 * std::numbers::pi * p * n / n_pilots;
            pilot.beamformer(p, n) = std::polar(scale, dft + theta);
        }
    }
    return pilot;
}

// y_k[m] = F h_k[m] + w_k[m], w circular complex Gaussian with per-entry
// variance sigma_n^2. Noise draw order: user-major, then subcarrier, then
// entry.
inline std::vector<std::vector<Eigen::VectorXcd>> observe(const PilotConfig& pilot,
                                                          const ChannelRealization& channel,
                                                          std::uint64_t seed) {
    if (channel.h.empty())
        throw std::invalid_argument("observe: empty channel");
    if (channel.h.front().rows() != pilot.beamformer.cols())
        throw std::invalid_argument("observe: pilot/channel antenna count mismatch");
    Rng rng(seed);
    std::vector<std::vector<Eigen::VectorXcd>> y(channel.h.size());
    for (std::size_t k = 0; k < channel.h.size(); ++k) {
        const int n_sub = static_cast<int>(channel.h[k].cols());
        y[k].resize(n_sub);
        for (int m = 0; m < n_sub; ++m) {
            Eigen::VectorXcd obs = pilot.beamformer * channel.h[k].col(m);
            if (pilot.noise_var > 0.0)
                for (int p = 0; p < pilot.n_pilots; ++p)
                    obs[p] += rng.complex_normal(pilot.noise_var);
            y[k][m] = std::move(obs);
        }
    }
    return y;
}

// Single-user estimate: reconstructed channel, selected support, location
// readouts, per-subcarrier split estimates (beam-split-aware runs only), and
// the per-iteration residual norms (aggregated over subcarriers).
struct EstimateReport {
    Eigen::MatrixXcd h_hat;                       // N x M
    std::vector<int> support;                     // selected grid indices
    std::vector<PolarPoint> locations;            // physical readout per path
    std::vector<std::vector<SplitReport>> splits; // [path][subcarrier]
    std::vector<double> residual_norms;           // length n_paths + 1
    int repeated_atom_skips = 0;
};

namespace detail {

inline Eigen::VectorXcd pinv_solve(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& b) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(kPinvTolerance);
    return svd.solve(b);
}

} // namespace detail

// Greedy joint-subcarrier matching pursuit over a family of per-subcarrier
// dictionary matrices whose q-th columns track one physical grid point.
// With a subcarrier-independent dictionary the same loop degenerates to the
// classic baselines. The engine precomputes F C_m once, so it can be shared
// across users and trials; it keeps only references to the dictionary.
class OmpEngine {
public:
    OmpEngine(const NbaDictionary& dict, const PilotConfig& pilot)
        : array_(dict.array), freqs_(dict.ofdm.freqs_hz), points_(&dict.grid.points),
          pilot_(&pilot), nba_(&dict), farfield_atoms_(false) {
        if (pilot.beamformer.cols() != dict.array.n_antennas)
            throw std::invalid_argument("OmpEngine: pilot/dictionary antenna count mismatch");
        sensing_.reserve(dict.per_subcarrier.size());
        sensing_norms_.reserve(dict.per_subcarrier.size());
        for (const auto& mat : dict.per_subcarrier) {
            sensing_.push_back(pilot.beamformer * mat);
            sensing_norms_.push_back(column_norms(sensing_.back()));
        }
    }

    OmpEngine(const SiDictionary& dict, const OfdmGrid& ofdm, const PilotConfig& pilot)
        : array_(dict.array), freqs_(ofdm.freqs_hz), points_(&dict.points), pilot_(&pilot),
          nba_(nullptr), farfield_atoms_(dict.family == SiFamily::kFarField) {
        if (pilot.beamformer.cols() != dict.array.n_antennas)
            throw std::invalid_argument("OmpEngine: pilot/dictionary antenna count mismatch");
        // one shared sensing matrix for every subcarrier
        shared_sensing_ = pilot.beamformer * dict.matrix;
        shared_norms_ = column_norms(shared_sensing_);
    }

    int n_atoms() const { return static_cast<int>(points_->size()); }

    // Joint atom-selection objective sum_m |c_{m,q}^H F^H r[m]| for all q.
    // Each term is normalized by the sensed-atom norm ||F c_{m,q}||: through
    // a P < N pilot the sensed columns have unequal norms, and the raw
    // correlation would bias selection toward atoms F happens to amplify.
    Eigen::VectorXd selection_objective(const std::vector<Eigen::VectorXcd>& residual) const {
        Eigen::VectorXd obj = Eigen::VectorXd::Zero(n_atoms());
        for (std::size_t m = 0; m < residual.size(); ++m) {
            const Eigen::VectorXd corr = (sensing(m).adjoint() * residual[m]).cwiseAbs();
            obj += (corr.array() / norms(m).array()).matrix();
        }
        return obj;
    }

    EstimateReport estimate(const std::vector<Eigen::VectorXcd>& y, int n_paths) const {
        const int n_sub = static_cast<int>(freqs_.size());
        if (static_cast<int>(y.size()) != n_sub)
            throw std::invalid_argument("OmpEngine: observation/subcarrier count mismatch");
        if (n_paths < 1 || n_paths > pilot_->n_pilots)
            throw std::invalid_argument("OmpEngine: need 1 <= n_paths <= n_pilots");

        EstimateReport rep;
        std::vector<Eigen::VectorXcd> residual(y.begin(), y.end());
        rep.residual_norms.push_back(total_norm(residual));
        std::vector<char> used(n_atoms(), 0);

        for (int l = 0; l < n_paths; ++l) {
            const Eigen::VectorXd obj = selection_objective(residual);
            // Lowest-index tie-break; already-selected atoms are skipped so
            // the projector stays full rank.
            int best = -1;
            for (int q = 0; q < n_atoms(); ++q) {
                if (used[q])
                    continue;
                if (best < 0 || obj[q] > obj[best])
                    best = q;
            }
            if (best < 0)
                throw std::invalid_argument("OmpEngine: more paths than atoms");
            for (int q : rep.support)
                if (obj[q] > obj[best]) { // an already-selected atom won again
                    ++rep.repeated_atom_skips;
                    break;
                }
            used[best] = 1;
            rep.support.push_back(best);
            rep.locations.push_back((*points_)[best]);
            if (nba_)
                rep.splits.push_back(splits_for((*points_)[best]));

            for (int m = 0; m < n_sub; ++m) {
                const Eigen::MatrixXcd proj = support_sensing(m, rep.support);
                residual[m] = y[m] - proj * detail::pinv_solve(proj, y[m]);
            }
            rep.residual_norms.push_back(total_norm(residual));
        }

        // Reconstruction on the estimated locations: steering atoms at each
        // subcarrier, with coefficients least-squares re-fit against the
        // sensed atoms F Xi so that an exact support gives an exact channel.
        rep.h_hat.resize(array_.n_antennas, n_sub);
        for (int m = 0; m < n_sub; ++m) {
            Eigen::MatrixXcd basis(array_.n_antennas, rep.support.size());
            for (std::size_t l = 0; l < rep.support.size(); ++l)
                basis.col(l) = reconstruction_atom(rep.locations[l], freqs_[m]);
            const Eigen::VectorXcd coef =
                detail::pinv_solve(pilot_->beamformer * basis, y[m]);
            rep.h_hat.col(m) = basis * coef;
        }
        return rep;
    }

private:
    static Eigen::VectorXd column_norms(const Eigen::MatrixXcd& mat) {
        Eigen::VectorXd norms = mat.colwise().norm();
        return norms.cwiseMax(1e-300); // zero columns score zero, never NaN
    }

    const Eigen::MatrixXcd& sensing(std::size_t m) const {
        return sensing_.empty() ? shared_sensing_ : sensing_[m];
    }

    const Eigen::VectorXd& norms(std::size_t m) const {
        return sensing_norms_.empty() ? shared_norms_ : sensing_norms_[m];
    }

    Eigen::MatrixXcd support_sensing(std::size_t m, const std::vector<int>& support) const {
        const Eigen::MatrixXcd& full = sensing(m);
        Eigen::MatrixXcd sub(full.rows(), support.size());
        for (std::size_t i = 0; i < support.size(); ++i)
            sub.col(i) = full.col(support[i]);
        return sub;
    }

    // Exact-mode steering at the subcarrier frequency for ranged locations;
    // plane-wave (zero curvature) steering for far-field atoms.
    Eigen::VectorXcd reconstruction_atom(const PolarPoint& p, double freq_hz) const {
        const double scale = 1.0 / std::sqrt(static_cast<double>(array_.n_antennas));
        if (farfield_atoms_ || std::isinf(p.range_m))
            return scale * fresnel_steering(array_, p.phi, 0.0, freq_hz);
        return scale * steering_vector(array_, p, freq_hz, SteeringMode::kExact);
    }

    std::vector<SplitReport> splits_for(const PolarPoint& p) const {
        std::vector<SplitReport> out;
        out.reserve(freqs_.size());
        for (std::size_t m = 0; m < freqs_.size(); ++m) {
            const double eta_eff =
                oriented_eta(nba_->eta_list[m], nba_->orientation);
            SplitReport rep;
            if (std::abs(eta_eff * p.phi) < 1.0 && std::abs(p.phi) < 1.0) {
                rep = split_deltas(p, eta_eff);
            } else {
                // image outside the ranged mapping's domain
                rep.eta = eta_eff;
                rep.spatial = PolarPoint{eta_eff * p.phi, std::numeric_limits<double>::quiet_NaN()};
                rep.delta_phi = (eta_eff - 1.0) * p.phi;
                rep.delta_r = std::numeric_limits<double>::quiet_NaN();
                rep.delta_r_proportional = std::numeric_limits<double>::quiet_NaN();
            }
            out.push_back(rep);
        }
        return out;
    }

    static double total_norm(const std::vector<Eigen::VectorXcd>& vecs) {
        double sq = 0.0;
        for (const auto& v : vecs)
            sq += v.squaredNorm();
        return std::sqrt(sq);
    }

    ArrayConfig array_;
    std::vector<double> freqs_;
    const std::vector<PolarPoint>* points_;
    const PilotConfig* pilot_;
    const NbaDictionary* nba_;
    bool farfield_atoms_ = false;
    std::vector<Eigen::MatrixXcd> sensing_; // per-subcarrier F C_m (empty for SI)
    std::vector<Eigen::VectorXd> sensing_norms_;
    Eigen::MatrixXcd shared_sensing_;
    Eigen::VectorXd shared_norms_;
};

// Beam-split-aware OMP for one user.
inline EstimateReport nba_omp(const std::vector<Eigen::VectorXcd>& y, const NbaDictionary& dict,
                              const PilotConfig& pilot, int n_paths) {
    return OmpEngine(dict, pilot).estimate(y, n_paths);
}

// Subcarrier-independent OMP baseline (near-field or far-field dictionary)
// with the same joint-subcarrier objective. Location readout is the raw grid
// point, no frequency correction.
inline EstimateReport baseline_omp(const std::vector<Eigen::VectorXcd>& y,
                                   const SiDictionary& dict, const OfdmGrid& ofdm,
                                   const PilotConfig& pilot, int n_paths) {
    return OmpEngine(dict, ofdm, pilot).estimate(y, n_paths);
}

// Least-squares h_hat[m] = F^+ y[m]; requires a full sounding (P >= N with
// full column rank), i.e. at least N channel uses.
class LsEstimator {
public:
    explicit LsEstimator(const PilotConfig& pilot) : pilot_(&pilot) {
        if (pilot.n_pilots < pilot.n_antennas())
            throw std::invalid_argument(
                "LsEstimator: needs P >= N channel uses (underdetermined otherwise)");
        decomp_.setThreshold(kPinvTolerance);
        decomp_.compute(pilot.beamformer);
        if (decomp_.rank() < pilot.n_antennas())
            throw std::invalid_argument("LsEstimator: pilot matrix is column-rank deficient");
    }

    Eigen::MatrixXcd estimate(const std::vector<Eigen::VectorXcd>& y) const {
        Eigen::MatrixXcd h(pilot_->n_antennas(), y.size());
        for (std::size_t m = 0; m < y.size(); ++m)
            h.col(m) = decomp_.solve(y[m]);
        return h;
    }

private:
    const PilotConfig* pilot_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> decomp_;
};

inline Eigen::MatrixXcd ls_estimate(const std::vector<Eigen::VectorXcd>& y,
                                    const PilotConfig& pilot) {
    return LsEstimator(pilot).estimate(y);
}

// Linear MMSE h_hat[m] = R_m F^H (F R_m F^H + sigma^2 I)^{-1} y[m] with a
// per-subcarrier channel covariance prior. A singular inner matrix (e.g.
// sigma^2 = 0 with a low-rank prior) is regularized by adding
// 1e-12 * max(1, mean diagonal) to the diagonal.
class MmseEstimator {
public:
    MmseEstimator(const PilotConfig& pilot, const std::vector<Eigen::MatrixXcd>& covariance)
        : n_antennas_(pilot.n_antennas()) {
        gain_.reserve(covariance.size());
        for (const auto& r : covariance) {
            if (r.rows() != n_antennas_ || r.cols() != n_antennas_)
                throw std::invalid_argument("MmseEstimator: covariance size mismatch");
            const Eigen::MatrixXcd fr = pilot.beamformer * r; // P x N
            Eigen::MatrixXcd inner = fr * pilot.beamformer.adjoint();
            inner.diagonal().array() += pilot.noise_var;
            Eigen::LDLT<Eigen::MatrixXcd> ldlt(inner);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
                const double floor =
                    1e-12 * std::max(1.0, inner.diagonal().real().mean());
                inner.diagonal().array() += floor;
                ldlt.compute(inner);
            }
            gain_.push_back(ldlt.solve(fr).adjoint()); // N x P
        }
    }

    Eigen::MatrixXcd estimate(const std::vector<Eigen::VectorXcd>& y) const {
        if (y.size() != gain_.size())
            throw std::invalid_argument("MmseEstimator: observation/subcarrier count mismatch");
        Eigen::MatrixXcd h(n_antennas_, y.size());
        for (std::size_t m = 0; m < y.size(); ++m)
            h.col(m) = gain_[m] * y[m];
        return h;
    }

private:
    int n_antennas_ = 0;
    std::vector<Eigen::MatrixXcd> gain_; // M of N x P
};

inline Eigen::MatrixXcd mmse_estimate(const std::vector<Eigen::VectorXcd>& y,
                                      const PilotConfig& pilot,
                                      const std::vector<Eigen::MatrixXcd>& covariance) {
    return MmseEstimator(pilot, covariance).estimate(y);
}

// Genie sample covariance per subcarrier from independent single-user scene
// draws of the given configuration: R_m = mean of h[m] h[m]^H.
inline std::vector<Eigen::MatrixXcd> sample_channel_covariance(
    const ArrayConfig& cfg, const OfdmGrid& ofdm, int n_paths, double r_min_m, double r_max_m,
    double k_abs_per_m, int n_draws, std::uint64_t seed) {
    if (n_draws < 1)
        throw std::invalid_argument("sample_channel_covariance: need at least one draw");
    std::vector<Eigen::MatrixXcd> cov(
        ofdm.n_subcarriers, Eigen::MatrixXcd::Zero(cfg.n_antennas, cfg.n_antennas));
    for (int i = 0; i < n_draws; ++i) {
        const UserScene scene =
            draw_scene(derive_seed(seed, i), 1, n_paths, r_min_m, r_max_m, k_abs_per_m);
        const ChannelRealization ch = assemble_channel(scene, ofdm, cfg);
        for (int m = 0; m < ofdm.n_subcarriers; ++m) {
            const auto col = ch.h[0].col(m);
            cov[m].noalias() += col * col.adjoint();
        }
    }
    for (auto& r : cov)
        r /= static_cast<double>(n_draws);
    return cov;
}

// Mean received power per observation entry, E||h||_F^2 / (N M), over
// independent single-user scene draws. Anchors the noise variance so that a
// nominal SNR is the per-entry received signal-to-noise ratio; with physical
// spreading-loss path gains the absolute channel scale is tiny and a fixed
// sigma^2 = 10^(-SNR/10) would leave every observation noise-dominated.
inline double mean_entry_power(const ArrayConfig& cfg, const OfdmGrid& ofdm, int n_paths,
                               double r_min_m, double r_max_m, double k_abs_per_m, int n_draws,
                               std::uint64_t seed) {
    if (n_draws < 1)
        throw std::invalid_argument("mean_entry_power: need at least one draw");
    double acc = 0.0;
    for (int i = 0; i < n_draws; ++i) {
        const UserScene scene =
            draw_scene(derive_seed(seed, i), 1, n_paths, r_min_m, r_max_m, k_abs_per_m);
        acc += assemble_channel(scene, ofdm, cfg).h[0].squaredNorm();
    }
    return acc / (static_cast<double>(n_draws) * cfg.n_antennas * ofdm.n_subcarriers);
}

// 10 log10( mean_k [ sum_m ||h - h_hat||^2 / sum_m ||h||^2 ] ). Perfect
// reconstructions are floored at -120 dB.
inline double nmse_linear(const std::vector<Eigen::MatrixXcd>& h_true,
                          const std::vector<Eigen::MatrixXcd>& h_hat) {
    if (h_true.empty() || h_true.size() != h_hat.size())
        throw std::invalid_argument("nmse: user count mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < h_true.size(); ++k) {
        if (h_true[k].rows() != h_hat[k].rows() || h_true[k].cols() != h_hat[k].cols())
            throw std::invalid_argument("nmse: dimension mismatch");
        const double denom = h_true[k].squaredNorm();
        if (!(denom > 0.0))
            throw std::invalid_argument("nmse: zero-norm ground truth");
        acc += (h_true[k] - h_hat[k]).squaredNorm() / denom;
    }
    return acc / static_cast<double>(h_true.size());
}

inline double nmse_db(const std::vector<Eigen::MatrixXcd>& h_true,
                      const std::vector<Eigen::MatrixXcd>& h_hat) {
    const double lin = nmse_linear(h_true, h_hat);
    if (!(lin > std::pow(10.0, kNmseFloorDb / 10.0)))
        return kNmseFloorDb;
    return 10.0 * std::log10(lin);
}

// Structured text record for one user's estimate; per-subcarrier NMSE values
// are appended when the caller knows the ground truth.
inline void write_estimate_report(std::ostream& os, const EstimateReport& rep,
                                  const std::vector<double>* per_subcarrier_nmse_db = nullptr) {
    os.precision(17);
    os << "support";
    for (int q : rep.support)
        os << ' ' << q;
    os << "\n";
    for (std::size_t l = 0; l < rep.locations.size(); ++l)
        os << "path " << l << " phi " << rep.locations[l].phi << " range_m "
           << rep.locations[l].range_m << "\n";
    os << "residual_norms";
    for (double r : rep.residual_norms)
        os << ' ' << r;
    os << "\n";
    if (rep.repeated_atom_skips > 0)
        os << "repeated_atom_skips " << rep.repeated_atom_skips << "\n";
    for (std::size_t l = 0; l < rep.splits.size(); ++l) {
        os << "split_phi " << l;
        for (const auto& s : rep.splits[l])
            os << ' ' << s.delta_phi;
        os << "\nsplit_r " << l;
        for (const auto& s : rep.splits[l])
            os << ' ' << s.delta_r;
        os << "\n";
    }
    if (per_subcarrier_nmse_db) {
        os << "nmse_db";
        for (double v : *per_subcarrier_nmse_db)
            os << ' ' << v;
        os << "\n";
    }
}

} // namespace nbsplit

#endif
