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

#ifndef NBSPLIT_RNG_HPP
#define NBSPLIT_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>

namespace nbsplit {

// splitmix64 mixing step. Used to derive statistically independent
// sub-stream seeds from (master seed, index...) tuples so that every
// Monte-Carlo cell is reproducible independently of execution order.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t h = splitmix64(base ^ 0x6a09e667f3bcc909ULL);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return h;
}

// Seeded RNG with fully specified distributions (no reliance on
// implementation-defined std:: distribution algorithms), so that a given
// seed produces the same stream on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t raw() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        if (!(lo <= hi))
            throw std::invalid_argument("Rng::uniform: empty interval");
        return lo + (hi - lo) * uniform01();
    }

    // Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    std::complex<double> complex_normal(double variance) {
        double u1 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double radius = std::sqrt(-variance * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * uniform01();
        return std::polar(radius, angle);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace nbsplit

#endif
