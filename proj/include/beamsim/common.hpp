// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#pragma once

#include <armadillo>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>

namespace beamsim
{

using cxd = std::complex<double>;

// SplitMix64 mixing step, used to derive independent sub-seeds.
inline std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic hierarchical seed split: one root seed, any number of path ids.
// Results are independent of evaluation order, so sweeping one experiment axis
// never disturbs the random draws of another.
inline std::uint64_t split_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path)
{
    std::uint64_t s = mix64(root);
    for (std::uint64_t p : path)
        s = mix64(s ^ mix64(p + 0x517cc1b727220a95ULL));
    return s;
}

// Self-contained random stream. Gaussian draws use Box-Muller on top of the
// (fully specified) mt19937_64 engine, so sequences are reproducible across
// standard libraries.
class Rng
{
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), eng_(mix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    // Child stream addressed by id; independent of draw order on the parent.
    Rng fork(std::uint64_t id) const { return Rng(split_seed(seed_, {id})); }

    double uniform() // [0, 1)
    {
        return (eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t integer(std::uint64_t n) // [0, n)
    {
        if (n == 0)
            throw std::invalid_argument("Rng::integer: n must be positive");
        // Rejection sampling keeps the draw unbiased.
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = eng_();
        while (v >= limit)
            v = eng_();
        return v % n;
    }

    double gaussian()
    {
        if (have_spare_)
        {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300)
            u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * arma::datum::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    cxd cgaussian() // CN(0,1)
    {
        const double re = gaussian(), im = gaussian();
        return cxd(re * M_SQRT1_2, im * M_SQRT1_2);
    }

  private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

} // namespace beamsim
