// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#ifndef BSBF_RNG_HPP
#define BSBF_RNG_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace bsbf {

/// Deterministic xoshiro256** generator. All randomness in the library flows
/// through instances of this class so that every experiment is reproducible
/// from a single 64-bit seed. Sub-streams are created with derive_seed(),
/// which mixes the base seed with integer stream ids (trial index, sweep
/// index, method id, ...) through splitmix64.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform on [0, 1).
    double uniform();
    double uniform(double lo, double hi);

    /// Uniform integer on [0, bound). bound must be >= 1.
    int uniform_int(int bound);

    /// Standard normal via Box-Muller (spare value cached).
    double normal();

    /// Circularly-symmetric complex Gaussian with unit variance, CN(0, 1).
    std::complex<double> complex_normal();

    /// Exponential with unit mean, i.e. the law of |s|^2 for s ~ CN(0,1).
    double exponential();

    /// k distinct values drawn uniformly from {0, ..., n-1}, sorted ascending.
    std::vector<int> sample_without_replacement(int n, int k);

    /// Fisher-Yates shuffle.
    void shuffle(std::vector<int> &values);

  private:
    std::array<std::uint64_t, 4> state_{};
    double spare_normal_ = 0.0;
    bool has_spare_normal_ = false;
};

std::uint64_t splitmix64(std::uint64_t &state);

/// Mixes a base seed with a list of stream ids into an independent sub-seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> ids);

} // namespace bsbf

#endif
