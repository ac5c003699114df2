// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#ifndef BSBF_RATE_HPP
#define BSBF_RATE_HPP

#include <optional>
#include <utility>
#include <vector>

#include "bsbf/beamforming.hpp"
#include "bsbf/scenario.hpp"

namespace bsbf {

/// A multiset of squared large-scale gains, stored as distinct values (sorted
/// descending) with their multiplicities.
struct GainMultiset {
    std::vector<double> values_sq;
    std::vector<int> mult;

    int total() const;
    bool empty() const { return values_sq.empty(); }
};

/// Tolerance-grouped gains of one user under an assignment: the full active
/// multiset (every claimed beam inside the support) and the interference-only
/// multiset (active beams owned by other users).
struct GroupedGains {
    GainMultiset active;
    GainMultiset interference;
};

struct GroupingOptions {
    double tolerance = 1e-9;   // relative, on the squared gains
    bool use_reported = false; // group the transmitter's view instead of the true powers
};

/// Per-user and sum rates in bits/s/Hz, with optional Monte Carlo standard
/// error and high-SNR constants.
struct RateReport {
    std::vector<double> per_user;
    double sum = 0.0;
    std::optional<double> sum_stderr;
    std::optional<double> c1;
    std::optional<double> c2;
};

/// exp(x) * E_t(x) for the generalized exponential integral
/// E_t(x) = integral_1^inf exp(-x*z)/z^t dz. Only the scaled product is ever
/// exposed; the raw factors overflow/underflow long before the product loses
/// accuracy (x grows like 1/gamma in the low-power regime). Series plus
/// scaled upward recurrence for x <= 1, per-order continued fraction for
/// x > 1. Throws std::domain_error for x <= 0 or t < 1.
double exp_scaled_en(int t, double x);

/// Groups the two gain multisets of one user. Values whose relative
/// difference is at most options.tolerance collapse into one multiplicity.
GroupedGains group_gains(const SpatialProfile &profile, const BeamAssignment &assignment, int user,
                         const GroupingOptions &options = {});

/// Sorts values descending and collapses values within the relative tolerance
/// into multiplicities.
GainMultiset group_values(std::vector<double> values_sq, double tolerance);

/// Exact ergodic rate of one user: difference of two hypoexponential
/// log-moments, each evaluated through the multiplicity expansion with
/// scaled exponential integrals. Zero when the user has no active beam.
double exact_rate(const GroupedGains &grouped, double gamma, int beams_per_user,
                  double btbc_rate_inverse);

/// Distinct-gain simplification (Lagrange-type weights on scaled E_1 terms).
/// Requires all active gains pairwise distinct; throws otherwise.
double exact_rate_distinct(const std::vector<double> &active_sq,
                           const std::vector<double> &interference_sq, double gamma,
                           int beams_per_user, double btbc_rate_inverse);

/// Density of sum_l sigma_l^2 |s_l|^2 at rho for i.i.d. CN(0,1) coefficients,
/// in the mixture-of-Erlang form.
double hypoexp_pdf(const GainMultiset &gains, double rho);

/// Search surrogate for the sum-rate gain of giving `candidate` to `user`
/// when only the users already holding beams in `partial` are active:
/// log2(candidate signal) - log2(noise floor + interference among and from
/// the active users). Candidates with zero signal score -infinity.
double approx_sum_rate(const SpatialProfile &profile, const BeamAssignment &partial,
                       const std::vector<int> &candidate, int user, double gamma,
                       int beams_per_user, double btbc_rate_inverse);

/// Slope of the sum-rate in gamma as gamma -> 0 (bits/s/Hz per unit power).
double low_snr_limit(const SpatialProfile &profile, const BeamAssignment &assignment,
                     int beams_per_user, double btbc_rate_inverse,
                     const GroupingOptions &options = {});

/// High-SNR affine expansion R_sum ~ c1 * log2(gamma) + c2. Requires the
/// active gains of every user to be pairwise distinct; throws otherwise.
std::pair<double, double> high_snr_constants(const SpatialProfile &profile,
                                             const BeamAssignment &assignment, int beams_per_user,
                                             double btbc_rate_inverse,
                                             const GroupingOptions &options = {});

/// Closed-form report for a full assignment (per-user exact rates and sum).
RateReport closed_form_rates(const SpatialProfile &profile, const BeamAssignment &assignment,
                             const SystemConfig &config, const GroupingOptions &options = {});

} // namespace bsbf

#endif
