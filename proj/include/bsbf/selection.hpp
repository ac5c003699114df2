// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#ifndef BSBF_SELECTION_HPP
#define BSBF_SELECTION_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bsbf/beamforming.hpp"
#include "bsbf/rate.hpp"
#include "bsbf/scenario.hpp"

namespace bsbf {

enum class SelectionMethod { exhaustive, forward_stepwise, gibbs, low_snr_greedy };

struct SelectorConfig {
    SelectionMethod method = SelectionMethod::forward_stepwise;
    int gibbs_steps = 0;          // 0 -> 5 * K
    double initial_beta = 0.1;
    double cooling_rate = 0.95;
    int restarts = 3;
    std::uint64_t rng_seed = 1;
    double exhaustive_budget = 1e7;  // max ordered assignment tuples
    double grouping_tolerance = 1e-9;
};

struct SelectionResult {
    BeamAssignment assignment;
    std::vector<std::pair<int, double>> trace;  // (step, best exact sum-rate so far)
    int iterations = 0;
    int restarts_used = 0;
};

/// Exact sum-rate of an assignment as the selector sees it (reported gains).
double selection_objective(const SpatialProfile &profile, const BeamAssignment &assignment,
                           const SystemConfig &config, double grouping_tolerance = 1e-9);

/// Enumerates every ordered tuple of disjoint beam groups and returns the one
/// maximizing the exact sum-rate (ties to the lexicographically smallest
/// tuple). Throws when the tuple count exceeds config.exhaustive_budget,
/// naming the count.
SelectionResult exhaustive_select(const SpatialProfile &profile, const SystemConfig &config,
                                  const SelectorConfig &selector);

/// Forward-stepwise search: activates users in seeded random order, giving
/// each the candidate group maximizing the signal-over-load surrogate among
/// groups drawn from its unclaimed support (padded with minimum-interference
/// filler beams when the support is exhausted).
SelectionResult fs_select(const SpatialProfile &profile, const SystemConfig &config,
                          const SelectorConfig &selector);

/// Annealed Gibbs sampling over per-user groups, initialized at the
/// forward-stepwise solution. Each step resamples every user's group from the
/// softmin distribution of the normalized surrogate, the temperature decays
/// geometrically, and the best assignment over all sampled states (by exact
/// sum-rate) is kept. Runs independent restarts and returns the best.
SelectionResult gibbs_select(const SpatialProfile &profile, const SystemConfig &config,
                             const SelectorConfig &selector);

/// Noise-dominated regime: users in seeded random order each claim their
/// strongest unclaimed beams.
SelectionResult low_snr_select(const SpatialProfile &profile, const SystemConfig &config,
                               const SelectorConfig &selector);

/// Dispatch on selector.method.
SelectionResult select_beams(const SpatialProfile &profile, const SystemConfig &config,
                             const SelectorConfig &selector);

/// Sampling distribution over candidate groups given their normalized scores
/// (max-normalized, in (0, 1]) at temperature beta: p_c proportional to
/// exp(-1/(beta * score_c)). All-zero scores fall back to uniform.
std::vector<double> gibbs_candidate_distribution(const std::vector<double> &normalized_scores,
                                                 double beta);

SelectionMethod parse_selection_method(const std::string &name);
std::string selection_method_name(SelectionMethod method);

} // namespace bsbf

#endif
