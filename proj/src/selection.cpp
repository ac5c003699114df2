// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "bsbf/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bsbf/rng.hpp"

namespace bsbf {

namespace {

constexpr std::uint64_t kGibbsRestartStream = 0x6762735261ULL;
constexpr std::uint64_t kGibbsChainStream = 0x676263686eULL;

// Visits every `choose`-subset of `pool` in lexicographic order.
template <typename F>
void for_each_combination(const std::vector<int> &pool, int choose, F &&fn) {
    const int n = static_cast<int>(pool.size());
    if (choose > n || choose <= 0)
        return;
    std::vector<int> idx(static_cast<std::size_t>(choose));
    for (int i = 0; i < choose; ++i)
        idx[static_cast<std::size_t>(i)] = i;
    std::vector<int> combo(static_cast<std::size_t>(choose));
    while (true) {
        for (int i = 0; i < choose; ++i)
            combo[static_cast<std::size_t>(i)] = pool[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
        fn(combo);
        int i = choose - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - choose + i)
            --i;
        if (i < 0)
            break;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < choose; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

// Exact sum-rate on the reported gains, with scratch buffers reused across
// calls (the exhaustive search evaluates this on every enumerated tuple).
class ObjectiveEvaluator {
  public:
    ObjectiveEvaluator(const SpatialProfile &profile, const SystemConfig &config, double tolerance)
        : profile_(profile), tolerance_(tolerance), gamma_(config.per_user_power()),
          beams_per_user_(config.beams_per_user), rate_inverse_(config.btbc_rate_inverse),
          owner_(static_cast<std::size_t>(profile.grid_len), -1) {}

    double operator()(const std::vector<std::vector<int>> &groups) {
        for (std::size_t k = 0; k < groups.size(); ++k)
            for (int l : groups[k])
                owner_[static_cast<std::size_t>(l)] = static_cast<int>(k);
        double sum = 0.0;
        for (int k = 0; k < profile_.num_users(); ++k) {
            const auto ku = static_cast<std::size_t>(k);
            active_.clear();
            interference_.clear();
            for (int l : profile_.beams[ku]) {
                const int owner = owner_[static_cast<std::size_t>(l)];
                if (owner < 0)
                    continue;
                const double v = profile_.reported_sigma_sq[ku][static_cast<std::size_t>(l)];
                active_.push_back(v);
                if (owner != k)
                    interference_.push_back(v);
            }
            if (active_.empty())
                continue;
            GroupedGains grouped;
            grouped.active = group_values(active_, tolerance_);
            grouped.interference = group_values(interference_, tolerance_);
            sum += exact_rate(grouped, gamma_, beams_per_user_, rate_inverse_);
        }
        for (const auto &group : groups)
            for (int l : group)
                owner_[static_cast<std::size_t>(l)] = -1;
        return sum;
    }

  private:
    const SpatialProfile &profile_;
    double tolerance_;
    double gamma_;
    int beams_per_user_;
    double rate_inverse_;
    std::vector<int> owner_;
    std::vector<double> active_;
    std::vector<double> interference_;
};

std::vector<int> unclaimed_beams(const std::vector<char> &claimed) {
    std::vector<int> out;
    for (std::size_t l = 0; l < claimed.size(); ++l)
        if (!claimed[l])
            out.push_back(static_cast<int>(l));
    return out;
}

std::vector<int> shuffled_users(int num_users, Rng &rng) {
    std::vector<int> order(static_cast<std::size_t>(num_users));
    for (int k = 0; k < num_users; ++k)
        order[static_cast<std::size_t>(k)] = k;
    rng.shuffle(order);
    return order;
}

void finalize(SelectionResult &result, const SpatialProfile &profile, const SystemConfig &config) {
    validate_assignment(result.assignment, profile.grid_len, config.beams_per_user);
}

} // namespace

double selection_objective(const SpatialProfile &profile, const BeamAssignment &assignment,
                           const SystemConfig &config, double grouping_tolerance) {
    ObjectiveEvaluator eval(profile, config, grouping_tolerance);
    return eval(assignment.groups);
}

std::vector<double> gibbs_candidate_distribution(const std::vector<double> &normalized_scores,
                                                 double beta) {
    if (normalized_scores.empty())
        throw std::invalid_argument("gibbs_candidate_distribution: no candidates");
    if (!(beta > 0.0))
        throw std::invalid_argument("gibbs_candidate_distribution: beta must be > 0");

    double best_exponent = -std::numeric_limits<double>::infinity();
    for (double s : normalized_scores)
        if (s > 0.0)
            best_exponent = std::max(best_exponent, -1.0 / (beta * s));

    std::vector<double> probs(normalized_scores.size(), 0.0);
    if (!std::isfinite(best_exponent)) {
        // no candidate carries signal: sample uniformly
        std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(probs.size()));
        return probs;
    }
    double total = 0.0;
    for (std::size_t c = 0; c < probs.size(); ++c) {
        const double s = normalized_scores[c];
        probs[c] = s > 0.0 ? std::exp(-1.0 / (beta * s) - best_exponent) : 0.0;
        total += probs[c];
    }
    for (double &p : probs)
        p /= total;
    return probs;
}

SelectionResult exhaustive_select(const SpatialProfile &profile, const SystemConfig &config,
                                  const SelectorConfig &selector) {
    const int L = profile.grid_len;
    const int K = config.num_users;
    const int gamma_beams = config.beams_per_user;

    // Ordered tuples of disjoint groups: prod_k C(L - k*Gamma, Gamma).
    double count = 1.0;
    for (int k = 0; k < K && count <= selector.exhaustive_budget; ++k) {
        const int remaining = L - k * gamma_beams;
        double choose = 1.0;
        for (int i = 0; i < gamma_beams; ++i)
            choose = choose * (remaining - i) / (i + 1);
        count *= choose;
    }
    if (count > selector.exhaustive_budget)
        throw std::runtime_error("exhaustive_select: " + std::to_string(count) +
                                 " assignments exceed the evaluation budget of " +
                                 std::to_string(selector.exhaustive_budget));

    ObjectiveEvaluator eval(profile, config, selector.grouping_tolerance);
    SelectionResult result;
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(K));
    std::vector<char> claimed(static_cast<std::size_t>(L), 0);
    double best = -std::numeric_limits<double>::infinity();
    long long leaves = 0;
    bool have_best = false;

    const auto recurse = [&](auto &&self, int user) -> void {
        if (user == K) {
            const double score = eval(groups);
            ++leaves;
            if (!have_best || score > best) {
                have_best = true;
                best = score;
                result.assignment.groups = groups;
                result.trace.emplace_back(static_cast<int>(leaves), best);
            }
            return;
        }
        const auto pool = unclaimed_beams(claimed);
        for_each_combination(pool, gamma_beams, [&](const std::vector<int> &combo) {
            groups[static_cast<std::size_t>(user)] = combo;
            for (int l : combo)
                claimed[static_cast<std::size_t>(l)] = 1;
            self(self, user + 1);
            for (int l : combo)
                claimed[static_cast<std::size_t>(l)] = 0;
        });
    };
    recurse(recurse, 0);

    result.iterations = static_cast<int>(leaves);
    result.restarts_used = 1;
    finalize(result, profile, config);
    return result;
}

namespace {

// Shared scaffolding for the two greedy activations (forward-stepwise and the
// low-SNR rule): users activate one at a time in seeded random order.
template <typename PickGroup>
SelectionResult activate_users(const SpatialProfile &profile, const SystemConfig &config,
                               const SelectorConfig &selector, PickGroup &&pick_group) {
    const int K = config.num_users;
    Rng rng(selector.rng_seed);
    const auto order = shuffled_users(K, rng);

    ObjectiveEvaluator eval(profile, config, selector.grouping_tolerance);
    SelectionResult result;
    result.assignment.groups.assign(static_cast<std::size_t>(K), {});
    std::vector<char> claimed(static_cast<std::size_t>(profile.grid_len), 0);

    int step = 0;
    for (int user : order) {
        std::vector<int> group = pick_group(user, result.assignment, claimed);
        std::sort(group.begin(), group.end());
        for (int l : group)
            claimed[static_cast<std::size_t>(l)] = 1;
        result.assignment.groups[static_cast<std::size_t>(user)] = std::move(group);
        result.trace.emplace_back(++step, eval(result.assignment.groups));
    }
    result.iterations = K;
    result.restarts_used = 1;
    finalize(result, profile, config);
    return result;
}

// Candidate pool for one user: its unclaimed support beams, or (when those
// are fewer than required) the support padded with the unclaimed beams that
// add the least interference to the given users.
std::vector<int> padded_support(const SpatialProfile &profile, int user,
                                const std::vector<char> &claimed, int need,
                                const std::vector<int> &owners) {
    std::vector<int> support;
    for (int l : profile.beams[static_cast<std::size_t>(user)])
        if (!claimed[static_cast<std::size_t>(l)])
            support.push_back(l);
    if (static_cast<int>(support.size()) >= need)
        return support;

    std::vector<char> in_support(static_cast<std::size_t>(profile.grid_len), 0);
    for (int l : support)
        in_support[static_cast<std::size_t>(l)] = 1;

    std::vector<std::pair<double, int>> fillers;
    for (int l = 0; l < profile.grid_len; ++l) {
        if (claimed[static_cast<std::size_t>(l)] || in_support[static_cast<std::size_t>(l)])
            continue;
        double cost = 0.0;
        for (int i : owners)
            if (i != user)
                cost += profile.reported_sigma_sq[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)];
        fillers.emplace_back(cost, l);
    }
    std::sort(fillers.begin(), fillers.end());
    for (std::size_t f = 0; f < fillers.size() && static_cast<int>(support.size()) < need; ++f)
        support.push_back(fillers[f].second);
    std::sort(support.begin(), support.end());
    return support;
}

} // namespace

SelectionResult fs_select(const SpatialProfile &profile, const SystemConfig &config,
                          const SelectorConfig &selector) {
    const double gamma = config.per_user_power();
    std::vector<int> activated;

    auto result = activate_users(
        profile, config, selector,
        [&](int user, const BeamAssignment &partial, const std::vector<char> &claimed) {
            const auto pool =
                padded_support(profile, user, claimed, config.beams_per_user, activated);
            std::vector<int> best_group;
            double best_score = -std::numeric_limits<double>::infinity();
            for_each_combination(pool, config.beams_per_user, [&](const std::vector<int> &combo) {
                const double score = approx_sum_rate(profile, partial, combo, user, gamma,
                                                     config.beams_per_user, config.btbc_rate_inverse);
                if (best_group.empty() || score > best_score) {
                    best_score = score;
                    best_group = combo;
                }
            });
            activated.push_back(user);
            return best_group;
        });
    return result;
}

SelectionResult low_snr_select(const SpatialProfile &profile, const SystemConfig &config,
                               const SelectorConfig &selector) {
    return activate_users(
        profile, config, selector,
        [&](int user, const BeamAssignment &, const std::vector<char> &claimed) {
            const auto ku = static_cast<std::size_t>(user);
            std::vector<std::pair<double, int>> ranked;
            for (int l = 0; l < profile.grid_len; ++l)
                if (!claimed[static_cast<std::size_t>(l)])
                    ranked.emplace_back(-profile.reported_sigma_sq[ku][static_cast<std::size_t>(l)], l);
            std::sort(ranked.begin(), ranked.end());
            std::vector<int> group;
            for (int i = 0; i < config.beams_per_user; ++i)
                group.push_back(ranked[static_cast<std::size_t>(i)].second);
            return group;
        });
}

SelectionResult gibbs_select(const SpatialProfile &profile, const SystemConfig &config,
                             const SelectorConfig &selector) {
    const int K = config.num_users;
    const int L = profile.grid_len;
    const int steps = selector.gibbs_steps > 0 ? selector.gibbs_steps : 5 * K;
    const int restarts = std::max(1, selector.restarts);
    const double gamma = config.per_user_power();
    const double noise_load = config.beams_per_user * config.btbc_rate_inverse / gamma;

    // column sums of the reported gains, for the interference a claimed beam
    // inflicts on everyone else
    std::vector<double> column_power(static_cast<std::size_t>(L), 0.0);
    for (int k = 0; k < K; ++k)
        for (int l : profile.beams[static_cast<std::size_t>(k)])
            column_power[static_cast<std::size_t>(l)] +=
                profile.reported_sigma_sq[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];

    ObjectiveEvaluator eval(profile, config, selector.grouping_tolerance);

    SelectionResult best_result;
    double best_overall = -std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < restarts; ++restart) {
        SelectorConfig chain_cfg = selector;
        chain_cfg.rng_seed = restart == 0
                                 ? selector.rng_seed
                                 : derive_seed(selector.rng_seed,
                                               {kGibbsRestartStream, static_cast<std::uint64_t>(restart)});
        SelectionResult chain = fs_select(profile, config, chain_cfg);
        Rng rng(derive_seed(chain_cfg.rng_seed, {kGibbsChainStream}));

        auto groups = chain.assignment.groups;
        double chain_best = eval(groups);
        auto chain_best_groups = groups;
        std::vector<std::pair<int, double>> trace;
        trace.emplace_back(0, chain_best);

        std::vector<int> owner(static_cast<std::size_t>(L), -1);
        for (int k = 0; k < K; ++k)
            for (int l : groups[static_cast<std::size_t>(k)])
                owner[static_cast<std::size_t>(l)] = k;

        double beta = selector.initial_beta;
        std::vector<std::vector<int>> candidates;
        std::vector<double> scores;

        for (int step = 1; step <= steps; ++step) {
            for (int user = 0; user < K; ++user) {
                const auto ku = static_cast<std::size_t>(user);
                for (int l : groups[ku])
                    owner[static_cast<std::size_t>(l)] = -1;

                // interference already present among the other users
                double base_load = noise_load;
                for (int i = 0; i < K; ++i) {
                    if (i == user)
                        continue;
                    const auto iu = static_cast<std::size_t>(i);
                    for (int l : profile.beams[iu]) {
                        const int o = owner[static_cast<std::size_t>(l)];
                        if (o >= 0 && o != i)
                            base_load += profile.reported_sigma_sq[iu][static_cast<std::size_t>(l)];
                    }
                }

                // all unclaimed beams are candidates: a group may trade own
                // signal for a harmless zero-gain beam to relieve the others
                std::vector<int> pool;
                for (int l = 0; l < L; ++l)
                    if (owner[static_cast<std::size_t>(l)] < 0)
                        pool.push_back(l);

                candidates.clear();
                scores.clear();
                double max_score = 0.0;
                for_each_combination(pool, config.beams_per_user, [&](const std::vector<int> &combo) {
                    double signal = 0.0;
                    double added = 0.0;
                    for (int l : combo) {
                        const double own_gain =
                            profile.reported_sigma_sq[ku][static_cast<std::size_t>(l)];
                        signal += own_gain;
                        added += column_power[static_cast<std::size_t>(l)] - own_gain;
                    }
                    const double score = signal / (base_load + added);
                    candidates.push_back(combo);
                    scores.push_back(score);
                    max_score = std::max(max_score, score);
                });

                if (max_score > 0.0)
                    for (double &s : scores)
                        s /= max_score;
                const auto probs = gibbs_candidate_distribution(scores, beta);

                double u = rng.uniform();
                std::size_t pick = probs.size() - 1;
                double cdf = 0.0;
                for (std::size_t c = 0; c < probs.size(); ++c) {
                    cdf += probs[c];
                    if (u < cdf) {
                        pick = c;
                        break;
                    }
                }

                groups[ku] = candidates[pick];
                for (int l : groups[ku])
                    owner[static_cast<std::size_t>(l)] = user;

                const double objective = eval(groups);
                if (objective > chain_best) {
                    chain_best = objective;
                    chain_best_groups = groups;
                }
            }
            trace.emplace_back(step, chain_best);
            beta *= selector.cooling_rate;
        }

        if (chain_best > best_overall) {
            best_overall = chain_best;
            best_result.assignment.groups = std::move(chain_best_groups);
            best_result.trace = std::move(trace);
        }
    }

    best_result.iterations = steps;
    best_result.restarts_used = restarts;
    finalize(best_result, profile, config);
    return best_result;
}

SelectionResult select_beams(const SpatialProfile &profile, const SystemConfig &config,
                             const SelectorConfig &selector) {
    switch (selector.method) {
    case SelectionMethod::exhaustive:
        return exhaustive_select(profile, config, selector);
    case SelectionMethod::forward_stepwise:
        return fs_select(profile, config, selector);
    case SelectionMethod::gibbs:
        return gibbs_select(profile, config, selector);
    case SelectionMethod::low_snr_greedy:
        return low_snr_select(profile, config, selector);
    }
    throw std::logic_error("select_beams: unknown method");
}

SelectionMethod parse_selection_method(const std::string &name) {
    if (name == "exhaustive")
        return SelectionMethod::exhaustive;
    if (name == "fs")
        return SelectionMethod::forward_stepwise;
    if (name == "gibbs")
        return SelectionMethod::gibbs;
    if (name == "low-snr-greedy")
        return SelectionMethod::low_snr_greedy;
    throw std::invalid_argument("unknown selection method: " + name);
}

std::string selection_method_name(SelectionMethod method) {
    switch (method) {
    case SelectionMethod::exhaustive:
        return "exhaustive";
    case SelectionMethod::forward_stepwise:
        return "fs";
    case SelectionMethod::gibbs:
        return "gibbs";
    case SelectionMethod::low_snr_greedy:
        return "low-snr-greedy";
    }
    return "unknown";
}

} // namespace bsbf
