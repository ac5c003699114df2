// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "bsbf/rate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bsbf {

namespace {

constexpr double kEulerMascheroni = 0.57721566490153286;
constexpr double kLn2 = std::numbers::ln2;

// Binomial coefficients up to the largest (paths + multiplicity) the profile
// generators produce; grown here with headroom.
constexpr int kBinomTableSize = 72;

double binomial(int n, int k) {
    static const auto table = [] {
        std::array<std::array<double, kBinomTableSize>, kBinomTableSize> c{};
        for (int i = 0; i < kBinomTableSize; ++i) {
            c[static_cast<std::size_t>(i)][0] = 1.0;
            for (int j = 1; j <= i; ++j)
                c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                    c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] +
                    (j < i ? c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)] : 0.0);
        }
        return c;
    }();
    if (k < 0 || k > n)
        return 0.0;
    if (n < kBinomTableSize)
        return table[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
    double result = 1.0;
    for (int i = 1; i <= k; ++i)
        result *= static_cast<double>(n - k + i) / static_cast<double>(i);
    return result;
}

double int_pow(double base, int exponent) {
    if (exponent < 0)
        return 1.0 / int_pow(base, -exponent);
    double result = 1.0;
    double factor = base;
    for (int e = exponent; e > 0; e >>= 1) {
        if (e & 1)
            result *= factor;
        factor *= factor;
    }
    return result;
}

// exp(x) * E_1(x) for 0 < x <= 1 via the ascending series of E_1.
double exp_scaled_e1_series(double x) {
    double sum = -kEulerMascheroni - std::log(x);
    double term = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= -x / k;
        const double contribution = -term / k;
        sum += contribution;
        if (std::abs(contribution) < 1e-18 * std::abs(sum))
            break;
    }
    return std::exp(x) * sum;
}

// exp(x) * E_t(x) for x > 1 via the modified Lentz continued fraction. The
// scaled value is exactly the fraction; no exponential ever appears.
double exp_scaled_en_fraction(int t, double x) {
    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-16;
    double b = x + t;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double a = -static_cast<double>(i) * (t - 1 + i);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const double delta = c * d;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps)
            return h;
    }
    throw std::runtime_error("exp_scaled_en: continued fraction failed to converge at x = " +
                             std::to_string(x));
}

// Scaled values for all orders 1..max_t at once. The upward recurrence
// e^x E_{t+1} = (1 - x e^x E_t)/t is stable for x <= 1; above that each order
// uses its own continued fraction (the recurrence amplifies roundoff by x/t).
std::vector<double> exp_scaled_en_all(int max_t, double x) {
    std::vector<double> values(static_cast<std::size_t>(max_t));
    if (x <= 1.0) {
        values[0] = exp_scaled_e1_series(x);
        for (int t = 1; t < max_t; ++t)
            values[static_cast<std::size_t>(t)] =
                (1.0 - x * values[static_cast<std::size_t>(t - 1)]) / t;
    } else {
        for (int t = 1; t <= max_t; ++t)
            values[static_cast<std::size_t>(t - 1)] = exp_scaled_en_fraction(t, x);
    }
    return values;
}

// Composition-sum weight of the multiplicity expansion: sums over all ways of
// distributing l-1 units across the positions other than j, each contributing
// a negative-binomial coefficient and a power of the pairwise rate gap.
double composition_weight(const GainMultiset &gains, int j, int l) {
    const int count = static_cast<int>(gains.values_sq.size());
    const double inv_vj = 1.0 / gains.values_sq[static_cast<std::size_t>(j)];

    if (l == 1) {
        // Single empty composition: the product of the zeroth-order factors.
        double product = 1.0;
        for (int tau = 0; tau < count; ++tau) {
            if (tau == j)
                continue;
            const double gap = 1.0 / gains.values_sq[static_cast<std::size_t>(tau)] - inv_vj;
            product *= int_pow(gap, -gains.mult[static_cast<std::size_t>(tau)]);
        }
        return product;
    }

    std::vector<int> others;
    others.reserve(static_cast<std::size_t>(count - 1));
    for (int tau = 0; tau < count; ++tau)
        if (tau != j)
            others.push_back(tau);
    if (others.empty())
        return 0.0;  // no free positions can absorb l-1 > 0 units

    double total = 0.0;

    // Depth-first over (i_tau) with sum l-1; the last position absorbs the
    // remainder so every leaf is a valid composition.
    struct Frame {
        std::size_t pos;
        int remaining;
        double product;
    };
    std::vector<Frame> stack;
    stack.push_back({0, l - 1, 1.0});
    while (!stack.empty()) {
        const Frame frame = stack.back();
        stack.pop_back();
        const int tau = others[frame.pos];
        const double gap = 1.0 / gains.values_sq[static_cast<std::size_t>(tau)] - inv_vj;
        const int r_tau = gains.mult[static_cast<std::size_t>(tau)];
        const bool last = frame.pos + 1 == others.size();
        const int lo = last ? frame.remaining : 0;
        for (int i = lo; i <= frame.remaining; ++i) {
            const double factor = binomial(i + r_tau - 1, i) * int_pow(gap, -(r_tau + i));
            if (last)
                total += frame.product * factor;
            else
                stack.push_back({frame.pos + 1, frame.remaining - i, frame.product * factor});
        }
    }
    return total;
}

// One hypoexponential log-moment E[log2(1 + share * rho)] where rho is the
// weighted chi-square sum described by `gains`.
double log_moment(const GainMultiset &gains, double share) {
    if (gains.empty())
        return 0.0;
    const int count = static_cast<int>(gains.values_sq.size());
    double prefix = 1.0;
    for (int j = 0; j < count; ++j)
        prefix *= int_pow(gains.values_sq[static_cast<std::size_t>(j)],
                          -gains.mult[static_cast<std::size_t>(j)]);

    double total = 0.0;
    for (int j = 0; j < count; ++j) {
        const double v_j = gains.values_sq[static_cast<std::size_t>(j)];
        const int r_j = gains.mult[static_cast<std::size_t>(j)];
        const double x_j = 1.0 / (share * v_j);
        if (r_j == 1) {
            // unit multiplicity: only l = 1 contributes and the inner E-sum
            // collapses to one scaled E_1 value
            const double weight = composition_weight(gains, j, 1);
            total += v_j / kLn2 * weight * exp_scaled_en(1, x_j);
            continue;
        }
        const auto scaled = exp_scaled_en_all(r_j, x_j);
        std::vector<double> prefix_sums(static_cast<std::size_t>(r_j));
        double running = 0.0;
        for (int t = 0; t < r_j; ++t) {
            running += scaled[static_cast<std::size_t>(t)];
            prefix_sums[static_cast<std::size_t>(t)] = running;
        }
        for (int l = 1; l <= r_j; ++l) {
            const double sign = (l % 2 == 1) ? 1.0 : -1.0;
            const double weight = composition_weight(gains, j, l);
            if (weight == 0.0)
                continue;
            total += sign * int_pow(v_j, r_j - l + 1) / kLn2 * weight *
                     prefix_sums[static_cast<std::size_t>(r_j - l)];
        }
    }
    return prefix * total;
}

std::vector<double> lagrange_weights(const std::vector<double> &values_sq) {
    std::vector<double> weights(values_sq.size(), 1.0);
    for (std::size_t l = 0; l < values_sq.size(); ++l)
        for (std::size_t j = 0; j < values_sq.size(); ++j)
            if (j != l)
                weights[l] /= 1.0 - values_sq[j] / values_sq[l];
    return weights;
}

void require_distinct(const std::vector<double> &values_sq, const char *what) {
    for (std::size_t i = 0; i < values_sq.size(); ++i)
        for (std::size_t j = i + 1; j < values_sq.size(); ++j)
            if (values_sq[i] == values_sq[j])
                throw std::invalid_argument(std::string(what) +
                                            ": duplicate gain values, use the multiplicity form");
}

GainMultiset group_values_impl(std::vector<double> values_sq, double tolerance) {
    std::sort(values_sq.begin(), values_sq.end(), std::greater<>());
    GainMultiset out;
    for (double v : values_sq) {
        // compare against the group representative (its largest member)
        if (!out.values_sq.empty() &&
            std::abs(out.values_sq.back() - v) <= tolerance * std::max(std::abs(out.values_sq.back()), std::abs(v))) {
            ++out.mult.back();
        } else {
            out.values_sq.push_back(v);
            out.mult.push_back(1);
        }
    }
    return out;
}

} // namespace

int GainMultiset::total() const {
    int n = 0;
    for (int r : mult)
        n += r;
    return n;
}

double exp_scaled_en(int t, double x) {
    if (t < 1)
        throw std::domain_error("exp_scaled_en: order must be >= 1");
    if (!(x > 0.0))
        throw std::domain_error("exp_scaled_en: argument must be > 0");
    if (x <= 1.0) {
        double value = exp_scaled_e1_series(x);
        for (int m = 1; m < t; ++m)
            value = (1.0 - x * value) / m;
        return value;
    }
    return exp_scaled_en_fraction(t, x);
}

GainMultiset group_values(std::vector<double> values_sq, double tolerance) {
    return group_values_impl(std::move(values_sq), tolerance);
}

GroupedGains group_gains(const SpatialProfile &profile, const BeamAssignment &assignment, int user,
                         const GroupingOptions &options) {
    if (options.tolerance < 0.0)
        throw std::invalid_argument("group_gains: tolerance must be >= 0");
    const auto &gains =
        options.use_reported ? profile.reported_sigma_sq : profile.sigma_sq;
    const auto ku = static_cast<std::size_t>(user);

    std::vector<char> own(static_cast<std::size_t>(profile.grid_len), 0);
    for (int l : assignment.groups[ku])
        own[static_cast<std::size_t>(l)] = 1;

    std::vector<double> active;
    std::vector<double> interference;
    for (int l : active_beams(profile, assignment, user)) {
        const double v = gains[ku][static_cast<std::size_t>(l)];
        active.push_back(v);
        if (!own[static_cast<std::size_t>(l)])
            interference.push_back(v);
    }
    GroupedGains out;
    out.active = group_values(std::move(active), options.tolerance);
    out.interference = group_values(std::move(interference), options.tolerance);
    return out;
}

double exact_rate(const GroupedGains &grouped, double gamma, int beams_per_user,
                  double btbc_rate_inverse) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("exact_rate: per-user power must be > 0");
    if (grouped.active.empty())
        return 0.0;
    const double share = gamma / (btbc_rate_inverse * beams_per_user);
    return log_moment(grouped.active, share) - log_moment(grouped.interference, share);
}

double exact_rate_distinct(const std::vector<double> &active_sq,
                           const std::vector<double> &interference_sq, double gamma,
                           int beams_per_user, double btbc_rate_inverse) {
    if (!(gamma > 0.0))
        throw std::invalid_argument("exact_rate_distinct: per-user power must be > 0");
    require_distinct(active_sq, "exact_rate_distinct");
    require_distinct(interference_sq, "exact_rate_distinct");
    if (active_sq.empty())
        return 0.0;
    const double share = gamma / (btbc_rate_inverse * beams_per_user);

    const auto term = [share](const std::vector<double> &values_sq) {
        const auto weights = lagrange_weights(values_sq);
        double sum = 0.0;
        for (std::size_t l = 0; l < values_sq.size(); ++l)
            sum += weights[l] * exp_scaled_en(1, 1.0 / (share * values_sq[l]));
        return sum / kLn2;
    };
    return term(active_sq) - (interference_sq.empty() ? 0.0 : term(interference_sq));
}

double hypoexp_pdf(const GainMultiset &gains, double rho) {
    if (gains.empty())
        throw std::invalid_argument("hypoexp_pdf: empty gain multiset");
    if (rho < 0.0)
        throw std::invalid_argument("hypoexp_pdf: density argument must be >= 0");

    const int count = static_cast<int>(gains.values_sq.size());
    double prefix = 1.0;
    for (int j = 0; j < count; ++j)
        prefix *= int_pow(gains.values_sq[static_cast<std::size_t>(j)],
                          -gains.mult[static_cast<std::size_t>(j)]);

    double total = 0.0;
    for (int j = 0; j < count; ++j) {
        const double v_j = gains.values_sq[static_cast<std::size_t>(j)];
        const int r_j = gains.mult[static_cast<std::size_t>(j)];
        const double decay = std::exp(-rho / v_j);
        double factorial = 1.0;  // (r_j - l)! built downward from l = r_j
        for (int l = r_j; l >= 1; --l) {
            const double sign = (l % 2 == 1) ? 1.0 : -1.0;
            const double weight = composition_weight(gains, j, l);
            if (weight != 0.0)
                total += sign / factorial * int_pow(rho, r_j - l) * weight * decay;
            factorial *= static_cast<double>(r_j - l + 1);
        }
    }
    // the mixture terms cancel heavily in the tails; clamp the roundoff dust
    return std::max(0.0, prefix * total);
}

double approx_sum_rate(const SpatialProfile &profile, const BeamAssignment &partial,
                       const std::vector<int> &candidate, int user, double gamma,
                       int beams_per_user, double btbc_rate_inverse) {
    const auto &gains = profile.reported_sigma_sq;
    const auto ku = static_cast<std::size_t>(user);

    double signal = 0.0;
    for (int l : candidate)
        signal += gains[ku][static_cast<std::size_t>(l)];
    if (signal <= 0.0)
        return -std::numeric_limits<double>::infinity();

    std::vector<char> claimed(static_cast<std::size_t>(profile.grid_len), 0);
    for (const auto &group : partial.groups)
        for (int l : group)
            claimed[static_cast<std::size_t>(l)] = 1;

    double load = beams_per_user * btbc_rate_inverse / gamma;
    for (int i = 0; i < partial.num_users(); ++i) {
        if (i == user || partial.groups[static_cast<std::size_t>(i)].empty())
            continue;
        const auto iu = static_cast<std::size_t>(i);
        std::vector<char> own(static_cast<std::size_t>(profile.grid_len), 0);
        for (int l : partial.groups[iu])
            own[static_cast<std::size_t>(l)] = 1;
        // interference user i already suffers from previously claimed beams
        for (int l : profile.beams[iu])
            if (claimed[static_cast<std::size_t>(l)] && !own[static_cast<std::size_t>(l)])
                load += gains[iu][static_cast<std::size_t>(l)];
        // interference the candidate would add
        for (int l : candidate)
            load += gains[iu][static_cast<std::size_t>(l)];
    }
    return std::log2(signal) - std::log2(load);
}

double low_snr_limit(const SpatialProfile &profile, const BeamAssignment &assignment,
                     int beams_per_user, double btbc_rate_inverse,
                     const GroupingOptions &options) {
    const auto &gains = options.use_reported ? profile.reported_sigma_sq : profile.sigma_sq;
    double selected_power = 0.0;
    for (int k = 0; k < assignment.num_users(); ++k)
        for (int l : assignment.groups[static_cast<std::size_t>(k)])
            selected_power += gains[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
    return selected_power / (btbc_rate_inverse * beams_per_user * kLn2);
}

std::pair<double, double> high_snr_constants(const SpatialProfile &profile,
                                             const BeamAssignment &assignment, int beams_per_user,
                                             double btbc_rate_inverse,
                                             const GroupingOptions &options) {
    const auto &gains = options.use_reported ? profile.reported_sigma_sq : profile.sigma_sq;
    const double share_inv = btbc_rate_inverse * beams_per_user;
    double c1 = 0.0;
    double c2 = 0.0;
    for (int k = 0; k < assignment.num_users(); ++k) {
        const auto ku = static_cast<std::size_t>(k);
        std::vector<char> own(static_cast<std::size_t>(profile.grid_len), 0);
        for (int l : assignment.groups[ku])
            own[static_cast<std::size_t>(l)] = 1;

        std::vector<double> active;
        std::vector<double> interference;
        for (int l : active_beams(profile, assignment, k)) {
            const double v = gains[ku][static_cast<std::size_t>(l)];
            active.push_back(v);
            if (!own[static_cast<std::size_t>(l)])
                interference.push_back(v);
        }
        require_distinct(active, "high_snr_constants");

        const auto accumulate = [&](const std::vector<double> &values_sq, double sign) {
            const auto weights = lagrange_weights(values_sq);
            for (std::size_t l = 0; l < values_sq.size(); ++l) {
                c1 += sign * weights[l];
                c2 += sign * weights[l] *
                      (std::log2(values_sq[l] / share_inv) - kEulerMascheroni / kLn2);
            }
        };
        accumulate(active, 1.0);
        accumulate(interference, -1.0);
    }
    return {c1, c2};
}

RateReport closed_form_rates(const SpatialProfile &profile, const BeamAssignment &assignment,
                             const SystemConfig &config, const GroupingOptions &options) {
    RateReport report;
    report.per_user.resize(static_cast<std::size_t>(profile.num_users()));
    for (int k = 0; k < profile.num_users(); ++k) {
        const auto grouped = group_gains(profile, assignment, k, options);
        report.per_user[static_cast<std::size_t>(k)] =
            exact_rate(grouped, config.per_user_power(), config.beams_per_user,
                       config.btbc_rate_inverse);
        report.sum += report.per_user[static_cast<std::size_t>(k)];
    }
    try {
        const auto [c1, c2] = high_snr_constants(profile, assignment, config.beams_per_user,
                                                 config.btbc_rate_inverse, options);
        report.c1 = c1;
        report.c2 = c2;
    } catch (const std::invalid_argument &) {
        // duplicate gains: the affine expansion has no distinct-gain form
    }
    return report;
}

} // namespace bsbf
