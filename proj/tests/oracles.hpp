// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------
//
// Test-only reference implementations, written independently of the library
// code paths they check: quadrature for the special functions, direct Monte
// Carlo estimators, and small statistics helpers.

#ifndef BSBF_TESTS_ORACLES_HPP
#define BSBF_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "bsbf/rng.hpp"

namespace oracles {

// Adaptive Simpson quadrature on [a, b].
inline double adaptive_simpson(const std::function<double(double)> &f, double a, double b,
                               double tol = 1e-12, int depth = 40) {
    const auto simpson = [&](double lo, double hi) {
        return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi));
    };
    std::function<double(double, double, double, double, int)> recurse =
        [&](double lo, double hi, double whole, double eps, int level) -> double {
        const double mid = 0.5 * (lo + hi);
        const double left = simpson(lo, mid);
        const double right = simpson(mid, hi);
        if (level <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
            return left + right + (left + right - whole) / 15.0;
        return recurse(lo, mid, left, eps / 2.0, level - 1) +
               recurse(mid, hi, right, eps / 2.0, level - 1);
    };
    return recurse(a, b, simpson(a, b), tol, depth);
}

// exp(x) * E_t(x) by direct quadrature of the defining integral, using the
// substitution z = 1 + u/x so the integrand stays O(1) for large x:
// e^x E_t(x) = (1/x) * Int_0^inf e^{-u} (1 + u/x)^{-t} du.
inline double exp_scaled_en_quadrature(int t, double x) {
    const auto integrand = [&](double u) {
        return std::exp(-u) * std::pow(1.0 + u / x, -static_cast<double>(t));
    };
    // e^{-u} below u = 60 captures the mass to ~1e-26
    return adaptive_simpson(integrand, 0.0, 60.0, 1e-14) / x;
}

// E_1 through the standard-library exponential integral: E_1(x) = -Ei(-x).
inline double exp_scaled_e1_stdlib(double x) {
    return std::exp(x) * -std::expint(-x);
}

struct McEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
};

// Mean of log2(1 + share * sum_l gains_sq[l] * |s_l|^2) over draws of i.i.d.
// CN(0,1) coefficients (|s|^2 is unit exponential).
inline McEstimate mc_log_moment(const std::vector<double> &gains_sq, double share,
                                long long draws, bsbf::Rng &rng) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (long long d = 0; d < draws; ++d) {
        double rho = 0.0;
        for (double g : gains_sq)
            rho += g * rng.exponential();
        const double sample = std::log2(1.0 + share * rho);
        sum += sample;
        sum_sq += sample * sample;
    }
    McEstimate est;
    est.mean = sum / static_cast<double>(draws);
    const double var =
        std::max(0.0, (sum_sq - draws * est.mean * est.mean) / static_cast<double>(draws - 1));
    est.standard_error = std::sqrt(var / static_cast<double>(draws));
    return est;
}

// Per-user ergodic rate sampled as log2(1 + SINR) with the sparse SINR: own
// beams carry the signal, interference beams load the denominator.
inline McEstimate mc_user_rate(const std::vector<double> &own_sq,
                               const std::vector<double> &interference_sq, double share,
                               long long draws, bsbf::Rng &rng) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (long long d = 0; d < draws; ++d) {
        double own = 0.0;
        for (double g : own_sq)
            own += g * rng.exponential();
        double interference = 0.0;
        for (double g : interference_sq)
            interference += g * rng.exponential();
        const double sample = std::log2(1.0 + share * own / (1.0 + share * interference));
        sum += sample;
        sum_sq += sample * sample;
    }
    McEstimate est;
    est.mean = sum / static_cast<double>(draws);
    const double var =
        std::max(0.0, (sum_sq - draws * est.mean * est.mean) / static_cast<double>(draws - 1));
    est.standard_error = std::sqrt(var / static_cast<double>(draws));
    return est;
}

// Kolmogorov-Smirnov statistic of samples against a CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)> &cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double c = cdf(samples[i]);
        d = std::max(d, std::abs(c - static_cast<double>(i) / n));
        d = std::max(d, std::abs(c - static_cast<double>(i + 1) / n));
    }
    return d;
}

// Spearman rank correlation (no tie handling; inputs are continuous).
inline double spearman(const std::vector<double> &a, const std::vector<double> &b) {
    const auto ranks = [](const std::vector<double> &v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        for (std::size_t pos = 0; pos < order.size(); ++pos)
            r[order[pos]] = static_cast<double>(pos);
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double mean = (n - 1.0) / 2.0;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - mean) * (rb[i] - mean);
        va += (ra[i] - mean) * (ra[i] - mean);
        vb += (rb[i] - mean) * (rb[i] - mean);
    }
    return cov / std::sqrt(va * vb);
}

// Closed-form BPSK error rates over Rayleigh fading (single branch and
// two-branch maximal-ratio combining) at mean branch SNR snr.
inline double rayleigh_bpsk_ber(double snr) {
    const double mu = std::sqrt(snr / (1.0 + snr));
    return 0.5 * (1.0 - mu);
}

inline double diversity2_bpsk_ber(double branch_snr) {
    const double p = rayleigh_bpsk_ber(branch_snr);
    return p * p * (1.0 + 2.0 * (1.0 - p));
}

} // namespace oracles

#endif
