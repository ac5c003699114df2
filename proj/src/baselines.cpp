// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "bsbf/baselines.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bsbf {

CovarianceSet build_covariances(const SpatialProfile &profile, const AngleGrid &grid,
                                const SystemConfig &config) {
    const int N = config.num_antennas;
    CovarianceSet out;
    out.R.reserve(static_cast<std::size_t>(profile.num_users()));
    for (int k = 0; k < profile.num_users(); ++k) {
        const auto ku = static_cast<std::size_t>(k);
        Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(N, N);
        for (int l : profile.beams[ku]) {
            const auto a = steering_vector(grid.angles_deg[static_cast<std::size_t>(l)], N,
                                           config.antenna_spacing_ratio);
            R += profile.reported_sigma_sq[ku][static_cast<std::size_t>(l)] * (a * a.adjoint());
        }
        out.R.push_back(std::move(R));
    }
    return out;
}

std::vector<Eigen::VectorXcd> slnr_eigen_precoder(const CovarianceSet &covariances, double gamma) {
    const int K = static_cast<int>(covariances.R.size());
    if (K < 1)
        throw std::invalid_argument("slnr_eigen_precoder: no covariances");
    const int N = static_cast<int>(covariances.R.front().rows());
    if (!(gamma > 0.0))
        throw std::invalid_argument("slnr_eigen_precoder: gamma must be > 0");

    Eigen::MatrixXcd total = Eigen::MatrixXcd::Zero(N, N);
    for (const auto &R : covariances.R)
        total += R;

    std::vector<Eigen::VectorXcd> vectors;
    vectors.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        const Eigen::MatrixXcd leak =
            Eigen::MatrixXcd::Identity(N, N) / gamma + (total - covariances.R[static_cast<std::size_t>(k)]);
        const Eigen::LLT<Eigen::MatrixXcd> llt(leak);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("slnr_eigen_precoder: leakage matrix factorization failed");

        // power iteration on leak^{-1} R_k, which shares its (real,
        // nonnegative) spectrum with a Hermitian congruence
        Eigen::VectorXcd v(N);
        Rng start(derive_seed(0x534c4e52ULL, {static_cast<std::uint64_t>(k)}));
        for (int n = 0; n < N; ++n)
            v(n) = start.complex_normal();
        v.normalize();

        double lambda = 0.0;
        double residual = std::numeric_limits<double>::infinity();
        bool value_converged = false;
        for (int iter = 0; iter < 10000; ++iter) {
            Eigen::VectorXcd image = llt.solve(covariances.R[static_cast<std::size_t>(k)] * v);
            const double norm = image.norm();
            if (norm == 0.0)
                throw std::runtime_error("slnr_eigen_precoder: covariance has empty range");
            const double lambda_next = std::real(std::complex<double>(v.adjoint() * image));
            residual = (image - lambda_next * v).norm();
            value_converged = std::abs(lambda_next - lambda) <= 1e-10 * std::abs(lambda_next);
            lambda = lambda_next;
            v = image / norm;
            // a stabilized eigenvalue alone can leave the vector wandering in
            // a near-degenerate dominant subspace, so ask for the residual too
            if (value_converged && residual <= 1e-8 * lambda)
                break;
        }
        if (!value_converged)
            throw std::runtime_error("slnr_eigen_precoder: power iteration hit the cap, residual " +
                                     std::to_string(residual));
        vectors.push_back(v);
    }
    return vectors;
}

Eigen::MatrixXcd dft_codebook(int num_antennas) {
    Eigen::MatrixXcd F(num_antennas, num_antennas);
    const double scale = 1.0 / std::sqrt(static_cast<double>(num_antennas));
    for (int n = 0; n < num_antennas; ++n)
        for (int m = 0; m < num_antennas; ++m)
            F(n, m) = std::polar(scale, -2.0 * std::numbers::pi * n * m / num_antennas);
    return F;
}

std::vector<Eigen::VectorXcd> dft_slnr_precoder(const CovarianceSet &covariances, double gamma,
                                                int num_antennas) {
    const int K = static_cast<int>(covariances.R.size());
    const Eigen::MatrixXcd F = dft_codebook(num_antennas);

    // g(k, n) = n-th diagonal entry of F^H R_k F, real and nonnegative
    Eigen::MatrixXd g(K, num_antennas);
    for (int k = 0; k < K; ++k) {
        const Eigen::MatrixXcd beam_domain = F.adjoint() * covariances.R[static_cast<std::size_t>(k)] * F;
        for (int n = 0; n < num_antennas; ++n)
            g(k, n) = std::real(beam_domain(n, n));
    }
    const Eigen::VectorXd column_totals = g.colwise().sum();

    std::vector<Eigen::VectorXcd> vectors;
    vectors.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        int best_n = 0;
        double best_ratio = -1.0;
        for (int n = 0; n < num_antennas; ++n) {
            const double ratio = g(k, n) / (1.0 / gamma + column_totals(n) - g(k, n));
            if (ratio > best_ratio) {
                best_ratio = ratio;
                best_n = n;
            }
        }
        vectors.push_back(F.col(best_n));
    }
    return vectors;
}

std::vector<Eigen::VectorXcd> perturb_csi(const std::vector<Eigen::VectorXcd> &channels,
                                          double gamma, Rng &rng) {
    std::vector<Eigen::VectorXcd> estimates;
    estimates.reserve(channels.size());
    const double noise_std = 1.0 / std::sqrt(gamma);
    for (const auto &h : channels) {
        Eigen::VectorXcd est = h;
        for (Eigen::Index n = 0; n < est.size(); ++n)
            est(n) += noise_std * rng.complex_normal();
        estimates.push_back(std::move(est));
    }
    return estimates;
}

ZfResult zf_precoder(const std::vector<Eigen::VectorXcd> &channel_estimates) {
    const int K = static_cast<int>(channel_estimates.size());
    if (K < 1)
        throw std::invalid_argument("zf_precoder: no channel estimates");
    const int N = static_cast<int>(channel_estimates.front().size());
    if (K > N)
        throw std::invalid_argument("zf_precoder: more users than antennas");

    ZfResult out;
    out.vectors.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        Eigen::MatrixXcd others(N, K - 1);
        int col = 0;
        for (int j = 0; j < K; ++j)
            if (j != k)
                others.col(col++) = channel_estimates[static_cast<std::size_t>(j)];

        Eigen::VectorXcd projected;
        if (K == 1) {
            projected = channel_estimates[0];
        } else {
            const auto &h = channel_estimates[static_cast<std::size_t>(k)];
            Eigen::MatrixXcd gram = others.adjoint() * others;
            Eigen::LLT<Eigen::MatrixXcd> llt(gram);
            Eigen::VectorXcd coeffs;
            bool ok = llt.info() == Eigen::Success;
            if (ok) {
                coeffs = llt.solve(others.adjoint() * h);
                ok = coeffs.allFinite();
            }
            if (!ok) {
                gram += 1e-10 * Eigen::MatrixXcd::Identity(K - 1, K - 1);
                llt.compute(gram);
                coeffs = llt.solve(others.adjoint() * h);
                out.regularized = true;
            }
            projected = h - others * coeffs;
        }
        const double norm = projected.norm();
        if (norm == 0.0)
            throw std::runtime_error("zf_precoder: user " + std::to_string(k) +
                                     " lies in the span of the other users");
        out.vectors.push_back(projected / norm);
    }
    return out;
}

double zf_sum_rate_with_overhead(double sum_rate, int num_antennas, int coherence_len) {
    if (coherence_len <= 0)
        throw std::invalid_argument("zf_sum_rate_with_overhead: coherence length must be > 0");
    const double factor = 1.0 - static_cast<double>(num_antennas) / coherence_len;
    return factor > 0.0 ? factor * sum_rate : 0.0;
}

} // namespace bsbf
