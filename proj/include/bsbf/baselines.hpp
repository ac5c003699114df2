// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#ifndef BSBF_BASELINES_HPP
#define BSBF_BASELINES_HPP

#include <Eigen/Dense>
#include <vector>

#include "bsbf/rng.hpp"
#include "bsbf/scenario.hpp"

namespace bsbf {

/// Per-user downlink covariance matrices R_k = A diag(sigma_k^2) A^H,
/// Hermitian positive semidefinite by construction.
struct CovarianceSet {
    std::vector<Eigen::MatrixXcd> R;
};

/// Covariances from the grid response and the reported large-scale powers
/// (the variance convention: the diagonal carries squared coefficients).
CovarianceSet build_covariances(const SpatialProfile &profile, const AngleGrid &grid,
                                const SystemConfig &config);

/// Leakage-based statistical precoder: v_k is the unit-norm principal
/// eigenvector of ((1/gamma) I + sum_{j != k} R_j)^{-1} R_k, found by power
/// iteration (relative eigenvalue tolerance 1e-10, 10^4 iteration cap; throws
/// with the residual on non-convergence).
std::vector<Eigen::VectorXcd> slnr_eigen_precoder(const CovarianceSet &covariances, double gamma);

/// DFT-codebook variant: every user gets the DFT column maximizing its
/// leakage ratio g_{k,n} / (1/gamma + sum_{j != k} g_{j,n}) where g_{k,n} is
/// the n-th beam-domain diagonal of R_k. Ties go to the smallest column
/// index; users may collide on a column.
std::vector<Eigen::VectorXcd> dft_slnr_precoder(const CovarianceSet &covariances, double gamma,
                                                int num_antennas);

/// The unitary DFT codebook used by dft_slnr_precoder.
Eigen::MatrixXcd dft_codebook(int num_antennas);

struct ZfResult {
    std::vector<Eigen::VectorXcd> vectors;
    bool regularized = false;  // rank-deficient co-channel matrix encountered
};

/// Training-based zero forcing on (possibly noisy) channel estimates: v_k is
/// the normalized projection of h_k onto the orthogonal complement of the
/// other users' estimates. Rank-deficient co-channel matrices fall back to a
/// diagonally loaded inverse and set the regularized flag.
ZfResult zf_precoder(const std::vector<Eigen::VectorXcd> &channel_estimates);

/// Noisy channel estimates from downlink training: h + CN(0, (1/gamma) I).
std::vector<Eigen::VectorXcd> perturb_csi(const std::vector<Eigen::VectorXcd> &channels,
                                          double gamma, Rng &rng);

/// Applies the training-overhead penalty (1 - N/T), clamped at zero.
double zf_sum_rate_with_overhead(double sum_rate, int num_antennas, int coherence_len);

} // namespace bsbf

#endif
