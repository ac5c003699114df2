// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#ifndef BSBF_BEAMFORMING_HPP
#define BSBF_BEAMFORMING_HPP

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <vector>

#include "bsbf/scenario.hpp"

namespace bsbf {

/// Array response matrix A (one steering vector per grid angle) together with
/// its right pseudoinverse basis A * (A^H A)^{-1}. Column m of the basis has
/// inner product 1 with steering vector m and 0 with every other grid
/// steering vector, which is what makes per-beam signalling interference-free
/// across grid directions. Immutable after construction.
struct BeamBasis {
    Eigen::MatrixXcd response;   // N x L
    Eigen::MatrixXcd basis;      // N x L, the pseudoinverse columns
    Eigen::MatrixXcd gram_inv;   // L x L
};

/// Disjoint per-user beam selections, |groups[k]| = Gamma for every user.
struct BeamAssignment {
    std::vector<std::vector<int>> groups;

    int num_users() const { return static_cast<int>(groups.size()); }
};

/// Throws std::invalid_argument unless every group has exactly
/// beams_per_user in-range indices and the groups are pairwise disjoint.
void validate_assignment(const BeamAssignment &assignment, int grid_len, int beams_per_user);

/// Beams of the (possibly partial) assignment that fall inside user k's
/// support: Omega_k. Returned ascending.
std::vector<int> active_beams(const SpatialProfile &profile, const BeamAssignment &assignment,
                              int user);

/// Builds the pseudoinverse basis. The Gram matrix is factorized as Hermitian
/// positive definite; a reciprocal condition estimate below 1e-12 raises an
/// error carrying the condition number, and the defining identity
/// A^H basis = I is verified to 1e-8.
BeamBasis build_basis(const AngleGrid &grid, const SystemConfig &config);

/// v_k = (1/sqrt(|G_k|)) * sum of the selected pseudoinverse columns. Not
/// renormalized: the exact effective-gain identity (the sparse form of
/// h_k^H v_i) holds only for the unnormalized vector.
Eigen::VectorXcd beam_vector(const BeamBasis &basis, const std::vector<int> &selected);

/// Reports max_k | ||v_k||_2 - 1 | over an assignment, the deviation from the
/// unit-norm convention that the unnormalized beam vectors incur.
double max_norm_deviation(const BeamBasis &basis, const BeamAssignment &assignment);

/// One Alamouti-coded block over two beams: transmit vectors for the two
/// slots plus the per-user symbol pairs that produced them.
struct BtbcBlock {
    std::array<Eigen::VectorXcd, 2> transmit;                     // q(1), q(2)
    std::vector<std::array<std::complex<double>, 2>> symbols;     // per user
};

/// Encodes one two-slot block for all users. Requires two beams per user
/// (higher-order codes are not implemented); throws otherwise.
BtbcBlock btbc_encode(const BeamBasis &basis, const BeamAssignment &assignment,
                      const std::vector<std::array<std::complex<double>, 2>> &symbols);

/// Alamouti combining at one user: stacks [y(1); conj(y(2))] and applies the
/// scaled conjugate code matrix. gain1/gain2 are the user's effective complex
/// channel coefficients along its two beams. Throws on a zero combined gain
/// (deep fade; the caller counts an erasure).
std::array<std::complex<double>, 2> btbc_decode(std::complex<double> y1, std::complex<double> y2,
                                                std::complex<double> gain1,
                                                std::complex<double> gain2, double per_user_power);

/// Post-combining SINR of one user for a given draw, in the sparse per-beam
/// form: signal from the user's own selected beams, interference from every
/// other claimed beam inside its support.
double instantaneous_sinr(const SpatialProfile &profile, const ChannelRealization &realization,
                          const BeamAssignment &assignment, const SystemConfig &config, int user);

} // namespace bsbf

#endif
