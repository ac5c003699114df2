// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "bsbf/beamforming.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bsbf {

void validate_assignment(const BeamAssignment &assignment, int grid_len, int beams_per_user) {
    std::vector<char> claimed(static_cast<std::size_t>(grid_len), 0);
    for (std::size_t k = 0; k < assignment.groups.size(); ++k) {
        const auto &group = assignment.groups[k];
        if (static_cast<int>(group.size()) != beams_per_user)
            throw std::invalid_argument("assignment: user " + std::to_string(k) + " selects " +
                                        std::to_string(group.size()) + " beams, expected " +
                                        std::to_string(beams_per_user));
        for (int l : group) {
            if (l < 0 || l >= grid_len)
                throw std::invalid_argument("assignment: beam index " + std::to_string(l) +
                                            " out of range for user " + std::to_string(k));
            if (claimed[static_cast<std::size_t>(l)])
                throw std::invalid_argument("assignment: beam " + std::to_string(l) +
                                            " claimed by more than one user");
            claimed[static_cast<std::size_t>(l)] = 1;
        }
    }
}

std::vector<int> active_beams(const SpatialProfile &profile, const BeamAssignment &assignment,
                              int user) {
    std::vector<char> claimed(static_cast<std::size_t>(profile.grid_len), 0);
    for (const auto &group : assignment.groups)
        for (int l : group)
            claimed[static_cast<std::size_t>(l)] = 1;
    std::vector<int> active;
    for (int l : profile.beams[static_cast<std::size_t>(user)])
        if (claimed[static_cast<std::size_t>(l)])
            active.push_back(l);
    return active;
}

BeamBasis build_basis(const AngleGrid &grid, const SystemConfig &config) {
    const int L = grid.size();
    const int N = config.num_antennas;
    BeamBasis out;
    out.response.resize(N, L);
    for (int l = 0; l < L; ++l)
        out.response.col(l) = steering_vector(grid.angles_deg[static_cast<std::size_t>(l)], N,
                                              config.antenna_spacing_ratio);

    const Eigen::MatrixXcd gram = out.response.adjoint() * out.response;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram, Eigen::EigenvaluesOnly);
    const double lambda_min = eig.eigenvalues().minCoeff();
    const double lambda_max = eig.eigenvalues().maxCoeff();
    const double rcond = lambda_max > 0.0 ? lambda_min / lambda_max : 0.0;
    if (rcond < 1e-12)
        throw std::runtime_error("build_basis: near-singular Gram matrix, condition number " +
                                 std::to_string(rcond > 0.0 ? 1.0 / rcond
                                                            : std::numeric_limits<double>::infinity()));

    Eigen::LLT<Eigen::MatrixXcd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("build_basis: Gram factorization failed");
    out.gram_inv = llt.solve(Eigen::MatrixXcd::Identity(L, L));
    out.basis = out.response * out.gram_inv;

    const double residual =
        (out.response.adjoint() * out.basis - Eigen::MatrixXcd::Identity(L, L)).cwiseAbs().maxCoeff();
    if (residual > 1e-8)
        throw std::runtime_error("build_basis: identity check failed, residual " +
                                 std::to_string(residual));
    return out;
}

Eigen::VectorXcd beam_vector(const BeamBasis &basis, const std::vector<int> &selected) {
    if (selected.empty())
        throw std::invalid_argument("beam_vector: empty beam selection");
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(basis.basis.rows());
    for (int l : selected)
        v += basis.basis.col(l);
    return v / std::sqrt(static_cast<double>(selected.size()));
}

double max_norm_deviation(const BeamBasis &basis, const BeamAssignment &assignment) {
    double worst = 0.0;
    for (const auto &group : assignment.groups)
        worst = std::max(worst, std::abs(beam_vector(basis, group).norm() - 1.0));
    return worst;
}

BtbcBlock btbc_encode(const BeamBasis &basis, const BeamAssignment &assignment,
                      const std::vector<std::array<std::complex<double>, 2>> &symbols) {
    const int num_users = assignment.num_users();
    if (static_cast<int>(symbols.size()) != num_users)
        throw std::invalid_argument("btbc_encode: one symbol pair per user required");
    for (const auto &group : assignment.groups)
        if (group.size() != 2)
            throw std::invalid_argument("btbc_encode: coding matrices implemented for two beams "
                                        "per user only");

    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    BtbcBlock block;
    block.symbols = symbols;
    block.transmit[0] = Eigen::VectorXcd::Zero(basis.basis.rows());
    block.transmit[1] = Eigen::VectorXcd::Zero(basis.basis.rows());
    for (int k = 0; k < num_users; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const auto &g = assignment.groups[ku];
        const auto &x = symbols[ku];
        block.transmit[0] += inv_sqrt2 * (basis.basis.col(g[0]) * x[0] + basis.basis.col(g[1]) * x[1]);
        block.transmit[1] +=
            inv_sqrt2 * (-basis.basis.col(g[0]) * std::conj(x[1]) + basis.basis.col(g[1]) * std::conj(x[0]));
    }
    return block;
}

std::array<std::complex<double>, 2> btbc_decode(std::complex<double> y1, std::complex<double> y2,
                                                std::complex<double> gain1,
                                                std::complex<double> gain2, double per_user_power) {
    const double combined = std::norm(gain1) + std::norm(gain2);
    if (combined <= 0.0)
        throw std::runtime_error("btbc_decode: deep fade, zero combined beam gain");

    // M = [gain1, gain2; conj(gain2), -conj(gain1)] satisfies
    // M^H M = (|gain1|^2 + |gain2|^2) I, so the combiner is a scaled inverse.
    const std::complex<double> z1 = y1;
    const std::complex<double> z2 = std::conj(y2);
    const double scale = std::sqrt(2.0 / per_user_power) / combined;
    std::array<std::complex<double>, 2> x;
    x[0] = scale * (std::conj(gain1) * z1 + gain2 * z2);
    x[1] = scale * (std::conj(gain2) * z1 - gain1 * z2);
    return x;
}

double instantaneous_sinr(const SpatialProfile &profile, const ChannelRealization &realization,
                          const BeamAssignment &assignment, const SystemConfig &config, int user) {
    const auto ku = static_cast<std::size_t>(user);
    const double gamma = config.per_user_power();
    const double share = gamma / (config.btbc_rate_inverse * config.beams_per_user);

    std::vector<char> own(static_cast<std::size_t>(profile.grid_len), 0);
    for (int l : assignment.groups[ku])
        own[static_cast<std::size_t>(l)] = 1;

    double signal = 0.0;
    double interference = 0.0;
    for (int l : active_beams(profile, assignment, user)) {
        const auto lu = static_cast<std::size_t>(l);
        const double power = profile.sigma_sq[ku][lu] * std::norm(realization.s[ku][lu]);
        if (own[lu])
            signal += power;
        else
            interference += power;
    }
    return share * signal / (1.0 + share * interference);
}

} // namespace bsbf
