// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#ifndef BSBF_SCENARIO_HPP
#define BSBF_SCENARIO_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "bsbf/rng.hpp"

namespace bsbf {

/// All scalar hyperparameters of a simulated downlink cell.
///
/// total_power is linear (not dB); per-user power is gamma = P / K because
/// the transmitter splits its budget equally across users. btbc_rate_inverse
/// is 1/(code rate) of the beam-time block code: 1 for one or two beams per
/// user, larger for higher-order codes.
struct SystemConfig {
    int num_antennas = 64;           // N
    int num_users = 8;               // K
    int grid_len = 64;               // L, grid points (<= N)
    int beams_per_user = 2;          // Gamma
    double btbc_rate_inverse = 1.0;  // Upsilon
    double total_power = 1.0;        // P, linear
    int coherence_len = 100;         // T, symbols per fading block
    double antenna_spacing_ratio = 0.5;  // f*d/c0
    std::uint64_t rng_seed = 1;

    double per_user_power() const { return total_power / num_users; }

    /// Throws std::invalid_argument naming the violated field.
    void validate() const;
};

/// Ordered angular sampling grid; strictly increasing in the sine domain.
struct AngleGrid {
    std::vector<double> angles_deg;
    std::vector<double> sines;

    int size() const { return static_cast<int>(sines.size()); }
};

/// Builds a grid from raw sine values (angles recovered by asin).
AngleGrid grid_from_sines(const std::vector<double> &sines);

/// Per-user spatial information: supported beams and large-scale powers.
///
/// sigma_sq holds the true large-scale power per (user, grid point), zero off
/// the support set. reported_sigma_sq is the transmitter's view of the same
/// quantities; the two differ only after apply_pas_mismatch. delta_deg holds
/// per-grid-point angle offsets of the true propagation paths (empty when the
/// grid is exact); channel synthesis applies them, beamforming never does.
struct SpatialProfile {
    int grid_len = 0;
    std::vector<std::vector<int>> beams;                  // S_k, ascending
    std::vector<std::vector<double>> sigma_sq;            // K x L
    std::vector<std::vector<double>> reported_sigma_sq;   // K x L
    std::vector<double> delta_deg;                        // L or empty

    int num_users() const { return static_cast<int>(beams.size()); }
    bool has_angle_mismatch() const { return !delta_deg.empty(); }
};

/// One small-scale fading draw: per-beam coefficients and assembled channels.
struct ChannelRealization {
    std::vector<std::vector<std::complex<double>>> s;  // K x L, zero off support
    std::vector<Eigen::VectorXcd> h;                   // K vectors of length N
};

/// Array response of a half-wavelength-style uniform linear array; entry n is
/// exp(-j*2*pi*spacing_ratio*n*sin(angle))/sqrt(N). Unit Euclidean norm.
Eigen::VectorXcd steering_vector(double angle_deg, int num_antennas, double spacing_ratio);

/// Grid sines for given per-point jitters: sin(theta_l) = (2l-1-L)/L + kappa_l
/// (l counted from 1). Exposed separately so the deterministic kappa = 0 grid
/// can be constructed directly.
AngleGrid make_grid_with_kappa(int grid_len, const std::vector<double> &kappa);

/// Random grid with kappa uniform on [-1/(2L), 1/(2L)], resampled wholesale
/// until every nearest-neighbour sine gap lies in [1/L, 3/L] (the range the
/// kappa law admits). Throws after 10^4 failed attempts.
AngleGrid make_uniform_grid(int grid_len, Rng &rng);

/// Per-user supports drawn uniformly without replacement; squared large-scale
/// coefficients i.i.d. uniform on [0.1, 1] and normalized to unit sum per user.
SpatialProfile make_uniform_profile(const AngleGrid &grid, int num_users,
                                    const std::vector<int> &paths_per_user, Rng &rng);

/// Convenience overload with a common path count for every user.
SpatialProfile make_uniform_profile(const AngleGrid &grid, int num_users, int paths_per_user,
                                    Rng &rng);

struct ClusterGeometry {
    int cluster_count = 3;
    double cluster_size = 0.4;  // width in the sine domain
    int min_paths = 2;
    int max_paths = 13;
};

/// Scattering-cluster geometry: cluster centres uniform in sine on [-1, 1],
/// each user draws its paths from two of the clusters, path count uniform on
/// [min_paths, max_paths] (clamped to the grid points its clusters cover).
/// Throws if a cluster window contains no grid point, naming the cluster.
SpatialProfile make_cluster_profile(const AngleGrid &grid, int num_users,
                                    const ClusterGeometry &geometry, Rng &rng);

/// Draws per-grid-point angle offsets delta_l ~ N(0, delta0) (delta0 in
/// squared degrees). delta0 = 0 returns the profile unchanged.
SpatialProfile apply_angle_mismatch(const SpatialProfile &profile, double delta0, Rng &rng);

/// Corrupts the reported large-scale powers: reported = (1 - tau0) * true +
/// tau0 * fresh draw from the same law. True powers (and hence channels) are
/// untouched; only beam selection sees the corrupted values. tau0 = 0 returns
/// the profile unchanged.
SpatialProfile apply_pas_mismatch(const SpatialProfile &profile, double tau0, Rng &rng);

struct TruncationResult {
    SpatialProfile profile;
    AngleGrid grid;
    std::vector<int> removed;  // original grid indices, in removal order
};

/// Repeatedly discards the grid point with the smallest total reported power
/// (ties to the smallest index) until target_len points remain.
TruncationResult truncate_grid(const SpatialProfile &profile, const AngleGrid &grid,
                               int target_len);

/// Draws i.i.d. CN(0,1) small-scale coefficients on each support and
/// assembles h_k = sum_l a(theta_l + delta_l) * sigma_{k,l} * s_{k,l}.
ChannelRealization draw_channel(const SpatialProfile &profile, const AngleGrid &grid,
                                const SystemConfig &config, Rng &rng);

} // namespace bsbf

#endif
