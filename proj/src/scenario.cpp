// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "bsbf/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bsbf {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr int kGridResampleBudget = 10000;
} // namespace

void SystemConfig::validate() const {
    if (num_antennas < 1)
        throw std::invalid_argument("SystemConfig.num_antennas must be >= 1");
    if (num_users < 1)
        throw std::invalid_argument("SystemConfig.num_users must be >= 1");
    if (grid_len < 1 || grid_len > num_antennas)
        throw std::invalid_argument("SystemConfig.grid_len must satisfy 1 <= L <= N");
    if (beams_per_user < 1)
        throw std::invalid_argument("SystemConfig.beams_per_user must be >= 1");
    if (beams_per_user * num_users > grid_len)
        throw std::invalid_argument("SystemConfig: Gamma * K must not exceed L");
    if (btbc_rate_inverse < 1.0)
        throw std::invalid_argument("SystemConfig.btbc_rate_inverse must be >= 1");
    if (beams_per_user <= 2 && btbc_rate_inverse != 1.0)
        throw std::invalid_argument("SystemConfig.btbc_rate_inverse must be 1 for Gamma in {1, 2}");
    if (!(total_power >= 0.0))
        throw std::invalid_argument("SystemConfig.total_power must be >= 0");
    if (coherence_len < 1)
        throw std::invalid_argument("SystemConfig.coherence_len must be >= 1");
    if (!(antenna_spacing_ratio > 0.0))
        throw std::invalid_argument("SystemConfig.antenna_spacing_ratio must be > 0");
}

Eigen::VectorXcd steering_vector(double angle_deg, int num_antennas, double spacing_ratio) {
    Eigen::VectorXcd a(num_antennas);
    const double phase_step = -2.0 * std::numbers::pi * spacing_ratio * std::sin(angle_deg * kDegToRad);
    const double scale = 1.0 / std::sqrt(static_cast<double>(num_antennas));
    for (int n = 0; n < num_antennas; ++n)
        a(n) = std::polar(scale, phase_step * n);
    return a;
}

AngleGrid grid_from_sines(const std::vector<double> &sines) {
    AngleGrid grid;
    grid.sines = sines;
    grid.angles_deg.resize(sines.size());
    for (std::size_t l = 0; l < sines.size(); ++l) {
        if (sines[l] < -1.0 || sines[l] > 1.0)
            throw std::invalid_argument("grid sine out of [-1, 1] at index " + std::to_string(l));
        if (l > 0 && sines[l] <= sines[l - 1])
            throw std::invalid_argument("grid sines must be strictly increasing");
        grid.angles_deg[l] = std::asin(sines[l]) / kDegToRad;
    }
    return grid;
}

AngleGrid make_grid_with_kappa(int grid_len, const std::vector<double> &kappa) {
    if (grid_len < 2)
        throw std::invalid_argument("make_grid_with_kappa: grid_len must be >= 2");
    if (static_cast<int>(kappa.size()) != grid_len)
        throw std::invalid_argument("make_grid_with_kappa: kappa length mismatch");
    std::vector<double> sines(static_cast<std::size_t>(grid_len));
    const double L = grid_len;
    for (int l = 1; l <= grid_len; ++l)
        sines[static_cast<std::size_t>(l - 1)] = (2.0 * l - 1.0 - L) / L + kappa[static_cast<std::size_t>(l - 1)];
    return grid_from_sines(sines);
}

AngleGrid make_uniform_grid(int grid_len, Rng &rng) {
    if (grid_len < 2)
        throw std::invalid_argument("make_uniform_grid: grid_len must be >= 2");
    const double half = 1.0 / (2.0 * grid_len);
    const double min_gap = 1.0 / grid_len;
    const double max_gap = 3.0 / grid_len;
    std::vector<double> kappa(static_cast<std::size_t>(grid_len));
    for (int attempt = 0; attempt < kGridResampleBudget; ++attempt) {
        for (double &k : kappa)
            k = rng.uniform(-half, half);
        AngleGrid grid = make_grid_with_kappa(grid_len, kappa);
        bool ok = true;
        for (int l = 0; l + 1 < grid_len && ok; ++l) {
            const double gap = grid.sines[static_cast<std::size_t>(l + 1)] - grid.sines[static_cast<std::size_t>(l)];
            ok = gap >= min_gap && gap <= max_gap;
        }
        if (ok)
            return grid;
    }
    throw std::runtime_error("make_uniform_grid: separation constraint unsatisfiable after " +
                             std::to_string(kGridResampleBudget) + " resamples");
}

namespace {

// Squared large-scale coefficients for one user: i.i.d. uniform on [0.1, 1],
// normalized to a unit sum.
std::vector<double> draw_normalized_pas(int paths, Rng &rng) {
    std::vector<double> pas(static_cast<std::size_t>(paths));
    double sum = 0.0;
    for (double &p : pas) {
        p = rng.uniform(0.1, 1.0);
        sum += p;
    }
    for (double &p : pas)
        p /= sum;
    return pas;
}

SpatialProfile profile_from_supports(int grid_len, std::vector<std::vector<int>> supports, Rng &rng) {
    SpatialProfile profile;
    profile.grid_len = grid_len;
    profile.beams = std::move(supports);
    const int num_users = profile.num_users();
    profile.sigma_sq.assign(static_cast<std::size_t>(num_users),
                            std::vector<double>(static_cast<std::size_t>(grid_len), 0.0));
    for (int k = 0; k < num_users; ++k) {
        const auto &support = profile.beams[static_cast<std::size_t>(k)];
        const auto pas = draw_normalized_pas(static_cast<int>(support.size()), rng);
        for (std::size_t p = 0; p < support.size(); ++p)
            profile.sigma_sq[static_cast<std::size_t>(k)][static_cast<std::size_t>(support[p])] = pas[p];
    }
    profile.reported_sigma_sq = profile.sigma_sq;
    return profile;
}

} // namespace

SpatialProfile make_uniform_profile(const AngleGrid &grid, int num_users,
                                    const std::vector<int> &paths_per_user, Rng &rng) {
    if (static_cast<int>(paths_per_user.size()) != num_users)
        throw std::invalid_argument("make_uniform_profile: paths_per_user length mismatch");
    const int grid_len = grid.size();
    std::vector<std::vector<int>> supports;
    supports.reserve(static_cast<std::size_t>(num_users));
    for (int k = 0; k < num_users; ++k) {
        const int paths = paths_per_user[static_cast<std::size_t>(k)];
        if (paths < 0 || paths > grid_len)
            throw std::invalid_argument("make_uniform_profile: paths_per_user out of [0, L]");
        supports.push_back(rng.sample_without_replacement(grid_len, paths));
    }
    return profile_from_supports(grid_len, std::move(supports), rng);
}

SpatialProfile make_uniform_profile(const AngleGrid &grid, int num_users, int paths_per_user,
                                    Rng &rng) {
    return make_uniform_profile(grid, num_users,
                                std::vector<int>(static_cast<std::size_t>(num_users), paths_per_user), rng);
}

SpatialProfile make_cluster_profile(const AngleGrid &grid, int num_users,
                                    const ClusterGeometry &geometry, Rng &rng) {
    if (geometry.cluster_count < 1)
        throw std::invalid_argument("make_cluster_profile: cluster_count must be >= 1");
    if (geometry.min_paths < 1 || geometry.max_paths < geometry.min_paths)
        throw std::invalid_argument("make_cluster_profile: invalid path range");
    const int grid_len = grid.size();

    std::vector<double> centres(static_cast<std::size_t>(geometry.cluster_count));
    for (double &c : centres)
        c = rng.uniform(-1.0, 1.0);

    // Grid points whose sine lies within cluster_size/2 of each centre.
    std::vector<std::vector<int>> members(centres.size());
    for (std::size_t c = 0; c < centres.size(); ++c) {
        for (int l = 0; l < grid_len; ++l)
            if (std::abs(grid.sines[static_cast<std::size_t>(l)] - centres[c]) <= geometry.cluster_size / 2.0)
                members[c].push_back(l);
        if (members[c].empty())
            throw std::runtime_error("make_cluster_profile: cluster " + std::to_string(c) +
                                     " (centre sine " + std::to_string(centres[c]) +
                                     ") contains no grid point");
    }

    std::vector<std::vector<int>> supports;
    supports.reserve(static_cast<std::size_t>(num_users));
    for (int k = 0; k < num_users; ++k) {
        // Each user draws its paths from two of the clusters.
        std::vector<int> chosen;
        if (geometry.cluster_count == 1)
            chosen = {0};
        else
            chosen = rng.sample_without_replacement(geometry.cluster_count, 2);
        std::vector<int> pool;
        for (int c : chosen)
            pool.insert(pool.end(), members[static_cast<std::size_t>(c)].begin(),
                        members[static_cast<std::size_t>(c)].end());
        std::sort(pool.begin(), pool.end());
        pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

        int paths = geometry.min_paths + rng.uniform_int(geometry.max_paths - geometry.min_paths + 1);
        paths = std::min<int>(paths, static_cast<int>(pool.size()));
        const auto picks = rng.sample_without_replacement(static_cast<int>(pool.size()), paths);
        std::vector<int> support(picks.size());
        for (std::size_t p = 0; p < picks.size(); ++p)
            support[p] = pool[static_cast<std::size_t>(picks[p])];
        std::sort(support.begin(), support.end());
        supports.push_back(std::move(support));
    }
    return profile_from_supports(grid_len, std::move(supports), rng);
}

SpatialProfile apply_angle_mismatch(const SpatialProfile &profile, double delta0, Rng &rng) {
    if (delta0 < 0.0)
        throw std::invalid_argument("apply_angle_mismatch: delta0 must be >= 0");
    if (delta0 == 0.0)
        return profile;
    SpatialProfile out = profile;
    const double stddev = std::sqrt(delta0);
    out.delta_deg.assign(static_cast<std::size_t>(profile.grid_len), 0.0);
    for (double &d : out.delta_deg)
        d = stddev * rng.normal();
    return out;
}

SpatialProfile apply_pas_mismatch(const SpatialProfile &profile, double tau0, Rng &rng) {
    if (tau0 < 0.0 || tau0 > 1.0)
        throw std::invalid_argument("apply_pas_mismatch: tau0 must lie in [0, 1]");
    if (tau0 == 0.0)
        return profile;
    SpatialProfile out = profile;
    for (int k = 0; k < profile.num_users(); ++k) {
        const auto &support = profile.beams[static_cast<std::size_t>(k)];
        const auto fresh = draw_normalized_pas(static_cast<int>(support.size()), rng);
        for (std::size_t p = 0; p < support.size(); ++p) {
            const auto l = static_cast<std::size_t>(support[p]);
            out.reported_sigma_sq[static_cast<std::size_t>(k)][l] =
                (1.0 - tau0) * profile.sigma_sq[static_cast<std::size_t>(k)][l] + tau0 * fresh[p];
        }
    }
    return out;
}

TruncationResult truncate_grid(const SpatialProfile &profile, const AngleGrid &grid,
                               int target_len) {
    if (target_len < 0 || target_len > profile.grid_len)
        throw std::invalid_argument("truncate_grid: target_len must lie in [0, L]");
    if (grid.size() != profile.grid_len)
        throw std::invalid_argument("truncate_grid: grid/profile length mismatch");

    const int num_users = profile.num_users();
    std::vector<int> keep(static_cast<std::size_t>(profile.grid_len));
    for (int l = 0; l < profile.grid_len; ++l)
        keep[static_cast<std::size_t>(l)] = l;

    TruncationResult result;
    while (static_cast<int>(keep.size()) > target_len) {
        std::size_t worst = 0;
        double worst_power = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < keep.size(); ++i) {
            double power = 0.0;
            for (int k = 0; k < num_users; ++k)
                power += profile.reported_sigma_sq[static_cast<std::size_t>(k)][static_cast<std::size_t>(keep[i])];
            if (power < worst_power) {
                worst_power = power;
                worst = i;
            }
        }
        result.removed.push_back(keep[worst]);
        keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(worst));
    }

    // Rebuild grid and profile on the surviving indices.
    std::vector<double> sines;
    sines.reserve(keep.size());
    for (int l : keep)
        sines.push_back(grid.sines[static_cast<std::size_t>(l)]);
    result.grid = grid_from_sines(sines);

    SpatialProfile out;
    out.grid_len = static_cast<int>(keep.size());
    out.beams.resize(static_cast<std::size_t>(num_users));
    out.sigma_sq.assign(static_cast<std::size_t>(num_users),
                        std::vector<double>(keep.size(), 0.0));
    out.reported_sigma_sq = out.sigma_sq;
    if (profile.has_angle_mismatch())
        out.delta_deg.resize(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        const auto l = static_cast<std::size_t>(keep[i]);
        if (profile.has_angle_mismatch())
            out.delta_deg[i] = profile.delta_deg[l];
        for (int k = 0; k < num_users; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            out.sigma_sq[ku][i] = profile.sigma_sq[ku][l];
            out.reported_sigma_sq[ku][i] = profile.reported_sigma_sq[ku][l];
            if (out.sigma_sq[ku][i] != 0.0 || out.reported_sigma_sq[ku][i] != 0.0)
                out.beams[ku].push_back(static_cast<int>(i));
        }
    }
    result.profile = std::move(out);
    return result;
}

ChannelRealization draw_channel(const SpatialProfile &profile, const AngleGrid &grid,
                                const SystemConfig &config, Rng &rng) {
    if (grid.size() != profile.grid_len)
        throw std::invalid_argument("draw_channel: grid/profile length mismatch");
    const int num_users = profile.num_users();
    const int N = config.num_antennas;

    ChannelRealization out;
    out.s.assign(static_cast<std::size_t>(num_users),
                 std::vector<std::complex<double>>(static_cast<std::size_t>(profile.grid_len), {0.0, 0.0}));
    out.h.assign(static_cast<std::size_t>(num_users), Eigen::VectorXcd::Zero(N));

    for (int k = 0; k < num_users; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        for (int l : profile.beams[ku]) {
            const auto lu = static_cast<std::size_t>(l);
            const std::complex<double> s = rng.complex_normal();
            out.s[ku][lu] = s;
            double angle = grid.angles_deg[lu];
            if (profile.has_angle_mismatch())
                angle += profile.delta_deg[lu];
            const double sigma = std::sqrt(profile.sigma_sq[ku][lu]);
            out.h[ku] += steering_vector(angle, N, config.antenna_spacing_ratio) * (sigma * s);
        }
    }
    return out;
}

} // namespace bsbf
