// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>

#include "bsbf/scenario.hpp"

using namespace bsbf;
using doctest::Approx;

namespace {

bool profiles_identical(const SpatialProfile &a, const SpatialProfile &b) {
    return a.grid_len == b.grid_len && a.beams == b.beams && a.sigma_sq == b.sigma_sq &&
           a.reported_sigma_sq == b.reported_sigma_sq && a.delta_deg == b.delta_deg;
}

} // namespace

TEST_CASE("steering vector reference points") {
    const auto broadside = steering_vector(0.0, 4, 0.5);
    for (int n = 0; n < 4; ++n)
        CHECK(std::abs(broadside(n) - std::complex<double>(0.5, 0.0)) < 1e-14);

    const auto endfire = steering_vector(90.0, 2, 0.5);
    CHECK(std::abs(endfire(0) - std::complex<double>(1.0 / std::sqrt(2.0), 0.0)) < 1e-12);
    CHECK(std::abs(endfire(1) + std::complex<double>(1.0 / std::sqrt(2.0), 0.0)) < 1e-12);

    // sin(30 deg) = 1/2 gives quarter-turn phase steps
    const auto oblique = steering_vector(30.0, 4, 0.5);
    CHECK(std::abs(oblique(0) - std::complex<double>(0.5, 0.0)) < 1e-12);
    CHECK(std::abs(oblique(1) - std::complex<double>(0.0, -0.5)) < 1e-12);
    CHECK(std::abs(oblique(2) - std::complex<double>(-0.5, 0.0)) < 1e-12);
    CHECK(std::abs(oblique(3) - std::complex<double>(0.0, 0.5)) < 1e-12);
}

TEST_CASE("steering vectors have unit norm") {
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        const double angle = rng.uniform(-90.0, 90.0);
        const int n = 1 + rng.uniform_int(128);
        CHECK(steering_vector(angle, n, 0.5).norm() == Approx(1.0).epsilon(1e-13));
    }
}

TEST_CASE("zero-jitter grid hits the closed-form sines") {
    const auto grid = make_grid_with_kappa(4, {0.0, 0.0, 0.0, 0.0});
    REQUIRE(grid.size() == 4);
    CHECK(grid.sines[0] == Approx(-0.75).epsilon(1e-15));
    CHECK(grid.sines[1] == Approx(-0.25).epsilon(1e-15));
    CHECK(grid.sines[2] == Approx(0.25).epsilon(1e-15));
    CHECK(grid.sines[3] == Approx(0.75).epsilon(1e-15));
}

TEST_CASE("random grids keep bounded nearest-neighbour gaps and span the sine range") {
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        const auto grid = make_uniform_grid(4, rng);
        for (int l = 0; l + 1 < 4; ++l) {
            const double gap = grid.sines[static_cast<std::size_t>(l + 1)] -
                               grid.sines[static_cast<std::size_t>(l)];
            CHECK(gap >= 0.25);
            CHECK(gap <= 0.75);
        }
    }
    const auto wide = make_uniform_grid(64, rng);
    REQUIRE(wide.size() == 64);
    // the extreme sines land within 3/(2L) of the range ends
    CHECK(wide.sines.front() <= -1.0 + 1.5 / 64.0);
    CHECK(wide.sines.back() >= 1.0 - 1.5 / 64.0);
    CHECK(wide.sines.front() >= -1.0);
    CHECK(wide.sines.back() <= 1.0);
    for (int l = 0; l + 1 < 64; ++l) {
        const double gap = wide.sines[static_cast<std::size_t>(l + 1)] -
                           wide.sines[static_cast<std::size_t>(l)];
        CHECK(gap >= 1.0 / 64.0);
        CHECK(gap <= 3.0 / 64.0);
    }
}

TEST_CASE("uniform profile normalization") {
    Rng rng(11);
    const auto grid = make_uniform_grid(16, rng);

    SUBCASE("single path carries all the power") {
        const auto profile = make_uniform_profile(grid, 1, 1, rng);
        REQUIRE(profile.beams[0].size() == 1);
        CHECK(profile.sigma_sq[0][static_cast<std::size_t>(profile.beams[0][0])] ==
              Approx(1.0).epsilon(1e-15));
    }

    SUBCASE("unit power per user, distinct beams") {
        const auto profile = make_uniform_profile(grid, 8, 5, rng);
        for (int k = 0; k < 8; ++k) {
            REQUIRE(profile.beams[static_cast<std::size_t>(k)].size() == 5);
            std::set<int> unique(profile.beams[static_cast<std::size_t>(k)].begin(),
                                 profile.beams[static_cast<std::size_t>(k)].end());
            CHECK(unique.size() == 5);
            double total = 0.0;
            for (double v : profile.sigma_sq[static_cast<std::size_t>(k)])
                total += v;
            CHECK(std::abs(total - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("profile power spread matches an independently coded sampler") {
    // mean of min/max squared coefficient ratio; normalization cancels
    Rng rng(13);
    const auto grid = make_uniform_grid(16, rng);
    const int trials = 4000;
    double lib_mean = 0.0;
    for (int i = 0; i < trials; ++i) {
        const auto profile = make_uniform_profile(grid, 1, 5, rng);
        double lo = 1e300, hi = 0.0;
        for (int l : profile.beams[0]) {
            lo = std::min(lo, profile.sigma_sq[0][static_cast<std::size_t>(l)]);
            hi = std::max(hi, profile.sigma_sq[0][static_cast<std::size_t>(l)]);
        }
        lib_mean += lo / hi;
    }
    lib_mean /= trials;

    Rng oracle_rng(14);
    double oracle_mean = 0.0;
    for (int i = 0; i < trials; ++i) {
        double lo = 1e300, hi = 0.0;
        for (int p = 0; p < 5; ++p) {
            const double v = 0.1 + 0.9 * oracle_rng.uniform();
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        oracle_mean += lo / hi;
    }
    oracle_mean /= trials;
    // each mean has stderr ~ 0.18/sqrt(4000) ~ 0.003
    CHECK(std::abs(lib_mean - oracle_mean) < 0.02);
}

TEST_CASE("cluster profiles") {
    Rng rng(17);

    SUBCASE("degenerate single cluster spanning the sine range behaves like the uniform law") {
        const auto grid = make_uniform_grid(16, rng);
        ClusterGeometry geometry;
        geometry.cluster_count = 1;
        geometry.cluster_size = 4.0;  // covers every grid point
        geometry.min_paths = 3;
        geometry.max_paths = 3;
        std::set<int> seen;
        for (int i = 0; i < 50; ++i) {
            const auto profile = make_cluster_profile(grid, 1, geometry, rng);
            REQUIRE(profile.beams[0].size() == 3);
            double total = 0.0;
            for (int l : profile.beams[0]) {
                seen.insert(l);
                total += profile.sigma_sq[0][static_cast<std::size_t>(l)];
            }
            CHECK(std::abs(total - 1.0) <= 1e-12);
        }
        CHECK(seen.size() == 16);  // nothing outside the support law is reachable
    }

    SUBCASE("supports are covered by two windows of the cluster width") {
        const auto grid = make_uniform_grid(30, rng);
        ClusterGeometry geometry;  // defaults: 3 clusters of sine width 0.4, 2..13 paths
        for (int i = 0; i < 30; ++i) {
            const auto profile = make_cluster_profile(grid, 5, geometry, rng);
            for (int k = 0; k < 5; ++k) {
                std::vector<double> sines;
                for (int l : profile.beams[static_cast<std::size_t>(k)])
                    sines.push_back(grid.sines[static_cast<std::size_t>(l)]);
                std::sort(sines.begin(), sines.end());
                // greedy interval cover with the cluster width
                int windows = 0;
                std::size_t i0 = 0;
                while (i0 < sines.size()) {
                    ++windows;
                    const double end = sines[i0] + geometry.cluster_size;
                    while (i0 < sines.size() && sines[i0] <= end + 1e-12)
                        ++i0;
                }
                CHECK(windows <= 2);
            }
        }
    }

    SUBCASE("beam overlap exceeds the uniform geometry at matched sizes") {
        const auto grid = make_uniform_grid(30, rng);
        ClusterGeometry geometry;
        Rng cluster_rng(19);
        Rng uniform_rng(23);
        double cluster_overlap = 0.0;
        double uniform_overlap = 0.0;
        const int trials = 300;
        for (int i = 0; i < trials; ++i) {
            const auto clustered = make_cluster_profile(grid, 5, geometry, cluster_rng);
            std::vector<int> paths;
            for (const auto &beams : clustered.beams)
                paths.push_back(static_cast<int>(beams.size()));
            const auto uniform = make_uniform_profile(grid, 5, paths, uniform_rng);
            const auto pair_overlap = [](const SpatialProfile &p) {
                double total = 0.0;
                for (int a = 0; a < 5; ++a)
                    for (int b = a + 1; b < 5; ++b) {
                        std::vector<int> common;
                        std::set_intersection(p.beams[static_cast<std::size_t>(a)].begin(),
                                              p.beams[static_cast<std::size_t>(a)].end(),
                                              p.beams[static_cast<std::size_t>(b)].begin(),
                                              p.beams[static_cast<std::size_t>(b)].end(),
                                              std::back_inserter(common));
                        total += static_cast<double>(common.size());
                    }
                return total;
            };
            cluster_overlap += pair_overlap(clustered);
            uniform_overlap += pair_overlap(uniform);
        }
        CHECK(cluster_overlap / trials > uniform_overlap / trials);
    }

    SUBCASE("empty cluster windows are reported by index") {
        const auto grid = make_grid_with_kappa(4, {0.0, 0.0, 0.0, 0.0});
        ClusterGeometry geometry;
        geometry.cluster_size = 1e-9;
        Rng seeded(29);
        CHECK_THROWS_WITH_AS(make_cluster_profile(grid, 2, geometry, seeded),
                             doctest::Contains("cluster"), std::runtime_error);
    }
}

TEST_CASE("angle mismatch") {
    Rng rng(31);
    const auto grid = make_uniform_grid(8, rng);
    const auto profile = make_uniform_profile(grid, 2, 3, rng);

    SUBCASE("zero level is a byte-identical no-op") {
        Rng mm(1);
        const auto same = apply_angle_mismatch(profile, 0.0, mm);
        CHECK(profiles_identical(profile, same));
        CHECK_FALSE(same.has_angle_mismatch());
    }

    SUBCASE("offsets shift only the synthesized channel") {
        Rng mm(2);
        const auto shifted = apply_angle_mismatch(profile, 1.0, mm);
        REQUIRE(shifted.has_angle_mismatch());
        CHECK(shifted.sigma_sq == profile.sigma_sq);
        CHECK(shifted.reported_sigma_sq == profile.reported_sigma_sq);

        SystemConfig config;
        config.num_antennas = 8;
        config.grid_len = 8;
        config.num_users = 2;
        config.beams_per_user = 1;
        Rng draw_a(3);
        Rng draw_b(3);
        const auto clean = draw_channel(profile, grid, config, draw_a);
        const auto leaky = draw_channel(shifted, grid, config, draw_b);
        CHECK((clean.h[0] - leaky.h[0]).norm() > 1e-6);
        // same small-scale coefficients, so the difference is purely angular
        CHECK(clean.s == leaky.s);
    }

    SUBCASE("negative variance is rejected") {
        Rng mm(4);
        CHECK_THROWS_AS(apply_angle_mismatch(profile, -0.1, mm), std::invalid_argument);
    }
}

TEST_CASE("reported-power mismatch") {
    Rng rng(37);
    const auto grid = make_uniform_grid(8, rng);
    const auto profile = make_uniform_profile(grid, 2, 4, rng);

    SUBCASE("zero level is a byte-identical no-op") {
        Rng mm(1);
        CHECK(profiles_identical(profile, apply_pas_mismatch(profile, 0.0, mm)));
    }

    SUBCASE("full level replaces the reported powers, true powers survive") {
        Rng mm(2);
        const auto corrupted = apply_pas_mismatch(profile, 1.0, mm);
        CHECK(corrupted.sigma_sq == profile.sigma_sq);
        CHECK(corrupted.beams == profile.beams);
        bool any_change = false;
        double reported_total = 0.0;
        for (int l : corrupted.beams[0]) {
            any_change = any_change || corrupted.reported_sigma_sq[0][static_cast<std::size_t>(l)] !=
                                           profile.reported_sigma_sq[0][static_cast<std::size_t>(l)];
            reported_total += corrupted.reported_sigma_sq[0][static_cast<std::size_t>(l)];
        }
        CHECK(any_change);
        CHECK(reported_total == Approx(1.0).epsilon(1e-12));  // same law, fresh draw
    }

    SUBCASE("mixing is a convex combination") {
        Rng mm_full(5);
        Rng mm_half(5);
        const auto full = apply_pas_mismatch(profile, 1.0, mm_full);
        const auto half = apply_pas_mismatch(profile, 0.5, mm_half);
        for (int l : profile.beams[1]) {
            const auto lu = static_cast<std::size_t>(l);
            const double expected = 0.5 * profile.sigma_sq[1][lu] + 0.5 * full.reported_sigma_sq[1][lu];
            CHECK(half.reported_sigma_sq[1][lu] == Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("grid truncation") {
    Rng rng(41);
    const auto grid = make_uniform_grid(6, rng);
    auto profile = make_uniform_profile(grid, 3, 3, rng);

    SUBCASE("full-length target is the identity") {
        const auto result = truncate_grid(profile, grid, 6);
        CHECK(result.removed.empty());
        CHECK(profiles_identical(result.profile, profile));
        CHECK(result.grid.sines == grid.sines);
    }

    SUBCASE("an all-zero column goes first") {
        // find a column with no support at all, if present force one
        int zero_col = -1;
        for (int l = 0; l < 6 && zero_col < 0; ++l) {
            bool unused = true;
            for (int k = 0; k < 3; ++k)
                unused = unused && profile.sigma_sq[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] == 0.0;
            if (unused)
                zero_col = l;
        }
        if (zero_col >= 0) {
            const auto result = truncate_grid(profile, grid, 5);
            CHECK(result.removed.front() == zero_col);
        }
    }

    SUBCASE("removal order matches step-by-step re-evaluation") {
        const auto result = truncate_grid(profile, grid, 2);
        // independent oracle: recompute the argmin over survivors each round
        std::vector<int> survivors = {0, 1, 2, 3, 4, 5};
        std::vector<int> expected_order;
        while (survivors.size() > 2) {
            int best = -1;
            double best_power = 1e300;
            for (int l : survivors) {
                double power = 0.0;
                for (int k = 0; k < 3; ++k)
                    power += profile.reported_sigma_sq[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
                if (power < best_power) {
                    best_power = power;
                    best = l;
                }
            }
            expected_order.push_back(best);
            survivors.erase(std::find(survivors.begin(), survivors.end(), best));
        }
        CHECK(result.removed == expected_order);
        REQUIRE(result.grid.size() == 2);
        // surviving sines keep their order
        CHECK(result.grid.sines[0] == grid.sines[static_cast<std::size_t>(survivors[0])]);
        CHECK(result.grid.sines[1] == grid.sines[static_cast<std::size_t>(survivors[1])]);
    }
}

TEST_CASE("channel synthesis") {
    SystemConfig config;
    config.num_antennas = 8;
    config.grid_len = 8;
    config.num_users = 1;
    config.beams_per_user = 1;

    SUBCASE("empty support gives the zero channel") {
        SpatialProfile profile;
        profile.grid_len = 8;
        profile.beams = {{}};
        profile.sigma_sq = {std::vector<double>(8, 0.0)};
        profile.reported_sigma_sq = profile.sigma_sq;
        const auto grid = make_grid_with_kappa(8, std::vector<double>(8, 0.0));
        Rng rng(1);
        const auto realization = draw_channel(profile, grid, config, rng);
        CHECK(realization.h[0].norm() == 0.0);
    }

    SUBCASE("average channel energy equals the total large-scale power") {
        Rng rng(43);
        const auto grid = make_uniform_grid(8, rng);
        const auto profile = make_uniform_profile(grid, 1, 3, rng);
        double energy = 0.0;
        const int draws = 100000;
        for (int d = 0; d < draws; ++d)
            energy += draw_channel(profile, grid, config, rng).h[0].squaredNorm();
        energy /= draws;
        CHECK(energy == Approx(1.0).epsilon(0.015));
    }

    SUBCASE("single-path channels are scaled steering vectors") {
        Rng rng(47);
        const auto grid = make_uniform_grid(8, rng);
        const auto profile = make_uniform_profile(grid, 1, 1, rng);
        const auto realization = draw_channel(profile, grid, config, rng);
        const int beam = profile.beams[0][0];
        const auto a = steering_vector(grid.angles_deg[static_cast<std::size_t>(beam)], 8, 0.5);
        const std::complex<double> ratio0 = realization.h[0](0) / a(0);
        for (int n = 1; n < 8; ++n)
            CHECK(std::abs(realization.h[0](n) / a(n) - ratio0) < 1e-12);
    }

    SUBCASE("fixed seeds reproduce bit-identical channels") {
        Rng rng(53);
        const auto grid = make_uniform_grid(8, rng);
        const auto profile = make_uniform_profile(grid, 1, 3, rng);
        Rng a(99);
        Rng b(99);
        const auto first = draw_channel(profile, grid, config, a);
        const auto second = draw_channel(profile, grid, config, b);
        CHECK(first.s == second.s);
        CHECK(first.h[0] == second.h[0]);
    }
}

TEST_CASE("system configuration invariants") {
    SystemConfig config;
    config.num_antennas = 16;
    config.grid_len = 16;
    config.num_users = 4;
    config.beams_per_user = 2;
    CHECK_NOTHROW(config.validate());

    SystemConfig bad = config;
    bad.grid_len = 20;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = config;
    bad.beams_per_user = 5;  // 5 * 4 > 16
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = config;
    bad.btbc_rate_inverse = 2.0;  // forbidden for two beams per user
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = config;
    bad.beams_per_user = 4;
    bad.btbc_rate_inverse = 4.0 / 3.0;  // legal for higher-order codes
    CHECK_NOTHROW(bad.validate());
}
