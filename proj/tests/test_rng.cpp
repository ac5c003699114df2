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

#include <cmath>
#include <set>

#include "bsbf/rng.hpp"

using namespace bsbf;

TEST_CASE("identical seeds give identical streams") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 1000; ++i)
        REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("derived seeds depend on every id") {
    const auto base = derive_seed(1, {2, 3});
    CHECK(base != derive_seed(1, {2, 4}));
    CHECK(base != derive_seed(1, {3, 2}));
    CHECK(base != derive_seed(2, {2, 3}));
}

TEST_CASE("uniform moments") {
    Rng rng(7);
    double sum = 0.0;
    double sum_sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sum_sq += u * u;
    }
    CHECK(std::abs(sum / n - 0.5) < 0.005);
    CHECK(std::abs(sum_sq / n - 1.0 / 3.0) < 0.005);
}

TEST_CASE("normal and exponential moments") {
    Rng rng(11);
    double nsum = 0.0, nsq = 0.0, esum = 0.0, csum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        nsum += z;
        nsq += z * z;
        esum += rng.exponential();
        csum += std::norm(rng.complex_normal());
    }
    CHECK(std::abs(nsum / n) < 0.01);
    CHECK(std::abs(nsq / n - 1.0) < 0.02);
    CHECK(std::abs(esum / n - 1.0) < 0.02);
    CHECK(std::abs(csum / n - 1.0) < 0.02);  // CN(0,1) has unit second moment
}

TEST_CASE("subset sampling is uniform, sorted, and distinct") {
    Rng rng(13);
    std::vector<int> counts(6, 0);
    for (int trial = 0; trial < 30000; ++trial) {
        const auto picks = rng.sample_without_replacement(6, 3);
        REQUIRE(picks.size() == 3);
        std::set<int> unique(picks.begin(), picks.end());
        REQUIRE(unique.size() == 3);
        REQUIRE(std::is_sorted(picks.begin(), picks.end()));
        for (int p : picks)
            ++counts[static_cast<std::size_t>(p)];
    }
    for (int c : counts)
        CHECK(std::abs(c / 30000.0 - 0.5) < 0.02);
}

TEST_CASE("uniform_int bounds") {
    Rng rng(17);
    for (int i = 0; i < 10000; ++i) {
        const int v = rng.uniform_int(7);
        REQUIRE(v >= 0);
        REQUIRE(v < 7);
    }
}
