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

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>

#include "bsbf/baselines.hpp"

using namespace bsbf;
using doctest::Approx;

namespace {

SystemConfig config_for(int num_antennas, int grid_len, int num_users) {
    SystemConfig config;
    config.num_antennas = num_antennas;
    config.grid_len = grid_len;
    config.num_users = num_users;
    config.beams_per_user = 1;
    return config;
}

} // namespace

TEST_CASE("covariance construction") {
    Rng rng(3);
    const auto grid = make_uniform_grid(16, rng);
    const auto config = config_for(16, 16, 2);

    SUBCASE("single path gives a rank-one unit-trace matrix") {
        SpatialProfile profile;
        profile.grid_len = 16;
        profile.beams = {{4}};
        profile.sigma_sq = {std::vector<double>(16, 0.0)};
        profile.sigma_sq[0][4] = 1.0;
        profile.reported_sigma_sq = profile.sigma_sq;
        const auto cov = build_covariances(profile, grid, config_for(16, 16, 1));
        const auto a = steering_vector(grid.angles_deg[4], 16, 0.5);
        CHECK((cov.R[0] - a * a.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(std::real(cov.R[0].trace()) == Approx(1.0).epsilon(1e-12));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov.R[0]);
        CHECK(eig.eigenvalues().maxCoeff() == Approx(1.0).epsilon(1e-10));
        CHECK(eig.eigenvalues()(14) < 1e-12);  // second eigenvalue vanishes
    }

    SUBCASE("unit-sum spectra give unit traces and Hermitian matrices") {
        const auto profile = make_uniform_profile(grid, 2, 5, rng);
        const auto cov = build_covariances(profile, grid, config);
        for (const auto &R : cov.R) {
            CHECK(std::real(R.trace()) == Approx(1.0).epsilon(1e-12));
            CHECK((R - R.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(R);
            CHECK(eig.eigenvalues().minCoeff() > -1e-10);
        }
    }

    SUBCASE("matches the sample covariance of drawn channels") {
        const auto profile = make_uniform_profile(grid, 1, 4, rng);
        const auto cov = build_covariances(profile, grid, config_for(16, 16, 1));
        Eigen::MatrixXcd sample = Eigen::MatrixXcd::Zero(16, 16);
        const int draws = 100000;
        for (int d = 0; d < draws; ++d) {
            const auto realization = draw_channel(profile, grid, config_for(16, 16, 1), rng);
            sample += realization.h[0] * realization.h[0].adjoint();
        }
        sample /= draws;
        CHECK((sample - cov.R[0]).norm() <= 0.01 * cov.R[0].norm());
    }
}

TEST_CASE("leakage eigen-precoder") {
    Rng rng(7);
    const auto grid = make_uniform_grid(16, rng);
    const auto profile = make_uniform_profile(grid, 4, 4, rng);
    const auto config = config_for(16, 16, 4);
    const auto cov = build_covariances(profile, grid, config);

    SUBCASE("single user reduces to the dominant covariance eigenvector") {
        CovarianceSet solo;
        solo.R = {cov.R[0]};
        const auto vectors = slnr_eigen_precoder(solo, 4.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov.R[0]);
        const Eigen::VectorXcd dominant = eig.eigenvectors().col(15);
        CHECK(std::abs(std::abs(std::complex<double>(dominant.adjoint() * vectors[0])) - 1.0) <
              1e-8);
    }

    SUBCASE("vanishing power also reduces to the dominant eigenvector") {
        const auto vectors = slnr_eigen_precoder(cov, 1e-9);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov.R[2]);
        const Eigen::VectorXcd dominant = eig.eigenvectors().col(15);
        CHECK(std::abs(std::abs(std::complex<double>(dominant.adjoint() * vectors[2])) - 1.0) <
              1e-6);
    }

    SUBCASE("eigenpair residual is small and vectors are unit norm") {
        const double gamma = 25.0;
        const auto vectors = slnr_eigen_precoder(cov, gamma);
        for (int k = 0; k < 4; ++k) {
            CHECK(vectors[static_cast<std::size_t>(k)].norm() == Approx(1.0).epsilon(1e-12));
            Eigen::MatrixXcd leak = Eigen::MatrixXcd::Identity(16, 16) / gamma;
            for (int j = 0; j < 4; ++j)
                if (j != k)
                    leak += cov.R[static_cast<std::size_t>(j)];
            const Eigen::VectorXcd image =
                leak.llt().solve(cov.R[static_cast<std::size_t>(k)] * vectors[static_cast<std::size_t>(k)]);
            const double lambda =
                std::real(std::complex<double>(vectors[static_cast<std::size_t>(k)].adjoint() * image));
            CHECK((image - lambda * vectors[static_cast<std::size_t>(k)]).norm() <= 1e-8 * lambda);
        }
    }

    SUBCASE("invariant under a common scaling of covariances and noise") {
        const double gamma = 10.0;
        const double scale = 37.5;
        CovarianceSet scaled;
        for (const auto &R : cov.R)
            scaled.R.push_back(scale * R);
        const auto base = slnr_eigen_precoder(cov, gamma);
        const auto rescaled = slnr_eigen_precoder(scaled, gamma / scale);
        for (std::size_t k = 0; k < base.size(); ++k)
            CHECK(std::abs(std::abs(std::complex<double>(base[k].adjoint() * rescaled[k])) - 1.0) <
                  1e-9);
    }
}

TEST_CASE("beam-codebook leakage precoder") {
    SUBCASE("the codebook is unitary") {
        const auto F = dft_codebook(16);
        CHECK((F.adjoint() * F - Eigen::MatrixXcd::Identity(16, 16)).cwiseAbs().maxCoeff() <
              1e-10);
    }

    SUBCASE("a covariance aligned with one codebook column selects it") {
        const int n = 8;
        const auto F = dft_codebook(n);
        for (int m : {0, 3, 6}) {
            CovarianceSet cov;
            cov.R = {F.col(m) * F.col(m).adjoint()};
            const auto vectors = dft_slnr_precoder(cov, 5.0, n);
            CHECK((vectors[0] - F.col(m)).cwiseAbs().maxCoeff() < 1e-12);
        }
    }

    SUBCASE("beam-domain powers are real and nonnegative, choice matches brute force") {
        Rng rng(11);
        const auto grid = make_uniform_grid(12, rng);
        const auto profile = make_uniform_profile(grid, 3, 4, rng);
        const auto config = config_for(16, 12, 3);
        const auto cov = build_covariances(profile, grid, config);
        const double gamma = 9.0;
        const auto F = dft_codebook(16);

        Eigen::MatrixXd g(3, 16);
        for (int k = 0; k < 3; ++k) {
            const Eigen::MatrixXcd beam = F.adjoint() * cov.R[static_cast<std::size_t>(k)] * F;
            for (int n = 0; n < 16; ++n) {
                CHECK(std::abs(std::imag(beam(n, n))) < 1e-12);
                CHECK(std::real(beam(n, n)) > -1e-12);
                g(k, n) = std::real(beam(n, n));
            }
        }
        const auto vectors = dft_slnr_precoder(cov, gamma, 16);
        for (int k = 0; k < 3; ++k) {
            int best_n = -1;
            double best = -1.0;
            for (int n = 0; n < 16; ++n) {
                double leak = 1.0 / gamma;
                for (int j = 0; j < 3; ++j)
                    if (j != k)
                        leak += g(j, n);
                if (g(k, n) / leak > best) {
                    best = g(k, n) / leak;
                    best_n = n;
                }
            }
            CHECK((vectors[static_cast<std::size_t>(k)] - F.col(best_n)).cwiseAbs().maxCoeff() <
                  1e-12);
        }
    }
}

TEST_CASE("zero-forcing precoder") {
    Rng rng(13);
    const auto grid = make_uniform_grid(16, rng);
    const auto config = config_for(16, 16, 4);
    const auto profile = make_uniform_profile(grid, 4, 4, rng);

    SUBCASE("perfect estimates null the co-channel users") {
        const auto realization = draw_channel(profile, grid, config, rng);
        const auto zf = zf_precoder(realization.h);
        CHECK_FALSE(zf.regularized);
        for (int k = 0; k < 4; ++k) {
            const auto &v = zf.vectors[static_cast<std::size_t>(k)];
            CHECK(std::abs(v.norm() - 1.0) <= 1e-14);
            const double signal =
                std::norm(std::complex<double>(realization.h[static_cast<std::size_t>(k)].adjoint() * v));
            for (int j = 0; j < 4; ++j) {
                if (j == k)
                    continue;
                const double leak =
                    std::norm(std::complex<double>(realization.h[static_cast<std::size_t>(j)].adjoint() * v));
                CHECK(std::sqrt(leak) <= 1e-10);
                CHECK(leak <= 1e-20 * signal);
            }
        }
    }

    SUBCASE("single user is the matched filter") {
        const auto realization = draw_channel(profile, grid, config, rng);
        const auto zf = zf_precoder({realization.h[0]});
        const Eigen::VectorXcd expected = realization.h[0] / realization.h[0].norm();
        CHECK((zf.vectors[0] - expected).cwiseAbs().maxCoeff() < 1e-14);
    }

    SUBCASE("noisy estimates come from the declared law") {
        const auto realization = draw_channel(profile, grid, config, rng);
        const double gamma = 4.0;
        double error_energy = 0.0;
        const int draws = 20000;
        Rng noise_rng(17);
        for (int d = 0; d < draws; ++d) {
            const auto estimates = perturb_csi(realization.h, gamma, noise_rng);
            error_energy += (estimates[0] - realization.h[0]).squaredNorm();
        }
        // expected noise energy per estimate: N / gamma
        CHECK(error_energy / draws == Approx(16.0 / gamma).epsilon(0.03));
    }

    SUBCASE("rank-deficient co-channel matrices trigger the regularized path") {
        const auto realization = draw_channel(profile, grid, config, rng);
        std::vector<Eigen::VectorXcd> degenerate = {realization.h[0], realization.h[1],
                                                    realization.h[1]};
        const auto zf = zf_precoder(degenerate);
        CHECK(zf.regularized);
        for (const auto &v : zf.vectors)
            CHECK(std::abs(v.norm() - 1.0) <= 1e-12);
    }

    SUBCASE("more users than antennas is rejected") {
        std::vector<Eigen::VectorXcd> too_many(3, Eigen::VectorXcd::Ones(2));
        CHECK_THROWS_AS(zf_precoder(too_many), std::invalid_argument);
    }
}

TEST_CASE("training overhead factor") {
    CHECK(zf_sum_rate_with_overhead(10.0, 100, 100) == 0.0);
    CHECK(zf_sum_rate_with_overhead(10.0, 120, 100) == 0.0);  // clamped
    CHECK(zf_sum_rate_with_overhead(1.0, 64, 100) == Approx(0.36).epsilon(1e-15));
    CHECK(zf_sum_rate_with_overhead(1.0, 64, 100000000) == Approx(1.0).epsilon(1e-5));
    CHECK_THROWS_AS(zf_sum_rate_with_overhead(1.0, 64, 0), std::invalid_argument);
}
