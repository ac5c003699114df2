// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "bsbf/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "bsbf/profile_io.hpp"

namespace bsbf {

namespace {

constexpr std::uint64_t kScenarioStream = 0x7363656eULL;
constexpr std::uint64_t kMismatchStream = 0x6d69736dULL;
constexpr std::uint64_t kSelectStream = 0x73656c65ULL;
constexpr std::uint64_t kRateStream = 0x72617465ULL;
constexpr std::uint64_t kBerStream = 0x62657220ULL;

double precoder_sinr(const std::vector<Eigen::VectorXcd> &vectors,
                     const Eigen::VectorXcd &channel, int user, double gamma) {
    double signal = 0.0;
    double interference = 0.0;
    for (std::size_t j = 0; j < vectors.size(); ++j) {
        const double power = std::norm(std::complex<double>(channel.adjoint() * vectors[j]));
        if (static_cast<int>(j) == user)
            signal = power;
        else
            interference += power;
    }
    return gamma * signal / (1.0 + gamma * interference);
}

struct MeanAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    long long n = 0;

    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++n;
    }
    double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
    double standard_error() const {
        if (n < 2)
            return 0.0;
        const double m = mean();
        const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) /
                                             static_cast<double>(n - 1));
        return std::sqrt(var / static_cast<double>(n));
    }
};

RateReport accumulate_rates(int num_users, int draws,
                            const std::function<double(int, int)> &user_rate) {
    RateReport report;
    report.per_user.assign(static_cast<std::size_t>(num_users), 0.0);
    MeanAccumulator sum_acc;
    for (int d = 0; d < draws; ++d) {
        double draw_sum = 0.0;
        for (int k = 0; k < num_users; ++k) {
            const double r = user_rate(d, k);
            report.per_user[static_cast<std::size_t>(k)] += r;
            draw_sum += r;
        }
        sum_acc.add(draw_sum);
    }
    for (double &r : report.per_user)
        r /= draws;
    report.sum = sum_acc.mean();
    report.sum_stderr = sum_acc.standard_error();
    return report;
}

} // namespace

RateReport estimate_ergodic_rates(const SpatialProfile &profile, const AngleGrid &grid,
                                  const SystemConfig &config, const BeamAssignment &assignment,
                                  int draws, Rng &rng) {
    if (draws < 1)
        throw std::invalid_argument("estimate_ergodic_rates: draws must be >= 1");
    const int K = profile.num_users();
    const double gamma = config.per_user_power();

    if (!profile.has_angle_mismatch()) {
        ChannelRealization realization;
        return accumulate_rates(K, draws, [&](int, int k) -> double {
            if (k == 0)
                realization = draw_channel(profile, grid, config, rng);
            return std::log2(1.0 + instantaneous_sinr(profile, realization, assignment, config, k));
        });
    }

    // Angle mismatch: the sparse per-beam SINR no longer matches the physical
    // channel, so measure through the actual beam vectors.
    const BeamBasis basis = build_basis(grid, config);
    std::vector<Eigen::VectorXcd> vectors;
    vectors.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
        vectors.push_back(beam_vector(basis, assignment.groups[static_cast<std::size_t>(k)]));

    ChannelRealization realization;
    return accumulate_rates(K, draws, [&](int, int k) -> double {
        if (k == 0)
            realization = draw_channel(profile, grid, config, rng);
        return std::log2(
            1.0 + precoder_sinr(vectors, realization.h[static_cast<std::size_t>(k)], k, gamma));
    });
}

RateReport estimate_ergodic_rates(const SpatialProfile &profile, const AngleGrid &grid,
                                  const SystemConfig &config, const PrecoderFactory &precoder,
                                  int draws, Rng &rng) {
    if (draws < 1)
        throw std::invalid_argument("estimate_ergodic_rates: draws must be >= 1");
    const int K = profile.num_users();
    const double gamma = config.per_user_power();

    ChannelRealization realization;
    std::vector<Eigen::VectorXcd> vectors;
    return accumulate_rates(K, draws, [&](int, int k) -> double {
        if (k == 0) {
            realization = draw_channel(profile, grid, config, rng);
            vectors = precoder(realization, rng);
        }
        return std::log2(
            1.0 + precoder_sinr(vectors, realization.h[static_cast<std::size_t>(k)], k, gamma));
    });
}

namespace {

// Coherent BPSK detection through per-block effective gains g(k, j) =
// h_k^H v_j; used by the single-beam scheme and by every precoder method.
std::vector<double> scalar_ber_loop(const SpatialProfile &profile, const AngleGrid &grid,
                                    const SystemConfig &config,
                                    const std::function<std::vector<Eigen::VectorXcd>(
                                        const ChannelRealization &, Rng &)> &vectors_for_block,
                                    long long symbols, Rng &rng) {
    const int K = profile.num_users();
    const double gamma = config.per_user_power();
    const double amplitude = std::sqrt(gamma);
    const long long block_len = std::max(1, config.coherence_len);

    std::vector<long long> errors(static_cast<std::size_t>(K), 0);
    std::vector<int> x(static_cast<std::size_t>(K));
    Eigen::MatrixXcd g(K, K);

    long long done = 0;
    while (done < symbols) {
        const ChannelRealization realization = draw_channel(profile, grid, config, rng);
        const auto vectors = vectors_for_block(realization, rng);
        for (int k = 0; k < K; ++k)
            for (int j = 0; j < K; ++j)
                g(k, j) = realization.h[static_cast<std::size_t>(k)].adjoint() *
                          vectors[static_cast<std::size_t>(j)];

        const long long in_block = std::min(block_len, symbols - done);
        for (long long t = 0; t < in_block; ++t) {
            for (int j = 0; j < K; ++j)
                x[static_cast<std::size_t>(j)] = rng.uniform() < 0.5 ? -1 : 1;
            for (int k = 0; k < K; ++k) {
                std::complex<double> y = rng.complex_normal();
                for (int j = 0; j < K; ++j)
                    y += amplitude * g(k, j) * static_cast<double>(x[static_cast<std::size_t>(j)]);
                const double detected = std::real(std::conj(g(k, k)) * y);
                if ((detected >= 0.0 ? 1 : -1) != x[static_cast<std::size_t>(k)])
                    ++errors[static_cast<std::size_t>(k)];
            }
        }
        done += in_block;
    }

    std::vector<double> ber(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
        ber[static_cast<std::size_t>(k)] =
            static_cast<double>(errors[static_cast<std::size_t>(k)]) / static_cast<double>(symbols);
    return ber;
}

} // namespace

std::vector<double> estimate_ber_bpsk(const SpatialProfile &profile, const AngleGrid &grid,
                                      const SystemConfig &config, const BeamAssignment &assignment,
                                      long long symbols, Rng &rng) {
    if (symbols < 1000)
        throw std::invalid_argument("estimate_ber_bpsk: need at least 10^3 symbols");
    const int K = profile.num_users();
    const double gamma = config.per_user_power();

    if (config.beams_per_user == 1) {
        const BeamBasis basis = build_basis(grid, config);
        std::vector<Eigen::VectorXcd> vectors;
        for (int k = 0; k < K; ++k)
            vectors.push_back(beam_vector(basis, assignment.groups[static_cast<std::size_t>(k)]));
        return scalar_ber_loop(
            profile, grid, config,
            [&](const ChannelRealization &, Rng &) { return vectors; }, symbols, rng);
    }
    if (config.beams_per_user != 2)
        throw std::invalid_argument("estimate_ber_bpsk: block coding implemented for one or two "
                                    "beams per user only");

    const BeamBasis basis = build_basis(grid, config);
    const double amplitude = std::sqrt(gamma / 2.0);
    const long long pairs_total = symbols / 2;
    const long long pairs_per_block = std::max<long long>(1, config.coherence_len / 2);

    std::vector<long long> errors(static_cast<std::size_t>(K), 0);
    Eigen::MatrixXcd g1(K, K), g2(K, K);  // h_k^H basis column on user j's two beams
    std::vector<std::array<std::complex<double>, 2>> x(static_cast<std::size_t>(K));

    long long pairs_done = 0;
    while (pairs_done < pairs_total) {
        const ChannelRealization realization = draw_channel(profile, grid, config, rng);
        for (int k = 0; k < K; ++k) {
            const auto &h = realization.h[static_cast<std::size_t>(k)];
            for (int j = 0; j < K; ++j) {
                const auto &group = assignment.groups[static_cast<std::size_t>(j)];
                g1(k, j) = h.adjoint() * basis.basis.col(group[0]);
                g2(k, j) = h.adjoint() * basis.basis.col(group[1]);
            }
        }

        const long long in_block = std::min(pairs_per_block, pairs_total - pairs_done);
        for (long long t = 0; t < in_block; ++t) {
            for (int j = 0; j < K; ++j) {
                x[static_cast<std::size_t>(j)][0] = rng.uniform() < 0.5 ? -1.0 : 1.0;
                x[static_cast<std::size_t>(j)][1] = rng.uniform() < 0.5 ? -1.0 : 1.0;
            }
            for (int k = 0; k < K; ++k) {
                std::complex<double> y1 = rng.complex_normal();
                std::complex<double> y2 = rng.complex_normal();
                for (int j = 0; j < K; ++j) {
                    const auto &xj = x[static_cast<std::size_t>(j)];
                    y1 += amplitude * (g1(k, j) * xj[0] + g2(k, j) * xj[1]);
                    y2 += amplitude * (-g1(k, j) * std::conj(xj[1]) + g2(k, j) * std::conj(xj[0]));
                }
                try {
                    const auto decoded = btbc_decode(y1, y2, g1(k, k), g2(k, k), gamma);
                    for (int slot = 0; slot < 2; ++slot) {
                        const double truth = std::real(x[static_cast<std::size_t>(k)][static_cast<std::size_t>(slot)]);
                        if ((std::real(decoded[static_cast<std::size_t>(slot)]) >= 0.0 ? 1.0 : -1.0) != truth)
                            ++errors[static_cast<std::size_t>(k)];
                    }
                } catch (const std::runtime_error &) {
                    errors[static_cast<std::size_t>(k)] += 2;  // deep-fade erasure
                }
            }
        }
        pairs_done += in_block;
    }

    std::vector<double> ber(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
        ber[static_cast<std::size_t>(k)] = static_cast<double>(errors[static_cast<std::size_t>(k)]) /
                                           static_cast<double>(2 * pairs_done);
    return ber;
}

std::vector<double> estimate_ber_bpsk(const SpatialProfile &profile, const AngleGrid &grid,
                                      const SystemConfig &config, const PrecoderFactory &precoder,
                                      long long symbols, Rng &rng) {
    if (symbols < 1000)
        throw std::invalid_argument("estimate_ber_bpsk: need at least 10^3 symbols");
    return scalar_ber_loop(profile, grid, config, precoder, symbols, rng);
}

// ---------------------------------------------------------------------------
// experiment orchestration
// ---------------------------------------------------------------------------

namespace {

bool is_beam_selection_method(Method m) {
    return m == Method::bs_sbf_fs || m == Method::bs_sbf_gibbs ||
           m == Method::bs_sbf_exhaustive || m == Method::bs_sbf_low_snr;
}

SelectionMethod to_selection_method(Method m) {
    switch (m) {
    case Method::bs_sbf_fs:
        return SelectionMethod::forward_stepwise;
    case Method::bs_sbf_gibbs:
        return SelectionMethod::gibbs;
    case Method::bs_sbf_exhaustive:
        return SelectionMethod::exhaustive;
    case Method::bs_sbf_low_snr:
        return SelectionMethod::low_snr_greedy;
    default:
        throw std::logic_error("not a beam-selection method");
    }
}

struct CellOutcome {
    double sum_rate = std::numeric_limits<double>::quiet_NaN();
    double ber = std::numeric_limits<double>::quiet_NaN();
    double norm_deviation = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

struct TrialContext {
    SpatialProfile profile;
    AngleGrid grid;
    double power_db = 0.0;
};

TrialContext build_trial_scenario(const ExperimentSpec &spec,
                                  const std::pair<SpatialProfile, AngleGrid> *loaded,
                                  SweepVariable sweep, double value, int trial_id) {
    TrialContext ctx;
    ctx.power_db = sweep == SweepVariable::power_db ? value : spec.power_db;
    const int num_users = sweep == SweepVariable::num_users ? static_cast<int>(value)
                                                            : spec.num_users;

    Rng scenario_rng(derive_seed(spec.base_seed, {kScenarioStream, static_cast<std::uint64_t>(trial_id)}));
    switch (spec.scenario) {
    case ScenarioKind::from_file:
        ctx.profile = loaded->first;
        ctx.grid = loaded->second;
        break;
    case ScenarioKind::uniform:
        ctx.grid = make_uniform_grid(spec.grid_len, scenario_rng);
        ctx.profile = make_uniform_profile(ctx.grid, num_users, spec.paths_per_user, scenario_rng);
        break;
    case ScenarioKind::cluster:
        ctx.grid = make_uniform_grid(spec.grid_len, scenario_rng);
        ctx.profile = make_cluster_profile(ctx.grid, num_users, spec.cluster, scenario_rng);
        break;
    }

    // Mismatch seeds deliberately exclude the sweep index so the underlying
    // perturbations are shared across sweep values and only their level moves.
    if (sweep == SweepVariable::delta0 && value > 0.0) {
        Rng rng(derive_seed(spec.base_seed, {kMismatchStream, static_cast<std::uint64_t>(trial_id), 1}));
        // the mismatch level is grid-relative: one unit gives the offsets a
        // standard deviation of one mean grid cell at broadside
        const double mean_gap = (ctx.grid.sines.back() - ctx.grid.sines.front()) /
                                std::max(1, ctx.grid.size() - 1);
        const double cell_deg = std::asin(mean_gap) * 180.0 / std::numbers::pi;
        ctx.profile = apply_angle_mismatch(ctx.profile, value * cell_deg * cell_deg, rng);
    }
    if (sweep == SweepVariable::tau0 && value > 0.0) {
        Rng rng(derive_seed(spec.base_seed, {kMismatchStream, static_cast<std::uint64_t>(trial_id), 2}));
        ctx.profile = apply_pas_mismatch(ctx.profile, value, rng);
    }
    return ctx;
}

CellOutcome run_method_on_trial(const ExperimentSpec &spec, const TrialContext &ctx,
                                const MethodSpec &method, int value_idx, int trial_id) {
    CellOutcome outcome;
    try {
        SystemConfig config;
        config.num_antennas = spec.num_antennas;
        config.grid_len = ctx.grid.size();
        config.num_users = ctx.profile.num_users();
        config.beams_per_user = is_beam_selection_method(method.method) ? method.beams_per_user : 1;
        config.btbc_rate_inverse =
            is_beam_selection_method(method.method) && method.beams_per_user > 2
                ? spec.btbc_rate_inverse
                : 1.0;
        config.total_power = std::pow(10.0, ctx.power_db / 10.0);
        config.coherence_len = spec.coherence_len;
        config.antenna_spacing_ratio = spec.antenna_spacing_ratio;
        config.rng_seed = spec.base_seed;
        config.validate();

        const double gamma = config.per_user_power();
        const auto ids = [&](std::uint64_t stream) {
            return derive_seed(spec.base_seed, {stream, static_cast<std::uint64_t>(trial_id),
                                                static_cast<std::uint64_t>(value_idx)});
        };

        if (is_beam_selection_method(method.method)) {
            SelectorConfig selector;
            selector.method = to_selection_method(method.method);
            selector.rng_seed = ids(kSelectStream);
            const SelectionResult selected = select_beams(ctx.profile, config, selector);
            outcome.norm_deviation =
                max_norm_deviation(build_basis(ctx.grid, config), selected.assignment);

            if (!ctx.profile.has_angle_mismatch()) {
                // The closed form is the exact ergodic rate here; Monte Carlo
                // runs alongside as a consistency tripwire.
                const RateReport closed = closed_form_rates(ctx.profile, selected.assignment, config);
                Rng rate_rng(ids(kRateStream));
                const RateReport mc = estimate_ergodic_rates(ctx.profile, ctx.grid, config,
                                                             selected.assignment, spec.draws, rate_rng);
                outcome.sum_rate = closed.sum;
                if (mc.sum_stderr && *mc.sum_stderr > 0.0) {
                    const double z = std::abs(closed.sum - mc.sum) / *mc.sum_stderr;
                    if (z > 6.0)
                        outcome.error = "closed-form/Monte-Carlo mismatch, z = " + std::to_string(z);
                }
            } else {
                Rng rate_rng(ids(kRateStream));
                outcome.sum_rate = estimate_ergodic_rates(ctx.profile, ctx.grid, config,
                                                          selected.assignment, spec.draws, rate_rng)
                                       .sum;
            }

            if (spec.symbols > 0) {
                Rng ber_rng(ids(kBerStream));
                const auto ber = estimate_ber_bpsk(ctx.profile, ctx.grid, config,
                                                   selected.assignment, spec.symbols, ber_rng);
                double mean = 0.0;
                for (double b : ber)
                    mean += b;
                outcome.ber = mean / static_cast<double>(ber.size());
            }
            return outcome;
        }

        PrecoderFactory factory;
        if (method.method == Method::baseline1 || method.method == Method::baseline2) {
            const CovarianceSet cov = build_covariances(ctx.profile, ctx.grid, config);
            auto vectors = method.method == Method::baseline1
                               ? slnr_eigen_precoder(cov, gamma)
                               : dft_slnr_precoder(cov, gamma, config.num_antennas);
            factory = [vectors](const ChannelRealization &, Rng &) { return vectors; };
        } else {  // zero forcing on trained estimates
            factory = [gamma](const ChannelRealization &realization, Rng &rng) {
                return zf_precoder(perturb_csi(realization.h, gamma, rng)).vectors;
            };
        }

        Rng rate_rng(ids(kRateStream));
        RateReport report =
            estimate_ergodic_rates(ctx.profile, ctx.grid, config, factory, spec.draws, rate_rng);
        outcome.sum_rate = report.sum;
        if (method.method == Method::zfbf)
            outcome.sum_rate =
                zf_sum_rate_with_overhead(outcome.sum_rate, config.num_antennas, config.coherence_len);

        if (spec.symbols > 0) {
            Rng ber_rng(ids(kBerStream));
            const auto ber =
                estimate_ber_bpsk(ctx.profile, ctx.grid, config, factory, spec.symbols, ber_rng);
            double mean = 0.0;
            for (double b : ber)
                mean += b;
            outcome.ber = mean / static_cast<double>(ber.size());
        }
        return outcome;
    } catch (const std::exception &e) {
        outcome.error = e.what();
        return outcome;
    }
}

} // namespace

void ExperimentSpec::validate() const {
    if (trials < 1)
        throw std::invalid_argument("experiment spec: trials must be >= 1");
    if (draws < 1)
        throw std::invalid_argument("experiment spec: draws must be >= 1");
    if (symbols < 0)
        throw std::invalid_argument("experiment spec: symbols must be >= 0");
    if (methods.empty())
        throw std::invalid_argument("experiment spec: methods must not be empty");
    if (sweep != SweepVariable::trial && sweep_values.empty())
        throw std::invalid_argument("experiment spec: sweep values must not be empty");
    if (scenario == ScenarioKind::from_file && profile_file.empty())
        throw std::invalid_argument("experiment spec: profile_file required for from-file scenario");
    if (scenario == ScenarioKind::from_file && sweep == SweepVariable::num_users)
        throw std::invalid_argument("experiment spec: num_users sweep incompatible with from-file");
    if (scenario != ScenarioKind::from_file) {
        if (num_antennas < 1)
            throw std::invalid_argument("experiment spec: num_antennas must be >= 1");
        if (grid_len < 1 || grid_len > num_antennas)
            throw std::invalid_argument("experiment spec: grid_len must satisfy 1 <= L <= N");
        if (paths_per_user < 1 || paths_per_user > grid_len)
            throw std::invalid_argument("experiment spec: paths_per_user must lie in [1, L]");
    }
    if (coherence_len < 1)
        throw std::invalid_argument("experiment spec: coherence_len must be >= 1");

    int max_users = num_users;
    if (sweep == SweepVariable::num_users)
        for (double v : sweep_values) {
            if (v < 1.0 || v != std::floor(v))
                throw std::invalid_argument("experiment spec: num_users sweep values must be "
                                            "positive integers");
            max_users = std::max(max_users, static_cast<int>(v));
        }
    for (const auto &m : methods)
        if (is_beam_selection_method(m.method)) {
            if (m.beams_per_user < 1)
                throw std::invalid_argument("experiment spec: method beams_per_user must be >= 1");
            if (m.beams_per_user * max_users > grid_len && scenario != ScenarioKind::from_file)
                throw std::invalid_argument("experiment spec: beams_per_user * num_users exceeds "
                                            "grid_len for method " + method_name(m.method));
        }
    for (double v : sweep_values) {
        if (sweep == SweepVariable::delta0 && v < 0.0)
            throw std::invalid_argument("experiment spec: delta0 values must be >= 0");
        if (sweep == SweepVariable::tau0 && (v < 0.0 || v > 1.0))
            throw std::invalid_argument("experiment spec: tau0 values must lie in [0, 1]");
    }
}

ResultTable run_experiment(const ExperimentSpec &spec) {
    spec.validate();

    std::pair<SpatialProfile, AngleGrid> loaded;
    if (spec.scenario == ScenarioKind::from_file)
        loaded = load_profile(spec.profile_file);

    const bool per_trial = spec.sweep == SweepVariable::trial;
    std::vector<double> values = spec.sweep_values;
    if (per_trial) {
        values.resize(static_cast<std::size_t>(spec.trials));
        for (int t = 0; t < spec.trials; ++t)
            values[static_cast<std::size_t>(t)] = t;
    }
    const int trials_per_value = per_trial ? 1 : spec.trials;
    const int num_values = static_cast<int>(values.size());
    const int num_methods = static_cast<int>(spec.methods.size());

    // outcomes indexed by (value, trial, method); filled in parallel, reduced
    // sequentially so the table is independent of scheduling
    std::vector<CellOutcome> outcomes(
        static_cast<std::size_t>(num_values) * trials_per_value * num_methods);
    const auto slot = [&](int v, int t, int m) {
        return (static_cast<std::size_t>(v) * trials_per_value + t) * num_methods +
               static_cast<std::size_t>(m);
    };

    std::atomic<int> next_cell{0};
    const int total_cells = num_values * trials_per_value;
    int thread_count = spec.threads > 0 ? spec.threads
                                        : static_cast<int>(std::thread::hardware_concurrency());
    thread_count = std::max(1, std::min(thread_count, total_cells));

    const auto worker = [&] {
        while (true) {
            const int cell = next_cell.fetch_add(1);
            if (cell >= total_cells)
                return;
            const int v = cell / trials_per_value;
            const int t = cell % trials_per_value;
            const int trial_id = per_trial ? static_cast<int>(values[static_cast<std::size_t>(v)]) : t;
            TrialContext ctx;
            try {
                ctx = build_trial_scenario(spec, &loaded, spec.sweep,
                                           values[static_cast<std::size_t>(v)], trial_id);
            } catch (const std::exception &e) {
                for (int m = 0; m < num_methods; ++m)
                    outcomes[slot(v, t, m)].error = e.what();
                continue;
            }
            for (int m = 0; m < num_methods; ++m)
                outcomes[slot(v, t, m)] = run_method_on_trial(
                    spec, ctx, spec.methods[static_cast<std::size_t>(m)], v, trial_id);
        }
    };

    if (thread_count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(thread_count));
        for (int i = 0; i < thread_count; ++i)
            pool.emplace_back(worker);
        for (auto &th : pool)
            th.join();
    }

    ResultTable table;
    for (int v = 0; v < num_values; ++v) {
        for (int m = 0; m < num_methods; ++m) {
            ResultRow row;
            row.method = method_name(spec.methods[static_cast<std::size_t>(m)].method);
            if (is_beam_selection_method(spec.methods[static_cast<std::size_t>(m)].method))
                row.method += ":" + std::to_string(
                                        spec.methods[static_cast<std::size_t>(m)].beams_per_user);
            row.sweep_name = sweep_variable_name(spec.sweep);
            row.sweep_value = values[static_cast<std::size_t>(v)];
            row.seed = spec.base_seed;

            MeanAccumulator rate_acc;
            MeanAccumulator ber_acc;
            for (int t = 0; t < trials_per_value; ++t) {
                const auto &cell = outcomes[slot(v, t, m)];
                if (!cell.error.empty()) {
                    if (!row.error.empty())
                        row.error += "; ";
                    row.error += "trial " + std::to_string(t) + ": " + cell.error;
                    continue;
                }
                rate_acc.add(cell.sum_rate);
                if (!std::isnan(cell.ber))
                    ber_acc.add(cell.ber);
                if (!std::isnan(cell.norm_deviation) &&
                    !(row.norm_deviation >= cell.norm_deviation))
                    row.norm_deviation = cell.norm_deviation;
            }
            row.trials = static_cast<int>(rate_acc.n);
            if (rate_acc.n > 0) {
                row.sum_rate = rate_acc.mean();
                row.sum_rate_stderr = rate_acc.standard_error();
            } else {
                row.sum_rate = std::numeric_limits<double>::quiet_NaN();
                row.sum_rate_stderr = std::numeric_limits<double>::quiet_NaN();
            }
            if (ber_acc.n > 0) {
                row.ber = ber_acc.mean();
                row.ber_stderr = ber_acc.standard_error();
            }
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// table output
// ---------------------------------------------------------------------------

namespace {

std::string csv_escape(const std::string &field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos)
        return field;
    std::string quoted = "\"";
    for (char c : field) {
        if (c == '"')
            quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

std::string format_value(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

} // namespace

void write_csv(std::ostream &out, const ResultTable &table) {
    out << "method,sweep_name,sweep_value,sum_rate,sum_rate_stderr,ber,ber_stderr,trials,seed\n";
    for (const auto &row : table.rows) {
        out << csv_escape(row.method) << ',' << csv_escape(row.sweep_name) << ','
            << format_value(row.sweep_value) << ',' << format_value(row.sum_rate) << ','
            << format_value(row.sum_rate_stderr) << ',' << format_value(row.ber) << ','
            << format_value(row.ber_stderr) << ',' << row.trials << ',' << row.seed << '\n';
    }
}

void write_json_lines(std::ostream &out, const ResultTable &table) {
    for (const auto &row : table.rows) {
        nlohmann::json j;
        j["method"] = row.method;
        j["sweep_name"] = row.sweep_name;
        j["sweep_value"] = row.sweep_value;
        j["sum_rate"] = std::isnan(row.sum_rate) ? nlohmann::json() : nlohmann::json(row.sum_rate);
        j["sum_rate_stderr"] =
            std::isnan(row.sum_rate_stderr) ? nlohmann::json() : nlohmann::json(row.sum_rate_stderr);
        j["ber"] = std::isnan(row.ber) ? nlohmann::json() : nlohmann::json(row.ber);
        j["ber_stderr"] = std::isnan(row.ber_stderr) ? nlohmann::json() : nlohmann::json(row.ber_stderr);
        j["trials"] = row.trials;
        j["seed"] = row.seed;
        if (!std::isnan(row.norm_deviation))
            j["norm_deviation"] = row.norm_deviation;
        if (!row.error.empty())
            j["error"] = row.error;
        out << j.dump() << '\n';
    }
}

// ---------------------------------------------------------------------------
// experiment spec files
// ---------------------------------------------------------------------------

MethodSpec parse_method_spec(const std::string &token) {
    MethodSpec spec;
    std::string name = token;
    const auto colon = token.find(':');
    if (colon != std::string::npos) {
        name = token.substr(0, colon);
        try {
            spec.beams_per_user = std::stoi(token.substr(colon + 1));
        } catch (const std::exception &) {
            throw std::invalid_argument("experiment spec: bad beams-per-user suffix in '" + token +
                                        "'");
        }
    }
    if (name == "bs-sbf-fs")
        spec.method = Method::bs_sbf_fs;
    else if (name == "bs-sbf-gibbs")
        spec.method = Method::bs_sbf_gibbs;
    else if (name == "bs-sbf-exhaustive")
        spec.method = Method::bs_sbf_exhaustive;
    else if (name == "bs-sbf-low-snr")
        spec.method = Method::bs_sbf_low_snr;
    else if (name == "baseline1")
        spec.method = Method::baseline1;
    else if (name == "baseline2")
        spec.method = Method::baseline2;
    else if (name == "zfbf")
        spec.method = Method::zfbf;
    else
        throw std::invalid_argument("experiment spec: unknown method '" + name + "'");
    return spec;
}

std::string method_name(Method method) {
    switch (method) {
    case Method::bs_sbf_fs:
        return "bs-sbf-fs";
    case Method::bs_sbf_gibbs:
        return "bs-sbf-gibbs";
    case Method::bs_sbf_exhaustive:
        return "bs-sbf-exhaustive";
    case Method::bs_sbf_low_snr:
        return "bs-sbf-low-snr";
    case Method::baseline1:
        return "baseline1";
    case Method::baseline2:
        return "baseline2";
    case Method::zfbf:
        return "zfbf";
    }
    return "unknown";
}

std::string sweep_variable_name(SweepVariable variable) {
    switch (variable) {
    case SweepVariable::power_db:
        return "power_db";
    case SweepVariable::num_users:
        return "num_users";
    case SweepVariable::delta0:
        return "delta0";
    case SweepVariable::tau0:
        return "tau0";
    case SweepVariable::trial:
        return "trial";
    }
    return "unknown";
}

ExperimentSpec parse_experiment_spec(const std::string &text) {
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    ExperimentSpec spec;
    spec.methods.clear();
    bool saw_tag = false;

    const auto fail = [&](const std::string &what) -> void {
        throw std::runtime_error("experiment spec line " + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(stream, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        std::vector<std::string> tok;
        std::string t;
        while (ls >> t)
            tok.push_back(t);
        if (tok.empty())
            continue;

        if (!saw_tag) {
            if (tok.size() != 2 || tok[0] != "bsbf-experiment" || tok[1] != "v1")
                fail("expected format tag 'bsbf-experiment v1'");
            saw_tag = true;
            continue;
        }

        const auto int_field = [&](const char *field) -> int {
            if (tok.size() != 2)
                fail(std::string(field) + " takes one value");
            try {
                return std::stoi(tok[1]);
            } catch (const std::exception &) {
                fail(std::string("bad integer for field ") + field);
            }
            return 0;
        };
        const auto double_field = [&](const char *field) -> double {
            if (tok.size() != 2)
                fail(std::string(field) + " takes one value");
            try {
                return std::stod(tok[1]);
            } catch (const std::exception &) {
                fail(std::string("bad number for field ") + field);
            }
            return 0.0;
        };

        const std::string &key = tok[0];
        if (key == "name") {
            if (tok.size() != 2)
                fail("name takes one token");
            spec.name = tok[1];
        } else if (key == "scenario") {
            if (tok.size() != 2)
                fail("scenario takes one value");
            if (tok[1] == "uniform")
                spec.scenario = ScenarioKind::uniform;
            else if (tok[1] == "cluster")
                spec.scenario = ScenarioKind::cluster;
            else if (tok[1] == "from-file")
                spec.scenario = ScenarioKind::from_file;
            else
                fail("unknown scenario '" + tok[1] + "'");
        } else if (key == "profile_file") {
            if (tok.size() != 2)
                fail("profile_file takes one path");
            spec.profile_file = tok[1];
        } else if (key == "num_antennas") {
            spec.num_antennas = int_field("num_antennas");
        } else if (key == "grid_len") {
            spec.grid_len = int_field("grid_len");
        } else if (key == "num_users") {
            spec.num_users = int_field("num_users");
        } else if (key == "paths_per_user") {
            spec.paths_per_user = int_field("paths_per_user");
        } else if (key == "coherence_len") {
            spec.coherence_len = int_field("coherence_len");
        } else if (key == "antenna_spacing_ratio") {
            spec.antenna_spacing_ratio = double_field("antenna_spacing_ratio");
        } else if (key == "power_db") {
            spec.power_db = double_field("power_db");
        } else if (key == "btbc_rate_inverse") {
            spec.btbc_rate_inverse = double_field("btbc_rate_inverse");
        } else if (key == "cluster_count") {
            spec.cluster.cluster_count = int_field("cluster_count");
        } else if (key == "cluster_size") {
            spec.cluster.cluster_size = double_field("cluster_size");
        } else if (key == "min_paths") {
            spec.cluster.min_paths = int_field("min_paths");
        } else if (key == "max_paths") {
            spec.cluster.max_paths = int_field("max_paths");
        } else if (key == "sweep") {
            if (tok.size() < 2)
                fail("sweep needs a variable name");
            const std::string &var = tok[1];
            if (var == "power_db")
                spec.sweep = SweepVariable::power_db;
            else if (var == "num_users")
                spec.sweep = SweepVariable::num_users;
            else if (var == "delta0")
                spec.sweep = SweepVariable::delta0;
            else if (var == "tau0")
                spec.sweep = SweepVariable::tau0;
            else if (var == "trial")
                spec.sweep = SweepVariable::trial;
            else
                fail("unknown sweep variable '" + var + "'");
            spec.sweep_values.clear();
            for (std::size_t i = 2; i < tok.size(); ++i) {
                try {
                    spec.sweep_values.push_back(std::stod(tok[i]));
                } catch (const std::exception &) {
                    fail("bad sweep value '" + tok[i] + "'");
                }
            }
            if (spec.sweep == SweepVariable::trial && !spec.sweep_values.empty())
                fail("sweep trial takes no values");
        } else if (key == "methods") {
            if (tok.size() < 2)
                fail("methods needs at least one entry");
            for (std::size_t i = 1; i < tok.size(); ++i)
                spec.methods.push_back(parse_method_spec(tok[i]));
        } else if (key == "trials") {
            spec.trials = int_field("trials");
        } else if (key == "draws") {
            spec.draws = int_field("draws");
        } else if (key == "symbols") {
            if (tok.size() != 2)
                fail("symbols takes one value");
            try {
                spec.symbols = std::stoll(tok[1]);
            } catch (const std::exception &) {
                fail("bad integer for field symbols");
            }
        } else if (key == "base_seed") {
            if (tok.size() != 2)
                fail("base_seed takes one value");
            try {
                spec.base_seed = std::stoull(tok[1]);
            } catch (const std::exception &) {
                fail("bad integer for field base_seed");
            }
        } else if (key == "threads") {
            spec.threads = int_field("threads");
        } else {
            fail("unknown field '" + key + "'");
        }
    }
    if (!saw_tag)
        throw std::runtime_error("experiment spec: missing format tag");
    spec.validate();
    return spec;
}

ExperimentSpec load_experiment_spec(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_experiment_spec: cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_experiment_spec(buffer.str());
}

// ---------------------------------------------------------------------------
// self checks
// ---------------------------------------------------------------------------

bool run_self_checks(std::ostream &out) {
    int failures = 0;
    const auto check = [&](const char *name, bool ok) {
        out << (ok ? "[ ok ] " : "[fail] ") << name << '\n';
        if (!ok)
            ++failures;
    };

    try {
        {
            Rng rng(7);
            bool ok = true;
            for (int i = 0; i < 8; ++i) {
                const double angle = rng.uniform(-90.0, 90.0);
                ok = ok && std::abs(steering_vector(angle, 32, 0.5).norm() - 1.0) < 1e-12;
            }
            check("steering vectors have unit norm", ok);
        }
        {
            SystemConfig config;
            config.num_antennas = 16;
            config.grid_len = 16;
            config.num_users = 2;
            config.beams_per_user = 2;
            const AngleGrid grid = make_grid_with_kappa(16, std::vector<double>(16, 0.0));
            const BeamBasis basis = build_basis(grid, config);
            check("orthogonal-grid pseudoinverse equals the response matrix",
                  (basis.basis - basis.response).cwiseAbs().maxCoeff() < 1e-10);
        }
        {
            // noiseless, interference-free block code identity
            const double gamma = 4.0;
            const std::complex<double> gain1(0.3, -0.7);
            const std::complex<double> gain2(-0.2, 0.5);
            const std::complex<double> x1(0.6, 0.8);
            const std::complex<double> x2(-1.0, 0.25);
            const double amp = std::sqrt(gamma / 2.0);
            const std::complex<double> y1 = amp * (gain1 * x1 + gain2 * x2);
            const std::complex<double> y2 = amp * (-gain1 * std::conj(x2) + gain2 * std::conj(x1));
            const auto decoded = btbc_decode(y1, y2, gain1, gain2, gamma);
            check("block code encode/decode identity",
                  std::abs(decoded[0] - x1) < 1e-10 && std::abs(decoded[1] - x2) < 1e-10);
        }
        {
            const auto probs = gibbs_candidate_distribution({0.5, 1.0}, 0.1);
            const double total = probs[0] + probs[1];
            const double expected = 1.0 / (1.0 + std::exp(-10.0));
            check("sampler distribution is normalized and softmin-shaped",
                  std::abs(total - 1.0) < 1e-12 && std::abs(probs[1] - expected) < 1e-12);
        }
        {
            SystemConfig config;
            config.num_antennas = 24;
            config.grid_len = 24;
            config.num_users = 3;
            config.beams_per_user = 2;
            config.total_power = 100.0;
            Rng rng(99);
            const AngleGrid grid = make_uniform_grid(config.grid_len, rng);
            const SpatialProfile profile = make_uniform_profile(grid, config.num_users, 5, rng);
            SelectorConfig selector;
            selector.rng_seed = 17;
            selector.method = SelectionMethod::forward_stepwise;
            const auto fs = fs_select(profile, config, selector);
            const auto gibbs = gibbs_select(profile, config, selector);
            const double fs_rate = selection_objective(profile, fs.assignment, config);
            const double gibbs_rate = selection_objective(profile, gibbs.assignment, config);
            check("sampling search never falls below the stepwise start",
                  gibbs_rate >= fs_rate - 1e-12);

            Rng mc_rng(5);
            const RateReport closed = closed_form_rates(profile, fs.assignment, config);
            const RateReport mc =
                estimate_ergodic_rates(profile, grid, config, fs.assignment, 20000, mc_rng);
            const double z = mc.sum_stderr && *mc.sum_stderr > 0.0
                                 ? std::abs(closed.sum - mc.sum) / *mc.sum_stderr
                                 : 0.0;
            check("closed-form rate agrees with Monte Carlo", z < 5.0);

            const std::string text = serialize_profile(profile, grid);
            const auto reparsed = parse_profile(text);
            check("profile file round-trip is exact",
                  serialize_profile(reparsed.first, reparsed.second) == text);
        }
        {
            ExperimentSpec spec;
            spec.name = "selfcheck";
            spec.num_antennas = 16;
            spec.grid_len = 16;
            spec.num_users = 2;
            spec.paths_per_user = 4;
            spec.sweep = SweepVariable::power_db;
            spec.sweep_values = {10.0, 20.0};
            spec.methods = {parse_method_spec("bs-sbf-fs:2"), parse_method_spec("baseline2")};
            spec.trials = 2;
            spec.draws = 50;
            spec.base_seed = 321;
            spec.threads = 1;
            std::ostringstream first;
            std::ostringstream second;
            write_csv(first, run_experiment(spec));
            write_csv(second, run_experiment(spec));
            check("experiment tables are reproducible from the seed", first.str() == second.str());
        }
    } catch (const std::exception &e) {
        out << "[fail] self-check exception: " << e.what() << '\n';
        ++failures;
    }
    return failures == 0;
}

} // namespace bsbf
