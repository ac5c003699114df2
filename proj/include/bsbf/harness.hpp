// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#ifndef BSBF_HARNESS_HPP
#define BSBF_HARNESS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "bsbf/baselines.hpp"
#include "bsbf/beamforming.hpp"
#include "bsbf/rate.hpp"
#include "bsbf/scenario.hpp"
#include "bsbf/selection.hpp"

namespace bsbf {

/// Produces the beamforming matrix columns for one channel draw. Statistical
/// precoders ignore the realization; training-based ones estimate from it.
using PrecoderFactory =
    std::function<std::vector<Eigen::VectorXcd>(const ChannelRealization &, Rng &)>;

/// Ergodic rates of the beam-selection scheme by Monte Carlo over channel
/// draws. Without angle mismatch the per-beam sparse SINR applies; with
/// mismatch the rate is measured against the true (leaky) channels through
/// full inner products with the grid-built beam vectors.
RateReport estimate_ergodic_rates(const SpatialProfile &profile, const AngleGrid &grid,
                                  const SystemConfig &config, const BeamAssignment &assignment,
                                  int draws, Rng &rng);

/// Ergodic rates of an arbitrary precoder by Monte Carlo.
RateReport estimate_ergodic_rates(const SpatialProfile &profile, const AngleGrid &grid,
                                  const SystemConfig &config, const PrecoderFactory &precoder,
                                  int draws, Rng &rng);

/// Uncoded BPSK bit error rates, channels redrawn every coherence block.
/// Two beams per user run the full space-time block chain; one beam per user
/// and precoder schemes use coherent detection with the known effective gain.
std::vector<double> estimate_ber_bpsk(const SpatialProfile &profile, const AngleGrid &grid,
                                      const SystemConfig &config, const BeamAssignment &assignment,
                                      long long symbols, Rng &rng);

std::vector<double> estimate_ber_bpsk(const SpatialProfile &profile, const AngleGrid &grid,
                                      const SystemConfig &config, const PrecoderFactory &precoder,
                                      long long symbols, Rng &rng);

enum class Method {
    bs_sbf_fs,
    bs_sbf_gibbs,
    bs_sbf_exhaustive,
    bs_sbf_low_snr,
    baseline1,
    baseline2,
    zfbf,
};

struct MethodSpec {
    Method method = Method::bs_sbf_fs;
    int beams_per_user = 2;  // used by the beam-selection methods only
};

/// The `trial` variable emits one row per (method, trial index) instead of
/// aggregating, for benchmark-style tables. The delta0 level is grid-relative:
/// one unit gives the true-angle offsets a standard deviation of one mean
/// grid cell at broadside.
enum class SweepVariable { power_db, num_users, delta0, tau0, trial };

enum class ScenarioKind { uniform, cluster, from_file };

struct ExperimentSpec {
    std::string name = "experiment";
    ScenarioKind scenario = ScenarioKind::uniform;
    std::string profile_file;  // for ScenarioKind::from_file

    int num_antennas = 64;
    int grid_len = 64;
    int num_users = 8;
    int paths_per_user = 5;
    int coherence_len = 100;
    double antenna_spacing_ratio = 0.5;
    double power_db = 40.0;
    double btbc_rate_inverse = 1.0;
    ClusterGeometry cluster;

    SweepVariable sweep = SweepVariable::power_db;
    std::vector<double> sweep_values;

    std::vector<MethodSpec> methods;
    int trials = 1;
    int draws = 200;           // channel draws per trial for rate averaging
    long long symbols = 0;     // BPSK symbols per trial for BER; 0 skips BER
    std::uint64_t base_seed = 1;
    int threads = 0;           // 0 -> hardware concurrency

    void validate() const;
};

struct ResultRow {
    std::string method;
    std::string sweep_name;
    double sweep_value = 0.0;
    double sum_rate = 0.0;
    double sum_rate_stderr = 0.0;
    double ber = std::numeric_limits<double>::quiet_NaN();
    double ber_stderr = std::numeric_limits<double>::quiet_NaN();
    int trials = 0;
    std::uint64_t seed = 0;
    // beam-selection methods: worst | ||v_k|| - 1 | over users and trials (the
    // beam vectors are deliberately not renormalized); JSON output only
    double norm_deviation = std::numeric_limits<double>::quiet_NaN();
    std::string error;  // empty when the cell completed
};

struct ResultTable {
    std::vector<ResultRow> rows;
};

/// Runs every sweep-value x method cell: per trial the scenario is rebuilt
/// from seeds derived off the base seed, selection runs, and rates (and BER
/// when requested) are estimated. Deterministic given the spec; trials run
/// in parallel. A failing cell records its error and the sweep continues.
ResultTable run_experiment(const ExperimentSpec &spec);

void write_csv(std::ostream &out, const ResultTable &table);
void write_json_lines(std::ostream &out, const ResultTable &table);

ExperimentSpec parse_experiment_spec(const std::string &text);
ExperimentSpec load_experiment_spec(const std::string &path);

MethodSpec parse_method_spec(const std::string &token);
std::string method_name(Method method);
std::string sweep_variable_name(SweepVariable variable);

/// Library self-checks used by the CLI `validate` subcommand. Prints one line
/// per check; returns false if any check fails.
bool run_self_checks(std::ostream &out);

} // namespace bsbf

#endif
