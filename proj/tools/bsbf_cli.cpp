// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "bsbf/harness.hpp"
#include "bsbf/profile_io.hpp"

namespace {

// "2,5;9,12" -> {{2,5},{9,12}}
bsbf::BeamAssignment parse_assignment(const std::string &text) {
    bsbf::BeamAssignment assignment;
    std::istringstream groups(text);
    std::string group;
    while (std::getline(groups, group, ';')) {
        std::vector<int> beams;
        std::istringstream items(group);
        std::string item;
        while (std::getline(items, item, ','))
            beams.push_back(std::stoi(item));
        assignment.groups.push_back(std::move(beams));
    }
    if (assignment.groups.empty())
        throw std::runtime_error("assignment: no beam groups given");
    return assignment;
}

std::ostream &open_output(std::ofstream &file, const std::string &path) {
    if (path.empty())
        return std::cout;
    file.open(path);
    if (!file)
        throw std::runtime_error("cannot open output file " + path);
    return file;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"beam-selection statistical beamforming simulator"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_path;
    std::string format = "csv";
    int threads = 0;
    app.add_option("--seed", seed, "override the experiment base seed")
        ->each([&](const std::string &) { seed_given = true; });
    app.add_option("--out", out_path, "output file (default stdout)");
    app.add_option("--format", format, "table format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--threads", threads, "worker threads (0 = hardware)");

    // run ------------------------------------------------------------------
    auto *run_cmd = app.add_subcommand("run", "execute an experiment spec and write the table");
    run_cmd->fallthrough();
    std::string spec_path;
    run_cmd->add_option("spec", spec_path, "experiment spec file")->required();

    // rate -----------------------------------------------------------------
    auto *rate_cmd = app.add_subcommand("rate", "closed-form rates for a profile and assignment");
    rate_cmd->fallthrough();
    std::string rate_profile;
    std::string rate_assignment;
    double rate_power_db = 0.0;
    double rate_upsilon = 1.0;
    rate_cmd->add_option("--profile", rate_profile, "profile file")->required();
    rate_cmd->add_option("--assignment", rate_assignment,
                         "per-user beam groups, e.g. \"2,5;9,12\"")
        ->required();
    rate_cmd->add_option("--power-db", rate_power_db, "total transmit power in dB");
    rate_cmd->add_option("--upsilon", rate_upsilon, "inverse block-code rate");

    // select ---------------------------------------------------------------
    auto *select_cmd = app.add_subcommand("select", "run a beam selector on a profile");
    select_cmd->fallthrough();
    std::string select_profile;
    std::string select_method = "fs";
    int select_beams_per_user = 2;
    double select_power_db = 40.0;
    double select_upsilon = 1.0;
    int select_steps = 0;
    int select_restarts = 3;
    select_cmd->add_option("--profile", select_profile, "profile file")->required();
    select_cmd->add_option("--method", select_method, "fs | gibbs | exhaustive | low-snr-greedy");
    select_cmd->add_option("--beams", select_beams_per_user, "beams per user");
    select_cmd->add_option("--power-db", select_power_db, "total transmit power in dB");
    select_cmd->add_option("--upsilon", select_upsilon, "inverse block-code rate");
    select_cmd->add_option("--steps", select_steps, "sampler steps (0 = 5K)");
    select_cmd->add_option("--restarts", select_restarts, "sampler restarts");

    // validate ---------------------------------------------------------------
    auto *validate_cmd = app.add_subcommand("validate", "validate a spec file and run self-checks");
    validate_cmd->fallthrough();
    std::string validate_spec;
    validate_cmd->add_option("spec", validate_spec, "experiment spec file (optional)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            bsbf::ExperimentSpec spec = bsbf::load_experiment_spec(spec_path);
            if (seed_given)
                spec.base_seed = seed;
            if (threads > 0)
                spec.threads = threads;
            const bsbf::ResultTable table = bsbf::run_experiment(spec);
            std::ofstream file;
            std::ostream &out = open_output(file, out_path);
            if (format == "csv")
                bsbf::write_csv(out, table);
            else
                bsbf::write_json_lines(out, table);
            for (const auto &row : table.rows)
                if (!row.error.empty())
                    std::cerr << "warning: " << row.method << " @ " << row.sweep_name << " = "
                              << row.sweep_value << ": " << row.error << '\n';
            return 0;
        }

        if (rate_cmd->parsed()) {
            const auto [profile, grid] = bsbf::load_profile(rate_profile);
            const bsbf::BeamAssignment assignment = parse_assignment(rate_assignment);
            if (assignment.num_users() != profile.num_users())
                throw std::runtime_error("assignment has " + std::to_string(assignment.num_users()) +
                                         " groups for " + std::to_string(profile.num_users()) +
                                         " users");
            bsbf::SystemConfig config;
            config.num_antennas = grid.size();
            config.grid_len = grid.size();
            config.num_users = profile.num_users();
            config.beams_per_user = static_cast<int>(assignment.groups.front().size());
            config.btbc_rate_inverse = rate_upsilon;
            config.total_power = std::pow(10.0, rate_power_db / 10.0);
            bsbf::validate_assignment(assignment, profile.grid_len, config.beams_per_user);

            const bsbf::RateReport report = bsbf::closed_form_rates(profile, assignment, config);
            std::ofstream file;
            std::ostream &out = open_output(file, out_path);
            for (std::size_t k = 0; k < report.per_user.size(); ++k)
                out << "user " << k << ": " << report.per_user[k] << " bits/s/Hz\n";
            out << "sum: " << report.sum << " bits/s/Hz\n";
            return 0;
        }

        if (select_cmd->parsed()) {
            const auto [profile, grid] = bsbf::load_profile(select_profile);
            bsbf::SystemConfig config;
            config.num_antennas = grid.size();
            config.grid_len = grid.size();
            config.num_users = profile.num_users();
            config.beams_per_user = select_beams_per_user;
            config.btbc_rate_inverse = select_upsilon;
            config.total_power = std::pow(10.0, select_power_db / 10.0);
            config.validate();

            bsbf::SelectorConfig selector;
            selector.method = bsbf::parse_selection_method(select_method);
            selector.gibbs_steps = select_steps;
            selector.restarts = select_restarts;
            selector.rng_seed = seed_given ? seed : 1;

            const bsbf::SelectionResult result = bsbf::select_beams(profile, config, selector);
            std::ofstream file;
            std::ostream &out = open_output(file, out_path);
            for (int k = 0; k < result.assignment.num_users(); ++k) {
                out << "user " << k << ":";
                for (int l : result.assignment.groups[static_cast<std::size_t>(k)])
                    out << ' ' << l;
                out << '\n';
            }
            out << "sum-rate: " << bsbf::selection_objective(profile, result.assignment, config)
                << " bits/s/Hz\n";
            return 0;
        }

        if (validate_cmd->parsed()) {
            if (!validate_spec.empty()) {
                const bsbf::ExperimentSpec spec = bsbf::load_experiment_spec(validate_spec);
                std::cout << "spec ok: " << spec.name << '\n';
            }
            return bsbf::run_self_checks(std::cout) ? 0 : 1;
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
