// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#include "bsbf/profile_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bsbf {

namespace {

constexpr const char *kFormatTag = "bsbf-profile v1";

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

void append_doubles(std::ostringstream &out, const char *key, const std::vector<double> &values) {
    out << key;
    for (double v : values)
        out << ' ' << format_double(v);
    out << '\n';
}

class LineParser {
  public:
    explicit LineParser(const std::string &text) : stream_(text) {}

    bool next_line() {
        while (std::getline(stream_, line_)) {
            ++line_no_;
            if (line_.empty() || line_[0] == '#')
                continue;
            tokens_.clear();
            std::istringstream ls(line_);
            std::string tok;
            while (ls >> tok)
                tokens_.push_back(tok);
            if (!tokens_.empty())
                return true;
        }
        return false;
    }

    const std::vector<std::string> &tokens() const { return tokens_; }

    [[noreturn]] void fail(const std::string &what) const {
        throw std::runtime_error("profile line " + std::to_string(line_no_) + ": " + what);
    }

    double to_double(const std::string &tok) const {
        std::size_t consumed = 0;
        double value = 0.0;
        try {
            value = std::stod(tok, &consumed);
        } catch (const std::exception &) {
            fail("expected a number, got '" + tok + "'");
        }
        if (consumed != tok.size())
            fail("trailing characters in number '" + tok + "'");
        return value;
    }

    int to_int(const std::string &tok) const {
        try {
            std::size_t consumed = 0;
            const int value = std::stoi(tok, &consumed);
            if (consumed != tok.size())
                fail("trailing characters in integer '" + tok + "'");
            return value;
        } catch (const std::exception &) {
            fail("expected an integer, got '" + tok + "'");
        }
    }

    std::vector<double> values_after_key() const {
        std::vector<double> out;
        for (std::size_t i = 1; i < tokens_.size(); ++i)
            out.push_back(to_double(tokens_[i]));
        return out;
    }

    std::vector<int> ints_after_key() const {
        std::vector<int> out;
        for (std::size_t i = 1; i < tokens_.size(); ++i)
            out.push_back(to_int(tokens_[i]));
        return out;
    }

  private:
    std::istringstream stream_;
    std::string line_;
    std::vector<std::string> tokens_;
    int line_no_ = 0;
};

} // namespace

std::string serialize_profile(const SpatialProfile &profile, const AngleGrid &grid) {
    if (grid.size() != profile.grid_len)
        throw std::invalid_argument("serialize_profile: grid/profile length mismatch");
    std::ostringstream out;
    out << kFormatTag << '\n';
    out << "grid_len " << profile.grid_len << '\n';
    append_doubles(out, "grid_sines", grid.sines);
    if (profile.has_angle_mismatch())
        append_doubles(out, "deltas_deg", profile.delta_deg);
    out << "users " << profile.num_users() << '\n';
    for (int k = 0; k < profile.num_users(); ++k) {
        const auto ku = static_cast<std::size_t>(k);
        out << "user " << k << '\n';
        out << "beams";
        for (int l : profile.beams[ku])
            out << ' ' << l;
        out << '\n';
        std::vector<double> sig;
        std::vector<double> rep;
        bool differs = false;
        for (int l : profile.beams[ku]) {
            sig.push_back(profile.sigma_sq[ku][static_cast<std::size_t>(l)]);
            rep.push_back(profile.reported_sigma_sq[ku][static_cast<std::size_t>(l)]);
            differs = differs || sig.back() != rep.back();
        }
        append_doubles(out, "sigma_sq", sig);
        if (differs)
            append_doubles(out, "reported_sigma_sq", rep);
    }
    return out.str();
}

std::pair<SpatialProfile, AngleGrid> parse_profile(const std::string &text) {
    LineParser parser(text);
    if (!parser.next_line())
        throw std::runtime_error("profile: empty document");
    {
        std::string tag;
        for (std::size_t i = 0; i < parser.tokens().size(); ++i)
            tag += (i ? " " : "") + parser.tokens()[i];
        if (tag != kFormatTag)
            throw std::runtime_error("profile: unsupported format tag '" + tag + "'");
    }

    SpatialProfile profile;
    AngleGrid grid;
    int expected_users = -1;
    int current_user = -1;
    std::vector<char> reported_set;

    while (parser.next_line()) {
        const auto &tok = parser.tokens();
        const std::string &key = tok[0];
        if (key == "grid_len") {
            if (tok.size() != 2)
                parser.fail("grid_len takes one value");
            profile.grid_len = parser.to_int(tok[1]);
            if (profile.grid_len < 1)
                parser.fail("grid_len must be >= 1");
        } else if (key == "grid_sines") {
            const auto sines = parser.values_after_key();
            if (static_cast<int>(sines.size()) != profile.grid_len)
                parser.fail("grid_sines needs exactly grid_len values");
            try {
                grid = grid_from_sines(sines);
            } catch (const std::exception &e) {
                parser.fail(e.what());
            }
        } else if (key == "deltas_deg") {
            profile.delta_deg = parser.values_after_key();
            if (static_cast<int>(profile.delta_deg.size()) != profile.grid_len)
                parser.fail("deltas_deg needs exactly grid_len values");
        } else if (key == "users") {
            if (tok.size() != 2)
                parser.fail("users takes one value");
            expected_users = parser.to_int(tok[1]);
            if (expected_users < 1)
                parser.fail("users must be >= 1");
            profile.beams.assign(static_cast<std::size_t>(expected_users), {});
            profile.sigma_sq.assign(static_cast<std::size_t>(expected_users),
                                    std::vector<double>(static_cast<std::size_t>(profile.grid_len), 0.0));
            profile.reported_sigma_sq = profile.sigma_sq;
            reported_set.assign(static_cast<std::size_t>(expected_users), 0);
        } else if (key == "user") {
            if (tok.size() != 2)
                parser.fail("user takes one id");
            current_user = parser.to_int(tok[1]);
            if (current_user < 0 || current_user >= expected_users)
                parser.fail("user id out of range");
        } else if (key == "beams") {
            if (current_user < 0)
                parser.fail("beams before any user record");
            auto beams = parser.ints_after_key();
            for (int l : beams)
                if (l < 0 || l >= profile.grid_len)
                    parser.fail("beam index " + std::to_string(l) + " out of range");
            profile.beams[static_cast<std::size_t>(current_user)] = std::move(beams);
        } else if (key == "sigma_sq" || key == "reported_sigma_sq") {
            if (current_user < 0)
                parser.fail(key + " before any user record");
            const auto &beams = profile.beams[static_cast<std::size_t>(current_user)];
            const auto values = parser.values_after_key();
            if (values.size() != beams.size())
                parser.fail(key + " needs one value per beam");
            const auto cu = static_cast<std::size_t>(current_user);
            auto &dense = key == "sigma_sq" ? profile.sigma_sq : profile.reported_sigma_sq;
            for (std::size_t p = 0; p < beams.size(); ++p)
                dense[cu][static_cast<std::size_t>(beams[p])] = values[p];
            if (key == "sigma_sq") {
                if (!reported_set[cu])
                    for (std::size_t p = 0; p < beams.size(); ++p)
                        profile.reported_sigma_sq[cu][static_cast<std::size_t>(beams[p])] = values[p];
            } else {
                reported_set[cu] = 1;
            }
        } else {
            parser.fail("unknown field '" + key + "'");
        }
    }

    if (profile.grid_len < 1)
        throw std::runtime_error("profile: missing grid_len");
    if (grid.size() != profile.grid_len)
        throw std::runtime_error("profile: missing grid_sines");
    if (expected_users < 1)
        throw std::runtime_error("profile: missing users");
    return {std::move(profile), std::move(grid)};
}

void save_profile(const std::string &path, const SpatialProfile &profile, const AngleGrid &grid) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("save_profile: cannot open " + path);
    out << serialize_profile(profile, grid);
}

std::pair<SpatialProfile, AngleGrid> load_profile(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_profile: cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_profile(buffer.str());
}

} // namespace bsbf
