// SPDX-License-Identifier: Apache-2.0
//
// bsbf - beam-selection statistical beamforming simulator for FDD downlink massive MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0
// ------------------------------------------------------------------------

#ifndef BSBF_PROFILE_IO_HPP
#define BSBF_PROFILE_IO_HPP

#include <iosfwd>
#include <string>
#include <utility>

#include "bsbf/scenario.hpp"

namespace bsbf {

/// Serializes a grid/profile pair in the versioned text format. Floats are
/// written with 17 significant digits so a save/load cycle is bit-exact.
std::string serialize_profile(const SpatialProfile &profile, const AngleGrid &grid);

/// Parses the text format; throws std::runtime_error naming the offending
/// field or line.
std::pair<SpatialProfile, AngleGrid> parse_profile(const std::string &text);

void save_profile(const std::string &path, const SpatialProfile &profile, const AngleGrid &grid);
std::pair<SpatialProfile, AngleGrid> load_profile(const std::string &path);

} // namespace bsbf

#endif
