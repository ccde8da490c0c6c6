#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "vess/model.hpp"

namespace vess {

// Scenario CSV: scenario_id,probability,user_id,slot_index,load_kw,renewable_kw with one row
// per (scenario, user, slot). Scenarios and users keep their order of first appearance.
// Probabilities off by at most 1e-6 from a unit sum are rescaled.
ScenarioSet read_scenarios(std::istream& in, double slot_hours = 1.0);
ScenarioSet load_scenarios(const std::filesystem::path& path, double slot_hours = 1.0);

// Writes with 17 significant digits so that reading back is lossless.
void write_scenarios(std::ostream& out, const ScenarioSet& set);
void save_scenarios(const std::filesystem::path& path, const ScenarioSet& set);

// Fixed 9-significant-digit formatting used by every report file.
std::string format_number(double v);

}  // namespace vess
