#pragma once

#include <random>
#include <string>

#include "vess/model.hpp"

namespace fixtures {

inline vess::Tariff tiny_tariff() { return vess::Tariff{0.03, 0.4, 0.01}; }

inline vess::StorageTech ideal_tech() {
  vess::StorageTech tech;
  tech.recovery_factor = 1.0;
  return tech;
}

// One user, one scenario, load [2, 0], no renewables.
inline vess::ScenarioSet tiny(double scale = 1.0) {
  vess::ScenarioSet set;
  set.grid = vess::TimeGrid{2, 1.0};
  set.users = {"A"};
  set.scenarios.push_back({"s1", 1.0, {{2.0 * scale, 0.0}}, {{0.0, 0.0}}});
  return set;
}

// Two users whose storage use cancels exactly at the aggregator.
inline vess::ScenarioSet tiny2() {
  vess::ScenarioSet set;
  set.grid = vess::TimeGrid{2, 1.0};
  set.users = {"A", "B"};
  set.scenarios.push_back({"s1", 1.0, {{2.0, 0.0}, {0.0, 2.0}}, {{0.0, 0.0}, {0.0, 0.0}}});
  return set;
}

inline vess::ScenarioSet random_user(std::mt19937& rng, int slots) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  vess::ScenarioSet set;
  set.grid = vess::TimeGrid{slots, 1.0};
  set.users = {"R"};
  vess::Scenario sc{"r", 1.0, {vess::Series(slots)}, {vess::Series(slots)}};
  for (int t = 0; t < slots; ++t) {
    sc.load[0][t] = std::round(4.0 * U(rng) * 100.0) / 100.0;
    sc.renewable[0][t] = U(rng) < 0.5 ? std::round(2.0 * U(rng) * 100.0) / 100.0 : 0.0;
  }
  set.scenarios.push_back(sc);
  return set;
}

// Cheap lossless storage with a priced additional resource on the discharge side.
inline vess::StorageTech unit_storage(double extra_discharge) {
  vess::StorageTech tech = ideal_tech();
  tech.capacity_cost = 0.1;
  tech.power_cost = 0.05;
  tech.operation_cost = 0.001;
  tech.extra_charge_cost = 0.0;
  tech.extra_discharge_cost = extra_discharge;
  return tech;
}

// Storage that never pays off, so every demand goes to additional resources.
inline vess::StorageTech expensive_storage(double extra_discharge) {
  vess::StorageTech tech = unit_storage(extra_discharge);
  tech.capacity_cost = 100.0;
  tech.power_cost = 100.0;
  return tech;
}

inline vess::StorageTech random_tech(std::mt19937& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  vess::StorageTech tech;
  tech.charge_eff = 0.85 + 0.15 * U(rng);
  tech.discharge_eff = 0.85 + 0.15 * U(rng);
  return tech;
}

}  // namespace fixtures
