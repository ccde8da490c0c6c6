#pragma once

#include <string>
#include <vector>

#include "vess/model.hpp"

namespace vess {

// Unit prices a user pays for owning physical storage.
struct StoragePrice {
  std::string name;
  double capacity = 0.0;  // per kWh over the investment phase
  double power = 0.0;     // per kW over the investment phase
};

StoragePrice production_price(const StorageTech& tech);
StoragePrice retail_price(const StorageTech& tech, double capacity_markup = 2.76,
                          double power_markup = 1.0);

struct BenchmarkResult {
  std::string user_id;
  std::string preset;
  double capacity = 0.0;
  double power = 0.0;
  double capital_cost = 0.0;    // daily, via the recovery factor
  double bill = 0.0;            // expected bill minus feed-in revenue
  double operation_cost = 0.0;  // expected
  double expected_cost = 0.0;
  std::vector<UserDecision> dispatch;  // per scenario
};

// One storage size shared by every scenario, paid for by the user.
BenchmarkResult solve_benchmark(const ScenarioSet& set, std::size_t user, const Tariff& tariff,
                                const StorageTech& tech, const StoragePrice& price);

}  // namespace vess
