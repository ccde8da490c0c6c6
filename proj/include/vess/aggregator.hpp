#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vess/model.hpp"
#include "vess/user.hpp"

namespace vess {

struct SystemModel {
  ScenarioSet scenarios;
  Tariff tariff;
  StorageTech tech;
};

// Net storage demand seen by the aggregator in one scenario.
struct NetDemand {
  Series charge;
  Series discharge;
};

// Indexed by scenario.
using AggregateDemand = std::vector<NetDemand>;

NetDemand aggregate_net(std::span<const UserDecision> decisions);

struct ScenarioAllocation {
  Series storage_charge;
  Series storage_discharge;
  Series extra_charge;
  Series extra_discharge;
  Series level;  // physical energy level, T + 1 entries
};

struct CostAllocation {
  double capacity = 0.0;  // X, kWh
  double power = 0.0;     // P, kW
  std::vector<ScenarioAllocation> scenarios;
  double capital_cost = 0.0;
  double operation_cost = 0.0;
  double extra_cost = 0.0;
  double cost = 0.0;  // expected daily total C_a
};

CostAllocation solve_cost_allocation(const AggregateDemand& demand, const StorageTech& tech,
                                     std::span<const double> probabilities, const TimeGrid& grid);

// capacities[scenario][user].
double expected_revenue(double price, const std::vector<std::vector<double>>& capacities,
                        std::span<const double> probabilities);

// Everything the aggregator learns from one announced price.
struct SystemEvaluation {
  double price = 0.0;
  double penalty = 0.0;  // 0 for limiting evaluations
  double sold = 0.0;     // expected total virtual capacity
  double revenue = 0.0;
  double profit = 0.0;
  CostAllocation allocation;
  std::vector<std::vector<UserDecision>> decisions;  // [scenario][user]
  std::vector<double> user_capacity;  // expected purchase per user
  std::vector<double> user_bill;      // expected bill minus feed-in per user

  // Expected q*x + bill - feed-in for one user.
  double user_cost(std::size_t user) const;
};

enum class LnpCase { Interior, LeftZero, RightLimit };
const char* to_string(LnpCase c);

struct SearchStep {
  double penalty = 0.0;
  double profit = 0.0;
  double gap = 0.0;  // distance to the limiting profit used by the stop test
};

struct PriceSearchResult {
  double price = 0.0;
  double penalty = 0.0;
  double capacity = 0.0;
  double power = 0.0;
  double profit = 0.0;
  double revenue = 0.0;
  double sold = 0.0;
  double limiting_profit = 0.0;
  double threshold = 0.0;  // threshold price the search anchored on
  bool flagged = false;    // OP search found no positive profit
  std::optional<LnpCase> lnp_case;
  std::vector<SearchStep> trace;
  SystemEvaluation evaluation;
};

struct OpOptions {
  double err1 = 1e-3;
  double err2 = 1e-3;
  double initial_penalty = 3e-7;
};

struct LnpOptions {
  double err3 = 1e-4;
  double err4 = 1e-4;
  double initial_penalty = 3e-7;
};

class Aggregator {
 public:
  // Computes every threshold profile and its limiting dispatch up front.
  explicit Aggregator(SystemModel model);

  const SystemModel& model() const { return model_; }
  const ThresholdProfile& profile(std::size_t scenario, std::size_t user) const;
  // Sorted union of all threshold prices, starting at 0.
  const std::vector<double>& thresholds() const { return union_; }

  SystemEvaluation communication_unit(double price, double penalty) const;
  // Limit of communication_unit as the penalty vanishes; q must avoid the thresholds.
  SystemEvaluation limiting(double price) const;
  double limiting_profit(double price) const;
  // One-sided limits at thresholds()[k]; left requires k >= 1.
  SystemEvaluation left_limit(std::size_t k) const;
  SystemEvaluation right_limit(std::size_t k) const;
  // Expected sold capacity on (thresholds()[k], thresholds()[k+1]).
  double interval_sold(std::size_t k) const;

  PriceSearchResult search_op_price(const OpOptions& options = {}) const;
  PriceSearchResult search_lnp_price(const LnpOptions& options = {}) const;

 private:
  std::size_t locate(double price) const;
  const SystemEvaluation& interval(std::size_t k) const;
  SystemEvaluation evaluate(std::vector<std::vector<UserDecision>> decisions, double price,
                            double penalty) const;
  std::vector<double> probabilities() const;

  SystemModel model_;
  std::vector<std::vector<ThresholdProfile>> profiles_;  // [scenario][user]
  std::vector<double> union_;
  mutable std::vector<std::optional<SystemEvaluation>> cache_;
};

}  // namespace vess
