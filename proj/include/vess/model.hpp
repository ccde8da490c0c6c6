#pragma once

#include <span>
#include <string>
#include <vector>

namespace vess {

using Series = std::vector<double>;

struct TimeGrid {
  int slots = 1;
  double slot_hours = 1.0;

  void validate() const;
};

struct Tariff {
  double energy_price = 0.0;   // pi_b, per kWh
  double peak_price = 0.0;     // pi_p, per kW of daily peak
  double feed_in_price = 0.0;  // pi_s, per kWh

  void validate() const;
};

struct StorageTech {
  double charge_eff = 1.0;
  double discharge_eff = 1.0;
  double agg_charge_eff = 1.0;
  double agg_discharge_eff = 1.0;
  double level_min = 0.0;
  double level_max = 1.0;
  double capacity_cost = 0.0;       // per kWh over the investment phase
  double power_cost = 0.0;          // per kW over the investment phase
  double operation_cost = 0.0;      // per kWh charged or discharged
  double extra_charge_cost = 0.0;   // additional resource absorbing charge demand
  double extra_discharge_cost = 0.0;
  double recovery_factor = 1.0;     // daily capital recovery factor

  void validate() const;
};

struct Scenario {
  std::string id;
  double probability = 0.0;
  std::vector<Series> load;       // [user][slot], kW
  std::vector<Series> renewable;  // [user][slot], kW
};

struct ScenarioSet {
  TimeGrid grid;
  std::vector<std::string> users;
  std::vector<Scenario> scenarios;

  std::size_t user_count() const { return users.size(); }
  std::size_t scenario_count() const { return scenarios.size(); }
  // Checks shapes, signs and that probabilities sum to one within 1e-9.
  void validate() const;
};

// Non-owning view of one user's data in one scenario.
struct UserSlice {
  std::span<const double> load;
  std::span<const double> renewable;
  TimeGrid grid;
};

UserSlice slice(const ScenarioSet& set, std::size_t scenario, std::size_t user);

struct UserDecision {
  double capacity = 0.0;
  Series renewable_used;
  Series charge;
  Series discharge;
  Series level;  // T + 1 entries, level[0] == level[T]
  double peak = 0.0;
  double bill_component = 0.0;  // bill minus feed-in revenue
};

Series power_balance(std::span<const double> load, std::span<const double> renewable_used,
                     std::span<const double> charge, std::span<const double> discharge);

double electricity_bill(std::span<const double> grid_draw, const Tariff& tariff,
                        double slot_hours = 1.0);

double renewable_revenue(std::span<const double> renewable, std::span<const double> renewable_used,
                         const Tariff& tariff, double slot_hours = 1.0);

// Bill minus feed-in revenue for a dispatch.
double bill_component(const UserDecision& decision, const UserSlice& user, const Tariff& tariff);

double user_net_cost(const UserDecision& decision, const UserSlice& user, const Tariff& tariff,
                     double price);

double capital_recovery_factor(double rate, double years, double days_per_year);

// pi_p^D = pi_p^M * monthly_peak / sum of daily peaks.
double daily_peak_price(double monthly_price, double monthly_peak,
                        std::span<const double> daily_peaks);
// Simplification with every daily peak equal to the monthly one.
double daily_peak_price(double monthly_price, int days_in_month);

struct DecisionResiduals {
  double dynamics = 0.0;
  double periodicity = 0.0;
  double level_bounds = 0.0;
  double sign = 0.0;
  double renewable_bound = 0.0;
  double grid_negative = 0.0;
  double peak = 0.0;

  double worst() const;
};

DecisionResiduals check_decision(const UserDecision& decision, const UserSlice& user,
                                 const StorageTech& tech);

UserDecision idle_decision(const UserSlice& user, const Tariff& tariff);

}  // namespace vess
