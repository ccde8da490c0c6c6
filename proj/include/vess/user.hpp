#pragma once

#include <string>
#include <vector>

#include "vess/lp.hpp"
#include "vess/model.hpp"
#include "vess/parametric.hpp"

namespace vess {

// Column layout shared by every per-user program.
struct UserLayout {
  int slots = 0;
  int capacity = -1;  // -1 when capacity is a fixed right-hand side
  int peak = 0;
  int renewable_used = 0;  // first of T columns
  int charge = 0;
  int discharge = 0;
  int level = 0;  // first of T + 1 columns
};

struct UserProblem {
  QuadraticProgram qp;
  UserLayout layout;
  double price = 0.0;
  double penalty = 0.0;
  double constant = 0.0;  // bill minus revenue not controlled by any decision
  Series load;
  Series renewable;
  TimeGrid grid;
  Tariff tariff;
};

UserProblem build_user_problem(const UserSlice& user, const Tariff& tariff, const StorageTech& tech,
                               double price, double penalty);

UserDecision solve_user(const UserProblem& problem, LpSolution* raw = nullptr);

// f(x): least bill-minus-revenue with capacity x, as a convex piecewise-linear function.
struct ValueFunction {
  std::vector<double> breakpoints;  // ascending, starts at 0
  std::vector<double> slopes;       // on [breakpoints[k], breakpoints[k+1]), last is 0
  double value_at_zero = 0.0;

  double operator()(double capacity) const;
};

ValueFunction compute_value_function(const UserSlice& user, const Tariff& tariff,
                                     const StorageTech& tech);

struct ThresholdProfile {
  std::string user_id;
  std::string scenario_id;
  std::vector<double> prices;      // 0 = Q[0] < Q[1] < ...
  std::vector<double> capacities;  // X[0] > X[1] > ... = 0
  std::vector<UserDecision> dispatch;  // limiting dispatch valid on (Q[k], Q[k+1])

  // Index k with Q[k] < q < Q[k+1]; throws AmbiguousPriceError on a threshold.
  std::size_t interval(double price) const;
};

ThresholdProfile compute_thresholds(const UserSlice& user, const Tariff& tariff,
                                    const StorageTech& tech);

// Fills ThresholdProfile::dispatch for every capacity level.
void attach_limiting_dispatch(ThresholdProfile& profile, const UserSlice& user,
                              const Tariff& tariff, const StorageTech& tech);

double optimal_capacity(const ThresholdProfile& profile, double price);

UserDecision limiting_dispatch(const UserSlice& user, const Tariff& tariff,
                               const StorageTech& tech, double capacity);

}  // namespace vess
