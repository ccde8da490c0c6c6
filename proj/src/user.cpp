#include "vess/user.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vess/errors.hpp"

namespace vess {

namespace {

constexpr double kSlopeMerge = 1e-9;
constexpr double kCapacityMerge = 1e-9;
constexpr double kPriceTol = 1e-9;
constexpr double kBillSlack = 1e-12;

struct DispatchModel {
  LpBuilder builder;
  UserLayout layout;
  double constant = 0.0;
  std::vector<int> level_rows;  // rows e[t] - x <= 0, or e[t] <= capacity
};

// Decision-dependent part of bill minus revenue goes into the objective; the rest into constant.
DispatchModel dispatch_model(const UserSlice& user, const Tariff& tariff, const StorageTech& tech,
                             double price, bool variable_capacity, double fixed_capacity) {
  user.grid.validate();
  tariff.validate();
  tech.validate();
  const int T = static_cast<int>(user.load.size());
  if (T != user.grid.slots || static_cast<int>(user.renewable.size()) != T)
    throw DimensionError("user series do not match the time grid");
  const double h = user.grid.slot_hours;
  const double total_load = std::accumulate(user.load.begin(), user.load.end(), 0.0);
  const double total_ren = std::accumulate(user.renewable.begin(), user.renewable.end(), 0.0);

  DispatchModel dm;
  auto& b = dm.builder;
  auto& lay = dm.layout;
  lay.slots = T;
  if (variable_capacity) lay.capacity = b.add_variable(price, 0.0, h * (total_load + total_ren));
  lay.peak = b.add_variable(tariff.peak_price);
  lay.renewable_used = b.variable_count();
  for (int t = 0; t < T; ++t)
    b.add_variable((tariff.feed_in_price - tariff.energy_price) * h, 0.0, user.renewable[t]);
  lay.charge = b.variable_count();
  for (int t = 0; t < T; ++t) b.add_variable(tariff.energy_price * h);
  lay.discharge = b.variable_count();
  for (int t = 0; t < T; ++t) b.add_variable(-tariff.energy_price * h);
  lay.level = b.variable_count();
  for (int t = 0; t <= T; ++t) b.add_variable(0.0);
  dm.constant = tariff.energy_price * h * total_load - tariff.feed_in_price * h * total_ren;

  for (int t = 0; t < T; ++t) {
    b.add_row({{lay.level + t + 1, 1.0},
               {lay.level + t, -1.0},
               {lay.charge + t, -tech.charge_eff * h},
               {lay.discharge + t, h / tech.discharge_eff}},
              RowKind::Equal, 0.0);
  }
  b.add_row({{lay.level, 1.0}, {lay.level + T, -1.0}}, RowKind::Equal, 0.0);
  for (int t = 0; t < T; ++t) {
    const std::vector<std::pair<int, double>> draw{
        {lay.renewable_used + t, -1.0}, {lay.discharge + t, -1.0}, {lay.charge + t, 1.0}};
    b.add_row(draw, RowKind::GreaterEqual, -user.load[t]);
    auto capped = draw;
    capped.emplace_back(lay.peak, -1.0);
    b.add_row(capped, RowKind::LessEqual, -user.load[t]);
  }
  for (int t = 1; t <= T; ++t) {
    if (variable_capacity) {
      dm.level_rows.push_back(
          b.add_row({{lay.level + t, 1.0}, {lay.capacity, -1.0}}, RowKind::LessEqual, 0.0));
    } else {
      dm.level_rows.push_back(b.add_row({{lay.level + t, 1.0}}, RowKind::LessEqual, fixed_capacity));
    }
  }
  return dm;
}

UserDecision extract(const UserLayout& lay, const Eigen::VectorXd& x, double capacity,
                     const UserSlice& user, const Tariff& tariff) {
  const int T = lay.slots;
  UserDecision d;
  d.capacity = capacity;
  d.renewable_used.resize(T);
  d.charge.resize(T);
  d.discharge.resize(T);
  d.level.resize(T + 1);
  for (int t = 0; t < T; ++t) {
    d.renewable_used[t] = std::clamp(x[lay.renewable_used + t], 0.0, user.renewable[t]);
    d.charge[t] = std::max(x[lay.charge + t], 0.0);
    d.discharge[t] = std::max(x[lay.discharge + t], 0.0);
  }
  for (int t = 0; t <= T; ++t) d.level[t] = x[lay.level + t];
  const Series grid = power_balance(user.load, d.renewable_used, d.charge, d.discharge);
  d.peak = std::max(0.0, *std::max_element(grid.begin(), grid.end()));
  d.bill_component = bill_component(d, user, tariff);
  return d;
}

LpSolution require_optimal(LpSolution sol, const char* what) {
  if (sol.status != SolveStatus::Optimal)
    throw NumericalFailure(std::string(what) + ": solver returned " + to_string(sol.status));
  return sol;
}

}  // namespace

UserProblem build_user_problem(const UserSlice& user, const Tariff& tariff,
                               const StorageTech& tech, double price, double penalty) {
  if (!(price >= 0.0) || !std::isfinite(price)) throw DomainError("price must be nonnegative");
  if (!(penalty >= 0.0) || !std::isfinite(penalty)) throw DomainError("penalty must be nonnegative");
  DispatchModel dm = dispatch_model(user, tariff, tech, price, true, 0.0);
  UserProblem p;
  p.qp.lp = dm.builder.build();
  const auto n = p.qp.lp.cols();
  p.qp.Q = Eigen::MatrixXd::Zero(n, n);
  for (int t = 0; t < dm.layout.slots; ++t) {
    p.qp.Q(dm.layout.charge + t, dm.layout.charge + t) = 2.0 * penalty;
    p.qp.Q(dm.layout.discharge + t, dm.layout.discharge + t) = 2.0 * penalty;
  }
  p.layout = dm.layout;
  p.price = price;
  p.penalty = penalty;
  p.constant = dm.constant;
  p.load.assign(user.load.begin(), user.load.end());
  p.renewable.assign(user.renewable.begin(), user.renewable.end());
  p.grid = user.grid;
  p.tariff = tariff;
  return p;
}

UserDecision solve_user(const UserProblem& p, LpSolution* raw) {
  if (p.price <= 0.0)
    throw UnboundedCapacityError("free capacity makes the purchase unbounded; price must be > 0");
  LpSolution sol = p.penalty > 0.0 ? solve_qp(p.qp) : solve_lp(p.qp.lp);
  sol = require_optimal(std::move(sol), "user problem");
  const UserSlice user{p.load, p.renewable, p.grid};
  UserDecision d = extract(p.layout, sol.x, sol.x[p.layout.capacity], user, p.tariff);
  if (raw != nullptr) *raw = std::move(sol);
  return d;
}

double ValueFunction::operator()(double capacity) const {
  if (capacity < 0.0) throw DomainError("capacity must be nonnegative");
  double v = value_at_zero;
  for (std::size_t k = 0; k < breakpoints.size(); ++k) {
    if (capacity <= breakpoints[k]) break;
    const double end = k + 1 < breakpoints.size() ? breakpoints[k + 1] : kInfinity;
    v += slopes[k] * (std::min(capacity, end) - breakpoints[k]);
  }
  return v;
}

ValueFunction compute_value_function(const UserSlice& user, const Tariff& tariff,
                                     const StorageTech& tech) {
  DispatchModel dm = dispatch_model(user, tariff, tech, 0.0, false, 0.0);
  const LinearProgram lp = dm.builder.build();
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(lp.rows());
  for (int r : dm.level_rows) dir[r] = 1.0;
  const ParametricRay ray = parametric_rhs_ray(lp, dir);
  if (!std::isinf(ray.domain_end)) throw NumericalFailure("value function domain ends early");

  ValueFunction f;
  f.value_at_zero = ray.value_at_zero + dm.constant;
  for (std::size_t k = 0; k < ray.points.size(); ++k) {
    double slope = ray.slopes[k];
    if (std::abs(slope) <= kSlopeMerge) slope = 0.0;
    if (!f.slopes.empty() && std::abs(slope - f.slopes.back()) <= kSlopeMerge) continue;
    if (!f.breakpoints.empty() && ray.points[k] - f.breakpoints.back() <= kCapacityMerge) {
      f.slopes.back() = slope;
      continue;
    }
    f.breakpoints.push_back(ray.points[k]);
    f.slopes.push_back(slope);
  }
  if (f.slopes.back() != 0.0)
    throw NumericalFailure("value function does not flatten out; terminal slope " +
                           std::to_string(f.slopes.back()));
  return f;
}

std::size_t ThresholdProfile::interval(double price) const {
  if (!(price > 0.0)) throw DomainError("price must be positive");
  std::size_t k = 0;
  for (std::size_t j = 0; j < prices.size(); ++j) {
    if (std::abs(price - prices[j]) <= kPriceTol) {
      const double hi = j == 0 ? kInfinity : capacities[j - 1];
      throw AmbiguousPriceError("price " + std::to_string(price) + " sits on a threshold",
                                capacities[j], hi);
    }
    if (prices[j] < price) k = j;
  }
  return k;
}

ThresholdProfile compute_thresholds(const UserSlice& user, const Tariff& tariff,
                                    const StorageTech& tech) {
  const ValueFunction f = compute_value_function(user, tariff, tech);
  ThresholdProfile prof;
  const std::size_t K = f.breakpoints.size();
  for (std::size_t k = 0; k < K; ++k) {
    prof.prices.push_back(-f.slopes[K - 1 - k]);
    prof.capacities.push_back(f.breakpoints[K - 1 - k]);
  }
  prof.prices.front() = 0.0;
  return prof;
}

void attach_limiting_dispatch(ThresholdProfile& profile, const UserSlice& user,
                              const Tariff& tariff, const StorageTech& tech) {
  profile.dispatch.clear();
  for (double x : profile.capacities)
    profile.dispatch.push_back(limiting_dispatch(user, tariff, tech, x));
}

double optimal_capacity(const ThresholdProfile& profile, double price) {
  return profile.capacities[profile.interval(price)];
}

UserDecision limiting_dispatch(const UserSlice& user, const Tariff& tariff,
                               const StorageTech& tech, double capacity) {
  if (!(capacity >= 0.0) || !std::isfinite(capacity))
    throw DomainError("capacity must be finite and nonnegative");
  DispatchModel dm = dispatch_model(user, tariff, tech, 0.0, false, capacity);
  const UserLayout lay = dm.layout;
  const LinearProgram v_lp = dm.builder.build();
  const LpSolution v = require_optimal(solve_lp(v_lp), "bill minimisation");

  // Among bill-minimal dispatches pick the one with least squared charge and discharge.
  std::vector<std::pair<int, double>> bill_row;
  for (int j = 0; j < v_lp.cols(); ++j)
    if (v_lp.c[j] != 0.0) bill_row.emplace_back(j, v_lp.c[j]);
  const double cap = v.objective + kBillSlack * (1.0 + std::abs(v.objective));
  dm.builder.add_row(bill_row, RowKind::LessEqual, cap);
  for (int j = 0; j < dm.builder.variable_count(); ++j) dm.builder.set_cost(j, 0.0);
  QuadraticProgram cd;
  cd.lp = dm.builder.build();
  cd.Q = Eigen::MatrixXd::Zero(cd.lp.cols(), cd.lp.cols());
  for (int t = 0; t < lay.slots; ++t) {
    cd.Q(lay.charge + t, lay.charge + t) = 2.0;
    cd.Q(lay.discharge + t, lay.discharge + t) = 2.0;
  }
  const LpSolution sol = require_optimal(solve_qp(cd), "least-throughput dispatch");
  return extract(lay, sol.x, capacity, user, tariff);
}

}  // namespace vess
