#include "vess/aggregator.hpp"

#include <algorithm>
#include <cmath>

#include "vess/errors.hpp"

namespace vess {

namespace {

constexpr double kUnionTol = 3e-9;  // relative to 1 + q
constexpr double kZeroProfit = 1e-9;
constexpr int kMaxPenaltySteps = 20;

bool near(double a, double b) { return std::abs(a - b) <= kUnionTol * (1.0 + std::abs(b)); }

void reprice(SystemEvaluation& ev, double price) {
  ev.price = price;
  ev.revenue = price * ev.sold;
  ev.profit = ev.revenue - ev.allocation.cost;
}

}  // namespace

NetDemand aggregate_net(std::span<const UserDecision> decisions) {
  NetDemand net;
  if (decisions.empty()) return net;
  const std::size_t T = decisions.front().charge.size();
  Series balance(T, 0.0);
  for (const auto& d : decisions) {
    if (d.charge.size() != T || d.discharge.size() != T)
      throw DimensionError("user dispatch lengths differ");
    for (std::size_t t = 0; t < T; ++t) balance[t] += d.charge[t] - d.discharge[t];
  }
  net.charge.resize(T);
  net.discharge.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    net.charge[t] = std::max(balance[t], 0.0);
    net.discharge[t] = std::max(-balance[t], 0.0);
  }
  return net;
}

CostAllocation solve_cost_allocation(const AggregateDemand& demand, const StorageTech& tech,
                                     std::span<const double> probabilities, const TimeGrid& grid) {
  tech.validate();
  grid.validate();
  if (demand.size() != probabilities.size())
    throw DimensionError("one probability per scenario is required");
  const int T = grid.slots;
  const double h = grid.slot_hours;
  const double k = tech.recovery_factor;
  const double swing = tech.level_max - tech.level_min;

  // Storage-served amounts only exist where there is demand; additional resources take the rest.
  LpBuilder b;
  const int X = b.add_variable(k * tech.capacity_cost);
  const int P = b.add_variable(k * tech.power_cost);
  struct Cols {
    std::vector<int> charge, discharge;  // -1 where the slot has no such demand
    int level = -1;                      // T columns, level[t] for t = 1..T, shifted by gamma_min*X
  };
  std::vector<Cols> cols(demand.size());

  for (std::size_t w = 0; w < demand.size(); ++w) {
    const NetDemand& d = demand[w];
    if (static_cast<int>(d.charge.size()) != T || static_cast<int>(d.discharge.size()) != T)
      throw DimensionError("aggregate demand does not match the time grid");
    const double rho = probabilities[w];
    Cols& c = cols[w];
    c.charge.assign(T, -1);
    c.discharge.assign(T, -1);
    bool any = false;
    for (int t = 0; t < T; ++t) {
      if (d.charge[t] < 0.0 || d.discharge[t] < 0.0)
        throw DomainError("aggregate demand must be nonnegative");
      if (d.charge[t] > 0.0) {
        c.charge[t] = b.add_variable(rho * h * (tech.operation_cost - tech.extra_charge_cost), 0.0,
                                     d.charge[t]);
        any = true;
      }
      if (d.discharge[t] > 0.0) {
        c.discharge[t] = b.add_variable(
            rho * h * (tech.operation_cost - tech.extra_discharge_cost), 0.0, d.discharge[t]);
        any = true;
      }
    }
    if (!any) continue;
    c.level = b.variable_count();
    for (int t = 0; t < T; ++t) b.add_variable(0.0);
    for (int t = 0; t < T; ++t) {
      const int prev = c.level + (t == 0 ? T - 1 : t - 1);
      std::vector<std::pair<int, double>> row{{c.level + t, 1.0}};
      if (T > 1) row.emplace_back(prev, -1.0);
      if (c.charge[t] >= 0) {
        row.emplace_back(c.charge[t], -tech.agg_charge_eff * h);
        b.add_row({{c.charge[t], 1.0}, {P, -1.0}}, RowKind::LessEqual, 0.0);
      }
      if (c.discharge[t] >= 0) {
        row.emplace_back(c.discharge[t], h / tech.agg_discharge_eff);
        b.add_row({{c.discharge[t], 1.0}, {P, -1.0}}, RowKind::LessEqual, 0.0);
      }
      b.add_row(row, RowKind::Equal, 0.0);
      b.add_row({{c.level + t, 1.0}, {X, -swing}}, RowKind::LessEqual, 0.0);
    }
  }

  CostAllocation out;
  out.scenarios.resize(demand.size());
  LpSolution sol;
  if (b.row_count() > 0) {
    sol = solve_lp(b.build());
    if (sol.status != SolveStatus::Optimal)
      throw NumericalFailure(std::string("cost allocation: solver returned ") +
                             to_string(sol.status));
  } else {
    sol.x = Eigen::VectorXd::Zero(b.variable_count());
  }
  out.capacity = std::max(sol.x[X], 0.0);
  out.power = std::max(sol.x[P], 0.0);
  out.capital_cost = k * (tech.capacity_cost * out.capacity + tech.power_cost * out.power);

  for (std::size_t w = 0; w < demand.size(); ++w) {
    const NetDemand& d = demand[w];
    const Cols& c = cols[w];
    ScenarioAllocation& a = out.scenarios[w];
    a.storage_charge.assign(T, 0.0);
    a.storage_discharge.assign(T, 0.0);
    a.level.assign(T + 1, tech.level_min * out.capacity);
    for (int t = 0; t < T; ++t) {
      if (c.charge[t] >= 0) a.storage_charge[t] = std::clamp(sol.x[c.charge[t]], 0.0, d.charge[t]);
      if (c.discharge[t] >= 0)
        a.storage_discharge[t] = std::clamp(sol.x[c.discharge[t]], 0.0, d.discharge[t]);
      if (c.level >= 0) a.level[t + 1] += sol.x[c.level + t];
    }
    a.level[0] = a.level[T];
    a.extra_charge.resize(T);
    a.extra_discharge.resize(T);
    double throughput = 0.0;
    double extra = 0.0;
    for (int t = 0; t < T; ++t) {
      a.extra_charge[t] = d.charge[t] - a.storage_charge[t];
      a.extra_discharge[t] = d.discharge[t] - a.storage_discharge[t];
      throughput += a.storage_charge[t] + a.storage_discharge[t];
      extra += tech.extra_charge_cost * a.extra_charge[t] +
               tech.extra_discharge_cost * a.extra_discharge[t];
    }
    out.operation_cost += probabilities[w] * h * tech.operation_cost * throughput;
    out.extra_cost += probabilities[w] * h * extra;
  }
  out.cost = out.capital_cost + out.operation_cost + out.extra_cost;
  return out;
}

double expected_revenue(double price, const std::vector<std::vector<double>>& capacities,
                        std::span<const double> probabilities) {
  if (!(price >= 0.0)) throw DomainError("price must be nonnegative");
  if (capacities.size() != probabilities.size())
    throw DimensionError("one probability per scenario is required");
  double sold = 0.0;
  for (std::size_t w = 0; w < capacities.size(); ++w) {
    double total = 0.0;
    for (double x : capacities[w]) total += x;
    sold += probabilities[w] * total;
  }
  return price * sold;
}

double SystemEvaluation::user_cost(std::size_t user) const {
  return price * user_capacity.at(user) + user_bill.at(user);
}

const char* to_string(LnpCase c) {
  switch (c) {
    case LnpCase::Interior: return "case1";
    case LnpCase::LeftZero: return "case2";
    case LnpCase::RightLimit: return "case3";
  }
  return "unknown";
}

Aggregator::Aggregator(SystemModel model) : model_(std::move(model)) {
  model_.scenarios.validate();
  model_.tariff.validate();
  model_.tech.validate();
  const auto& set = model_.scenarios;
  profiles_.resize(set.scenario_count());
  std::vector<double> all{0.0};
  for (std::size_t w = 0; w < set.scenario_count(); ++w) {
    for (std::size_t i = 0; i < set.user_count(); ++i) {
      const UserSlice u = slice(set, w, i);
      ThresholdProfile prof = compute_thresholds(u, model_.tariff, model_.tech);
      prof.user_id = set.users[i];
      prof.scenario_id = set.scenarios[w].id;
      attach_limiting_dispatch(prof, u, model_.tariff, model_.tech);
      all.insert(all.end(), prof.prices.begin() + 1, prof.prices.end());
      profiles_[w].push_back(std::move(prof));
    }
  }
  std::sort(all.begin(), all.end());
  for (double q : all)
    if (union_.empty() || !near(q, union_.back())) union_.push_back(q);
  cache_.resize(union_.size());
}

const ThresholdProfile& Aggregator::profile(std::size_t scenario, std::size_t user) const {
  return profiles_.at(scenario).at(user);
}

std::vector<double> Aggregator::probabilities() const {
  std::vector<double> p;
  for (const auto& sc : model_.scenarios.scenarios) p.push_back(sc.probability);
  return p;
}

SystemEvaluation Aggregator::evaluate(std::vector<std::vector<UserDecision>> decisions,
                                      double price, double penalty) const {
  const auto& set = model_.scenarios;
  const std::vector<double> rho = probabilities();
  SystemEvaluation ev;
  ev.penalty = penalty;
  ev.user_capacity.assign(set.user_count(), 0.0);
  ev.user_bill.assign(set.user_count(), 0.0);
  AggregateDemand demand;
  for (std::size_t w = 0; w < decisions.size(); ++w) {
    for (std::size_t i = 0; i < decisions[w].size(); ++i) {
      ev.user_capacity[i] += rho[w] * decisions[w][i].capacity;
      ev.user_bill[i] += rho[w] * decisions[w][i].bill_component;
      ev.sold += rho[w] * decisions[w][i].capacity;
    }
    demand.push_back(aggregate_net(decisions[w]));
  }
  ev.allocation = solve_cost_allocation(demand, model_.tech, rho, set.grid);
  ev.decisions = std::move(decisions);
  reprice(ev, price);
  return ev;
}

SystemEvaluation Aggregator::communication_unit(double price, double penalty) const {
  if (!(price > 0.0)) throw DomainError("price must be positive");
  if (!(penalty > 0.0)) throw DomainError("penalty must be positive");
  const auto& set = model_.scenarios;
  std::vector<std::vector<UserDecision>> decisions(set.scenario_count());
  for (std::size_t w = 0; w < set.scenario_count(); ++w)
    for (std::size_t i = 0; i < set.user_count(); ++i)
      decisions[w].push_back(solve_user(
          build_user_problem(slice(set, w, i), model_.tariff, model_.tech, price, penalty)));
  return evaluate(std::move(decisions), price, penalty);
}

std::size_t Aggregator::locate(double price) const {
  if (!(price > 0.0) || !std::isfinite(price)) throw DomainError("price must be positive");
  std::size_t k = 0;
  for (std::size_t j = 1; j < union_.size(); ++j) {
    if (near(price, union_[j])) {
      const double lo = interval_sold(j);
      const double hi = interval_sold(j - 1);
      throw AmbiguousPriceError("price sits on a threshold of the union set", lo, hi);
    }
    if (union_[j] < price) k = j;
  }
  return k;
}

const SystemEvaluation& Aggregator::interval(std::size_t k) const {
  if (k >= union_.size()) throw DomainError("threshold interval index out of range");
  if (!cache_[k]) {
    const double mid = k + 1 < union_.size() ? 0.5 * (union_[k] + union_[k + 1])
                                             : 2.0 * union_[k] + 1.0;
    const auto& set = model_.scenarios;
    std::vector<std::vector<UserDecision>> decisions(set.scenario_count());
    for (std::size_t w = 0; w < set.scenario_count(); ++w)
      for (std::size_t i = 0; i < set.user_count(); ++i) {
        const ThresholdProfile& prof = profiles_[w][i];
        decisions[w].push_back(prof.dispatch.at(prof.interval(mid)));
      }
    cache_[k] = evaluate(std::move(decisions), mid, 0.0);
  }
  return *cache_[k];
}

double Aggregator::interval_sold(std::size_t k) const { return interval(k).sold; }

SystemEvaluation Aggregator::limiting(double price) const {
  SystemEvaluation ev = interval(locate(price));
  reprice(ev, price);
  return ev;
}

double Aggregator::limiting_profit(double price) const {
  const SystemEvaluation& ev = interval(locate(price));
  return price * ev.sold - ev.allocation.cost;
}

SystemEvaluation Aggregator::left_limit(std::size_t k) const {
  if (k == 0 || k >= union_.size()) throw DomainError("left limit needs a positive threshold");
  SystemEvaluation ev = interval(k - 1);
  reprice(ev, union_[k]);
  return ev;
}

SystemEvaluation Aggregator::right_limit(std::size_t k) const {
  SystemEvaluation ev = interval(k);
  reprice(ev, union_.at(k));
  return ev;
}

namespace {

PriceSearchResult finish(const SystemEvaluation& ev, double limit) {
  PriceSearchResult r;
  r.price = ev.price;
  r.penalty = ev.penalty;
  r.capacity = ev.allocation.capacity;
  r.power = ev.allocation.power;
  r.profit = ev.profit;
  r.revenue = ev.revenue;
  r.sold = ev.sold;
  r.limiting_profit = limit;
  r.evaluation = ev;
  return r;
}

// Shrinks the penalty by 10 per step until gap(profit) <= tol.
template <class Gap>
PriceSearchResult shrink_penalty(const Aggregator& agg, double price, double eps0, double limit,
                                 double tol, Gap gap) {
  std::vector<SearchStep> trace;
  double eps = eps0;
  for (int j = 1; j <= kMaxPenaltySteps; ++j) {
    eps /= 10.0;
    SystemEvaluation ev = agg.communication_unit(price, eps);
    const double g = gap(ev.profit);
    trace.push_back({eps, ev.profit, g});
    if (g <= tol) {
      PriceSearchResult r = finish(ev, limit);
      r.trace = std::move(trace);
      return r;
    }
  }
  throw NumericalFailure("penalty loop did not reach the requested accuracy in " +
                         std::to_string(kMaxPenaltySteps) + " steps");
}

void check_penalty(double eps0) {
  if (!(eps0 > 0.0) || !std::isfinite(eps0)) throw ValidationError("initial penalty must be > 0");
}

}  // namespace

PriceSearchResult Aggregator::search_op_price(const OpOptions& opt) const {
  if (!(opt.err1 > 0.0 && opt.err1 < 1.0) || !(opt.err2 > 0.0 && opt.err2 < 1.0))
    throw ValidationError("err1 and err2 must lie in (0, 1)");
  check_penalty(opt.initial_penalty);
  const std::size_t K = union_.size();
  if (K == 1) {
    // Nobody ever buys: the only price on offer earns nothing.
    PriceSearchResult r = finish(right_limit(0), 0.0);
    r.flagged = true;
    return r;
  }
  std::size_t m = 1;
  double best = left_limit(1).profit;
  for (std::size_t k = 2; k < K; ++k) {
    const double p = left_limit(k).profit;
    if (p > best) {
      best = p;
      m = k;
    }
  }
  const double slope = interval_sold(m - 1);
  const double lo = union_[m - 1];
  const double hi = union_[m];
  double price = hi - std::abs(best) * opt.err1 / slope;
  if (best == 0.0) price = hi - std::max(1e-7 * hi, 1e-9);
  price = std::max(price, 0.5 * (lo + hi));

  const double limit = limiting_profit(price);
  PriceSearchResult r =
      shrink_penalty(*this, price, opt.initial_penalty, limit, opt.err2, [&](double p) {
        return limit == 0.0 ? std::abs(p) : std::abs(p - limit) / std::abs(limit);
      });
  r.threshold = hi;
  r.flagged = !(best > 0.0);
  return r;
}

PriceSearchResult Aggregator::search_lnp_price(const LnpOptions& opt) const {
  if (!(opt.err3 > 0.0) || !(opt.err4 > 0.0)) throw ValidationError("err3 and err4 must be > 0");
  check_penalty(opt.initial_penalty);
  const std::size_t K = union_.size();
  double prev_right = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double q = union_[k];
    if (k > 0) {
      const double left = left_limit(k).profit;
      const double lo = union_[k - 1];
      if (left > kZeroProfit) {
        const double gap = std::max(1e-7 * q, 1e-9);
        const double price =
            std::clamp((lo * left - q * prev_right) / (left - prev_right), lo + gap, q - gap);
        const double limit = limiting_profit(price);
        PriceSearchResult r = shrink_penalty(*this, price, opt.initial_penalty, limit, opt.err4,
                                             [](double p) { return std::abs(p); });
        r.threshold = q;
        r.lnp_case = LnpCase::Interior;
        return r;
      }
      if (std::abs(left) <= kZeroProfit) {
        // Stop short of the threshold so the limiting profit sits within err3 of zero.
        const double slope = (left - prev_right) / (q - lo);
        const double price = std::max(q - 0.5 * opt.err3 / slope, 0.5 * (lo + q));
        const double limit = limiting_profit(price);
        PriceSearchResult r =
            shrink_penalty(*this, price, opt.initial_penalty, limit, opt.err4,
                           [&](double p) { return std::abs(p - limit); });
        r.threshold = q;
        r.lnp_case = LnpCase::LeftZero;
        return r;
      }
    }
    const SystemEvaluation right = right_limit(k);
    if (right.profit >= -kZeroProfit && right.sold > 0.0 && k + 1 < K) {
      const double hi = union_[k + 1];
      const double slope = (left_limit(k + 1).profit - right.profit) / (hi - q);
      const double price = std::min(q + opt.err3 / slope, 0.5 * (q + hi));
      const double limit = limiting_profit(price);
      PriceSearchResult r =
          shrink_penalty(*this, price, opt.initial_penalty, limit, opt.err4,
                         [&](double p) { return std::abs(p - limit); });
      r.threshold = q;
      r.lnp_case = LnpCase::RightLimit;
      return r;
    }
    prev_right = right.profit;
  }
  throw NoViablePriceError("profit is negative at every price where capacity sells");
}

}  // namespace vess
