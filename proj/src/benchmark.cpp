#include "vess/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vess/errors.hpp"
#include "vess/lp.hpp"

namespace vess {

StoragePrice production_price(const StorageTech& tech) {
  return {"production", tech.capacity_cost, tech.power_cost};
}

StoragePrice retail_price(const StorageTech& tech, double capacity_markup, double power_markup) {
  if (!(capacity_markup >= 0.0) || !(power_markup >= 0.0))
    throw DomainError("retail markups must be nonnegative");
  return {"retail", capacity_markup * tech.capacity_cost, power_markup * tech.power_cost};
}

BenchmarkResult solve_benchmark(const ScenarioSet& set, std::size_t user, const Tariff& tariff,
                                const StorageTech& tech, const StoragePrice& price) {
  set.validate();
  tariff.validate();
  tech.validate();
  if (user >= set.user_count()) throw DimensionError("user index out of range");
  if (!(price.capacity >= 0.0) || !(price.power >= 0.0))
    throw DomainError("storage prices must be nonnegative");
  const int T = set.grid.slots;
  const double h = set.grid.slot_hours;
  const double k = tech.recovery_factor;

  LpBuilder b;
  const int x = b.add_variable(k * price.capacity);
  const int p = b.add_variable(k * price.power);
  struct Cols {
    int peak, ru, ch, dis, e;
  };
  std::vector<Cols> cols;
  double constant = 0.0;
  for (const auto& sc : set.scenarios) {
    const double rho = sc.probability;
    const Series& L = sc.load[user];
    const Series& R = sc.renewable[user];
    Cols c;
    c.peak = b.add_variable(rho * tariff.peak_price);
    c.ru = b.variable_count();
    for (int t = 0; t < T; ++t)
      b.add_variable(rho * h * (tariff.feed_in_price - tariff.energy_price), 0.0, R[t]);
    c.ch = b.variable_count();
    for (int t = 0; t < T; ++t)
      b.add_variable(rho * h * (tariff.energy_price + tech.operation_cost), 0.0, kInfinity);
    c.dis = b.variable_count();
    for (int t = 0; t < T; ++t)
      b.add_variable(rho * h * (tech.operation_cost - tariff.energy_price), 0.0, kInfinity);
    c.e = b.variable_count();
    for (int t = 0; t <= T; ++t) b.add_variable(0.0);
    constant += rho * h *
                (tariff.energy_price * std::accumulate(L.begin(), L.end(), 0.0) -
                 tariff.feed_in_price * std::accumulate(R.begin(), R.end(), 0.0));

    for (int t = 0; t < T; ++t) {
      b.add_row({{c.e + t + 1, 1.0},
                 {c.e + t, -1.0},
                 {c.ch + t, -tech.charge_eff * h},
                 {c.dis + t, h / tech.discharge_eff}},
                RowKind::Equal, 0.0);
      const std::vector<std::pair<int, double>> draw{
          {c.ru + t, -1.0}, {c.dis + t, -1.0}, {c.ch + t, 1.0}};
      b.add_row(draw, RowKind::GreaterEqual, -L[t]);
      auto capped = draw;
      capped.emplace_back(c.peak, -1.0);
      b.add_row(capped, RowKind::LessEqual, -L[t]);
      b.add_row({{c.ch + t, 1.0}, {p, -1.0}}, RowKind::LessEqual, 0.0);
      b.add_row({{c.dis + t, 1.0}, {p, -1.0}}, RowKind::LessEqual, 0.0);
    }
    b.add_row({{c.e, 1.0}, {c.e + T, -1.0}}, RowKind::Equal, 0.0);
    for (int t = 1; t <= T; ++t) {
      b.add_row({{c.e + t, 1.0}, {x, -tech.level_min}}, RowKind::GreaterEqual, 0.0);
      b.add_row({{c.e + t, 1.0}, {x, -tech.level_max}}, RowKind::LessEqual, 0.0);
    }
    cols.push_back(c);
  }

  const LpSolution sol = solve_lp(b.build());
  if (sol.status != SolveStatus::Optimal)
    throw NumericalFailure(std::string("benchmark: solver returned ") + to_string(sol.status));

  BenchmarkResult r;
  r.user_id = set.users[user];
  r.preset = price.name;
  r.capacity = std::max(sol.x[x], 0.0);
  r.power = std::max(sol.x[p], 0.0);
  r.capital_cost = k * (price.capacity * r.capacity + price.power * r.power);
  for (std::size_t w = 0; w < set.scenario_count(); ++w) {
    const Cols& c = cols[w];
    const UserSlice u = slice(set, w, user);
    UserDecision d;
    d.capacity = r.capacity;
    d.renewable_used.resize(T);
    d.charge.resize(T);
    d.discharge.resize(T);
    d.level.resize(T + 1);
    double throughput = 0.0;
    for (int t = 0; t < T; ++t) {
      d.renewable_used[t] = std::clamp(sol.x[c.ru + t], 0.0, u.renewable[t]);
      d.charge[t] = std::max(sol.x[c.ch + t], 0.0);
      d.discharge[t] = std::max(sol.x[c.dis + t], 0.0);
      throughput += d.charge[t] + d.discharge[t];
    }
    for (int t = 0; t <= T; ++t) d.level[t] = sol.x[c.e + t];
    const Series g = power_balance(u.load, d.renewable_used, d.charge, d.discharge);
    d.peak = std::max(0.0, *std::max_element(g.begin(), g.end()));
    d.bill_component = bill_component(d, u, tariff);
    const double rho = set.scenarios[w].probability;
    r.bill += rho * d.bill_component;
    r.operation_cost += rho * h * tech.operation_cost * throughput;
    r.dispatch.push_back(std::move(d));
  }
  r.expected_cost = r.capital_cost + r.bill + r.operation_cost;
  const double scale = 1.0 + std::abs(r.expected_cost);
  if (std::abs(r.expected_cost - (sol.objective + constant)) > 1e-6 * scale)
    throw NumericalFailure("benchmark cost decomposition does not match the solver objective");
  return r;
}

}  // namespace vess
