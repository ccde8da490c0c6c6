#pragma once

// Independent reference computations used to check the library against.

#include <algorithm>
#include <cmath>
#include <vector>

#include "vess/lp.hpp"
#include "vess/model.hpp"
#include "vess/aggregator.hpp"
#include "vess/user.hpp"

namespace oracles {

// Least bill minus revenue at a fixed capacity, formulated with an explicit grid-draw column
// and a wrapped level index (no e[0] column), unlike the library's model.
inline double min_bill(const vess::UserSlice& u, const vess::Tariff& tf, const vess::StorageTech& tech,
                       double capacity) {
  using vess::RowKind;
  const int T = static_cast<int>(u.load.size());
  const double h = u.grid.slot_hours;
  vess::LpBuilder b;
  std::vector<int> ru(T), ch(T), dis(T), g(T), e(T);
  const int pm = b.add_variable(tf.peak_price);
  double sold_all = 0.0;
  for (int t = 0; t < T; ++t) {
    ru[t] = b.add_variable(tf.feed_in_price * h, 0.0, u.renewable[t]);
    ch[t] = b.add_variable(0.0);
    dis[t] = b.add_variable(0.0);
    g[t] = b.add_variable(tf.energy_price * h);
    e[t] = b.add_variable(0.0, 0.0, capacity);
    sold_all += tf.feed_in_price * h * u.renewable[t];
  }
  for (int t = 0; t < T; ++t) {
    b.add_row({{g[t], 1.0}, {ru[t], 1.0}, {dis[t], 1.0}, {ch[t], -1.0}}, RowKind::Equal, u.load[t]);
    b.add_row({{g[t], 1.0}, {pm, -1.0}}, RowKind::LessEqual, 0.0);
    const int prev = e[(t + T - 1) % T];
    b.add_row({{e[t], 1.0}, {prev, -1.0}, {ch[t], -tech.charge_eff * h},
               {dis[t], h / tech.discharge_eff}},
              RowKind::Equal, 0.0);
  }
  const vess::LpSolution s = vess::solve_lp(b.build());
  if (s.status != vess::SolveStatus::Optimal) return std::nan("");
  return s.objective - sold_all;
}

struct PieceCheck {
  double worst_value_gap = 0.0;
  double worst_slope_gap = 0.0;
  double worst_breakpoint_gap = 0.0;
  int stray_cells = 0;  // grid cells whose slope disagrees away from computed breakpoints
};

// Compares a value function with min_bill sampled on a grid of 1000 cells over [0, range].
inline PieceCheck compare_value_function(const vess::ValueFunction& f, const vess::UserSlice& u,
                                         const vess::Tariff& tf, const vess::StorageTech& tech,
                                         double range) {
  PieceCheck out;
  const int cells = 1000;
  const double step = range / cells;
  std::vector<double> fx(cells + 1);
  for (int k = 0; k <= cells; ++k) {
    fx[k] = min_bill(u, tf, tech, k * step);
    out.worst_value_gap = std::max(out.worst_value_gap, std::abs(f(k * step) - fx[k]));
  }
  const auto& bp = f.breakpoints;
  auto piece_of = [&](double x) {
    std::size_t k = 0;
    while (k + 1 < bp.size() && bp[k + 1] <= x) ++k;
    return k;
  };
  for (int k = 0; k < cells; ++k) {
    const double a = k * step, b = a + step;
    const std::size_t pa = piece_of(a);
    const bool split = pa + 1 < bp.size() && bp[pa + 1] < b - 1e-12;
    if (split) continue;
    const double slope = (fx[k + 1] - fx[k]) / step;
    if (std::abs(slope - f.slopes[pa]) > 1e-6) ++out.stray_cells;
  }
  // Slopes inside each piece and breakpoints from intersecting the oracle lines either side.
  std::vector<double> line_slope(bp.size()), line_at(bp.size());
  for (std::size_t k = 0; k < bp.size(); ++k) {
    const double lo = bp[k];
    const double hi = k + 1 < bp.size() ? bp[k + 1] : bp[k] + range;
    const double d = (hi - lo) / 4.0;
    const double x1 = lo + d, x2 = hi - d;
    const double f1 = min_bill(u, tf, tech, x1), f2 = min_bill(u, tf, tech, x2);
    line_slope[k] = (f2 - f1) / (x2 - x1);
    line_at[k] = f1 - line_slope[k] * x1;
    out.worst_slope_gap = std::max(out.worst_slope_gap, std::abs(line_slope[k] - f.slopes[k]));
  }
  for (std::size_t k = 1; k < bp.size(); ++k) {
    const double ds = line_slope[k] - line_slope[k - 1];
    if (std::abs(ds) < 1e-9) continue;
    const double cross = (line_at[k - 1] - line_at[k]) / ds;
    out.worst_breakpoint_gap = std::max(out.worst_breakpoint_gap, std::abs(cross - bp[k]));
  }
  return out;
}

// Cost allocation with explicit split rows, an e[0] column and level bounds as rows.
inline double cost_allocation(const vess::AggregateDemand& demand, const vess::StorageTech& tech,
                              const std::vector<double>& rho, const vess::TimeGrid& grid) {
  using vess::RowKind;
  const int T = grid.slots;
  const double h = grid.slot_hours;
  vess::LpBuilder b;
  const int X = b.add_variable(tech.recovery_factor * tech.capacity_cost);
  const int P = b.add_variable(tech.recovery_factor * tech.power_cost);
  for (std::size_t w = 0; w < demand.size(); ++w) {
    const double r = rho[w];
    std::vector<int> sc(T), sd(T), ac(T), ad(T), e(T + 1);
    for (int t = 0; t < T; ++t) {
      sc[t] = b.add_variable(r * h * tech.operation_cost);
      sd[t] = b.add_variable(r * h * tech.operation_cost);
      ac[t] = b.add_variable(r * h * tech.extra_charge_cost);
      ad[t] = b.add_variable(r * h * tech.extra_discharge_cost);
    }
    for (int t = 0; t <= T; ++t) e[t] = b.add_variable(0.0);
    for (int t = 0; t < T; ++t) {
      b.add_row({{sc[t], 1.0}, {ac[t], 1.0}}, RowKind::Equal, demand[w].charge[t]);
      b.add_row({{sd[t], 1.0}, {ad[t], 1.0}}, RowKind::Equal, demand[w].discharge[t]);
      b.add_row({{e[t + 1], 1.0}, {e[t], -1.0}, {sc[t], -tech.agg_charge_eff * h},
                 {sd[t], h / tech.agg_discharge_eff}},
                RowKind::Equal, 0.0);
      b.add_row({{sc[t], 1.0}, {P, -1.0}}, RowKind::LessEqual, 0.0);
      b.add_row({{sd[t], 1.0}, {P, -1.0}}, RowKind::LessEqual, 0.0);
    }
    for (int t = 0; t <= T; ++t) {
      b.add_row({{e[t], 1.0}, {X, -tech.level_min}}, RowKind::GreaterEqual, 0.0);
      b.add_row({{e[t], 1.0}, {X, -tech.level_max}}, RowKind::LessEqual, 0.0);
    }
    b.add_row({{e[0], 1.0}, {e[T], -1.0}}, RowKind::Equal, 0.0);
  }
  const vess::LpSolution s = vess::solve_lp(b.build());
  if (s.status != vess::SolveStatus::Optimal) return std::nan("");
  return s.objective;
}

// Cost of covering every demand with additional resources.
inline double all_additional_cost(const vess::AggregateDemand& demand, const vess::StorageTech& tech,
                                  const std::vector<double>& rho, double slot_hours) {
  double c = 0.0;
  for (std::size_t w = 0; w < demand.size(); ++w)
    for (std::size_t t = 0; t < demand[w].charge.size(); ++t)
      c += rho[w] * slot_hours *
           (tech.extra_charge_cost * demand[w].charge[t] +
            tech.extra_discharge_cost * demand[w].discharge[t]);
  return c;
}

}  // namespace oracles
