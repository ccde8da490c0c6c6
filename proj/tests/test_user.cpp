#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "vess/errors.hpp"
#include "vess/user.hpp"

using namespace vess;

namespace {

double max_gap(const Series& a, const Series& b) {
  double g = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) g = std::max(g, std::abs(a[t] - b[t]));
  return g;
}

// TINY with unit efficiencies: discharging a in slot 1 and recharging a in slot 2.
double tiny_bill_by_enumeration(double capacity) {
  double best = kInfinity;
  const double top = std::min(capacity, 2.0);
  for (int k = 0; k <= 20000; ++k) {
    const double a = std::min(top, 1e-4 * k);
    best = std::min(best, 0.03 * 2.0 + 0.4 * std::max(2.0 - a, a));
  }
  return best;
}

}  // namespace

TEST_CASE("tiny value function and thresholds") {
  const ScenarioSet set = fixtures::tiny();
  const UserSlice u = slice(set, 0, 0);
  const ValueFunction f = compute_value_function(u, fixtures::tiny_tariff(), fixtures::ideal_tech());
  REQUIRE(f.breakpoints.size() == 2);
  CHECK(f.breakpoints[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(f.slopes[0] == doctest::Approx(-0.4).epsilon(1e-9));
  CHECK(f.slopes[1] == 0.0);
  for (int k = 0; k <= 30; ++k) {
    const double x = 0.1 * k;
    CHECK(f(x) == doctest::Approx(tiny_bill_by_enumeration(x)).epsilon(1e-7));
  }
  const ThresholdProfile p = compute_thresholds(u, fixtures::tiny_tariff(), fixtures::ideal_tech());
  REQUIRE(p.prices.size() == 2);
  CHECK(p.prices[0] == 0.0);
  CHECK(p.prices[1] == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(p.capacities[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p.capacities[1] == 0.0);
}

TEST_CASE("zero load has a single flat piece") {
  ScenarioSet set = fixtures::tiny();
  set.scenarios[0].load[0] = {0.0, 0.0};
  const UserSlice u = slice(set, 0, 0);
  const ThresholdProfile p = compute_thresholds(u, fixtures::tiny_tariff(), fixtures::ideal_tech());
  CHECK(p.prices == std::vector<double>{0.0});
  CHECK(p.capacities == std::vector<double>{0.0});
  const UserDecision d = solve_user(build_user_problem(u, fixtures::tiny_tariff(), fixtures::ideal_tech(), 0.1, 1e-7));
  CHECK(d.capacity == doctest::Approx(0.0).scale(1.0));
  CHECK(d.bill_component == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("doubling the load doubles the breakpoint") {
  const ScenarioSet set = fixtures::tiny(2.0);
  const ValueFunction f =
      compute_value_function(slice(set, 0, 0), fixtures::tiny_tariff(), fixtures::ideal_tech());
  REQUIRE(f.breakpoints.size() == 2);
  CHECK(f.breakpoints[1] == doctest::Approx(2.0));
  CHECK(f.slopes[0] == doctest::Approx(-0.4));
}

TEST_CASE("lossy storage shifts the threshold") {
  const ScenarioSet set = fixtures::tiny();
  StorageTech tech;
  tech.charge_eff = tech.discharge_eff = 0.95;
  const UserSlice u = slice(set, 0, 0);
  const ThresholdProfile p = compute_thresholds(u, fixtures::tiny_tariff(), tech);
  REQUIRE(p.prices.size() == 2);
  CHECK(p.prices[1] < 0.4);
  // Grid oracle at 1e-4 resolution on the independent formulation.
  double knee = -1.0;
  for (int k = 0; k <= 15000; ++k) {
    const double x = 1e-4 * k;
    if (oracles::min_bill(u, fixtures::tiny_tariff(), tech, x) -
            oracles::min_bill(u, fixtures::tiny_tariff(), tech, x + 1e-4) < 1e-12) {
      knee = x;
      break;
    }
  }
  CHECK(std::abs(p.capacities[0] - knee) <= 1e-4);
  CHECK(p.capacities[0] == doctest::Approx(0.9987).epsilon(1e-4));
  const double slope = (oracles::min_bill(u, fixtures::tiny_tariff(), tech, 0.5) -
                        oracles::min_bill(u, fixtures::tiny_tariff(), tech, 0.0)) / 0.5;
  CHECK(p.prices[1] == doctest::Approx(-slope).epsilon(1e-9));
}

TEST_CASE("optimal capacity is a step function of price") {
  const ScenarioSet set = fixtures::tiny();
  const ThresholdProfile p =
      compute_thresholds(slice(set, 0, 0), fixtures::tiny_tariff(), fixtures::ideal_tech());
  CHECK(optimal_capacity(p, 0.2) == doctest::Approx(1.0));
  CHECK(optimal_capacity(p, 0.41) == 0.0);
  CHECK(optimal_capacity(p, 50.0) == 0.0);
  try {
    optimal_capacity(p, 0.4);
    FAIL("expected an ambiguous price");
  } catch (const AmbiguousPriceError& e) {
    CHECK(e.lower() == 0.0);
    CHECK(e.upper() == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(optimal_capacity(p, 0.0), DomainError);
}

TEST_CASE("user problem construction") {
  const ScenarioSet set = fixtures::tiny();
  const UserSlice u = slice(set, 0, 0);
  CHECK_THROWS_AS(build_user_problem(u, fixtures::tiny_tariff(), fixtures::ideal_tech(), -0.1, 0.0), DomainError);
  CHECK_THROWS_AS(build_user_problem(u, fixtures::tiny_tariff(), fixtures::ideal_tech(), 0.1, -1.0), DomainError);
  const UserProblem a = build_user_problem(u, fixtures::tiny_tariff(), fixtures::ideal_tech(), 0.2, 0.0);
  const UserProblem b = build_user_problem(u, fixtures::tiny_tariff(), fixtures::ideal_tech(), 0.2, 1e-12);
  CHECK(a.qp.lp.A == b.qp.lp.A);
  CHECK(a.qp.lp.c == b.qp.lp.c);
  CHECK(a.qp.lp.b == b.qp.lp.b);
  CHECK(a.qp.Q.isZero());
  CHECK((b.qp.Q.diagonal().array() > 0).count() == 4);
  // Optimum at q=0.2 with eps=0 equals 0.66 once the constant is added back.
  LpSolution raw;
  const UserDecision d = solve_user(a, &raw);
  CHECK(raw.objective + a.constant == doctest::Approx(0.66));
  CHECK(raw.certificate.within(1e-8));
  CHECK(user_net_cost(d, u, fixtures::tiny_tariff(), 0.2) == doctest::Approx(0.66));
}

TEST_CASE("solve user on the tiny fixture") {
  const ScenarioSet set = fixtures::tiny();
  const UserSlice u = slice(set, 0, 0);
  const Tariff tf = fixtures::tiny_tariff();
  const StorageTech tech = fixtures::ideal_tech();
  const UserDecision d = solve_user(build_user_problem(u, tf, tech, 0.2, 1e-7));
  CHECK(d.capacity == doctest::Approx(1.0).epsilon(1e-6));
  const Series grid = power_balance(u.load, d.renewable_used, d.charge, d.discharge);
  CHECK(grid[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(grid[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(user_net_cost(d, u, tf, 0.2) == doctest::Approx(0.66).epsilon(1e-6));
  CHECK(check_decision(d, u, tech).worst() <= 1e-8);

  const UserDecision none = solve_user(build_user_problem(u, tf, tech, 0.5, 1e-7));
  CHECK(none.capacity == doctest::Approx(0.0).scale(1.0));
  CHECK(user_net_cost(none, u, tf, 0.5) == doctest::Approx(0.86));
  CHECK(max_gap(none.charge, {0, 0}) <= 1e-9);

  CHECK_THROWS_AS(solve_user(build_user_problem(u, tf, tech, 0.0, 1e-7)), UnboundedCapacityError);

  const UserDecision pen = solve_user(build_user_problem(u, tf, tech, 0.2, 1e-6));
  CHECK(max_gap(pen.charge, {0, 1}) <= 1e-3);
  CHECK(max_gap(pen.discharge, {1, 0}) <= 1e-3);
}

TEST_CASE("limiting dispatch") {
  const ScenarioSet set = fixtures::tiny();
  const UserSlice u = slice(set, 0, 0);
  const Tariff tf = fixtures::tiny_tariff();
  const StorageTech tech = fixtures::ideal_tech();
  const UserDecision d = limiting_dispatch(u, tf, tech, 1.0);
  CHECK(max_gap(d.charge, {0, 1}) <= 1e-8);
  CHECK(max_gap(d.discharge, {1, 0}) <= 1e-8);
  CHECK(d.peak == doctest::Approx(1.0));
  CHECK(d.bill_component == doctest::Approx(0.46));
  CHECK(check_decision(d, u, tech).worst() <= 1e-8);

  const UserDecision z = limiting_dispatch(u, tf, tech, 0.0);
  CHECK(max_gap(z.charge, {0, 0}) <= 1e-9);
  CHECK(z.bill_component == doctest::Approx(0.86));
  CHECK_THROWS_AS(limiting_dispatch(u, tf, tech, -1.0), DomainError);

  double prev = kInfinity;
  for (double eps : {1e-4, 1e-5, 1e-6}) {
    const UserDecision s = solve_user(build_user_problem(u, tf, tech, 0.2, eps));
    const double gap = std::max(max_gap(s.charge, d.charge), max_gap(s.discharge, d.discharge));
    CHECK(gap <= prev);
    prev = gap;
  }
}

TEST_CASE("random users: value function against fixed-capacity sweep") {
  std::mt19937 rng(5);
  const Tariff tf = fixtures::tiny_tariff();
  for (int trial = 0; trial < 8; ++trial) {
    const ScenarioSet set = fixtures::random_user(rng, 2 + trial % 5);
    const StorageTech tech = fixtures::random_tech(rng);
    const UserSlice u = slice(set, 0, 0);
    const ValueFunction f = compute_value_function(u, tf, tech);
    for (std::size_t k = 1; k < f.slopes.size(); ++k) CHECK(f.slopes[k] > f.slopes[k - 1]);
    CHECK(f.slopes.back() == 0.0);
    const double range = 1.25 * std::max(f.breakpoints.back(), 0.5);
    const oracles::PieceCheck c = oracles::compare_value_function(f, u, tf, tech, range);
    CHECK(c.worst_value_gap <= 1e-7);
    CHECK(c.worst_slope_gap <= 1e-6);
    CHECK(c.worst_breakpoint_gap <= 1e-4);
    CHECK(c.stray_cells == 0);
  }
}

TEST_CASE("random users: decisions satisfy the model invariants") {
  std::mt19937 rng(11);
  const Tariff tf = fixtures::tiny_tariff();
  for (int trial = 0; trial < 10; ++trial) {
    const ScenarioSet set = fixtures::random_user(rng, 4 + trial % 3);
    const StorageTech tech = fixtures::random_tech(rng);
    const UserSlice u = slice(set, 0, 0);
    ThresholdProfile p = compute_thresholds(u, tf, tech);
    attach_limiting_dispatch(p, u, tf, tech);
    for (std::size_t k = 0; k < p.capacities.size(); ++k) {
      const UserDecision& d = p.dispatch[k];
      CHECK(check_decision(d, u, tech).worst() <= 1e-8);
      double net = 0.0;
      for (std::size_t t = 0; t < d.charge.size(); ++t)
        net += tech.charge_eff * d.charge[t] - d.discharge[t] / tech.discharge_eff;
      CHECK(std::abs(net) <= 1e-8);
      const Series g = power_balance(u.load, d.renewable_used, d.charge, d.discharge);
      for (std::size_t t = 0; t < g.size(); ++t)
        CHECK(std::min(u.renewable[t] - d.renewable_used[t], g[t]) <= 1e-6);
      CHECK(d.bill_component ==
            doctest::Approx(oracles::min_bill(u, tf, tech, p.capacities[k])).epsilon(1e-7));
    }
    // Mid-interval solves land on the tabulated capacity.
    for (std::size_t k = 0; k < p.prices.size(); ++k) {
      const double hi = k + 1 < p.prices.size() ? p.prices[k + 1] : p.prices[k] + 0.2;
      const double q = 0.5 * (p.prices[k] + hi);
      const UserDecision s = solve_user(build_user_problem(u, tf, tech, q, 1e-7));
      CHECK(std::abs(s.capacity - p.capacities[k]) <= 1e-4);
    }
  }
}

TEST_CASE("penalised solutions do not depend on column order") {
  std::mt19937 rng(3);
  const Tariff tf = fixtures::tiny_tariff();
  for (int trial = 0; trial < 5; ++trial) {
    const ScenarioSet set = fixtures::random_user(rng, 6);
    const StorageTech tech = fixtures::random_tech(rng);
    const UserSlice u = slice(set, 0, 0);
    const UserProblem p = build_user_problem(u, tf, tech, 0.05, 1e-4);
    const LpSolution base = solve_qp(p.qp);
    REQUIRE(base.status == SolveStatus::Optimal);
    const auto n = p.qp.lp.cols();
    std::vector<int> perm(n);
    for (int j = 0; j < n; ++j) perm[j] = j;
    std::shuffle(perm.begin(), perm.end(), rng);
    QuadraticProgram shuffled = p.qp;
    for (int j = 0; j < n; ++j) {
      shuffled.lp.A.col(j) = p.qp.lp.A.col(perm[j]);
      shuffled.lp.c[j] = p.qp.lp.c[perm[j]];
      shuffled.lp.lower[j] = p.qp.lp.lower[perm[j]];
      shuffled.lp.upper[j] = p.qp.lp.upper[perm[j]];
      for (int k = 0; k < n; ++k) shuffled.Q(j, k) = p.qp.Q(perm[j], perm[k]);
    }
    const LpSolution other = solve_qp(shuffled);
    REQUIRE(other.status == SolveStatus::Optimal);
    double gap = 0.0;
    for (int j = 0; j < n; ++j) {
      const int orig = perm[j];
      const bool dispatch = orig >= p.layout.charge && orig < p.layout.level;
      if (dispatch) gap = std::max(gap, std::abs(other.x[j] - base.x[orig]));
    }
    CHECK(gap <= 1e-8);
    CHECK(base.certificate.within(1e-8));
    CHECK(other.certificate.within(1e-8));
  }
}
