#include "vess/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vess/errors.hpp"

namespace vess {

namespace {

constexpr double kZeroRateCutoff = 1e-8;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DimensionError(std::string("length mismatch: ") + what);
}

}  // namespace

void TimeGrid::validate() const {
  if (slots < 1) throw DomainError("time grid needs at least one slot");
  if (!(slot_hours > 0.0) || !std::isfinite(slot_hours))
    throw DomainError("slot_hours must be positive");
}

void Tariff::validate() const {
  require_finite(energy_price, "energy price");
  require_finite(peak_price, "peak price");
  require_finite(feed_in_price, "feed-in price");
  if (feed_in_price < 0.0) throw DomainError("feed-in price must be nonnegative");
  if (!(feed_in_price < energy_price))
    throw DomainError("feed-in price must be below the energy price");
  if (peak_price < 0.0) throw DomainError("peak price must be nonnegative");
}

void StorageTech::validate() const {
  for (double eff : {charge_eff, discharge_eff, agg_charge_eff, agg_discharge_eff}) {
    if (!(eff > 0.0 && eff <= 1.0)) throw DomainError("efficiencies must lie in (0,1]");
  }
  if (!(level_min >= 0.0 && level_min < level_max && level_max <= 1.0))
    throw DomainError("level bounds must satisfy 0 <= min < max <= 1");
  for (double c : {capacity_cost, power_cost, operation_cost, extra_charge_cost,
                   extra_discharge_cost, recovery_factor}) {
    require_finite(c, "cost coefficient");
    if (c < 0.0) throw DomainError("cost coefficients must be nonnegative");
  }
}

void ScenarioSet::validate() const {
  grid.validate();
  if (users.empty()) throw ValidationError("scenario set has no users");
  if (scenarios.empty()) throw ValidationError("scenario set has no scenarios");
  double total = 0.0;
  for (const auto& sc : scenarios) {
    if (!(sc.probability >= 0.0) || !std::isfinite(sc.probability))
      throw ValidationError("scenario " + sc.id + " has an invalid probability");
    total += sc.probability;
    if (sc.load.size() != users.size() || sc.renewable.size() != users.size())
      throw DimensionError("scenario " + sc.id + " does not cover every user");
    for (std::size_t i = 0; i < users.size(); ++i) {
      if (sc.load[i].size() != static_cast<std::size_t>(grid.slots) ||
          sc.renewable[i].size() != static_cast<std::size_t>(grid.slots))
        throw DimensionError("scenario " + sc.id + ", user " + users[i] + ": series length");
      for (std::size_t t = 0; t < sc.load[i].size(); ++t) {
        if (!(sc.load[i][t] >= 0.0) || !(sc.renewable[i][t] >= 0.0) ||
            !std::isfinite(sc.load[i][t]) || !std::isfinite(sc.renewable[i][t]))
          throw DomainError("scenario " + sc.id + ", user " + users[i] +
                            ": loads and renewables must be finite and nonnegative");
      }
    }
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ValidationError("scenario probabilities sum to " + std::to_string(total));
}

UserSlice slice(const ScenarioSet& set, std::size_t scenario, std::size_t user) {
  const auto& sc = set.scenarios.at(scenario);
  return UserSlice{sc.load.at(user), sc.renewable.at(user), set.grid};
}

Series power_balance(std::span<const double> load, std::span<const double> renewable_used,
                     std::span<const double> charge, std::span<const double> discharge) {
  require_same_length(load.size(), renewable_used.size(), "renewable_used");
  require_same_length(load.size(), charge.size(), "charge");
  require_same_length(load.size(), discharge.size(), "discharge");
  Series grid(load.size());
  for (std::size_t t = 0; t < load.size(); ++t)
    grid[t] = load[t] - renewable_used[t] - discharge[t] + charge[t];
  return grid;
}

double electricity_bill(std::span<const double> grid_draw, const Tariff& tariff,
                        double slot_hours) {
  if (grid_draw.empty()) throw DimensionError("empty grid draw series");
  double energy = 0.0;
  double peak = 0.0;
  for (double g : grid_draw) {
    if (g < -1e-9) throw DomainError("negative grid draw " + std::to_string(g));
    g = std::max(g, 0.0);
    energy += g * slot_hours;
    peak = std::max(peak, g);
  }
  return tariff.energy_price * energy + tariff.peak_price * peak;
}

double renewable_revenue(std::span<const double> renewable, std::span<const double> renewable_used,
                         const Tariff& tariff, double slot_hours) {
  require_same_length(renewable.size(), renewable_used.size(), "renewable_used");
  double sold = 0.0;
  for (std::size_t t = 0; t < renewable.size(); ++t) {
    if (renewable_used[t] > renewable[t] + 1e-9 || renewable_used[t] < -1e-9)
      throw DomainError("self-used renewable outside [0, available]");
    sold += (renewable[t] - renewable_used[t]) * slot_hours;
  }
  return tariff.feed_in_price * sold;
}

double bill_component(const UserDecision& d, const UserSlice& user, const Tariff& tariff) {
  const Series grid = power_balance(user.load, d.renewable_used, d.charge, d.discharge);
  return electricity_bill(grid, tariff, user.grid.slot_hours) -
         renewable_revenue(user.renewable, d.renewable_used, tariff, user.grid.slot_hours);
}

double user_net_cost(const UserDecision& d, const UserSlice& user, const Tariff& tariff,
                     double price) {
  return price * d.capacity + bill_component(d, user, tariff);
}

double capital_recovery_factor(double rate, double years, double days_per_year) {
  if (!(rate >= 0.0) || !(years >= 1.0) || !(days_per_year >= 1.0))
    throw DomainError("capital recovery factor needs r >= 0, y >= 1, Y_d >= 1");
  // Rates this small are indistinguishable from zero for any amortisation horizon in use.
  if (rate < kZeroRateCutoff) return 1.0 / (years * days_per_year);
  const double growth_minus_one = std::expm1(years * std::log1p(rate));
  const double annuity = rate * (1.0 + growth_minus_one) / growth_minus_one;
  return annuity / days_per_year;
}

double daily_peak_price(double monthly_price, double monthly_peak,
                        std::span<const double> daily_peaks) {
  double total = 0.0;
  for (double p : daily_peaks) total += p;
  if (!(total > 0.0)) throw DomainError("daily peaks must have a positive sum");
  return monthly_price * monthly_peak / total;
}

double daily_peak_price(double monthly_price, int days_in_month) {
  if (days_in_month < 1) throw DomainError("days in month must be positive");
  return monthly_price / days_in_month;
}

double DecisionResiduals::worst() const {
  return std::max({dynamics, periodicity, level_bounds, sign, renewable_bound, grid_negative,
                   peak});
}

DecisionResiduals check_decision(const UserDecision& d, const UserSlice& user,
                                 const StorageTech& tech) {
  const std::size_t T = user.load.size();
  if (d.charge.size() != T || d.discharge.size() != T || d.renewable_used.size() != T ||
      d.level.size() != T + 1)
    throw DimensionError("decision series do not match the time grid");
  const double h = user.grid.slot_hours;
  DecisionResiduals r;
  for (std::size_t t = 0; t < T; ++t) {
    const double step = d.level[t + 1] - d.level[t] - tech.charge_eff * d.charge[t] * h +
                        d.discharge[t] * h / tech.discharge_eff;
    r.dynamics = std::max(r.dynamics, std::abs(step));
    r.sign = std::max({r.sign, -d.charge[t], -d.discharge[t], -d.renewable_used[t]});
    r.renewable_bound = std::max(r.renewable_bound, d.renewable_used[t] - user.renewable[t]);
    const double g = user.load[t] - d.renewable_used[t] - d.discharge[t] + d.charge[t];
    r.grid_negative = std::max(r.grid_negative, -g);
    r.peak = std::max(r.peak, g - d.peak);
  }
  for (double e : d.level)
    r.level_bounds = std::max({r.level_bounds, -e, e - d.capacity});
  r.periodicity = std::abs(d.level.front() - d.level.back());
  return r;
}

UserDecision idle_decision(const UserSlice& user, const Tariff& tariff) {
  const std::size_t T = user.load.size();
  UserDecision d;
  d.charge.assign(T, 0.0);
  d.discharge.assign(T, 0.0);
  d.level.assign(T + 1, 0.0);
  d.renewable_used.resize(T);
  for (std::size_t t = 0; t < T; ++t)
    d.renewable_used[t] = std::min(user.load[t], user.renewable[t]);
  const Series grid = power_balance(user.load, d.renewable_used, d.charge, d.discharge);
  d.peak = *std::max_element(grid.begin(), grid.end());
  d.bill_component = bill_component(d, user, tariff);
  return d;
}

}  // namespace vess
