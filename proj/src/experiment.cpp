#include "vess/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "vess/errors.hpp"
#include "vess/io.hpp"

namespace vess {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_number(const std::string& v, const std::string& key, std::size_t line) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x))
    throw ParseError("key '" + key + "' expects a number, got '" + v + "'", line);
  return x;
}

int to_int(const std::string& v, const std::string& key, std::size_t line) {
  const double x = to_number(v, key, line);
  if (x != std::floor(x) || std::abs(x) > 1e9)
    throw ParseError("key '" + key + "' expects an integer, got '" + v + "'", line);
  return static_cast<int>(x);
}

double pct_drop(double before, double after) {
  return before > 0.0 ? 100.0 * (1.0 - after / before) : 0.0;
}

}  // namespace

const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::Thresholds: return "thresholds";
    case Experiment::Sweep: return "sweep";
    case Experiment::OpPrice: return "op-price";
    case Experiment::LnpPrice: return "lnp-price";
    case Experiment::Benchmark: return "benchmark";
    case Experiment::PeakReport: return "peak-report";
  }
  return "unknown";
}

Experiment parse_experiment(const std::string& name) {
  for (Experiment e : {Experiment::Thresholds, Experiment::Sweep, Experiment::OpPrice,
                       Experiment::LnpPrice, Experiment::Benchmark, Experiment::PeakReport})
    if (name == to_string(e)) return e;
  throw ValidationError("unknown experiment '" + name + "'");
}

Tariff ExperimentConfig::effective_tariff() const {
  Tariff t = tariff;
  if (monthly_peak_price) t.peak_price = daily_peak_price(*monthly_peak_price, days_in_month);
  return t;
}

StorageTech ExperimentConfig::effective_tech() const {
  StorageTech t = tech;
  t.recovery_factor = recovery_factor ? *recovery_factor
                                      : capital_recovery_factor(interest_rate, years, days_per_year);
  return t;
}

void ExperimentConfig::validate() const {
  if (scenarios.empty()) throw ValidationError("config: scenarios path is required");
  if (!std::filesystem::exists(scenarios))
    throw ValidationError("config: scenario file " + scenarios.string() + " does not exist");
  if (!(slot_hours > 0.0)) throw ValidationError("config: slot_hours must be > 0");
  auto open01 = [](double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) throw ValidationError(std::string("config: ") + name + " must lie in (0, 1)");
  };
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ValidationError(std::string("config: ") + name + " must be > 0");
  };
  open01(op.err1, "err1");
  open01(op.err2, "err2");
  positive(lnp.err3, "err3");
  positive(lnp.err4, "err4");
  positive(op.initial_penalty, "initial_penalty");
  positive(sweep_penalty, "sweep_penalty");
  if (sweep_points < 1) throw ValidationError("config: sweep_points must be >= 1");
  if (sweep_max < 0.0) throw ValidationError("config: sweep_max must be >= 0");
  if (interest_rate < 0.0 || years < 1.0 || days_per_year < 1.0)
    throw ValidationError("config: need interest_rate >= 0, years >= 1, days_per_year >= 1");
  if (days_in_month < 1) throw ValidationError("config: days_in_month must be >= 1");
  if (retail_capacity_markup < 0.0 || retail_power_markup < 0.0)
    throw ValidationError("config: retail markups must be >= 0");
  if (report_price && !(*report_price > 0.0))
    throw ValidationError("config: report_price must be > 0");
  try {
    effective_tariff().validate();
    effective_tech().validate();
  } catch (const DomainError& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  c.op = {1e-3, 1e-3, 3e-7};
  c.lnp = {1e-4, 1e-4, 3e-7};
  using Setter = std::function<void(const std::string&, const std::string&, std::size_t)>;
  auto num = [](double& field) -> Setter {
    return [&field](const std::string& v, const std::string& k, std::size_t l) {
      field = to_number(v, k, l);
    };
  };
  auto opt = [](std::optional<double>& field) -> Setter {
    return [&field](const std::string& v, const std::string& k, std::size_t l) {
      field = to_number(v, k, l);
    };
  };
  auto path = [&base_dir](std::filesystem::path& field) -> Setter {
    return [&field, &base_dir](const std::string& v, const std::string&, std::size_t) {
      const std::filesystem::path p(v);
      field = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };
  };
  double penalty = 3e-7;
  const std::map<std::string, Setter> keys{
      {"scenarios", path(c.scenarios)},
      {"out_dir", path(c.out_dir)},
      {"slot_hours", num(c.slot_hours)},
      {"energy_price", num(c.tariff.energy_price)},
      {"peak_price", num(c.tariff.peak_price)},
      {"feed_in_price", num(c.tariff.feed_in_price)},
      {"monthly_peak_price", opt(c.monthly_peak_price)},
      {"days_in_month",
       [&c](const std::string& v, const std::string& k, std::size_t l) { c.days_in_month = to_int(v, k, l); }},
      {"charge_eff", num(c.tech.charge_eff)},
      {"discharge_eff", num(c.tech.discharge_eff)},
      {"agg_charge_eff", num(c.tech.agg_charge_eff)},
      {"agg_discharge_eff", num(c.tech.agg_discharge_eff)},
      {"level_min", num(c.tech.level_min)},
      {"level_max", num(c.tech.level_max)},
      {"capacity_cost", num(c.tech.capacity_cost)},
      {"power_cost", num(c.tech.power_cost)},
      {"operation_cost", num(c.tech.operation_cost)},
      {"extra_charge_cost", num(c.tech.extra_charge_cost)},
      {"extra_discharge_cost", num(c.tech.extra_discharge_cost)},
      {"interest_rate", num(c.interest_rate)},
      {"years", num(c.years)},
      {"days_per_year", num(c.days_per_year)},
      {"recovery_factor", opt(c.recovery_factor)},
      {"err1", num(c.op.err1)},
      {"err2", num(c.op.err2)},
      {"err3", num(c.lnp.err3)},
      {"err4", num(c.lnp.err4)},
      {"initial_penalty", num(penalty)},
      {"sweep_points",
       [&c](const std::string& v, const std::string& k, std::size_t l) { c.sweep_points = to_int(v, k, l); }},
      {"sweep_max", num(c.sweep_max)},
      {"sweep_penalty", num(c.sweep_penalty)},
      {"retail_capacity_markup", num(c.retail_capacity_markup)},
      {"retail_power_markup", num(c.retail_power_markup)},
      {"report_price", opt(c.report_price)},
      {"experiments",
       [&c](const std::string& v, const std::string&, std::size_t l) {
         std::istringstream ss(v);
         std::string item;
         c.experiments.clear();
         while (std::getline(ss, item, ',')) {
           item = trim(item);
           if (item.empty()) continue;
           try {
             c.experiments.insert(parse_experiment(item));
           } catch (const ValidationError& e) {
             throw ParseError(e.what(), l);
           }
         }
       }},
  };

  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end()) throw ParseError("unknown key '" + key + "'", lineno);
    if (!seen.insert(key).second) throw ParseError("duplicate key '" + key + "'", lineno);
    it->second(value, key, lineno);
  }
  c.op.initial_penalty = penalty;
  c.lnp.initial_penalty = penalty;
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  return parse_config(in, path.parent_path());
}

std::vector<ThresholdRow> threshold_rows(const Aggregator& agg) {
  std::vector<ThresholdRow> rows;
  const auto& set = agg.model().scenarios;
  for (std::size_t w = 0; w < set.scenario_count(); ++w)
    for (std::size_t i = 0; i < set.user_count(); ++i) {
      const ThresholdProfile& p = agg.profile(w, i);
      for (std::size_t k = 0; k < p.prices.size(); ++k)
        rows.push_back({p.scenario_id, p.user_id, k, p.prices[k], p.capacities[k]});
    }
  return rows;
}

std::vector<double> sweep_prices(int points, double top) {
  if (points < 1 || !(top > 0.0)) throw DomainError("sweep needs points >= 1 and top > 0");
  std::vector<double> q;
  for (int j = 1; j <= points; ++j) q.push_back(top * j / points);
  return q;
}

std::vector<SweepRow> price_sweep(const Aggregator& agg, std::span<const double> prices,
                                  double penalty) {
  std::vector<SweepRow> rows;
  for (double q : prices) {
    const SystemEvaluation ev = agg.communication_unit(q, penalty);
    SweepRow r{q, penalty, ev.sold, ev.allocation.capacity, ev.allocation.power,
               ev.revenue, ev.allocation.cost, ev.profit, {}};
    for (std::size_t i = 0; i < ev.user_capacity.size(); ++i) r.user_cost.push_back(ev.user_cost(i));
    rows.push_back(std::move(r));
  }
  return rows;
}

PeakReport emit_peak_report(const Aggregator& agg, double price) {
  const SystemEvaluation ev = agg.limiting(price);
  const auto& set = agg.model().scenarios;
  const int T = set.grid.slots;
  const double users = static_cast<double>(set.user_count());
  PeakReport rep;
  rep.price = price;
  PeakSummary expected;
  expected.scenario_id = "expected";
  for (std::size_t w = 0; w < set.scenario_count(); ++w) {
    Series before(T, 0.0), after(T, 0.0);
    PeakSummary s;
    s.scenario_id = set.scenarios[w].id;
    for (std::size_t i = 0; i < set.user_count(); ++i) {
      const UserSlice u = slice(set, w, i);
      const UserDecision idle = idle_decision(u, agg.model().tariff);
      const UserDecision& d = ev.decisions[w][i];
      const Series g0 = power_balance(u.load, idle.renewable_used, idle.charge, idle.discharge);
      const Series g1 = power_balance(u.load, d.renewable_used, d.charge, d.discharge);
      for (int t = 0; t < T; ++t) {
        before[t] += g0[t];
        after[t] += g1[t];
      }
      s.user_peak_original += *std::max_element(g0.begin(), g0.end()) / users;
      s.user_peak_dispatched += *std::max_element(g1.begin(), g1.end()) / users;
    }
    for (int t = 0; t < T; ++t) rep.rows.push_back({s.scenario_id, t + 1, before[t], after[t]});
    s.coincident_original = *std::max_element(before.begin(), before.end());
    s.coincident_dispatched = *std::max_element(after.begin(), after.end());
    s.coincident_reduction_pct = pct_drop(s.coincident_original, s.coincident_dispatched);
    s.user_peak_reduction_pct = pct_drop(s.user_peak_original, s.user_peak_dispatched);
    const double rho = set.scenarios[w].probability;
    expected.coincident_original += rho * s.coincident_original;
    expected.coincident_dispatched += rho * s.coincident_dispatched;
    expected.user_peak_original += rho * s.user_peak_original;
    expected.user_peak_dispatched += rho * s.user_peak_dispatched;
    rep.summaries.push_back(s);
  }
  expected.coincident_reduction_pct =
      pct_drop(expected.coincident_original, expected.coincident_dispatched);
  expected.user_peak_reduction_pct =
      pct_drop(expected.user_peak_original, expected.user_peak_dispatched);
  rep.summaries.push_back(expected);
  return rep;
}

ExperimentReport run_pipeline(const ExperimentConfig& config) {
  config.validate();
  if (config.experiments.empty()) throw ValidationError("config: no experiments selected");
  const ScenarioSet set = load_scenarios(config.scenarios, config.slot_hours);
  const Tariff tariff = config.effective_tariff();
  const StorageTech tech = config.effective_tech();
  const auto& ex = config.experiments;
  auto wants = [&ex](Experiment e) { return ex.count(e) > 0; };

  ExperimentReport rep;
  rep.users = set.users;
  const bool needs_aggregator = std::any_of(ex.begin(), ex.end(), [](Experiment e) {
    return e != Experiment::Benchmark;
  });
  std::optional<Aggregator> agg;
  if (needs_aggregator) agg.emplace(SystemModel{set, tariff, tech});

  if (wants(Experiment::Thresholds)) rep.thresholds = threshold_rows(*agg);
  if (wants(Experiment::Sweep)) {
    const double top = config.sweep_max > 0.0 ? config.sweep_max
                       : agg->thresholds().size() > 1 ? 1.1 * agg->thresholds().back()
                                                      : 1.0;
    const std::vector<double> prices = sweep_prices(config.sweep_points, top);
    rep.sweep = price_sweep(*agg, prices, config.sweep_penalty);
  }
  if (wants(Experiment::OpPrice)) rep.op = agg->search_op_price(config.op);
  const bool peak_needs_lnp = wants(Experiment::PeakReport) && !config.report_price;
  if (wants(Experiment::LnpPrice) || peak_needs_lnp) rep.lnp = agg->search_lnp_price(config.lnp);
  if (wants(Experiment::PeakReport))
    rep.peak = emit_peak_report(*agg, config.report_price ? *config.report_price : rep.lnp->price);
  if (wants(Experiment::Benchmark)) {
    const StoragePrice presets[] = {
        production_price(tech),
        retail_price(tech, config.retail_capacity_markup, config.retail_power_markup)};
    for (const StoragePrice& p : presets)
      for (std::size_t i = 0; i < set.user_count(); ++i) {
        BenchmarkRow row{solve_benchmark(set, i, tariff, tech, p), {}, {}};
        if (rep.lnp) row.virtual_cost_lnp = rep.lnp->evaluation.user_cost(i);
        if (rep.op) row.virtual_cost_op = rep.op->evaluation.user_cost(i);
        rep.benchmark.push_back(std::move(row));
      }
  }
  write_report(rep, config.out_dir);
  return rep;
}

namespace {

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::string& header) : out_(path) {
    if (!out_) throw ValidationError("cannot write " + path.string());
    out_ << header << '\n';
  }
  CsvFile& operator<<(double v) { return cell(format_number(std::abs(v) < 1e-12 ? 0.0 : v)); }
  CsvFile& operator<<(const std::string& s) { return cell(s); }
  CsvFile& operator<<(const std::optional<double>& v) { return v ? *this << *v : cell(""); }
  void end() {
    out_ << '\n';
    first_ = true;
  }

 private:
  CsvFile& cell(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }
  std::ofstream out_;
  bool first_ = true;
};

void write_search(CsvFile& f, const std::string& name, const PriceSearchResult& r) {
  const double reduction = r.sold > 0.0 ? 100.0 * (1.0 - r.capacity / r.sold) : 0.0;
  f << name << r.price << r.penalty << r.capacity << r.power << r.sold << r.revenue
    << r.evaluation.allocation.cost << r.profit << r.limiting_profit << r.threshold
    << std::string(r.lnp_case ? to_string(*r.lnp_case) : "") << std::string(r.flagged ? "1" : "0")
    << reduction;
  f.end();
}

}  // namespace

void write_report(const ExperimentReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  if (!rep.thresholds.empty()) {
    CsvFile f(dir / "thresholds.csv", "scenario_id,user_id,k,price,capacity_kwh");
    for (const auto& r : rep.thresholds) {
      f << r.scenario_id << r.user_id << std::to_string(r.index) << r.price << r.capacity;
      f.end();
    }
  }
  if (!rep.sweep.empty()) {
    std::string header = "price,penalty,sold_kwh,capacity_kwh,power_kw,revenue,cost,profit";
    for (const auto& u : rep.users) header += ",cost_" + u;
    CsvFile f(dir / "sweep.csv", header);
    for (const auto& r : rep.sweep) {
      f << r.price << r.penalty << r.sold << r.capacity << r.power << r.revenue << r.cost
        << r.profit;
      for (double c : r.user_cost) f << c;
      f.end();
    }
  }
  if (rep.op || rep.lnp) {
    CsvFile f(dir / "search.csv",
              "search,price,penalty,capacity_kwh,power_kw,sold_kwh,revenue,cost,profit,"
              "limiting_profit,threshold,case,flagged,capacity_reduction_pct");
    if (rep.op) write_search(f, "op", *rep.op);
    if (rep.lnp) write_search(f, "lnp", *rep.lnp);
    CsvFile t(dir / "search_trace.csv", "search,step,penalty,profit,gap");
    auto trace = [&t](const std::string& name, const PriceSearchResult& r) {
      for (std::size_t j = 0; j < r.trace.size(); ++j) {
        t << name << std::to_string(j + 1) << r.trace[j].penalty << r.trace[j].profit
          << r.trace[j].gap;
        t.end();
      }
    };
    if (rep.op) trace("op", *rep.op);
    if (rep.lnp) trace("lnp", *rep.lnp);
  }
  if (!rep.benchmark.empty()) {
    CsvFile f(dir / "benchmark.csv",
              "preset,user_id,capacity_kwh,power_kw,capital_cost,bill,operation_cost,"
              "benchmark_cost,virtual_cost_lnp,virtual_cost_op,saving_lnp_pct");
    for (const auto& row : rep.benchmark) {
      const BenchmarkResult& b = row.result;
      std::optional<double> saving;
      if (row.virtual_cost_lnp && b.expected_cost > 0.0)
        saving = 100.0 * (1.0 - *row.virtual_cost_lnp / b.expected_cost);
      f << b.preset << b.user_id << b.capacity << b.power << b.capital_cost << b.bill
        << b.operation_cost << b.expected_cost << row.virtual_cost_lnp << row.virtual_cost_op
        << saving;
      f.end();
    }
  }
  if (rep.peak) {
    CsvFile f(dir / "peak.csv", "scenario_id,slot,original_kw,dispatched_kw");
    for (const auto& r : rep.peak->rows) {
      f << r.scenario_id << std::to_string(r.slot) << r.original << r.dispatched;
      f.end();
    }
    CsvFile s(dir / "peak_summary.csv",
              "price,scenario_id,coincident_original_kw,coincident_dispatched_kw,"
              "coincident_reduction_pct,user_peak_original_kw,user_peak_dispatched_kw,"
              "user_peak_reduction_pct");
    for (const auto& r : rep.peak->summaries) {
      s << rep.peak->price << r.scenario_id << r.coincident_original << r.coincident_dispatched
        << r.coincident_reduction_pct << r.user_peak_original << r.user_peak_dispatched
        << r.user_peak_reduction_pct;
      s.end();
    }
  }
}

}  // namespace vess
