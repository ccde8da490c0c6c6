#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vess/aggregator.hpp"
#include "vess/benchmark.hpp"
#include "vess/model.hpp"

namespace vess {

enum class Experiment { Thresholds, Sweep, OpPrice, LnpPrice, Benchmark, PeakReport };

const char* to_string(Experiment e);
Experiment parse_experiment(const std::string& name);

struct ExperimentConfig {
  std::filesystem::path scenarios;
  std::filesystem::path out_dir = "out";
  double slot_hours = 1.0;
  Tariff tariff{0.03, 0.4, 0.01};
  std::optional<double> monthly_peak_price;  // replaces peak_price when set
  int days_in_month = 30;
  StorageTech tech;
  double interest_rate = 0.05;
  double years = 15.0;
  double days_per_year = 365.0;
  std::optional<double> recovery_factor;  // overrides the computed one
  OpOptions op;
  LnpOptions lnp;
  int sweep_points = 50;
  double sweep_max = 0.0;  // 0 picks 1.1 x the largest threshold
  double sweep_penalty = 1e-7;
  double retail_capacity_markup = 2.76;
  double retail_power_markup = 1.0;
  std::optional<double> report_price;  // peak report price; defaults to the LNP price
  std::set<Experiment> experiments;

  // Applies the peak-price and recovery-factor helpers.
  Tariff effective_tariff() const;
  StorageTech effective_tech() const;
  void validate() const;
};

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct ThresholdRow {
  std::string scenario_id;
  std::string user_id;
  std::size_t index = 0;
  double price = 0.0;
  double capacity = 0.0;
};

std::vector<ThresholdRow> threshold_rows(const Aggregator& agg);

struct SweepRow {
  double price = 0.0;
  double penalty = 0.0;
  double sold = 0.0;
  double capacity = 0.0;
  double power = 0.0;
  double revenue = 0.0;
  double cost = 0.0;
  double profit = 0.0;
  std::vector<double> user_cost;
};

std::vector<SweepRow> price_sweep(const Aggregator& agg, std::span<const double> prices,
                                  double penalty);
// points prices evenly spaced on (0, top].
std::vector<double> sweep_prices(int points, double top);

struct PeakRow {
  std::string scenario_id;
  int slot = 0;
  double original = 0.0;    // aggregate grid draw without storage, kW
  double dispatched = 0.0;  // aggregate grid draw under the limiting dispatch, kW
};

struct PeakSummary {
  std::string scenario_id;  // "expected" for the probability-weighted row
  double coincident_original = 0.0;
  double coincident_dispatched = 0.0;
  double user_peak_original = 0.0;  // mean of the users' own peaks
  double user_peak_dispatched = 0.0;
  double coincident_reduction_pct = 0.0;
  double user_peak_reduction_pct = 0.0;
};

struct PeakReport {
  double price = 0.0;
  std::vector<PeakRow> rows;
  std::vector<PeakSummary> summaries;  // per scenario, then the expected row
};

PeakReport emit_peak_report(const Aggregator& agg, double price);

struct BenchmarkRow {
  BenchmarkResult result;
  std::optional<double> virtual_cost_lnp;
  std::optional<double> virtual_cost_op;
};

struct ExperimentReport {
  std::vector<ThresholdRow> thresholds;
  std::vector<SweepRow> sweep;
  std::optional<PriceSearchResult> op;
  std::optional<PriceSearchResult> lnp;
  std::vector<BenchmarkRow> benchmark;
  std::optional<PeakReport> peak;
  std::vector<std::string> users;
};

// Runs the selected experiments and writes their CSV files into config.out_dir.
ExperimentReport run_pipeline(const ExperimentConfig& config);
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace vess
