#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "vess/errors.hpp"
#include "vess/experiment.hpp"
#include "vess/io.hpp"

using namespace vess;

namespace {

int exit_code(const Error& e) {
  if (dynamic_cast<const NoViablePriceError*>(&e)) return 4;
  if (dynamic_cast<const NumericalFailure*>(&e) || dynamic_cast<const UnboundedCapacityError*>(&e))
    return 3;
  return 2;
}

void report_error(const std::string& command, const Error& e) {
  nlohmann::json j{{"command", command}, {"error", e.kind()}, {"message", e.what()}};
  if (auto* p = dynamic_cast<const ParseError*>(&e)) j["line"] = p->line();
  if (auto* a = dynamic_cast<const AmbiguousPriceError*>(&e)) {
    j["lower"] = a->lower();
    j["upper"] = a->upper();
  }
  std::cerr << j.dump() << '\n';
}

void print_search(const char* name, const PriceSearchResult& r) {
  std::printf("%s price %s profit %s capacity %s sold %s%s%s\n", name,
              format_number(r.price).c_str(), format_number(r.profit).c_str(),
              format_number(r.capacity).c_str(), format_number(r.sold).c_str(),
              r.lnp_case ? " " : "", r.lnp_case ? to_string(*r.lnp_case) : "");
  if (r.flagged) std::printf("%s search found no positive profit\n", name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual energy storage sharing experiments"};
  app.require_subcommand(1);
  std::string config_path, scenarios, out;
  double price = 0.0;

  struct Command {
    const char* name;
    const char* help;
    std::optional<Experiment> experiment;
  };
  const Command commands[] = {
      {"thresholds", "Per-user capacity thresholds", Experiment::Thresholds},
      {"sweep", "Aggregator profit over a price grid", Experiment::Sweep},
      {"op-price", "Optimal-profit price search", Experiment::OpPrice},
      {"lnp-price", "Lowest nonnegative-profit price search", Experiment::LnpPrice},
      {"benchmark", "Users buying physical storage themselves", Experiment::Benchmark},
      {"peak-report", "Aggregate grid draw before and after dispatch", Experiment::PeakReport},
      {"run", "Every experiment listed in the config", std::nullopt},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "Experiment config file")->required();
    sub->add_option("--scenarios", scenarios, "Override the scenario CSV");
    sub->add_option("--out", out, "Override the output directory");
    if (c.experiment == Experiment::PeakReport)
      sub->add_option("--price", price, "Storage price; defaults to the LNP price");
    subs.emplace_back(sub, &c);
  }
  CLI11_PARSE(app, argc, argv);

  for (auto [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    try {
      ExperimentConfig config = load_config(config_path);
      if (!scenarios.empty()) config.scenarios = scenarios;
      if (!out.empty()) config.out_dir = out;
      if (cmd->experiment) config.experiments = {*cmd->experiment};
      if (cmd->experiment == Experiment::PeakReport && sub->count("--price"))
        config.report_price = price;
      const ExperimentReport rep = run_pipeline(config);
      if (!rep.thresholds.empty()) std::printf("thresholds %zu\n", rep.thresholds.size());
      if (!rep.sweep.empty()) std::printf("sweep points %zu\n", rep.sweep.size());
      if (rep.op) print_search("op", *rep.op);
      if (rep.lnp) print_search("lnp", *rep.lnp);
      for (const auto& b : rep.benchmark)
        std::printf("benchmark %s %s cost %s capacity %s\n", b.result.preset.c_str(),
                    b.result.user_id.c_str(), format_number(b.result.expected_cost).c_str(),
                    format_number(b.result.capacity).c_str());
      if (rep.peak)
        std::printf("peak at %s: mean user peak reduction %s%%\n",
                    format_number(rep.peak->price).c_str(),
                    format_number(rep.peak->summaries.back().user_peak_reduction_pct).c_str());
      std::printf("wrote %s\n", config.out_dir.string().c_str());
      return 0;
    } catch (const Error& e) {
      report_error(cmd->name, e);
      return exit_code(e);
    } catch (const std::exception& e) {
      std::cerr << nlohmann::json{{"command", cmd->name}, {"error", "internal"},
                                  {"message", e.what()}}.dump()
                << '\n';
      return 3;
    }
  }
  return 0;
}
