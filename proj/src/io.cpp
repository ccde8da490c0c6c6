#include "vess/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "vess/errors.hpp"

namespace vess {

namespace {

constexpr const char* kHeader = "scenario_id,probability,user_id,slot_index,load_kw,renewable_kw";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double number(const std::string& cell, const char* what, std::size_t line) {
  const std::string s = trim(cell);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    throw ParseError(std::string("bad ") + what + " '" + s + "'", line);
  return v;
}

struct Row {
  std::size_t line;
  double probability;
  int slot;
  double load;
  double renewable;
};

}  // namespace

ScenarioSet read_scenarios(std::istream& in, double slot_hours) {
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::vector<std::string> scenario_ids, user_ids;
  std::map<std::string, std::size_t> scenario_index, user_index;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Row>> cells;
  std::vector<double> probability;
  std::vector<std::size_t> probability_line;

  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!header) {
      if (t != kHeader) throw ParseError("expected header '" + std::string(kHeader) + "'", lineno);
      header = true;
      continue;
    }
    const auto f = split(t);
    if (f.size() != 6) throw ParseError("expected 6 columns, found " + std::to_string(f.size()), lineno);
    const std::string sid = trim(f[0]);
    const std::string uid = trim(f[2]);
    if (sid.empty() || uid.empty()) throw ParseError("empty scenario or user id", lineno);
    Row r;
    r.line = lineno;
    r.probability = number(f[1], "probability", lineno);
    const double slot = number(f[3], "slot_index", lineno);
    if (slot != std::floor(slot) || slot < 1 || slot > 1e6)
      throw ParseError("slot_index must be a positive integer", lineno);
    r.slot = static_cast<int>(slot);
    r.load = number(f[4], "load_kw", lineno);
    r.renewable = number(f[5], "renewable_kw", lineno);
    if (r.probability < 0.0) throw ParseError("negative probability", lineno);
    if (r.load < 0.0 || r.renewable < 0.0) throw ParseError("negative load or renewable", lineno);

    auto [sit, snew] = scenario_index.emplace(sid, scenario_ids.size());
    if (snew) {
      scenario_ids.push_back(sid);
      probability.push_back(r.probability);
      probability_line.push_back(lineno);
    } else if (probability[sit->second] != r.probability) {
      throw ParseError("probability of scenario " + sid + " differs from line " +
                           std::to_string(probability_line[sit->second]),
                       lineno);
    }
    auto [uit, unew] = user_index.emplace(uid, user_ids.size());
    if (unew) user_ids.push_back(uid);
    cells[{sit->second, uit->second}].push_back(r);
  }
  if (!header) throw ParseError("file is empty", lineno == 0 ? 1 : lineno);
  if (scenario_ids.empty()) throw ParseError("no data rows", lineno + 1);

  ScenarioSet set;
  set.users = user_ids;
  int T = -1;
  std::string first;
  for (std::size_t w = 0; w < scenario_ids.size(); ++w) {
    Scenario sc;
    sc.id = scenario_ids[w];
    sc.probability = probability[w];
    for (std::size_t i = 0; i < user_ids.size(); ++i) {
      const auto it = cells.find({w, i});
      if (it == cells.end())
        throw ValidationError("scenario " + sc.id + " has no rows for user " + user_ids[i]);
      const auto& rows = it->second;
      int slots = 0;
      for (const Row& r : rows) slots = std::max(slots, r.slot);
      if (T < 0) {
        T = slots;
        first = sc.id + "/" + user_ids[i];
      } else if (slots != T) {
        throw ValidationError("scenario " + sc.id + ", user " + user_ids[i] + " has " +
                              std::to_string(slots) + " slots but " + first + " has " +
                              std::to_string(T));
      }
      Series load(T, std::nan("")), ren(T, std::nan(""));
      for (const Row& r : rows) {
        if (!std::isnan(load[r.slot - 1]))
          throw ParseError("duplicate slot " + std::to_string(r.slot) + " for " + sc.id + "/" +
                               user_ids[i],
                           r.line);
        load[r.slot - 1] = r.load;
        ren[r.slot - 1] = r.renewable;
      }
      if (static_cast<int>(rows.size()) != T)
        throw ValidationError("scenario " + sc.id + ", user " + user_ids[i] + " is missing slots");
      sc.load.push_back(std::move(load));
      sc.renewable.push_back(std::move(ren));
    }
    set.scenarios.push_back(std::move(sc));
  }
  set.grid = TimeGrid{T, slot_hours};

  double total = 0.0;
  for (const auto& sc : set.scenarios) total += sc.probability;
  if (std::abs(total - 1.0) > 1e-6)
    throw ValidationError("scenario probabilities sum to " + std::to_string(total));
  if (total != 1.0)
    for (auto& sc : set.scenarios) sc.probability /= total;
  set.validate();
  return set;
}

ScenarioSet load_scenarios(const std::filesystem::path& path, double slot_hours) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file " + path.string());
  return read_scenarios(in, slot_hours);
}

void write_scenarios(std::ostream& out, const ScenarioSet& set) {
  char buf[64];
  auto g17 = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << kHeader << '\n';
  for (const auto& sc : set.scenarios)
    for (std::size_t i = 0; i < set.users.size(); ++i)
      for (int t = 0; t < set.grid.slots; ++t)
        out << sc.id << ',' << g17(sc.probability) << ',' << set.users[i] << ',' << t + 1 << ','
            << g17(sc.load[i][t]) << ',' << g17(sc.renewable[i][t]) << '\n';
}

void save_scenarios(const std::filesystem::path& path, const ScenarioSet& set) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  write_scenarios(out, set);
}

std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace vess
