#include "physagent/eval.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "physagent/errors.hpp"

namespace physagent {
namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

// Data rows of a commented CSV file, header checked and dropped.
std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path,
                                                const std::string& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!seen_header) {
      if (line != header) {
        throw ParseError(path.string() + ": expected header '" + header + "'");
      }
      seen_header = true;
      continue;
    }
    rows.push_back(split_row(line));
  }
  if (!seen_header) throw ParseError(path.string() + ": missing header");
  return rows;
}

double to_double(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError(path.string() + ": bad number '" + s + "'");
}

}  // namespace

std::vector<std::string> TrialTable::groups() const {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (std::find(out.begin(), out.end(), r.group) == out.end()) out.push_back(r.group);
  }
  return out;
}

std::vector<double> TrialTable::values(const std::string& group) const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.group == group) out.push_back(r.value);
  }
  return out;
}

std::vector<std::vector<double>> TrialTable::grouped() const {
  std::vector<std::vector<double>> out;
  for (const auto& g : groups()) out.push_back(values(g));
  return out;
}

TrialTable load_trial_table(const std::filesystem::path& path) {
  TrialTable t;
  for (const auto& cells : read_rows(path, "group,task,value")) {
    if (cells.size() != 3) throw ParseError(path.string() + ": expected 3 columns");
    t.rows.push_back({cells[0], cells[1], to_double(cells[2], path)});
  }
  return t;
}

std::vector<OutcomeGroup> load_outcome_table(const std::filesystem::path& path) {
  std::vector<OutcomeGroup> out;
  for (const auto& cells : read_rows(path, "group,task,success,iterations")) {
    if (cells.size() != 4) throw ParseError(path.string() + ": expected 4 columns");
    TaskOutcome o;
    o.task = cells[1];
    if (cells[2] != "0" && cells[2] != "1") {
      throw ParseError(path.string() + ": success must be 0 or 1");
    }
    o.success = cells[2] == "1";
    if (!cells[3].empty()) o.iterations = static_cast<int>(to_double(cells[3], path));
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const OutcomeGroup& g) { return g.label == cells[0]; });
    if (it == out.end()) {
      out.push_back({cells[0], {}});
      it = out.end() - 1;
    }
    it->outcomes.push_back(std::move(o));
  }
  return out;
}

OutcomeGroup outcomes_from_trace(const std::vector<EpisodeResult>& episodes,
                                 const std::string& label) {
  OutcomeGroup g{label, {}};
  for (const auto& e : episodes) {
    TaskOutcome o;
    o.task = e.task;
    o.success = e.success;
    if (e.success) o.iterations = e.attempts_used;
    g.outcomes.push_back(std::move(o));
  }
  return g;
}

double SurvivalCurve::at(int n) const {
  if (points.empty()) return 1.0;
  if (n >= points.back().n) return points.back().unsolved;
  for (const auto& p : points) {
    if (p.n == n) return p.unsolved;
  }
  return 1.0;
}

SurvivalCurve survival_curve(std::span<const TaskOutcome> outcomes,
                             const std::string& label, int horizon) {
  SurvivalCurve c;
  c.label = label;
  for (const auto& o : outcomes) {
    if (o.success && !o.iterations) {
      throw ConfigError("survival curve: success of '" + o.task + "' lacks iterations");
    }
    if (o.success) horizon = std::max(horizon, *o.iterations);
  }
  const double total = static_cast<double>(outcomes.size());
  for (int n = 0; n <= horizon; ++n) {
    const auto solved = std::count_if(outcomes.begin(), outcomes.end(), [&](const TaskOutcome& o) {
      return o.success && *o.iterations <= n;
    });
    c.points.push_back(
        {n, total > 0 ? (total - static_cast<double>(solved)) / total : 1.0});
  }
  return c;
}

SummaryStats summary_stats(std::span<const TaskOutcome> outcomes) {
  if (outcomes.empty()) throw ConfigError("summary_stats: no results");
  SummaryStats s;
  s.tasks = outcomes.size();
  std::size_t successes = 0;
  std::size_t first = 0;
  double iterations = 0.0;
  for (const auto& o : outcomes) {
    if (!o.success) continue;
    ++successes;
    if (!o.iterations) {
      throw ConfigError("summary_stats: success of '" + o.task + "' lacks iterations");
    }
    if (*o.iterations == 1) ++first;
    iterations += *o.iterations;
  }
  const double n = static_cast<double>(outcomes.size());
  s.success_rate = static_cast<double>(successes) / n;
  s.first_attempt_rate = static_cast<double>(first) / n;
  if (successes > 0) s.mean_iterations = iterations / static_cast<double>(successes);
  return s;
}

}  // namespace physagent
