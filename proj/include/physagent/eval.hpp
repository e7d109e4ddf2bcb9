#pragma once

// Success statistics, survival curves and fixture/trace loading.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "physagent/agent.hpp"
#include "physagent/stats.hpp"

namespace physagent {

// Long-format table: one value per (group, task). Lines starting with '#'
// are comments; the header row is "group,task,value".
struct TrialRow {
  std::string group;
  std::string task;
  double value = 0.0;
};

struct TrialTable {
  std::vector<TrialRow> rows;

  // Groups in first-appearance order.
  std::vector<std::string> groups() const;
  // Values of one group in row order.
  std::vector<double> values(const std::string& group) const;
  // One value list per group, for ANOVA.
  std::vector<std::vector<double>> grouped() const;
};

// Throws IoError / ParseError.
TrialTable load_trial_table(const std::filesystem::path& path);

struct TaskOutcome {
  std::string task;
  bool success = false;
  std::optional<int> iterations;  // attempts used; present for successes
};

struct OutcomeGroup {
  std::string label;
  std::vector<TaskOutcome> outcomes;
};

// "group,task,success,iterations" with an empty iteration cell for failures.
std::vector<OutcomeGroup> load_outcome_table(const std::filesystem::path& path);
// Every episode in a trace as one outcome, under a single label.
OutcomeGroup outcomes_from_trace(const std::vector<EpisodeResult>& episodes,
                                 const std::string& label = "suite");

struct SurvivalPoint {
  int n = 0;
  double unsolved = 1.0;
};

struct SurvivalCurve {
  std::string label;
  std::vector<SurvivalPoint> points;  // n = 0 .. horizon

  double at(int n) const;
};

// unsolved(n) = 1 - |successes with iterations <= n| / N for n = 0..horizon;
// the horizon grows to cover the largest iteration count.
// Throws ConfigError when a success lacks its iteration count.
SurvivalCurve survival_curve(std::span<const TaskOutcome> outcomes,
                             const std::string& label = "", int horizon = 10);

struct SummaryStats {
  double success_rate = 0.0;
  double first_attempt_rate = 0.0;
  std::optional<double> mean_iterations;  // over successes only
  std::size_t tasks = 0;
};

// Throws ConfigError on empty input.
SummaryStats summary_stats(std::span<const TaskOutcome> outcomes);

}  // namespace physagent
