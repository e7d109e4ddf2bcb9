#pragma once

// Report files: report.csv (every statistic), survival.csv, survival.svg and
// methods.svg (group means with 95% CI whiskers).

#include <filesystem>
#include <string>
#include <vector>

#include "physagent/eval.hpp"

namespace physagent {

struct NamedAnova {
  std::string name;
  AnovaResult result;
};

struct NamedSummary {
  std::string label;
  SummaryStats stats;
};

struct BarChart {
  std::string title;
  std::vector<std::pair<std::string, MeanCi>> bars;
};

struct Report {
  std::vector<NamedSummary> summaries;
  std::vector<SurvivalCurve> curves;
  std::vector<NamedAnova> anovas;
  std::vector<BarChart> charts;
};

// table1.csv / table2.csv (ANOVA and bars) and table3.csv (summaries and
// survival) from a fixture directory; absent files are skipped, but at least
// one must exist (IoError otherwise).
Report fixture_report(const std::filesystem::path& dir);
Report trace_report(const std::vector<EpisodeResult>& episodes);

std::string report_csv(const Report& report);
std::string survival_csv(const std::vector<SurvivalCurve>& curves);
std::string survival_svg(const std::vector<SurvivalCurve>& curves);
std::string methods_svg(const std::vector<BarChart>& charts);

// Writes the four files into `dir`, creating it. Throws IoError.
void emit_report(const Report& report, const std::filesystem::path& dir);

std::vector<SurvivalCurve> parse_survival_csv(const std::string& text);
std::vector<SurvivalCurve> read_survival_csv(const std::filesystem::path& path);

}  // namespace physagent
