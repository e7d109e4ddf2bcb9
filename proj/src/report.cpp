#include "physagent/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "physagent/errors.hpp"

namespace physagent {
namespace {

// Shortest text that parses back to the same double.
std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr std::array<const char*, 6> kPalette{"#c0392b", "#2c6fbb", "#27ae60",
                                              "#8e44ad", "#d68910", "#555555"};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

Report fixture_report(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("fixture directory not found: " + dir.string());
  }
  Report r;
  bool any = false;
  for (const char* name : {"table1", "table2"}) {
    const auto path = dir / (std::string(name) + ".csv");
    if (!std::filesystem::exists(path)) continue;
    any = true;
    const TrialTable t = load_trial_table(path);
    r.anovas.push_back({name, one_way_anova(t.grouped())});
    BarChart chart{name, {}};
    for (const auto& g : t.groups()) chart.bars.emplace_back(g, mean_ci95(t.values(g)));
    r.charts.push_back(std::move(chart));
  }
  const auto t3 = dir / "table3.csv";
  if (std::filesystem::exists(t3)) {
    any = true;
    for (const auto& g : load_outcome_table(t3)) {
      r.summaries.push_back({g.label, summary_stats(g.outcomes)});
      r.curves.push_back(survival_curve(g.outcomes, g.label));
    }
  }
  if (!any) throw IoError("no fixture tables in " + dir.string());
  return r;
}

Report trace_report(const std::vector<EpisodeResult>& episodes) {
  Report r;
  const OutcomeGroup all = outcomes_from_trace(episodes);
  r.summaries.push_back({all.label, summary_stats(all.outcomes)});
  r.curves.push_back(survival_curve(all.outcomes, all.label));
  std::vector<std::string> tasks;
  for (const auto& e : episodes) {
    if (std::find(tasks.begin(), tasks.end(), e.task) == tasks.end()) tasks.push_back(e.task);
  }
  BarChart chart{"success rate by task", {}};
  for (const auto& task : tasks) {
    std::vector<TaskOutcome> per;
    std::vector<double> values;
    for (const auto& o : all.outcomes) {
      if (o.task != task) continue;
      per.push_back(o);
      values.push_back(o.success ? 100.0 : 0.0);
    }
    r.summaries.push_back({task, summary_stats(per)});
    chart.bars.emplace_back(task, mean_ci95(values));
  }
  r.charts.push_back(std::move(chart));
  return r;
}

std::string report_csv(const Report& report) {
  std::ostringstream out;
  out << "section,label,metric,value\n";
  for (const auto& s : report.summaries) {
    out << "summary," << s.label << ",tasks," << s.stats.tasks << '\n';
    out << "summary," << s.label << ",final_success_rate," << num(s.stats.success_rate) << '\n';
    out << "summary," << s.label << ",first_attempt_rate," << num(s.stats.first_attempt_rate)
        << '\n';
    out << "summary," << s.label << ",mean_iterations,"
        << (s.stats.mean_iterations ? num(*s.stats.mean_iterations) : "") << '\n';
  }
  for (const auto& a : report.anovas) {
    out << "anova," << a.name << ",f_statistic," << num(a.result.f_statistic) << '\n';
    out << "anova," << a.name << ",df_between," << a.result.df_between << '\n';
    out << "anova," << a.name << ",df_within," << a.result.df_within << '\n';
    out << "anova," << a.name << ",p_value," << num(a.result.p_value) << '\n';
  }
  for (const auto& c : report.charts) {
    for (const auto& [group, ci] : c.bars) {
      out << "mean_ci95," << c.title << ':' << group << ",mean," << num(ci.mean) << '\n';
      out << "mean_ci95," << c.title << ':' << group << ",ci_low,"
          << num(ci.mean - ci.half_width) << '\n';
      out << "mean_ci95," << c.title << ':' << group << ",ci_high,"
          << num(ci.mean + ci.half_width) << '\n';
    }
  }
  for (const auto& c : report.curves) {
    for (const auto& p : c.points) {
      out << "survival," << c.label << ",unsolved_at_" << p.n << ',' << num(p.unsolved) << '\n';
    }
  }
  return out.str();
}

std::string survival_csv(const std::vector<SurvivalCurve>& curves) {
  std::ostringstream out;
  out << "label,n,unsolved\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) out << c.label << ',' << p.n << ',' << num(p.unsolved) << '\n';
  }
  return out.str();
}

std::vector<SurvivalCurve> parse_survival_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "label,n,unsolved") {
    throw ParseError("survival csv: bad header");
  }
  std::vector<SurvivalCurve> curves;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto last = line.rfind(',');
    const auto mid = line.rfind(',', last - 1);
    if (last == std::string::npos || mid == std::string::npos) {
      throw ParseError("survival csv: bad row '" + line + "'");
    }
    const std::string label = line.substr(0, mid);
    SurvivalPoint p;
    try {
      p.n = std::stoi(line.substr(mid + 1, last - mid - 1));
      p.unsolved = std::stod(line.substr(last + 1));
    } catch (const std::exception&) {
      throw ParseError("survival csv: bad row '" + line + "'");
    }
    if (curves.empty() || curves.back().label != label) curves.push_back({label, {}});
    curves.back().points.push_back(p);
  }
  return curves;
}

std::vector<SurvivalCurve> read_survival_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_survival_csv(buf.str());
}

std::string survival_svg(const std::vector<SurvivalCurve>& curves) {
  constexpr double W = 480, H = 320, L = 50, R = 20, T = 20, B = 40;
  int max_n = 1;
  for (const auto& c : curves) {
    if (!c.points.empty()) max_n = std::max(max_n, c.points.back().n);
  }
  const auto x = [&](double n) { return L + (W - L - R) * n / max_n; };
  const auto y = [&](double f) { return T + (H - T - B) * (1.0 - f); };
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << y(0) << "\" x2=\"" << W - R << "\" y2=\""
      << y(0) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << y(0) << "\" x2=\"" << L << "\" y2=\"" << y(1)
      << "\" stroke=\"black\"/>\n";
  for (int n = 0; n <= max_n; ++n) {
    out << "<text x=\"" << px(x(n)) << "\" y=\"" << px(y(0) + 15)
        << "\" text-anchor=\"middle\">" << n << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    out << "<text x=\"" << L - 6 << "\" y=\"" << px(y(k / 4.0) + 4)
        << "\" text-anchor=\"end\">" << num(k / 4.0) << "</text>\n";
  }
  out << "<text x=\"" << px((L + W - R) / 2) << "\" y=\"" << H - 6
      << "\" text-anchor=\"middle\">iterations n</text>\n";
  out << "<text x=\"12\" y=\"" << px((T + H - B) / 2) << "\" transform=\"rotate(-90 12,"
      << px((T + H - B) / 2) << ")\" text-anchor=\"middle\">unsolved fraction</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    const char* color = kPalette[i % kPalette.size()];
    std::string path;
    for (std::size_t k = 0; k < c.points.size(); ++k) {
      const auto& p = c.points[k];
      if (k == 0) {
        path += "M" + px(x(p.n)) + "," + px(y(p.unsolved));
      } else {
        path += " H" + px(x(p.n)) + " V" + px(y(p.unsolved));
      }
    }
    out << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (i + 1) << "\" fill=\"" << color
        << "\" text-anchor=\"end\">" << escape_xml(c.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string methods_svg(const std::vector<BarChart>& charts) {
  constexpr double W = 640, panel_h = 260, L = 50, R = 20, T = 30, B = 60;
  const double H = panel_h * std::max<std::size_t>(charts.size(), 1);
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t ci = 0; ci < charts.size(); ++ci) {
    const auto& chart = charts[ci];
    const double top = panel_h * ci;
    double y_max = 1.0;
    for (const auto& [g, v] : chart.bars) y_max = std::max(y_max, v.mean + v.half_width);
    y_max *= 1.1;
    const auto y = [&](double v) { return top + T + (panel_h - T - B) * (1.0 - v / y_max); };
    const double slot = (W - L - R) / std::max<std::size_t>(chart.bars.size(), 1);
    out << "<text x=\"" << W / 2 << "\" y=\"" << px(top + 16)
        << "\" text-anchor=\"middle\" font-weight=\"bold\">" << escape_xml(chart.title)
        << "</text>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << px(y(0)) << "\" x2=\"" << W - R << "\" y2=\""
        << px(y(0)) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << L - 6 << "\" y=\"" << px(y(0) + 4) << "\" text-anchor=\"end\">0</text>\n";
    out << "<text x=\"" << L - 6 << "\" y=\"" << px(y(y_max / 1.1) + 4)
        << "\" text-anchor=\"end\">" << num(std::round(y_max / 1.1 * 100) / 100) << "</text>\n";
    for (std::size_t i = 0; i < chart.bars.size(); ++i) {
      const auto& [group, v] = chart.bars[i];
      const double cx = L + slot * (i + 0.5);
      const double bw = slot * 0.6;
      out << "<rect x=\"" << px(cx - bw / 2) << "\" y=\"" << px(y(std::max(v.mean, 0.0)))
          << "\" width=\"" << px(bw) << "\" height=\"" << px(y(0) - y(std::max(v.mean, 0.0)))
          << "\" fill=\"" << kPalette[i % kPalette.size()] << "\" fill-opacity=\"0.7\"/>\n";
      const double lo = std::max(0.0, v.mean - v.half_width);
      const double hi = v.mean + v.half_width;
      out << "<path d=\"M" << px(cx) << "," << px(y(lo)) << " V" << px(y(hi)) << " M"
          << px(cx - bw / 4) << "," << px(y(lo)) << " H" << px(cx + bw / 4) << " M"
          << px(cx - bw / 4) << "," << px(y(hi)) << " H" << px(cx + bw / 4)
          << "\" stroke=\"black\" fill=\"none\"/>\n";
      out << "<text x=\"" << px(cx) << "\" y=\"" << px(y(0) + 14)
          << "\" text-anchor=\"middle\">" << escape_xml(group) << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

void emit_report(const Report& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "report.csv", report_csv(report));
  write_file(dir / "survival.csv", survival_csv(report.curves));
  write_file(dir / "survival.svg", survival_svg(report.curves));
  write_file(dir / "methods.svg", methods_svg(report.charts));
}

}  // namespace physagent
