// physagent: dataset collection, adapter training, suite runs, analysis and
// mock services.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 configuration error,
// 3 missing or corrupt artifact, 4 analyze --check violation.

#include <CLI11.hpp>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>

#include "physagent/adapter.hpp"
#include "physagent/agent.hpp"
#include "physagent/errors.hpp"
#include "physagent/mock_servers.hpp"
#include "physagent/report.hpp"
#include "physagent/robot_config.hpp"

namespace fs = std::filesystem;
using namespace physagent;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitArtifact = 3;
constexpr int kExitCheck = 4;

struct CheckFailed : Error {
  using Error::Error;
};

MockServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

RobotConfig robot_from_flags(const std::string& robot, const std::string& camera) {
  RobotConfig rc;
  if (!robot.empty()) rc = load_robot_config(robot);
  if (!camera.empty()) rc.camera = load_camera(camera);
  return rc;
}

void require_artifact(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("missing artifact " + path.string());
}

int cmd_collect(std::size_t n, std::uint64_t seed, const std::string& robot,
                const std::string& camera, const std::string& out) {
  const RobotConfig rc = robot_from_flags(robot, camera);
  const AdapterDataset ds = collect_dataset(rc.robot, rc.camera, n, seed);
  save_dataset_csv(ds, out);
  std::printf("wrote %zu samples to %s\n", ds.samples.size(), out.c_str());
  return 0;
}

int cmd_train(const std::string& data, const std::string& out, const std::string& robot,
              std::uint64_t seed, unsigned jobs, int max_iter) {
  require_artifact(data);
  const RobotConfig rc = robot_from_flags(robot, "");
  const AdapterDataset ds = load_dataset_csv(data);
  AdapterFitOptions opt;
  opt.seed = seed;
  opt.jobs = jobs;
  opt.gbdt.max_iter = max_iter;
  const AdapterModel model = fit_adapter(ds, rc.robot, opt);
  save_adapter(model, out);

  nlohmann::json report = {{"holdout_mae", model.report.mae},
                           {"trees", model.report.trees},
                           {"train_samples", model.report.train_samples},
                           {"holdout_samples", model.report.holdout_samples},
                           {"outputs_below_0.1", model.report.outputs_below(0.1)}};
  fs::path report_path = out;
  report_path.replace_extension(".report.json");
  std::ofstream(report_path) << report.dump(2) << '\n';
  for (std::size_t d = 0; d < kCommandDim; ++d) {
    std::printf("output %2zu  mae %.4f  trees %zu\n", d, model.report.mae[d],
                model.report.trees[d]);
  }
  std::printf("%zu/14 outputs below 0.1; model written to %s\n",
              model.report.outputs_below(0.1), out.c_str());
  return 0;
}

int cmd_run_suite(const std::string& suite, const std::string& adapter,
                  const std::string& out, unsigned jobs) {
  SuiteConfig config = load_suite_config(suite);
  if (const char* url = std::getenv("PHYSAGENT_VIDEO_URL")) config.video_url = url;
  if (const char* url = std::getenv("PHYSAGENT_VLM_URL")) config.vlm_url = url;
  require_artifact(adapter);
  const AdapterModel model = load_adapter(adapter);
  const auto results = run_suite(config, model, jobs);
  std::ofstream file(out, std::ios::binary);
  if (!file) throw IoError("cannot write " + out);
  write_trace(file, results);
  if (!file) throw IoError("failed writing " + out);

  int successes = 0;
  int first = 0;
  for (const auto& r : results) {
    successes += r.success;
    first += r.first_attempt_success;
  }
  std::printf("%zu episodes: %d successes, %d first-attempt successes; trace %s\n",
              results.size(), successes, first, out.c_str());
  return 0;
}

void check_near(const char* what, double value, double expected, double tol) {
  if (!(std::abs(value - expected) <= tol)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s = %.6g, expected %.6g +- %.6g", what, value,
                  expected, tol);
    throw CheckFailed(buf);
  }
}

const NamedSummary* find_summary(const Report& r, const std::string& label) {
  for (const auto& s : r.summaries) {
    if (s.label == label) return &s;
  }
  return nullptr;
}

// Reference statistics of the bundled fixtures.
void check_fixtures(const Report& r) {
  for (const auto& a : r.anovas) {
    if (a.name == "table1") {
      if (a.result.df_between != 4 || a.result.df_within != 60) {
        throw CheckFailed("table1 ANOVA degrees of freedom differ from (4, 60)");
      }
      check_near("table1 F", a.result.f_statistic, 5.04, 0.05);
      check_near("table1 p", a.result.p_value, 0.0014, 0.0005);
    } else if (a.name == "table2") {
      if (a.result.df_between != 2 || a.result.df_within != 36) {
        throw CheckFailed("table2 ANOVA degrees of freedom differ from (2, 36)");
      }
      check_near("table2 F", a.result.f_statistic, 2.01, 0.05);
      check_near("table2 p", a.result.p_value, 0.1485, 0.005);
    }
  }
  const struct {
    const char* label;
    double success, first, mean;
    std::vector<double> curve;
  } expected[] = {{"UR3", 0.8, 0.3, 2.25, {0.7, 0.6, 0.3, 0.2}},
                  {"G1", 0.8, 0.2, 2.75, {0.8, 0.7, 0.4, 0.3, 0.2}}};
  for (const auto& e : expected) {
    const NamedSummary* s = find_summary(r, e.label);
    if (s == nullptr) continue;
    if (s->stats.success_rate != e.success || s->stats.first_attempt_rate != e.first ||
        !s->stats.mean_iterations || *s->stats.mean_iterations != e.mean) {
      throw CheckFailed(std::string(e.label) + " summary statistics differ");
    }
    for (const auto& c : r.curves) {
      if (c.label != e.label) continue;
      for (std::size_t n = 1; n <= 10; ++n) {
        const double want = e.curve[std::min(n, e.curve.size()) - 1];
        if (c.at(static_cast<int>(n)) != want) {
          throw CheckFailed(std::string(e.label) + " survival curve differs at n = " +
                            std::to_string(n));
        }
      }
    }
  }
}

int cmd_analyze(const std::string& traces, const std::string& fixtures,
                const std::string& out, bool check, double min_gap) {
  Report report;
  if (!fixtures.empty()) {
    report = fixture_report(fixtures);
  } else {
    require_artifact(traces);
    const auto episodes = read_trace(traces);
    if (episodes.empty()) throw ParseError(traces + ": no episodes");
    report = trace_report(episodes);
  }
  emit_report(report, out);
  for (const auto& a : report.anovas) {
    std::printf("%s: F(%d,%d) = %.4f, p = %.6f\n", a.name.c_str(), a.result.df_between,
                a.result.df_within, a.result.f_statistic, a.result.p_value);
  }
  for (const auto& s : report.summaries) {
    std::printf("%s: success %.2f, first attempt %.2f, mean iterations %s\n",
                s.label.c_str(), s.stats.success_rate, s.stats.first_attempt_rate,
                s.stats.mean_iterations ? std::to_string(*s.stats.mean_iterations).c_str()
                                        : "n/a");
  }
  std::printf("report written to %s\n", out.c_str());
  if (check) {
    if (!fixtures.empty()) {
      check_fixtures(report);
    } else {
      const auto& all = report.summaries.front().stats;
      const double gap = 100.0 * (all.success_rate - all.first_attempt_rate);
      if (gap < min_gap) {
        throw CheckFailed("recovery gap " + std::to_string(gap) +
                          " percentage points is below " + std::to_string(min_gap));
      }
    }
    std::printf("check passed\n");
  }
  return 0;
}

int serve(MockServer& server, const std::string& host, int port) {
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::printf("listening on %s:%d\n", host.c_str(), port);
  std::fflush(stdout);
  server.listen_blocking(host, port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Agentic manipulation pipeline: collect, train, run, analyze"};
  app.require_subcommand(1);

  auto* collect = app.add_subcommand("collect", "Collect an adapter dataset");
  std::size_t n = 10000;
  std::uint64_t seed = 7;
  std::string robot, camera, out;
  collect->add_option("--n", n, "Number of samples")->capture_default_str();
  collect->add_option("--seed", seed, "Sampling seed")->capture_default_str();
  collect->add_option("--robot", robot, "robot.json (default: built-in robot)");
  collect->add_option("--camera", camera, "Camera JSON (default: robot's camera)");
  collect->add_option("--out", out, "Output CSV")->required();

  auto* train = app.add_subcommand("train-adapter", "Fit the adapter regressors");
  std::string data;
  unsigned jobs = 0;
  int max_iter = 500;
  std::uint64_t train_seed = 7;
  train->add_option("--data", data, "Dataset CSV")->required();
  train->add_option("--out", out, "Adapter model JSON")->required();
  train->add_option("--robot", robot, "robot.json providing the joint limits");
  train->add_option("--seed", train_seed, "Split and boosting seed")->capture_default_str();
  train->add_option("--jobs", jobs, "Worker threads (0: all cores)")->capture_default_str();
  train->add_option("--max-iter", max_iter, "Boosting iterations")->capture_default_str();

  auto* suite = app.add_subcommand("run-suite", "Run every (task, seed) episode");
  std::string suite_path, adapter_path;
  unsigned suite_jobs = 1;
  suite->add_option("--suite", suite_path, "Suite JSON")->required();
  suite->add_option("--adapter", adapter_path, "Adapter model JSON")->required();
  suite->add_option("--out", out, "Trace JSONL")->required();
  suite->add_option("--jobs", suite_jobs, "Parallel episodes")->capture_default_str();

  auto* analyze = app.add_subcommand("analyze", "Statistics and report files");
  std::string traces, fixtures;
  bool check = false;
  double min_gap = 0.0;
  auto* traces_opt = analyze->add_option("--traces", traces, "Trace JSONL from run-suite");
  auto* fixtures_opt = analyze->add_option("--fixtures", fixtures, "Directory of table CSVs");
  traces_opt->excludes(fixtures_opt);
  analyze->add_option("--out", out, "Report directory")->required();
  analyze->add_flag("--check", check, "Exit 4 when reference statistics are not met");
  analyze->add_option("--min-gap", min_gap,
                      "Trace check: minimum final minus first-attempt success, in points");

  auto* mock_video = app.add_subcommand("mock-video", "Serve the mock video endpoint");
  auto* mock_vlm = app.add_subcommand("mock-vlm", "Serve the mock VLM endpoint");
  std::string host = "127.0.0.1";
  int port = 8080;
  int fail_first = 0;
  std::vector<std::string> replies;
  for (auto* sub : {mock_video, mock_vlm}) {
    sub->add_option("--host", host)->capture_default_str();
    sub->add_option("--port", port)->capture_default_str();
    sub->add_option("--fail-first", fail_first, "Answer 503 to the first N requests");
  }
  mock_vlm->add_option("--reply", replies, "Verdict texts served in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*collect) return cmd_collect(n, seed, robot, camera, out);
    if (*train) return cmd_train(data, out, robot, train_seed, jobs, max_iter);
    if (*suite) return cmd_run_suite(suite_path, adapter_path, out, suite_jobs);
    if (*analyze) {
      if (traces.empty() == fixtures.empty()) {
        throw ConfigError("analyze needs exactly one of --traces or --fixtures");
      }
      return cmd_analyze(traces, fixtures, out, check, min_gap);
    }
    if (*mock_video) {
      MockVideoServer server(MockVideoOptions{fail_first});
      return serve(server, host, port);
    }
    if (*mock_vlm) {
      MockVlmOptions opt;
      opt.fail_first = fail_first;
      if (!replies.empty()) opt.replies = replies;
      MockVlmServer server(opt);
      return serve(server, host, port);
    }
  } catch (const CheckFailed& e) {
    std::fprintf(stderr, "check failed: %s\n", e.what());
    return kExitCheck;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "artifact error: %s\n", e.what());
    return kExitArtifact;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "artifact error: %s\n", e.what());
    return kExitArtifact;
  } catch (const EmptyDataset& e) {
    std::fprintf(stderr, "artifact error: %s\n", e.what());
    return kExitArtifact;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
