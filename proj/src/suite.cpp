#include <atomic>
#include <thread>

#include "physagent/agent.hpp"
#include "physagent/errors.hpp"
#include "physagent/robot_config.hpp"

namespace physagent {
namespace {

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

void SuiteConfig::validate() const {
  if (tasks.empty()) throw ConfigError("suite: task list is empty");
  if (seeds.empty()) throw ConfigError("suite: no seeds");
  if (max_attempts < 1) throw ConfigError("suite: max_attempts must be >= 1");
  if (!(duration > 0.0) || !(fps > 0.0)) {
    throw ConfigError("suite: duration and fps must be positive");
  }
  for (const auto* p : {&robot_path, &camera_path, &skills_path}) {
    if (!p->empty() && !std::filesystem::exists(*p)) {
      throw ConfigError("suite: missing file " + p->string());
    }
  }
  failure.validate();
  oracle.validate();
}

SuiteConfig suite_config_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir) {
  SuiteConfig c;
  try {
    if (j.contains("robot")) c.robot_path = resolve(base_dir, j.at("robot").get<std::string>());
    if (j.contains("camera")) {
      c.camera_path = resolve(base_dir, j.at("camera").get<std::string>());
    }
    c.skills_path = j.contains("skills")
                        ? resolve(base_dir, j.at("skills").get<std::string>())
                        : default_skills_path();
    if (j.contains("tasks")) {
      c.tasks = j.at("tasks").get<std::vector<std::string>>();
    } else {
      const SkillLibrary library = SkillLibrary::load(c.skills_path);
      for (const auto& t : library.tasks()) {
        c.tasks.push_back(t.title);
      }
    }
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      if (s.is_array()) {
        c.seeds = s.get<std::vector<std::uint64_t>>();
      } else {
        const auto first = s.at("first").get<std::uint64_t>();
        const auto count = s.at("count").get<std::uint64_t>();
        c.seeds.clear();
        for (std::uint64_t k = 0; k < count; ++k) c.seeds.push_back(first + k);
      }
    }
    c.max_attempts = j.value("max_attempts", c.max_attempts);
    c.duration = j.value("duration_s", c.duration);
    c.fps = j.value("fps", c.fps);
    c.keypoint_feedback = j.value("keypoint_feedback", c.keypoint_feedback);
    if (j.contains("failure")) {
      const auto& f = j.at("failure");
      c.failure.p_recoverable = f.value("p_recoverable", 0.0);
      c.failure.p_irrecoverable = f.value("p_irrecoverable", 0.0);
      if (f.contains("weights")) {
        c.failure.weights.clear();
        for (const auto& [name, w] : f.at("weights").items()) {
          c.failure.weights[failure_mode_from_name(name)] = w.get<double>();
        }
      }
    }
    if (j.contains("oracle")) {
      const auto& o = j.at("oracle");
      c.oracle.false_negative_rate = o.value("false_negative_rate", 0.0);
      c.oracle.false_positive_rate = o.value("false_positive_rate", 0.0);
      c.oracle.seed = o.value("seed", std::uint64_t{0});
    }
    c.video_url = j.value("video_url", std::string());
    c.vlm_url = j.value("vlm_url", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("suite: ") + e.what());
  }
  c.validate();
  return c;
}

SuiteConfig load_suite_config(const std::filesystem::path& path) {
  const auto j = read_json_file(path);
  return suite_config_from_json(j, path.parent_path());
}

std::vector<EpisodeResult> run_suite(const SuiteConfig& config,
                                     const AdapterModel& adapter, unsigned jobs) {
  config.validate();
  Simulator sim;
  if (!config.robot_path.empty()) {
    const RobotConfig rc = load_robot_config(config.robot_path);
    sim.robot = rc.robot;
    sim.camera = rc.camera;
  }
  if (!config.camera_path.empty()) sim.camera = load_camera(config.camera_path);
  const SkillLibrary library = SkillLibrary::load(config.skills_path);

  struct Job {
    std::string task;
    std::uint64_t seed;
  };
  std::vector<Job> work;
  for (const auto& t : config.tasks) {
    for (auto s : config.seeds) work.push_back({t, s});
  }
  std::vector<EpisodeResult> results(work.size());

  auto run_one = [&](std::size_t i) {
    EpisodeConfig ec;
    ec.task = work[i].task;
    ec.seed = work[i].seed;
    ec.max_attempts = config.max_attempts;
    ec.duration = config.duration;
    ec.fps = config.fps;
    ec.failure = config.failure;
    ec.oracle = config.oracle;
    ec.keypoint_feedback = config.keypoint_feedback;

    std::unique_ptr<WorldModel> world;
    if (config.video_url.empty()) {
      GeneratorSettings gs;
      gs.robot = sim.robot;
      gs.camera = sim.camera;
      gs.workspace = sim.rules.workspace;
      world = std::make_unique<SyntheticWorldModel>(gs, config.failure);
    } else {
      world = std::make_unique<RemoteWorldModel>(RemoteEndpoint{config.video_url},
                                                 sim.camera);
    }
    std::unique_ptr<Reasoner> reasoner;
    if (config.vlm_url.empty()) {
      reasoner = std::make_unique<OracleReasoner>(library, config.oracle);
    } else {
      reasoner = std::make_unique<RemoteReasoner>(library, RemoteEndpoint{config.vlm_url});
    }
    results[i] = run_episode(ec, sim, *world, *reasoner, adapter, library);
  };

  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(work.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < work.size(); ++i) run_one(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i; (i = next++) < work.size();) run_one(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace physagent
