#pragma once

// Episode state machine: decompose, then per subtask describe -> generate
// rollout -> predict commands -> execute -> evaluate, dispatching on the
// verdict until success, an irrecoverable outcome or the attempt budget.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "physagent/adapter.hpp"
#include "physagent/reasoner.hpp"
#include "physagent/world_model.hpp"

namespace physagent {

struct Simulator {
  RobotModel robot = default_robot();
  CameraModel camera = default_camera();
  SceneRules rules;
};

struct Execution {
  std::vector<JointState> trajectory;  // one state per command
  Observation after;
};

// Steps the simulator once per command at fixed dt, applying the scene
// rules after every step. Throws ConfigError on an empty command list.
Execution execute_rollout(const Simulator& sim, const Observation& start,
                          const std::vector<JointState>& commands, double dt);

// Refines adapter commands so each arm's gripper-tip keypoint follows the
// rollout: commands are chained from the start state by the adapter's
// frame-to-frame deltas and corrected with damped least squares on the
// arm's kinematic model. Gripper commands are snapped to fully open or
// closed at 0.5.
std::vector<JointState> track_keypoints(const Simulator& sim,
                                        const JointState& start,
                                        const std::vector<JointState>& commands,
                                        const Rollout& rollout,
                                        int iterations = 5);

enum class TerminalReason { Success, Irrecoverable, AttemptBudget, UnknownTask };

std::string_view terminal_reason_name(TerminalReason reason);
TerminalReason terminal_reason_from_name(std::string_view name);

struct EpisodeConfig {
  std::string task;
  int max_attempts = 10;
  double duration = 5.0;
  double fps = 8.0;
  FailureConfig failure;
  OracleConfig oracle;
  std::uint64_t seed = 0;
  bool keypoint_feedback = true;
  // Initial scene; the task template's scene when absent.
  std::optional<SceneState> scene;

  void validate() const;
};

struct AttemptRecord {
  int attempt_index = 1;
  std::string subtask_id;
  Skill skill = Skill::Approach;
  std::string object_id;
  std::size_t cursor = 0;
  std::uint64_t rollout_seed = 0;
  std::optional<FailureMode> intended_failure;
  Verdict verdict;
  double wall_time = 0.0;  // simulated seconds since episode start
};

struct EpisodeResult {
  std::string task;
  std::uint64_t seed = 0;
  bool success = false;
  int attempts_used = 0;
  bool first_attempt_success = false;
  std::vector<AttemptRecord> records;
  TerminalReason terminal_reason = TerminalReason::AttemptBudget;
};

// Component failures fold into verdicts: Unreachable goals end the episode as
// Irrecoverable; NoConvergence, transport and parse failures count as a
// retry of the current subtask.
EpisodeResult run_episode(const EpisodeConfig& config, const Simulator& sim,
                          WorldModel& world, Reasoner& reasoner,
                          const AdapterModel& adapter,
                          const SkillLibrary& library = SkillLibrary::bundled());

// Trace lines: one {"type":"attempt",...} per record, then {"type":"summary"}.
std::vector<nlohmann::json> trace_lines(const EpisodeResult& result);
void write_trace(std::ostream& out, const std::vector<EpisodeResult>& results);
// Summaries read back from a trace file. Throws IoError / ParseError.
std::vector<EpisodeResult> read_trace(const std::filesystem::path& path);

// suite.json:
// { "robot": "robot.json", "camera": "robot.json"?, "skills": "skills.json"?,
//   "tasks": [...]?, "seeds": [..] | {"first": a, "count": n},
//   "max_attempts": 10, "duration_s": 5, "fps": 8, "keypoint_feedback": true,
//   "failure": {"p_recoverable", "p_irrecoverable", "weights": {mode: w}},
//   "oracle": {"false_negative_rate", "false_positive_rate", "seed"},
//   "video_url"?: "...", "vlm_url"?: "..." }
// Relative paths resolve against the suite file's directory.
struct SuiteConfig {
  std::filesystem::path robot_path;
  std::filesystem::path camera_path;
  std::filesystem::path skills_path;
  std::vector<std::string> tasks;  // default: every task of the skill table
  std::vector<std::uint64_t> seeds{0};
  int max_attempts = 10;
  double duration = 5.0;
  double fps = 8.0;
  bool keypoint_feedback = true;
  FailureConfig failure;
  OracleConfig oracle;
  std::string video_url;  // empty: synthetic world model
  std::string vlm_url;    // empty: oracle reasoner

  void validate() const;
};

// Throws ConfigError.
SuiteConfig load_suite_config(const std::filesystem::path& path);
SuiteConfig suite_config_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir);

// Episodes for every (task, seed), ordered by task then seed. Each episode
// gets its own world model and reasoner; results do not depend on `jobs`.
std::vector<EpisodeResult> run_suite(const SuiteConfig& config,
                                     const AdapterModel& adapter,
                                     unsigned jobs = 1);

}  // namespace physagent
