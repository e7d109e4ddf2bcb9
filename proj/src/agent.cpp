#include "physagent/agent.hpp"

#include <algorithm>
#include <array>
#include <fstream>

#include "physagent/errors.hpp"
#include "physagent/ik.hpp"

namespace physagent {
namespace {

constexpr std::array<std::pair<TerminalReason, std::string_view>, 4> kReasons{{
    {TerminalReason::Success, "Success"},
    {TerminalReason::Irrecoverable, "Irrecoverable"},
    {TerminalReason::AttemptBudget, "AttemptBudget"},
    {TerminalReason::UnknownTask, "UnknownTask"},
}};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ArmAngles arm_angles(const JointState& s, Arm arm) {
  ArmAngles q;
  std::copy_n(s.values.begin() + joint_offset(arm), kJointsPerArm, q.begin());
  return q;
}

void set_arm(JointState& s, Arm arm, const ArmAngles& q) {
  std::copy(q.begin(), q.end(), s.values.begin() + joint_offset(arm));
}

}  // namespace

Execution execute_rollout(const Simulator& sim, const Observation& start,
                          const std::vector<JointState>& commands, double dt) {
  if (commands.empty()) throw ConfigError("execute_rollout: no commands");
  JointState state = start.joint_state();
  SceneState scene = start.scene();
  Execution ex{{}, start};
  ex.trajectory.reserve(commands.size());
  for (const JointState& cmd : commands) {
    const ToolPoints before = tool_points(sim.robot, state);
    state = step(sim.robot, state, cmd, dt);
    update_scene(sim.rules, scene, before, tool_points(sim.robot, state), state);
    ex.trajectory.push_back(state);
  }
  ex.after = Observation::capture(sim.robot, sim.camera, state, std::move(scene));
  return ex;
}

std::vector<JointState> track_keypoints(const Simulator& sim,
                                        const JointState& start,
                                        const std::vector<JointState>& commands,
                                        const Rollout& rollout, int iterations) {
  std::vector<JointState> out;
  out.reserve(commands.size());
  JointState prev_cmd = start;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    JointState c = commands[i];
    for (Arm arm : {Arm::Left, Arm::Right}) {
      double& grip = c.values[gripper_index(arm)];
      grip = grip >= 0.5 ? 1.0 : 0.0;
      const KinematicChain& chain = sim.robot.chain(arm);
      ArmAngles q = arm_angles(prev_cmd, arm);
      if (i > 0) {
        const ArmAngles now = arm_angles(commands[i], arm);
        const ArmAngles before = arm_angles(commands[i - 1], arm);
        for (std::size_t k = 0; k < kJointsPerArm; ++k) {
          q[k] = std::clamp(q[k] + now[k] - before[k], chain.joint_limits[k].lo,
                            chain.joint_limits[k].hi);
        }
      }
      const double aperture = c.aperture(arm);
      if (i < rollout.frames.size()) {
        const Keypoint& kp = rollout.frames[i].points[tip_keypoint(arm)];
        if (kp.visible) {
          const Vec2 target = unproject(sim.camera, kp.u, kp.v);
          for (int it = 0; it < iterations; ++it) {
            const Vec2 err = target - tip_position(chain, q, aperture);
            if (err.norm() < 1e-6) break;
            q = dls_step(chain, q, aperture, err, 0.01);
          }
        }
      }
      set_arm(c, arm, q);
    }
    out.push_back(c);
    prev_cmd = c;
  }
  return out;
}

std::string_view terminal_reason_name(TerminalReason reason) {
  return kReasons[static_cast<std::size_t>(reason)].second;
}

TerminalReason terminal_reason_from_name(std::string_view name) {
  for (const auto& [r, n] : kReasons) {
    if (n == name) return r;
  }
  throw ParseError("unknown terminal reason '" + std::string(name) + "'");
}

void EpisodeConfig::validate() const {
  if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  if (!(duration > 0.0) || !(fps > 0.0)) {
    throw ConfigError("rollout duration and fps must be positive");
  }
  failure.validate();
  oracle.validate();
}

EpisodeResult run_episode(const EpisodeConfig& config, const Simulator& sim,
                          WorldModel& world, Reasoner& reasoner,
                          const AdapterModel& adapter,
                          const SkillLibrary& library) {
  config.validate();
  if (!adapter.fitted()) throw UnfittedModel("run_episode: adapter not fitted");
  EpisodeResult result;
  result.task = config.task;
  result.seed = config.seed;

  const TaskTemplate* tmpl = library.find(config.task);
  SceneState scene;
  if (config.scene) {
    scene = *config.scene;
  } else if (tmpl != nullptr) {
    scene = tmpl->scene;
  }
  Observation obs = Observation::capture(sim.robot, sim.camera,
                                         home_state(sim.robot), std::move(scene));

  Rng rng(Rng::mix(config.seed ^ fnv1a(normalize_task(config.task))));
  Rng judge(Rng::mix(rng.next_u64() ^ config.oracle.seed));

  int attempt = 1;
  Plan plan;
  try {
    plan = reasoner.decompose(config.task, obs, attempt);
  } catch (const UnknownTask&) {
    result.terminal_reason = TerminalReason::UnknownTask;
    return result;
  } catch (const UnknownObject&) {
    result.terminal_reason = TerminalReason::Irrecoverable;
    return result;
  }

  std::size_t cursor = 0;
  const double dt = 1.0 / config.fps;
  while (true) {
    const Subtask& subtask = plan.subtasks[cursor];
    AttemptRecord rec;
    rec.attempt_index = attempt;
    rec.subtask_id = subtask.id;
    rec.skill = subtask.goal.skill;
    rec.object_id = subtask.goal.object_id;
    rec.cursor = cursor;
    rec.rollout_seed = rng.next_u64();

    std::optional<Verdict> verdict;
    try {
      RolloutRequest request{obs, reasoner.describe(subtask, obs), config.duration,
                             config.fps};
      const Rollout rollout = world.generate(request, subtask.goal, rec.rollout_seed);
      rollout.validate();
      rec.intended_failure = rollout.intended_failure;
      std::vector<JointState> commands = predict_commands(adapter, rollout);
      if (config.keypoint_feedback) {
        commands = track_keypoints(sim, obs.joint_state(), commands, rollout);
      }
      Execution ex = execute_rollout(sim, obs, commands, dt);
      try {
        verdict = reasoner.evaluate(plan, cursor, obs, ex.after, judge);
      } catch (const ParseError& e) {
        verdict = Verdict{VerdictKind::RetryCurrent, e.what()};
      } catch (const TransportError& e) {
        verdict = Verdict{VerdictKind::RetryCurrent, e.what()};
      } catch (const MalformedResponse& e) {
        verdict = Verdict{VerdictKind::RetryCurrent, e.what()};
      } catch (const ServiceError& e) {
        verdict = Verdict{VerdictKind::RetryCurrent, e.what()};
      }
      obs = std::move(ex.after);
    } catch (const Unreachable& e) {
      verdict = Verdict{VerdictKind::Irrecoverable, e.what()};
    } catch (const UnknownObject& e) {
      verdict = Verdict{VerdictKind::Irrecoverable, e.what()};
    } catch (const NoConvergence& e) {
      verdict = Verdict{VerdictKind::RetryCurrent, e.what()};
    } catch (const TransportError& e) {
      verdict = Verdict{VerdictKind::RetryCurrent, e.what()};
    } catch (const MalformedResponse& e) {
      verdict = Verdict{VerdictKind::RetryCurrent, e.what()};
    } catch (const ServiceError& e) {
      verdict = Verdict{VerdictKind::RetryCurrent, e.what()};
    }
    rec.verdict = *verdict;
    rec.wall_time = obs.time();
    result.records.push_back(rec);
    result.attempts_used = attempt;

    const VerdictKind kind = verdict->kind;
    if (kind == VerdictKind::TaskComplete ||
        (kind == VerdictKind::ContinueNext && cursor + 1 == plan.subtasks.size())) {
      result.success = true;
      result.terminal_reason = TerminalReason::Success;
      break;
    }
    if (kind == VerdictKind::ContinueNext) {
      ++cursor;
      continue;
    }
    if (kind == VerdictKind::Irrecoverable) {
      result.terminal_reason = TerminalReason::Irrecoverable;
      break;
    }
    if (attempt >= config.max_attempts) {
      result.terminal_reason = TerminalReason::AttemptBudget;
      break;
    }
    ++attempt;
    if (kind == VerdictKind::Replan) {
      try {
        plan = reasoner.decompose(config.task, obs, attempt);
      } catch (const UnknownObject&) {
        result.terminal_reason = TerminalReason::Irrecoverable;
        break;
      }
      cursor = 0;
    }
  }
  result.first_attempt_success = result.success && result.attempts_used == 1;
  return result;
}

std::vector<nlohmann::json> trace_lines(const EpisodeResult& r) {
  std::vector<nlohmann::json> lines;
  for (const auto& rec : r.records) {
    nlohmann::json j = {{"type", "attempt"},
                        {"task", r.task},
                        {"seed", r.seed},
                        {"attempt_index", rec.attempt_index},
                        {"subtask_id", rec.subtask_id},
                        {"skill", skill_name(rec.skill)},
                        {"object", rec.object_id},
                        {"cursor", rec.cursor},
                        {"rollout_seed", rec.rollout_seed},
                        {"intended_failure", nullptr},
                        {"verdict", verdict_name(rec.verdict.kind)},
                        {"rationale", rec.verdict.rationale},
                        {"wall_time", rec.wall_time}};
    if (rec.intended_failure) {
      j["intended_failure"] = failure_mode_name(*rec.intended_failure);
    }
    lines.push_back(std::move(j));
  }
  lines.push_back({{"type", "summary"},
                   {"task", r.task},
                   {"seed", r.seed},
                   {"success", r.success},
                   {"attempts_used", r.attempts_used},
                   {"first_attempt_success", r.first_attempt_success},
                   {"terminal_reason", terminal_reason_name(r.terminal_reason)}});
  return lines;
}

void write_trace(std::ostream& out, const std::vector<EpisodeResult>& results) {
  for (const auto& r : results) {
    for (const auto& line : trace_lines(r)) out << line.dump() << '\n';
  }
}

std::vector<EpisodeResult> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read trace " + path.string());
  std::vector<EpisodeResult> out;
  std::vector<AttemptRecord> pending;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "attempt") {
        AttemptRecord rec;
        rec.attempt_index = j.at("attempt_index").get<int>();
        rec.subtask_id = j.at("subtask_id").get<std::string>();
        rec.skill = skill_from_name(j.at("skill").get<std::string>());
        rec.object_id = j.at("object").get<std::string>();
        rec.cursor = j.at("cursor").get<std::size_t>();
        rec.rollout_seed = j.at("rollout_seed").get<std::uint64_t>();
        if (!j.at("intended_failure").is_null()) {
          rec.intended_failure =
              failure_mode_from_name(j.at("intended_failure").get<std::string>());
        }
        rec.verdict.kind = verdict_from_name(j.at("verdict").get<std::string>());
        rec.verdict.rationale = j.at("rationale").get<std::string>();
        rec.wall_time = j.at("wall_time").get<double>();
        pending.push_back(std::move(rec));
      } else if (type == "summary") {
        EpisodeResult r;
        r.task = j.at("task").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.success = j.at("success").get<bool>();
        r.attempts_used = j.at("attempts_used").get<int>();
        r.first_attempt_success = j.at("first_attempt_success").get<bool>();
        r.terminal_reason =
            terminal_reason_from_name(j.at("terminal_reason").get<std::string>());
        r.records = std::move(pending);
        pending.clear();
        out.push_back(std::move(r));
      } else {
        throw ParseError("unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!pending.empty()) throw ParseError(path.string() + ": trailing records without summary");
  return out;
}

}  // namespace physagent
