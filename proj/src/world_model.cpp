#include "physagent/world_model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>

#include "physagent/errors.hpp"

namespace physagent {
namespace {

constexpr std::array<std::pair<FailureMode, std::string_view>, 4> kModeNames{{
    {FailureMode::WrongObject, "WrongObject"},
    {FailureMode::PrematureRelease, "PrematureRelease"},
    {FailureMode::OffsetGoal, "OffsetGoal"},
    {FailureMode::DropOutOfReach, "DropOutOfReach"},
}};

// Goal after failure injection.
struct PlannedGoal {
  GoalPose pose;
  double pre_aperture = 0.0;
  std::optional<FailureMode> failure;
};

std::optional<std::string> nearest_distractor(const SceneState& scene,
                                              const SubtaskGoal& goal,
                                              const Vec2& from) {
  std::optional<std::string> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& o : scene.objects) {
    if (o.id == goal.object_id || o.id == goal.destination_id || !o.in_reach) {
      continue;
    }
    const double d = (o.position - from).norm();
    if (d < best_dist || (d == best_dist && best && o.id < *best)) {
      best_dist = d;
      best = o.id;
    }
  }
  return best;
}

PlannedGoal offset_goal(const GeneratorSettings& s, PlannedGoal nominal,
                        double angle) {
  nominal.pose.tool_target +=
      s.offset_distance * Vec2(std::cos(angle), std::sin(angle));
  nominal.failure = FailureMode::OffsetGoal;
  return nominal;
}

// Candidate goals in order of preference; the first one IK can reach wins.
std::vector<PlannedGoal> plan_goals(const GeneratorSettings& s,
                                    const RolloutRequest& request,
                                    const SubtaskGoal& goal,
                                    std::optional<FailureMode> mode, Rng& rng) {
  const SceneState& scene = request.initial.scene();
  const Vec2 tool = request.initial.tool_point(goal.arm);
  const double aperture = request.initial.joint_state().aperture(goal.arm);

  PlannedGoal nominal;
  nominal.pose = resolve_goal(goal, scene, tool, s.geometry);
  nominal.pre_aperture = aperture;

  // Drawn unconditionally so the stream does not depend on the mode.
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);

  std::vector<PlannedGoal> out;
  const auto push_offsets = [&] {
    out.push_back(offset_goal(s, nominal, angle));
    out.push_back(offset_goal(s, nominal, angle + std::numbers::pi));
  };

  if (mode == FailureMode::WrongObject) {
    const SceneObject& ref = *scene.find(goal.skill == Skill::Place &&
                                                 goal.destination_id
                                             ? *goal.destination_id
                                             : goal.object_id);
    auto distractor = nearest_distractor(scene, goal, ref.position);
    if (distractor && goal.skill != Skill::Release) {
      SubtaskGoal wrong = goal;
      if (goal.skill == Skill::Place) {
        wrong.destination_id = *distractor;
      } else {
        wrong.object_id = *distractor;
      }
      PlannedGoal g = nominal;
      g.pose = resolve_goal(wrong, scene, tool, s.geometry);
      g.failure = FailureMode::WrongObject;
      out.push_back(g);
    }
    push_offsets();  // no distractor: degrade to an offset goal
  } else if (mode == FailureMode::PrematureRelease) {
    PlannedGoal g = nominal;
    g.pre_aperture = 1.0;
    g.pose.aperture = 1.0;
    g.failure = FailureMode::PrematureRelease;
    out.push_back(g);
  } else if (mode == FailureMode::OffsetGoal) {
    push_offsets();
  } else if (mode == FailureMode::DropOutOfReach) {
    if (goal.skill == Skill::Approach || goal.skill == Skill::Release) {
      push_offsets();
    } else {
      const SceneObject& obj = *scene.find(goal.object_id);
      PlannedGoal g = nominal;
      g.pose.tool_target =
          Vec2(obj.position.x(), s.workspace.y_min - s.drop_margin);
      g.pose.aperture = 1.0;
      if (goal.skill == Skill::Grasp) g.pre_aperture = 0.0;
      g.failure = FailureMode::DropOutOfReach;
      out.push_back(g);
    }
  }
  out.push_back(nominal);
  return out;
}

}  // namespace

std::string_view failure_mode_name(FailureMode mode) {
  return kModeNames[static_cast<std::size_t>(mode)].second;
}

FailureMode failure_mode_from_name(std::string_view name) {
  for (const auto& [mode, n] : kModeNames) {
    if (n == name) return mode;
  }
  throw ConfigError("unknown failure mode '" + std::string(name) + "'");
}

bool is_recoverable(FailureMode mode) {
  return mode != FailureMode::DropOutOfReach;
}

void FailureConfig::validate() const {
  const auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(p_recoverable) || !in_unit(p_irrecoverable) ||
      p_recoverable + p_irrecoverable > 1.0 + 1e-12) {
    throw ConfigError("failure probabilities must lie in [0,1] and sum <= 1");
  }
  double total = 0.0;
  for (const auto& [mode, w] : weights) {
    if (!(w >= 0.0)) throw ConfigError("failure weights must be >= 0");
    if (is_recoverable(mode)) total += w;
  }
  if (p_recoverable > 0.0 && !(total > 0.0)) {
    throw ConfigError("p_recoverable > 0 needs a positive recoverable weight");
  }
}

std::optional<FailureMode> FailureConfig::sample(Rng& rng) const {
  const double u = rng.uniform();
  if (u < p_irrecoverable) return FailureMode::DropOutOfReach;
  if (u >= p_irrecoverable + p_recoverable) return std::nullopt;
  // Reuse the position inside the recoverable band to pick the mode.
  double total = 0.0;
  for (const auto& [mode, w] : weights) {
    if (is_recoverable(mode)) total += w;
  }
  double pick = (u - p_irrecoverable) / p_recoverable * total;
  std::optional<FailureMode> last;
  for (const auto& [mode, w] : weights) {
    if (!is_recoverable(mode) || w <= 0.0) continue;
    last = mode;
    if (pick < w) return mode;
    pick -= w;
  }
  return last;
}

void Rollout::validate() const {
  if (frames.size() < 2) throw MalformedResponse("rollout needs >= 2 frames");
  if (!(fps > 0.0)) throw MalformedResponse("rollout fps must be positive");
}

int RolloutRequest::frame_count() const {
  return static_cast<int>(std::lround(duration * fps));
}

double minimum_jerk(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

Rollout generate_rollout(const GeneratorSettings& settings,
                         const RolloutRequest& request, const SubtaskGoal& goal,
                         const FailureConfig& failure, std::uint64_t seed) {
  if (!(request.duration > 0.0) || !(request.fps > 0.0)) {
    throw ConfigError("rollout duration and fps must be positive");
  }
  const int n = request.frame_count();
  if (n < 2) throw ConfigError("rollout needs duration * fps >= 2");
  const SceneState& scene = request.initial.scene();
  if (scene.find(goal.object_id) == nullptr) {
    throw UnknownObject("prompt references unknown object '" + goal.object_id +
                        "'");
  }

  Rng rng(seed);
  const auto mode = failure.sample(rng);
  const auto candidates = plan_goals(settings, request, goal, mode, rng);

  const JointState& q0 = request.initial.joint_state();
  const KinematicChain& chain = settings.robot.chain(goal.arm);
  ArmAngles init;
  std::copy_n(q0.values.begin() + joint_offset(goal.arm), kJointsPerArm,
              init.begin());

  ArmAngles q_goal{};
  const PlannedGoal* chosen = nullptr;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const bool last = i + 1 == candidates.size();
    try {
      q_goal = inverse_kinematics(chain, candidates[i].pose.tool_target, init,
                                  1.0, settings.ik);
      chosen = &candidates[i];
      break;
    } catch (const Unreachable&) {
      if (last) throw;
    } catch (const NoConvergence&) {
      if (last) throw;
    }
  }

  Rollout rollout;
  rollout.fps = request.fps;
  rollout.prompt = request.prompt;
  rollout.generator_id = std::string(kSyntheticGeneratorId);
  rollout.seed = seed;
  rollout.intended_failure = chosen->failure;
  rollout.frames.reserve(n);
  rollout.joint_trajectory.reserve(n);

  const std::size_t off = joint_offset(goal.arm);
  const std::size_t grip = gripper_index(goal.arm);
  const double a0 = q0.values[grip];
  const auto& timing = settings.timing;
  for (int i = 0; i < n; ++i) {
    const double tau = static_cast<double>(i) / (n - 1);
    JointState s = q0;
    s.timestamp = q0.timestamp + i / request.fps;
    const double arm_s =
        minimum_jerk((tau - timing.arm_start) / (timing.arm_end - timing.arm_start));
    for (std::size_t k = 0; k < kJointsPerArm; ++k) {
      s.values[off + k] = init[k] + (q_goal[k] - init[k]) * arm_s;
    }
    if (tau <= timing.arm_start) {
      s.values[grip] = a0 + (chosen->pre_aperture - a0) *
                                minimum_jerk(tau / timing.arm_start);
    } else {
      const double post =
          minimum_jerk((tau - timing.arm_end) / (1.0 - timing.arm_end));
      s.values[grip] = chosen->pre_aperture +
                       (chosen->pose.aperture - chosen->pre_aperture) * post;
    }
    s = clamp_to_limits(settings.robot, s);
    rollout.frames.push_back(
        project(settings.camera, forward_kinematics(settings.robot, s)));
    rollout.joint_trajectory.push_back(s);
  }
  return rollout;
}

}  // namespace physagent
