#include <gtest/gtest.h>

#include <cmath>

#include "physagent/errors.hpp"
#include "physagent/world_model.hpp"
#include "support.hpp"

using namespace physagent;
using physagent::testing::failure_rates;

namespace {

SceneState cube_scene() {
  SceneState s;
  s.objects.push_back({"cube", Vec2(0.12, 0.22)});
  s.objects.push_back({"ball", Vec2(0.05, 0.3)});
  return s;
}

RolloutRequest request_for(const GeneratorSettings& g, SceneState scene) {
  return {Observation::capture(g.robot, g.camera, home_state(g.robot), std::move(scene)),
          "approach object 'cube'", 5.0, 8.0};
}

double pixel_distance(const Keypoint& k, const CameraModel& cam, const Vec2& world) {
  const Keypoint w = project_point(cam, world);
  return std::hypot(k.u - w.u, k.v - w.v);
}

FailureConfig only(FailureMode mode) {
  FailureConfig f;
  f.p_recoverable = is_recoverable(mode) ? 1.0 : 0.0;
  f.p_irrecoverable = is_recoverable(mode) ? 0.0 : 1.0;
  for (auto& [m, w] : f.weights) w = m == mode ? 1.0 : 0.0;
  return f;
}

}  // namespace

TEST(Rollout, FiveSecondsAtEightFpsIsFortyFrames) {
  const GeneratorSettings g;
  const Rollout r = generate_rollout(g, request_for(g, cube_scene()),
                                     {Skill::Approach, Arm::Right, "cube", {}}, {}, 1);
  EXPECT_EQ(r.frames.size(), 40u);
  EXPECT_EQ(r.joint_trajectory.size(), 40u);
  EXPECT_FALSE(r.intended_failure.has_value());
  EXPECT_NO_THROW(r.validate());
}

TEST(Rollout, CleanApproachEndsOnTheObject) {
  const GeneratorSettings g;
  const Rollout r = generate_rollout(g, request_for(g, cube_scene()),
                                     {Skill::Approach, Arm::Right, "cube", {}}, {}, 2);
  const Keypoint tip = r.frames.back().points[tip_keypoint(Arm::Right)];
  ASSERT_TRUE(tip.visible);
  EXPECT_LE(pixel_distance(tip, g.camera, Vec2(0.12, 0.22)), 5.0);
}

TEST(Rollout, WrongObjectEndsOnTheDistractor) {
  const GeneratorSettings g;
  const Rollout r =
      generate_rollout(g, request_for(g, cube_scene()),
                       {Skill::Approach, Arm::Right, "cube", {}}, only(FailureMode::WrongObject), 3);
  ASSERT_EQ(r.intended_failure, FailureMode::WrongObject);
  const Keypoint tip = r.frames.back().points[tip_keypoint(Arm::Right)];
  EXPECT_LE(pixel_distance(tip, g.camera, Vec2(0.05, 0.3)), 5.0);
}

TEST(Rollout, OffsetGoalMissesByOffsetDistance) {
  const GeneratorSettings g;
  const Rollout r =
      generate_rollout(g, request_for(g, cube_scene()),
                       {Skill::Approach, Arm::Right, "cube", {}}, only(FailureMode::OffsetGoal), 4);
  ASSERT_EQ(r.intended_failure, FailureMode::OffsetGoal);
  const Keypoint tip = r.frames.back().points[tip_keypoint(Arm::Right)];
  const Vec2 end = unproject(g.camera, tip.u, tip.v);
  EXPECT_NEAR((end - Vec2(0.12, 0.22)).norm(), g.offset_distance, 1e-3);
}

TEST(Rollout, UnknownObjectThrows) {
  const GeneratorSettings g;
  EXPECT_THROW(generate_rollout(g, request_for(g, cube_scene()),
                                {Skill::Grasp, Arm::Left, "teapot", {}}, {}, 1),
               UnknownObject);
}

TEST(Rollout, UnreachableGoalPropagates) {
  const GeneratorSettings g;
  SceneState far;
  far.objects.push_back({"cube", Vec2(0.0, 2.0)});
  EXPECT_THROW(generate_rollout(g, request_for(g, far),
                                {Skill::Approach, Arm::Left, "cube", {}}, {}, 1),
               Unreachable);
}

TEST(Rollout, TooFewFramesIsConfigError) {
  const GeneratorSettings g;
  RolloutRequest req = request_for(g, cube_scene());
  req.duration = 0.1;
  EXPECT_THROW(generate_rollout(g, req, {Skill::Approach, Arm::Right, "cube", {}}, {}, 1),
               ConfigError);
}

TEST(Rollout, FramesAreKinematicallyConsistent) {
  const GeneratorSettings g;
  Rng rng(51);
  const FailureConfig mixed = failure_rates(0.5, 0.2);
  for (int trial = 0; trial < 40; ++trial) {
    const Skill skill = trial % 3 == 0 ? Skill::Approach : trial % 3 == 1 ? Skill::Grasp : Skill::Lift;
    const Rollout r = generate_rollout(g, request_for(g, cube_scene()),
                                       {skill, Arm::Right, "cube", {}}, mixed, rng.next_u64());
    ASSERT_EQ(r.frames.size(), r.joint_trajectory.size());
    for (std::size_t f = 0; f < r.frames.size(); ++f) {
      const JointState& s = r.joint_trajectory[f];
      ASSERT_NO_THROW(check_limits(g.robot, s));
      const KeypointFrame want = project(g.camera, forward_kinematics(g.robot, s));
      for (std::size_t k = 0; k < kKeypointCount; ++k) {
        ASSERT_EQ(r.frames[f].points[k].visible, want.points[k].visible);
        if (!want.points[k].visible) continue;
        EXPECT_NEAR(r.frames[f].points[k].u, want.points[k].u, 1e-6);
        EXPECT_NEAR(r.frames[f].points[k].v, want.points[k].v, 1e-6);
      }
    }
  }
}

TEST(Rollout, SameSeedIsBitIdentical) {
  const GeneratorSettings g;
  const FailureConfig mixed = failure_rates(0.5, 0.2);
  const SubtaskGoal goal{Skill::Grasp, Arm::Right, "cube", {}};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Rollout a = generate_rollout(g, request_for(g, cube_scene()), goal, mixed, seed);
    const Rollout b = generate_rollout(g, request_for(g, cube_scene()), goal, mixed, seed);
    ASSERT_EQ(a.frames.size(), b.frames.size());
    EXPECT_EQ(a.intended_failure, b.intended_failure);
    for (std::size_t f = 0; f < a.frames.size(); ++f) {
      EXPECT_EQ(a.joint_trajectory[f].values, b.joint_trajectory[f].values);
    }
  }
}

TEST(Rollout, CleanGoalsAreAchievedForReachableTargets) {
  const GeneratorSettings g;
  Rng rng(52);
  for (int trial = 0; trial < 60; ++trial) {
    SceneState s;
    const Vec2 target(rng.uniform(-0.15, 0.15), rng.uniform(0.15, 0.35));
    s.objects.push_back({"obj", target});
    s.objects.push_back({"dest", Vec2(rng.uniform(-0.15, 0.15), rng.uniform(0.15, 0.35))});
    const Arm arm = target.x() >= 0 ? Arm::Right : Arm::Left;
    const Skill skill = trial % 2 ? Skill::Approach : Skill::Lift;
    const SubtaskGoal goal{skill, arm, "obj", {}};
    const GoalPose pose = resolve_goal(goal, s, Vec2::Zero(), g.geometry);
    const Rollout r = generate_rollout(g, request_for(g, s), goal, {}, rng.next_u64());
    const Vec2 end = tool_point(g.robot.chain(arm), r.joint_trajectory.back().joints(arm));
    const Keypoint k = project_point(g.camera, end);
    EXPECT_LE(pixel_distance(k, g.camera, pose.tool_target), 5.0);
  }
}

TEST(Rollout, MinimumJerkProfile) {
  EXPECT_DOUBLE_EQ(minimum_jerk(0.0), 0.0);
  EXPECT_DOUBLE_EQ(minimum_jerk(1.0), 1.0);
  EXPECT_DOUBLE_EQ(minimum_jerk(0.5), 0.5);
  EXPECT_DOUBLE_EQ(minimum_jerk(-1.0), 0.0);
  for (double s = 0.0; s < 1.0; s += 0.01) EXPECT_LE(minimum_jerk(s), minimum_jerk(s + 0.01));
}

TEST(FailureInjection, ProbabilitiesValidated) {
  EXPECT_THROW((FailureConfig{0.7, 0.5, {}}.validate()), ConfigError);
  EXPECT_THROW((FailureConfig{-0.1, 0.0, {}}.validate()), ConfigError);
  FailureConfig zero_weights{0.5, 0.0, {}};
  for (auto& [m, w] : zero_weights.weights) w = 0.0;
  EXPECT_THROW(zero_weights.validate(), ConfigError);
  EXPECT_NO_THROW(failure_rates(0.4, 0.6).validate());
}

TEST(FailureInjection, SampleFrequenciesMatchConfig) {
  const FailureConfig f = failure_rates(0.3, 0.1);
  Rng rng(53);
  int none = 0, irr = 0, rec = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto m = f.sample(rng);
    if (!m) ++none;
    else if (is_recoverable(*m)) ++rec;
    else ++irr;
  }
  EXPECT_NEAR(none / double(n), 0.6, 0.01);
  EXPECT_NEAR(rec / double(n), 0.3, 0.01);
  EXPECT_NEAR(irr / double(n), 0.1, 0.01);
}

TEST(FailureInjection, ModeNamesRoundTrip) {
  for (FailureMode m : {FailureMode::WrongObject, FailureMode::PrematureRelease,
                        FailureMode::OffsetGoal, FailureMode::DropOutOfReach}) {
    EXPECT_EQ(failure_mode_from_name(failure_mode_name(m)), m);
  }
  EXPECT_THROW(failure_mode_from_name("Gremlins"), ConfigError);
}

TEST(Scene, GraspCarryAndReleaseRules) {
  const SceneRules rules;
  SceneState s;
  s.objects.push_back({"cube", Vec2(0.1, 0.2)});
  JointState state;
  state.values[gripper_index(Arm::Left)] = 0.0;
  ToolPoints at{Vec2(0.1, 0.21), Vec2(1.0, 1.0)};
  update_scene(rules, s, at, at, state);
  ASSERT_EQ(s.objects[0].grasped_by, Arm::Left);
  ToolPoints moved{Vec2(0.1, 0.35), Vec2(1.0, 1.0)};
  update_scene(rules, s, at, moved, state);
  EXPECT_NEAR((s.objects[0].position - Vec2(0.1, 0.35)).norm(), 0.0, 1e-12);
  state.values[gripper_index(Arm::Left)] = 1.0;
  update_scene(rules, s, moved, moved, state);
  EXPECT_FALSE(s.objects[0].grasped_by.has_value());
  EXPECT_TRUE(s.objects[0].in_reach);
}

TEST(Scene, ReleaseOutsideWorkspaceLeavesObjectOutOfReach) {
  const SceneRules rules;
  SceneState s;
  s.objects.push_back({"cube", Vec2(0.1, 0.0), true, false, Arm::Right});
  JointState state;
  state.values[gripper_index(Arm::Right)] = 1.0;
  const ToolPoints t{Vec2(-1.0, -1.0), Vec2(0.1, 0.0)};
  update_scene(rules, s, t, t, state);
  EXPECT_FALSE(s.objects[0].in_reach);
}

TEST(Scene, PushMovesPushableObjectsOnly) {
  const SceneRules rules;
  SceneState s;
  s.objects.push_back({"cube", Vec2(0.0, 0.2), false, true});
  s.objects.push_back({"ball", Vec2(0.0, 0.2)});
  JointState state;
  state.values[gripper_index(Arm::Left)] = 1.0;
  state.values[gripper_index(Arm::Right)] = 1.0;
  update_scene(rules, s, {Vec2(0.0, 0.19), Vec2(1, 1)}, {Vec2(0.0, 0.24), Vec2(1, 1)}, state);
  EXPECT_NEAR(s.objects[0].position.y(), 0.25, 1e-12);
  EXPECT_NEAR(s.objects[1].position.y(), 0.2, 1e-12);
}

TEST(Scene, DuplicateIdsRejected) {
  SceneState s;
  s.objects.push_back({"a", Vec2::Zero()});
  s.objects.push_back({"a", Vec2::Zero()});
  EXPECT_THROW(s.validate(), ConfigError);
}
