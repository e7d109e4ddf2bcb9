#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <fstream>
#include <numbers>

#include "physagent/errors.hpp"
#include "physagent/kinematics.hpp"
#include "physagent/robot_config.hpp"
#include "support.hpp"

using namespace physagent;
using physagent::testing::random_state;
using physagent::testing::wide_robot;

namespace {

// Composes one 2x2 rotation matrix per joint and walks the chain.
ChainPoints rotation_oracle(const KinematicChain& c, const JointState& s, Arm arm) {
  ChainPoints out;
  Eigen::Matrix2d r = Eigen::Rotation2Dd(c.base_orientation).toRotationMatrix();
  Vec2 p = c.base_position;
  for (std::size_t k = 0; k < kJointsPerArm; ++k) {
    out[k] = p;
    r = r * Eigen::Rotation2Dd(s.values[joint_offset(arm) + k]).toRotationMatrix();
    p = p + r * Vec2(c.link_lengths[k], 0.0);
  }
  r = r * Eigen::Rotation2Dd(c.finger_swing * (1.0 - s.aperture(arm))).toRotationMatrix();
  out[kJointsPerArm] = p + r * Vec2(c.gripper_link, 0.0);
  return out;
}

}  // namespace

TEST(ForwardKinematics, StraightChainLiesOnXAxis) {
  const RobotModel m = wide_robot();
  JointState s;
  s.values[gripper_index(Arm::Left)] = 1.0;
  s.values[gripper_index(Arm::Right)] = 1.0;
  const WorldPoints p = forward_kinematics(m, s);
  for (std::size_t k = 0; k < kJointsPerArm; ++k) {
    EXPECT_NEAR(p[k].x(), 0.1 * k, 1e-12);
    EXPECT_NEAR(p[k].y(), 0.0, 1e-12);
  }
  EXPECT_NEAR(p[tip_keypoint(Arm::Left)].x(), 0.7, 1e-12);
  EXPECT_NEAR(p[tip_keypoint(Arm::Left)].y(), 0.0, 1e-12);
}

TEST(ForwardKinematics, QuarterTurnOfFirstJointPointsAlongY) {
  const RobotModel m = wide_robot();
  JointState s;
  s.values[0] = std::numbers::pi / 2.0;
  s.values[gripper_index(Arm::Left)] = 1.0;
  s.values[gripper_index(Arm::Right)] = 1.0;
  const WorldPoints p = forward_kinematics(m, s);
  for (std::size_t k = 0; k < kJointsPerArm; ++k) {
    EXPECT_NEAR(p[k].x(), 0.0, 1e-12);
    EXPECT_NEAR(p[k].y(), 0.1 * k, 1e-12);
  }
  EXPECT_NEAR(p[tip_keypoint(Arm::Left)].y(), 0.7, 1e-12);
}

TEST(ForwardKinematics, MatchesRotationCompositionOracle) {
  const RobotModel m = default_robot();
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const JointState s = random_state(m, rng);
    const WorldPoints p = forward_kinematics(m, s);
    for (Arm arm : {Arm::Left, Arm::Right}) {
      const ChainPoints want = rotation_oracle(m.chain(arm), s, arm);
      for (std::size_t k = 0; k < kDofPerArm; ++k) {
        EXPECT_NEAR((p[joint_offset(arm) + k] - want[k]).norm(), 0.0, 1e-9);
      }
    }
  }
}

TEST(ForwardKinematics, ConsecutiveDistancesEqualLinkLengths) {
  const RobotModel m = default_robot();
  Rng rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const JointState s = random_state(m, rng);
    const WorldPoints p = forward_kinematics(m, s);
    ASSERT_EQ(p.size(), 14u);
    for (Arm arm : {Arm::Left, Arm::Right}) {
      const KinematicChain& c = m.chain(arm);
      const std::size_t o = joint_offset(arm);
      for (std::size_t k = 0; k + 1 < kJointsPerArm; ++k) {
        EXPECT_NEAR((p[o + k + 1] - p[o + k]).norm(), c.link_lengths[k], 1e-9);
      }
    }
  }
}

TEST(ForwardKinematics, GripperTipDistanceFromWristEqualsGripperLink) {
  const RobotModel m = default_robot();
  Rng rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const JointState s = random_state(m, rng);
    for (Arm arm : {Arm::Left, Arm::Right}) {
      const KinematicChain& c = m.chain(arm);
      const ChainPoints pts = chain_points(c, s.joints(arm), s.aperture(arm));
      double heading = c.base_orientation;
      for (double q : s.joints(arm)) heading += q;
      const Vec2 wrist = pts[kJointsPerArm - 1] +
                         c.link_lengths[5] * Vec2(std::cos(heading), std::sin(heading));
      EXPECT_NEAR((pts[kJointsPerArm] - wrist).norm(), c.gripper_link, 1e-9);
    }
  }
}

TEST(ForwardKinematics, OpenGripperTipIsToolPoint) {
  const RobotModel m = default_robot();
  Rng rng(14);
  JointState s = random_state(m, rng);
  s.values[gripper_index(Arm::Right)] = 1.0;
  const WorldPoints p = forward_kinematics(m, s);
  EXPECT_NEAR((p[tip_keypoint(Arm::Right)] - tool_points(m, s)[1]).norm(), 0.0, 1e-12);
}

TEST(ForwardKinematics, OutOfLimitStateThrows) {
  const RobotModel m = default_robot();
  JointState s;
  s.values[2] = 1.0;
  EXPECT_THROW(forward_kinematics(m, s), LimitViolation);
  s.values[2] = 0.0;
  s.values[gripper_index(Arm::Left)] = 1.5;
  EXPECT_THROW(forward_kinematics(m, s), LimitViolation);
}

TEST(Project, OffsetOnlyAtOrigin) {
  CameraModel cam;
  cam.scale = 100.0;
  cam.offset = Vec2(320.0, 240.0);
  const Keypoint k = project_point(cam, Vec2::Zero());
  EXPECT_DOUBLE_EQ(k.u, 320.0);
  EXPECT_DOUBLE_EQ(k.v, 240.0);
  EXPECT_TRUE(k.visible);
}

TEST(Project, OutsideImageIsInvisibleWithoutCoordinates) {
  CameraModel cam;
  cam.scale = 100.0;
  for (const Vec2& p : {Vec2(3.3, 0.0), Vec2(-3.3, 0.0), Vec2(0.0, 2.4), Vec2(0.0, -2.5)}) {
    const Keypoint k = project_point(cam, p);
    EXPECT_FALSE(k.visible);
    EXPECT_TRUE(std::isnan(k.u));
    EXPECT_TRUE(std::isnan(k.v));
  }
  EXPECT_TRUE(project_point(cam, Vec2(-3.2, -2.4)).visible);
}

TEST(Project, FlipMirrorsHorizontalAxis) {
  CameraModel cam;
  cam.flip_x = true;
  const Keypoint k = project_point(cam, Vec2(0.2, 0.1));
  EXPECT_DOUBLE_EQ(k.u, cam.offset.x() - cam.scale * 0.2);
  EXPECT_DOUBLE_EQ(k.v, cam.offset.y() + cam.scale * 0.1);
}

TEST(Project, UnprojectInvertsVisiblePoints) {
  Rng rng(21);
  for (bool flip : {false, true}) {
    CameraModel cam;
    cam.flip_x = flip;
    cam.scale = 237.5;
    for (int i = 0; i < 1000; ++i) {
      const Vec2 p(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      const Keypoint k = project_point(cam, p);
      if (!k.visible) continue;
      EXPECT_NEAR((unproject(cam, k.u, k.v) - p).norm(), 0.0, 1e-9);
    }
  }
}

TEST(Step, FixedPointWhenCommandEqualsState) {
  const RobotModel m = default_robot();
  Rng rng(31);
  const JointState s = random_state(m, rng);
  const JointState next = step(m, s, s, 0.125);
  EXPECT_EQ(next.values, s.values);
  EXPECT_DOUBLE_EQ(next.timestamp, s.timestamp + 0.125);
}

TEST(Step, RateLimitClampsDelta) {
  RobotModel m = wide_robot();
  m.rate_limits.fill(0.5);
  JointState cur;
  JointState cmd;
  cmd.values[1] = 1.0;
  const JointState next = step(m, cur, cmd, 0.1);
  EXPECT_NEAR(next.values[1], 0.05, 1e-15);
}

TEST(Step, ConvergesWithinClampedApproachBound) {
  const RobotModel m = default_robot();
  Rng rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    JointState cur = random_state(m, rng);
    const JointState cmd = random_state(m, rng);
    const double dt = 0.125;
    double steps_needed = 0.0;
    for (std::size_t d = 0; d < kCommandDim; ++d) {
      steps_needed = std::max(
          steps_needed,
          std::ceil(std::abs(cmd.values[d] - cur.values[d]) / (m.rate_limits[d] * dt)));
    }
    for (int i = 0; i < static_cast<int>(steps_needed); ++i) cur = step(m, cur, cmd, dt);
    for (std::size_t d = 0; d < kCommandDim; ++d) {
      EXPECT_NEAR(cur.values[d], cmd.values[d], 1e-6);
    }
  }
}

TEST(Step, NeverLeavesLimitsAndRespectsRate) {
  const RobotModel m = default_robot();
  Rng rng(33);
  for (int trial = 0; trial < 500; ++trial) {
    const JointState cur = random_state(m, rng);
    JointState cmd;
    for (double& v : cmd.values) v = rng.uniform(-5.0, 5.0);
    const double dt = rng.uniform(0.01, 0.5);
    const JointState next = step(m, cur, cmd, dt);
    EXPECT_NO_THROW(check_limits(m, next));
    for (std::size_t d = 0; d < kCommandDim; ++d) {
      EXPECT_LE(std::abs(next.values[d] - cur.values[d]), m.rate_limits[d] * dt + 1e-12);
    }
  }
}

TEST(RobotConfig, DefaultModelShape) {
  const RobotModel m = default_robot();
  EXPECT_NO_THROW(m.validate());
  EXPECT_EQ(kCommandDim, 14u);
  EXPECT_DOUBLE_EQ(m.left.base_position.x(), -0.3);
  EXPECT_DOUBLE_EQ(m.right.base_position.x(), 0.3);
  const double j6 = m.left.joint_limits[5].hi - m.left.joint_limits[5].lo;
  const double j1 = m.left.joint_limits[0].hi - m.left.joint_limits[0].lo;
  EXPECT_NEAR(j6, 2.0 * j1, 1e-12);
}

TEST(RobotConfig, JsonRoundTrip) {
  RobotConfig rc;
  rc.robot.left.link_lengths[2] = 0.12;
  rc.camera.flip_x = true;
  rc.camera.scale = 250.0;
  const RobotConfig back = robot_config_from_json(to_json(rc));
  EXPECT_EQ(back.robot.left.link_lengths, rc.robot.left.link_lengths);
  EXPECT_EQ(back.robot.rate_limits, rc.robot.rate_limits);
  EXPECT_TRUE(back.camera.flip_x);
  EXPECT_DOUBLE_EQ(back.camera.scale, 250.0);
  EXPECT_DOUBLE_EQ(back.robot.right.finger_swing, rc.robot.right.finger_swing);
}

TEST(RobotConfig, RejectsMalformedChains) {
  RobotConfig rc;
  nlohmann::json j = to_json(rc);
  j["left"]["link_lengths"][0] = -0.1;
  EXPECT_THROW(robot_config_from_json(j), ConfigError);
  j = to_json(rc);
  j["right"]["joint_limits"][1] = {0.5, 0.2};
  EXPECT_THROW(robot_config_from_json(j), ConfigError);
  EXPECT_THROW(load_robot_config("/nonexistent/robot.json"), ConfigError);
}

TEST(RobotConfig, BundledFileMatchesDefaults) {
  const RobotConfig rc = load_robot_config(std::string(PHYSAGENT_DATA_DIR) + "/robot.json");
  const RobotModel d = default_robot();
  EXPECT_EQ(rc.robot.left.link_lengths, d.left.link_lengths);
  EXPECT_DOUBLE_EQ(rc.camera.scale, default_camera().scale);
}
