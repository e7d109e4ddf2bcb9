#pragma once

// Planar bimanual kinematic model, affine camera and command-tracking
// execution dynamics.

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <span>
#include <utility>

namespace physagent {

using Vec2 = Eigen::Vector2d;

inline constexpr std::size_t kJointsPerArm = 6;
inline constexpr std::size_t kDofPerArm = kJointsPerArm + 1;  // + gripper
inline constexpr std::size_t kCommandDim = 2 * kDofPerArm;     // 14
inline constexpr std::size_t kKeypointCount = 2 * kDofPerArm;  // 14

enum class Arm { Left = 0, Right = 1 };

const char* arm_name(Arm arm);

// Index of the gripper aperture / first joint of an arm inside a 14-vector.
constexpr std::size_t joint_offset(Arm arm) {
  return arm == Arm::Left ? 0 : kDofPerArm;
}
constexpr std::size_t gripper_index(Arm arm) {
  return joint_offset(arm) + kJointsPerArm;
}
// Keypoint index of an arm's gripper tip.
constexpr std::size_t tip_keypoint(Arm arm) { return gripper_index(arm); }

struct JointLimit {
  double lo = 0.0;
  double hi = 0.0;
};

struct KinematicChain {
  std::array<double, kJointsPerArm> link_lengths{};
  std::array<JointLimit, kJointsPerArm> joint_limits{};
  double gripper_link = 0.05;
  Vec2 base_position = Vec2::Zero();
  double base_orientation = 0.0;
  // The tracked gripper keypoint sits on a finger that rotates away from the
  // last link by finger_swing * (1 - aperture) radians; with the gripper fully
  // open it coincides with the tool point.
  double finger_swing = 0.0;

  double reach() const;
  // Throws ConfigError when the chain is malformed.
  void validate() const;
};

struct RobotModel {
  KinematicChain left;
  KinematicChain right;
  std::array<double, kCommandDim> rate_limits{};

  const KinematicChain& chain(Arm arm) const {
    return arm == Arm::Left ? left : right;
  }
  // Limits for any of the 14 dimensions (apertures are [0, 1]).
  JointLimit limit(std::size_t dim) const;
  void validate() const;
};

struct JointState {
  std::array<double, kCommandDim> values{};
  double timestamp = 0.0;

  double aperture(Arm arm) const { return values[gripper_index(arm)]; }
  std::span<const double, kJointsPerArm> joints(Arm arm) const {
    return std::span<const double, kJointsPerArm>(
        values.data() + joint_offset(arm), kJointsPerArm);
  }
  friend bool operator==(const JointState&, const JointState&) = default;
};

struct CameraModel {
  double scale = 300.0;  // pixels per meter
  Vec2 offset{320.0, 240.0};
  int width = 640;
  int height = 480;
  bool flip_x = false;

  void validate() const;
};

struct Keypoint {
  double u = 0.0;
  double v = 0.0;
  bool visible = false;
};

// Fixed ordering: left J1..J6, left gripper tip, right J1..J6, right tip.
struct KeypointFrame {
  std::array<Keypoint, kKeypointCount> points{};
};

using WorldPoints = std::array<Vec2, kKeypointCount>;
using ChainPoints = std::array<Vec2, kDofPerArm>;

// Canonical UR3-like bimanual model.
RobotModel default_robot();
CameraModel default_camera();

// Joint origins 1..6 and the gripper tip of one chain. No limit checks.
ChainPoints chain_points(const KinematicChain& chain,
                         std::span<const double, kJointsPerArm> q,
                         double aperture);

// Aperture-independent grasp point: the gripper tip of the open gripper.
Vec2 tool_point(const KinematicChain& chain,
                std::span<const double, kJointsPerArm> q);
std::array<Vec2, 2> tool_points(const RobotModel& model,
                                const JointState& state);

// Throws LimitViolation when any dimension is outside its limits.
void check_limits(const RobotModel& model, const JointState& state);

WorldPoints forward_kinematics(const RobotModel& model, const JointState& state);

Keypoint project_point(const CameraModel& camera, const Vec2& p);
KeypointFrame project(const CameraModel& camera, const WorldPoints& points);
Vec2 unproject(const CameraModel& camera, double u, double v);

JointState step(const RobotModel& model, const JointState& current,
                const JointState& command, double dt);

JointState clamp_to_limits(const RobotModel& model, JointState state);

}  // namespace physagent
