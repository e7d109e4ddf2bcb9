#include "physagent/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "physagent/errors.hpp"

namespace physagent {

const char* arm_name(Arm arm) { return arm == Arm::Left ? "left" : "right"; }

double KinematicChain::reach() const {
  double total = gripper_link;
  for (double l : link_lengths) total += l;
  return total;
}

void KinematicChain::validate() const {
  for (std::size_t k = 0; k < kJointsPerArm; ++k) {
    if (!(link_lengths[k] > 0.0)) {
      throw ConfigError("link length " + std::to_string(k + 1) +
                        " must be positive");
    }
    if (!(joint_limits[k].lo < joint_limits[k].hi)) {
      throw ConfigError("joint limit " + std::to_string(k + 1) +
                        " must satisfy lo < hi");
    }
  }
  if (!(gripper_link > 0.0)) throw ConfigError("gripper link must be positive");
}

JointLimit RobotModel::limit(std::size_t dim) const {
  const Arm arm = dim < kDofPerArm ? Arm::Left : Arm::Right;
  const std::size_t local = dim - joint_offset(arm);
  if (local == kJointsPerArm) return {0.0, 1.0};
  return chain(arm).joint_limits[local];
}

void RobotModel::validate() const {
  left.validate();
  right.validate();
  for (double r : rate_limits) {
    if (!(r > 0.0)) throw ConfigError("rate limits must be positive");
  }
}

void CameraModel::validate() const {
  if (!(scale > 0.0)) throw ConfigError("camera scale must be positive");
  if (width <= 0 || height <= 0) {
    throw ConfigError("camera image size must be positive");
  }
}

RobotModel default_robot() {
  constexpr double pi = std::numbers::pi;
  KinematicChain chain;
  chain.link_lengths.fill(0.1);
  for (std::size_t k = 0; k + 1 < kJointsPerArm; ++k) {
    chain.joint_limits[k] = {-pi / 4.0, pi / 4.0};
  }
  chain.joint_limits[kJointsPerArm - 1] = {-pi / 2.0, pi / 2.0};
  chain.gripper_link = 0.05;
  chain.finger_swing = 1.2;

  RobotModel model;
  model.left = chain;
  model.left.base_position = Vec2(-0.3, 0.0);
  model.left.base_orientation = 0.0;
  model.right = chain;
  model.right.base_position = Vec2(0.3, 0.0);
  model.right.base_orientation = pi;
  // Mirror the finger so both grippers open outward.
  model.right.finger_swing = -chain.finger_swing;
  model.rate_limits.fill(2.5);
  model.rate_limits[gripper_index(Arm::Left)] = 3.0;
  model.rate_limits[gripper_index(Arm::Right)] = 3.0;
  return model;
}

CameraModel default_camera() { return CameraModel{}; }

ChainPoints chain_points(const KinematicChain& chain,
                         std::span<const double, kJointsPerArm> q,
                         double aperture) {
  ChainPoints out;
  Vec2 p = chain.base_position;
  double heading = chain.base_orientation;
  for (std::size_t k = 0; k < kJointsPerArm; ++k) {
    out[k] = p;
    heading += q[k];
    p += chain.link_lengths[k] * Vec2(std::cos(heading), std::sin(heading));
  }
  heading += chain.finger_swing * (1.0 - aperture);
  out[kJointsPerArm] =
      p + chain.gripper_link * Vec2(std::cos(heading), std::sin(heading));
  return out;
}

Vec2 tool_point(const KinematicChain& chain,
                std::span<const double, kJointsPerArm> q) {
  return chain_points(chain, q, 1.0)[kJointsPerArm];
}

std::array<Vec2, 2> tool_points(const RobotModel& model,
                                const JointState& state) {
  return {tool_point(model.left, state.joints(Arm::Left)),
          tool_point(model.right, state.joints(Arm::Right))};
}

void check_limits(const RobotModel& model, const JointState& state) {
  for (std::size_t d = 0; d < kCommandDim; ++d) {
    const JointLimit lim = model.limit(d);
    const double v = state.values[d];
    if (!(v >= lim.lo && v <= lim.hi)) {
      throw LimitViolation("dimension " + std::to_string(d) + " value " +
                           std::to_string(v) + " outside [" +
                           std::to_string(lim.lo) + ", " +
                           std::to_string(lim.hi) + "]");
    }
  }
}

WorldPoints forward_kinematics(const RobotModel& model,
                               const JointState& state) {
  check_limits(model, state);
  WorldPoints out;
  for (Arm arm : {Arm::Left, Arm::Right}) {
    const auto pts =
        chain_points(model.chain(arm), state.joints(arm), state.aperture(arm));
    std::copy(pts.begin(), pts.end(), out.begin() + joint_offset(arm));
  }
  return out;
}

Keypoint project_point(const CameraModel& camera, const Vec2& p) {
  const double sx = camera.scale * p.x();
  Keypoint kp;
  kp.u = camera.flip_x ? camera.offset.x() - sx : camera.offset.x() + sx;
  kp.v = camera.scale * p.y() + camera.offset.y();
  kp.visible = kp.u >= 0.0 && kp.u < camera.width && kp.v >= 0.0 &&
               kp.v < camera.height;
  if (!kp.visible) {
    kp.u = std::numeric_limits<double>::quiet_NaN();
    kp.v = std::numeric_limits<double>::quiet_NaN();
  }
  return kp;
}

KeypointFrame project(const CameraModel& camera, const WorldPoints& points) {
  KeypointFrame frame;
  for (std::size_t i = 0; i < kKeypointCount; ++i) {
    frame.points[i] = project_point(camera, points[i]);
  }
  return frame;
}

Vec2 unproject(const CameraModel& camera, double u, double v) {
  const double du = u - camera.offset.x();
  const double x = (camera.flip_x ? -du : du) / camera.scale;
  return Vec2(x, (v - camera.offset.y()) / camera.scale);
}

JointState step(const RobotModel& model, const JointState& current,
                const JointState& command, double dt) {
  if (!(dt > 0.0)) throw Error("step: dt must be positive");
  JointState next = current;
  for (std::size_t d = 0; d < kCommandDim; ++d) {
    const double max_delta = model.rate_limits[d] * dt;
    const double delta =
        std::clamp(command.values[d] - current.values[d], -max_delta, max_delta);
    const JointLimit lim = model.limit(d);
    next.values[d] = std::clamp(current.values[d] + delta, lim.lo, lim.hi);
  }
  next.timestamp = current.timestamp + dt;
  return next;
}

JointState clamp_to_limits(const RobotModel& model, JointState state) {
  for (std::size_t d = 0; d < kCommandDim; ++d) {
    const JointLimit lim = model.limit(d);
    state.values[d] = std::clamp(state.values[d], lim.lo, lim.hi);
  }
  return state;
}

}  // namespace physagent
