#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>

#include "physagent/kinematics.hpp"
#include "physagent/rng.hpp"
#include "physagent/world_model.hpp"

namespace physagent::testing {

inline JointState random_state(const RobotModel& model, Rng& rng) {
  JointState s;
  for (std::size_t d = 0; d < kCommandDim; ++d) {
    const JointLimit lim = model.limit(d);
    s.values[d] = rng.uniform(lim.lo, lim.hi);
  }
  return s;
}

// Default links with a 0.1 m gripper link and +-pi limits.
inline RobotModel wide_robot() {
  RobotModel m = default_robot();
  for (KinematicChain* c : {&m.left, &m.right}) {
    c->gripper_link = 0.1;
    for (auto& lim : c->joint_limits) lim = {-std::numbers::pi, std::numbers::pi};
  }
  m.left.base_position = Vec2::Zero();
  return m;
}

inline FailureConfig failure_rates(double recoverable, double irrecoverable) {
  FailureConfig f;
  f.p_recoverable = recoverable;
  f.p_irrecoverable = irrecoverable;
  return f;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("physagent_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace physagent::testing
