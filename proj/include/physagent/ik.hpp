#pragma once

#include <array>

#include "physagent/kinematics.hpp"

namespace physagent {

using ArmAngles = std::array<double, kJointsPerArm>;

struct IkOptions {
  int max_iterations = 200;
  double tolerance = 1e-5;  // meters
  double damping = 0.02;
  double max_step = 0.05;   // meters of task-space error per iteration
  int restarts = 32;        // extra deterministic seeds after `init`
};

// Damped-least-squares IK for the gripper tip of one chain, starting at
// `init` and respecting joint limits. The aperture fixes the finger angle;
// the default (open) solves for the tool point.
// Throws Unreachable when the target lies beyond the chain's total reach and
// NoConvergence when no seed reaches `tolerance` (tip error is always checked
// against 1e-3 m).
ArmAngles inverse_kinematics(const KinematicChain& chain, const Vec2& target,
                             const ArmAngles& init, double aperture = 1.0,
                             const IkOptions& options = {});

Vec2 tip_position(const KinematicChain& chain, const ArmAngles& q,
                  double aperture);

// d(tip)/dq, one column per joint.
Eigen::Matrix<double, 2, kJointsPerArm> tip_jacobian(const KinematicChain& chain,
                                                     const ArmAngles& q,
                                                     double aperture);

// One damped-least-squares correction toward `error` (task space), honouring
// joint limits by freezing joints pinned at a bound.
ArmAngles dls_step(const KinematicChain& chain, const ArmAngles& q,
                   double aperture, const Vec2& error, double damping);

}  // namespace physagent
