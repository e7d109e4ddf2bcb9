#include "physagent/ik.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "physagent/errors.hpp"
#include "physagent/rng.hpp"

namespace physagent {
namespace {

using Jacobian = Eigen::Matrix<double, 2, kJointsPerArm>;

constexpr double kAcceptTolerance = 1e-3;

bool within_limits(const KinematicChain& chain, const ArmAngles& q) {
  for (std::size_t k = 0; k < kJointsPerArm; ++k) {
    if (q[k] < chain.joint_limits[k].lo || q[k] > chain.joint_limits[k].hi) {
      return false;
    }
  }
  return true;
}

// Returns the final tip error; q is updated in place.
double solve_from(const KinematicChain& chain, const Vec2& target,
                  ArmAngles& q, double aperture, const IkOptions& opt) {
  double err = (target - tip_position(chain, q, aperture)).norm();
  for (int it = 0; it < opt.max_iterations && err > opt.tolerance; ++it) {
    Vec2 e = target - tip_position(chain, q, aperture);
    const double n = e.norm();
    if (n > opt.max_step) e *= opt.max_step / n;
    // Damping fades out near the solution so the final iterations are
    // Gauss-Newton.
    const double lambda = std::min(opt.damping, n);
    q = dls_step(chain, q, aperture, e, lambda);
    const double next = (target - tip_position(chain, q, aperture)).norm();
    if (it > 20 && next > 0.999 * err && next > opt.tolerance) {
      err = next;
      break;  // stalled
    }
    err = next;
  }
  return err;
}

}  // namespace

Vec2 tip_position(const KinematicChain& chain, const ArmAngles& q,
                  double aperture) {
  return chain_points(chain, std::span<const double, kJointsPerArm>(q),
                      aperture)[kJointsPerArm];
}

Jacobian tip_jacobian(const KinematicChain& chain, const ArmAngles& q,
                      double aperture) {
  const auto pts =
      chain_points(chain, std::span<const double, kJointsPerArm>(q), aperture);
  const Vec2 tip = pts[kJointsPerArm];
  Jacobian J;
  for (std::size_t k = 0; k < kJointsPerArm; ++k) {
    const Vec2 r = tip - pts[k];
    J(0, k) = -r.y();
    J(1, k) = r.x();
  }
  return J;
}

ArmAngles dls_step(const KinematicChain& chain, const ArmAngles& q,
                   double aperture, const Vec2& error, double damping) {
  Jacobian J = tip_jacobian(chain, q, aperture);
  std::array<bool, kJointsPerArm> frozen{};
  Eigen::Matrix<double, kJointsPerArm, 1> dq;
  for (int pass = 0; pass < 3; ++pass) {
    const Eigen::Matrix2d A =
        J * J.transpose() + damping * damping * Eigen::Matrix2d::Identity();
    dq = J.transpose() * A.ldlt().solve(error);
    bool changed = false;
    for (std::size_t k = 0; k < kJointsPerArm; ++k) {
      if (frozen[k]) continue;
      const auto& lim = chain.joint_limits[k];
      if ((q[k] <= lim.lo && dq[k] < 0.0) || (q[k] >= lim.hi && dq[k] > 0.0)) {
        frozen[k] = true;
        J.col(k).setZero();
        changed = true;
      }
    }
    if (!changed) break;
  }
  ArmAngles out = q;
  for (std::size_t k = 0; k < kJointsPerArm; ++k) {
    const auto& lim = chain.joint_limits[k];
    out[k] = std::clamp(q[k] + (frozen[k] ? 0.0 : dq[k]), lim.lo, lim.hi);
  }
  return out;
}

ArmAngles inverse_kinematics(const KinematicChain& chain, const Vec2& target,
                             const ArmAngles& init, double aperture,
                             const IkOptions& options) {
  if (!within_limits(chain, init)) {
    throw LimitViolation("inverse_kinematics: init outside joint limits");
  }
  const double dist = (target - chain.base_position).norm();
  if (dist > chain.reach()) {
    std::ostringstream msg;
    msg << "target (" << target.x() << ", " << target.y() << ") is "
        << dist << " m from the base; reach is " << chain.reach() << " m";
    throw Unreachable(msg.str());
  }

  ArmAngles best = init;
  double best_err = solve_from(chain, target, best, aperture, options);
  if (best_err <= options.tolerance) return best;

  // Deterministic restarts: fixed stream so results never depend on callers.
  Rng seeds(0x1c0ffee);
  for (int r = 0; r < options.restarts && best_err > options.tolerance; ++r) {
    ArmAngles q;
    for (std::size_t k = 0; k < kJointsPerArm; ++k) {
      const auto& lim = chain.joint_limits[k];
      // Early restarts stay near init; later ones sample the whole range.
      if (r < 8) {
        const double spread = 0.125 * (r + 1) * (lim.hi - lim.lo);
        q[k] = std::clamp(init[k] + seeds.uniform(-spread, spread), lim.lo,
                          lim.hi);
      } else {
        q[k] = seeds.uniform(lim.lo, lim.hi);
      }
    }
    const double err = solve_from(chain, target, q, aperture, options);
    if (err < best_err) {
      best_err = err;
      best = q;
    }
  }
  if (best_err > kAcceptTolerance) {
    std::ostringstream msg;
    msg << "inverse_kinematics: best tip error " << best_err << " m";
    throw NoConvergence(msg.str());
  }
  return best;
}

}  // namespace physagent
