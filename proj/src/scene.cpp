#include "physagent/scene.hpp"

#include <algorithm>
#include <set>

#include "physagent/errors.hpp"

namespace physagent {

const SceneObject* SceneState::find(const std::string& id) const {
  auto it = std::find_if(objects.begin(), objects.end(),
                         [&](const SceneObject& o) { return o.id == id; });
  return it == objects.end() ? nullptr : &*it;
}

SceneObject* SceneState::find(const std::string& id) {
  return const_cast<SceneObject*>(std::as_const(*this).find(id));
}

const SceneObject* SceneState::held_by(Arm arm) const {
  for (const auto& o : objects) {
    if (o.grasped_by == arm) return &o;
  }
  return nullptr;
}

void SceneState::validate() const {
  std::set<std::string> ids;
  for (const auto& o : objects) {
    if (!ids.insert(o.id).second) {
      throw ConfigError("duplicate scene object id '" + o.id + "'");
    }
  }
}

void update_scene(const SceneRules& rules, SceneState& scene,
                  const ToolPoints& before, const ToolPoints& after,
                  const JointState& state) {
  for (Arm arm : {Arm::Left, Arm::Right}) {
    const Vec2 tip = after[static_cast<std::size_t>(arm)];
    const Vec2 prev_tip = before[static_cast<std::size_t>(arm)];
    const double aperture = state.aperture(arm);

    auto held = std::find_if(scene.objects.begin(), scene.objects.end(),
                             [&](const SceneObject& o) {
                               return o.grasped_by == arm;
                             });
    if (held != scene.objects.end()) {
      held->position = tip;
      if (aperture >= rules.release_threshold) {
        held->grasped_by.reset();
        if (!rules.workspace.contains(held->position)) held->in_reach = false;
      }
    } else if (aperture < rules.close_threshold) {
      SceneObject* best = nullptr;
      double best_dist = 0.0;
      for (auto& o : scene.objects) {
        if (!o.graspable || o.grasped_by || !o.in_reach) continue;
        const double d = (o.position - tip).norm();
        if (d > rules.grasp_radius) continue;
        // Ties resolve to the lexicographically smaller id.
        if (best == nullptr || d < best_dist ||
            (d == best_dist && o.id < best->id)) {
          best = &o;
          best_dist = d;
        }
      }
      if (best != nullptr) {
        best->grasped_by = arm;
        best->position = tip;
      }
    }

    const Vec2 motion = tip - prev_tip;
    for (auto& o : scene.objects) {
      if (!o.pushable || o.grasped_by || !o.in_reach) continue;
      if ((o.position - prev_tip).norm() <= rules.contact_radius) {
        o.position += motion;
        if (!rules.workspace.contains(o.position)) o.in_reach = false;
      }
    }
  }
}

Observation Observation::capture(const RobotModel& model,
                                 const CameraModel& camera,
                                 const JointState& state, SceneState scene) {
  Observation obs;
  obs.points_ = forward_kinematics(model, state);
  obs.tools_ = physagent::tool_points(model, state);
  obs.frame_ = project(camera, obs.points_);
  obs.scene_ = std::move(scene);
  obs.state_ = state;
  return obs;
}

JointState home_state(const RobotModel& model) {
  (void)model;
  JointState s;
  s.values.fill(0.0);
  s.values[gripper_index(Arm::Left)] = 1.0;
  s.values[gripper_index(Arm::Right)] = 1.0;
  return s;
}

}  // namespace physagent
