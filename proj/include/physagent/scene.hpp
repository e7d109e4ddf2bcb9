#pragma once

#include <optional>
#include <string>
#include <vector>

#include "physagent/kinematics.hpp"

namespace physagent {

struct SceneObject {
  std::string id;
  Vec2 position = Vec2::Zero();
  bool graspable = true;
  bool pushable = false;
  std::optional<Arm> grasped_by;
  bool in_reach = true;
};

struct SceneState {
  std::vector<SceneObject> objects;

  const SceneObject* find(const std::string& id) const;
  SceneObject* find(const std::string& id);
  // Object held by `arm`, if any.
  const SceneObject* held_by(Arm arm) const;
  // Throws ConfigError on duplicate ids.
  void validate() const;
};

// Region where released or pushed objects stay retrievable.
struct Workspace {
  double x_min = -0.6;
  double x_max = 0.6;
  double y_min = 0.05;
  double y_max = 0.6;

  bool contains(const Vec2& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min &&
           p.y() <= y_max;
  }
};

struct SceneRules {
  double grasp_radius = 0.03;
  double close_threshold = 0.2;    // aperture below which a grasp can form
  double release_threshold = 0.5;  // aperture at or above which objects drop
  double contact_radius = 0.03;
  Workspace workspace;
};

using ToolPoints = std::array<Vec2, 2>;

// Applies grasp, carry, release and push rules after one simulator step.
// Interactions happen at the tool points (indexed by Arm).
void update_scene(const SceneRules& rules, SceneState& scene,
                  const ToolPoints& before, const ToolPoints& after,
                  const JointState& state);

// Snapshot of the episode: keypoints are always derived from the joint state
// through the episode's camera.
class Observation {
 public:
  static Observation capture(const RobotModel& model, const CameraModel& camera,
                             const JointState& state, SceneState scene);

  const KeypointFrame& frame() const { return frame_; }
  const SceneState& scene() const { return scene_; }
  const JointState& joint_state() const { return state_; }
  const WorldPoints& world_points() const { return points_; }
  const Vec2& tool_point(Arm arm) const {
    return tools_[static_cast<std::size_t>(arm)];
  }
  const ToolPoints& tool_points() const { return tools_; }
  double time() const { return state_.timestamp; }

 private:
  Observation() = default;

  KeypointFrame frame_;
  WorldPoints points_{};
  ToolPoints tools_{};
  SceneState scene_;
  JointState state_;
};

// Neutral start pose: straight arms, grippers open.
JointState home_state(const RobotModel& model);

}  // namespace physagent
