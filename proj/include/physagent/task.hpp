#pragma once

// Skill vocabulary shared by the reasoner, the world model and the agent.

#include <optional>
#include <string>
#include <string_view>

#include "physagent/scene.hpp"

namespace physagent {

enum class Skill { Approach, Grasp, Lift, Place, Push, Release };

std::string_view skill_name(Skill skill);    // "Approach"
std::string_view skill_verb(Skill skill);    // "approach"
Skill skill_from_name(std::string_view name);  // case-insensitive; ConfigError

// What one subtask asks the robot to achieve.
struct SubtaskGoal {
  Skill skill = Skill::Approach;
  Arm arm = Arm::Left;
  std::string object_id;
  std::optional<std::string> destination_id;
};

// Target offsets and success tolerances of the skills.
struct SkillGeometry {
  double lift_height = 0.10;
  double push_distance = 0.10;
  Vec2 push_direction{0.0, 1.0};
  double reach_tolerance = 0.03;     // tool point to object
  double lift_tolerance = 0.02;      // lift must reach lift_height - this
  double push_tolerance = 0.02;
  double place_tolerance = 0.03;
  double disturbance_tolerance = 0.02;  // bystander displacement
  double grip_closed = 0.2;
  double grip_open = 0.5;
};

// Tool-point target and final aperture for a goal in a given scene.
struct GoalPose {
  Vec2 tool_target = Vec2::Zero();
  double aperture = 1.0;
};

// Throws UnknownObject when the goal references ids absent from the scene.
GoalPose resolve_goal(const SubtaskGoal& goal, const SceneState& scene,
                      const Vec2& current_tool, const SkillGeometry& geometry);

// Arm that should act on an object: the holder if held, otherwise the arm on
// the object's side of the table (x >= 0 is the right arm).
Arm assign_arm(const SceneObject& object);

}  // namespace physagent
