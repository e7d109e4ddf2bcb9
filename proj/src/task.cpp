#include "physagent/task.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "physagent/errors.hpp"

namespace physagent {
namespace {

struct SkillNames {
  Skill skill;
  std::string_view name;
  std::string_view verb;
};

constexpr std::array<SkillNames, 6> kSkills{{
    {Skill::Approach, "Approach", "approach"},
    {Skill::Grasp, "Grasp", "grasp"},
    {Skill::Lift, "Lift", "lift"},
    {Skill::Place, "Place", "place"},
    {Skill::Push, "Push", "push"},
    {Skill::Release, "Release", "release"},
}};

const SceneObject& require(const SceneState& scene, const std::string& id) {
  const SceneObject* o = scene.find(id);
  if (o == nullptr) throw UnknownObject("no object '" + id + "' in the scene");
  return *o;
}

}  // namespace

std::string_view skill_name(Skill skill) {
  return kSkills[static_cast<std::size_t>(skill)].name;
}

std::string_view skill_verb(Skill skill) {
  return kSkills[static_cast<std::size_t>(skill)].verb;
}

Skill skill_from_name(std::string_view name) {
  for (const auto& s : kSkills) {
    if (std::equal(name.begin(), name.end(), s.verb.begin(), s.verb.end(),
                   [](char a, char b) {
                     return std::tolower(static_cast<unsigned char>(a)) == b;
                   })) {
      return s.skill;
    }
  }
  throw ConfigError("unknown skill '" + std::string(name) + "'");
}

GoalPose resolve_goal(const SubtaskGoal& goal, const SceneState& scene,
                      const Vec2& current_tool, const SkillGeometry& geometry) {
  const SceneObject& object = require(scene, goal.object_id);
  switch (goal.skill) {
    case Skill::Approach:
      return {object.position, 1.0};
    case Skill::Grasp:
      return {object.position, 0.0};
    case Skill::Lift:
      return {object.position + Vec2(0.0, geometry.lift_height), 0.0};
    case Skill::Place: {
      if (!goal.destination_id) {
        throw UnknownObject("place of '" + goal.object_id +
                            "' has no destination");
      }
      return {require(scene, *goal.destination_id).position, 1.0};
    }
    case Skill::Push:
      return {object.position +
                  geometry.push_distance * geometry.push_direction.normalized(),
              1.0};
    case Skill::Release:
      return {current_tool, 1.0};
  }
  return {object.position, 1.0};
}

Arm assign_arm(const SceneObject& object) {
  if (object.grasped_by) return *object.grasped_by;
  return object.position.x() >= 0.0 ? Arm::Right : Arm::Left;
}

}  // namespace physagent
