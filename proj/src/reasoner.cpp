#include "physagent/reasoner.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "physagent/errors.hpp"
#include "physagent/robot_config.hpp"

namespace physagent {
namespace {

constexpr std::array<std::pair<VerdictKind, std::string_view>, 5> kVerdictNames{{
    {VerdictKind::TaskComplete, "TaskComplete"},
    {VerdictKind::ContinueNext, "ContinueNext"},
    {VerdictKind::RetryCurrent, "RetryCurrent"},
    {VerdictKind::Replan, "Replan"},
    {VerdictKind::Irrecoverable, "Irrecoverable"},
}};

constexpr std::array<std::pair<std::string_view, VerdictKind>, 5> kTokens{{
    {"COMPLETE", VerdictKind::TaskComplete},
    {"CONTINUE", VerdictKind::ContinueNext},
    {"RETRY", VerdictKind::RetryCurrent},
    {"REPLAN", VerdictKind::Replan},
    {"IRRECOVERABLE", VerdictKind::Irrecoverable},
}};

const SceneObject& require(const SceneState& scene, const std::string& id) {
  const SceneObject* o = scene.find(id);
  if (o == nullptr) throw UnknownObject("no object '" + id + "' in the scene");
  return *o;
}

bool is_success(VerdictKind k) {
  return k == VerdictKind::TaskComplete || k == VerdictKind::ContinueNext;
}

Arm arm_from_name(const std::string& name) {
  if (name == "left") return Arm::Left;
  if (name == "right") return Arm::Right;
  throw ConfigError("unknown arm '" + name + "'");
}

std::string cell_text(const Vec2& p) {
  const auto [cx, cy] = grid_cell(p);
  return "(" + std::to_string(cx) + "," + std::to_string(cy) + ")";
}

}  // namespace

std::string_view verdict_name(VerdictKind kind) {
  return kVerdictNames[static_cast<std::size_t>(kind)].second;
}

VerdictKind verdict_from_name(std::string_view name) {
  for (const auto& [kind, n] : kVerdictNames) {
    if (n == name) return kind;
  }
  throw ConfigError("unknown verdict '" + std::string(name) + "'");
}

Verdict parse_verdict(std::string_view text) {
  std::size_t start = 0;
  while (start < text.size() && std::isspace(static_cast<unsigned char>(text[start]))) {
    ++start;
  }
  std::size_t end = start;
  while (end < text.size() && std::isalpha(static_cast<unsigned char>(text[end]))) {
    ++end;
  }
  std::string word(text.substr(start, end - start));
  for (char& c : word) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& [token, kind] : kTokens) {
    if (word != token) continue;
    std::size_t rest = end;
    while (rest < text.size() &&
           (text[rest] == ':' || std::isspace(static_cast<unsigned char>(text[rest])))) {
      ++rest;
    }
    std::string rationale(text.substr(rest));
    while (!rationale.empty() &&
           std::isspace(static_cast<unsigned char>(rationale.back()))) {
      rationale.pop_back();
    }
    return {kind, rationale};
  }
  throw ParseError("no verdict token in reply: '" + std::string(text) + "'");
}

std::string render_verdict(const Verdict& verdict) {
  std::string out;
  for (const auto& [token, kind] : kTokens) {
    if (kind == verdict.kind) out = token;
  }
  if (!verdict.rationale.empty()) out += ": " + verdict.rationale;
  return out;
}

void OracleConfig::validate() const {
  const auto ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!ok(false_negative_rate) || !ok(false_positive_rate)) {
    throw ConfigError("oracle error rates must lie in [0, 1]");
  }
}

std::string normalize_task(std::string_view text) {
  std::string out;
  bool space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  while (!out.empty() && out.back() == '.') out.pop_back();
  return out;
}

SkillLibrary SkillLibrary::from_json(const nlohmann::json& j) {
  SkillLibrary lib;
  try {
    if (j.at("format_version").get<int>() != 1) {
      throw ConfigError("skills: unsupported format_version");
    }
    for (const auto& jt : j.at("tasks")) {
      TaskTemplate t;
      t.title = jt.at("task").get<std::string>();
      t.phrase = normalize_task(t.title);
      for (const auto& js : jt.at("steps")) {
        TemplateStep s;
        s.skill = skill_from_name(js.at("skill").get<std::string>());
        s.object = js.at("object").get<std::string>();
        if (js.contains("destination")) {
          s.destination = js.at("destination").get<std::string>();
        }
        if (js.contains("arm")) s.arm = arm_from_name(js.at("arm").get<std::string>());
        if (s.skill == Skill::Place && !s.destination) {
          throw ConfigError("skills: place step in '" + t.title + "' lacks a destination");
        }
        t.steps.push_back(std::move(s));
      }
      for (const auto& jo : jt.at("scene")) {
        SceneObject o;
        o.id = jo.at("id").get<std::string>();
        o.position = Vec2(jo.at("x").get<double>(), jo.at("y").get<double>());
        o.graspable = jo.value("graspable", true);
        o.pushable = jo.value("pushable", false);
        t.scene.objects.push_back(std::move(o));
      }
      t.scene.validate();
      if (t.steps.empty()) throw ConfigError("skills: '" + t.title + "' has no steps");
      for (const auto& s : t.steps) {
        if (!t.scene.find(s.object) || (s.destination && !t.scene.find(*s.destination))) {
          throw ConfigError("skills: '" + t.title + "' references an object absent from its scene");
        }
      }
      if (lib.find(t.phrase)) throw ConfigError("skills: duplicate task '" + t.title + "'");
      lib.tasks_.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("skills: ") + e.what());
  }
  return lib;
}

SkillLibrary SkillLibrary::load(const std::filesystem::path& path) {
  return from_json(read_json_file(path));
}

std::filesystem::path default_skills_path() {
  if (const char* dir = std::getenv("PHYSAGENT_DATA_DIR")) {
    return std::filesystem::path(dir) / "skills.json";
  }
  return std::filesystem::path(PHYSAGENT_DATA_DIR) / "skills.json";
}

const SkillLibrary& SkillLibrary::bundled() {
  static const SkillLibrary lib = load(default_skills_path());
  return lib;
}

const TaskTemplate* SkillLibrary::find(std::string_view task) const {
  const std::string key = normalize_task(task);
  for (const auto& t : tasks_) {
    if (t.phrase == key) return &t;
  }
  return nullptr;
}

std::pair<int, int> grid_cell(const Vec2& p, double cell_size) {
  return {static_cast<int>(std::floor(p.x() / cell_size + 1e-9)),
          static_cast<int>(std::floor(p.y() / cell_size + 1e-9))};
}

Plan decompose_task(const SkillLibrary& library, std::string_view instruction,
                    const Observation& obs, int attempt) {
  if (normalize_task(instruction).empty()) throw UnknownTask("empty instruction");
  const TaskTemplate* t = library.find(instruction);
  if (t == nullptr) {
    throw UnknownTask("no skill template for '" + std::string(instruction) + "'");
  }
  Plan plan;
  plan.task = t->title;
  plan.created_at_attempt = attempt;
  for (std::size_t i = 0; i < t->steps.size(); ++i) {
    const TemplateStep& step = t->steps[i];
    const SceneObject& object = require(obs.scene(), step.object);
    if (step.destination) require(obs.scene(), *step.destination);
    Subtask s;
    s.id = "s" + std::to_string(i);
    s.goal.skill = step.skill;
    s.goal.object_id = step.object;
    s.goal.destination_id = step.destination;
    s.goal.arm = step.arm ? *step.arm : assign_arm(object);
    s.prompt = describe_subtask(s, obs);
    plan.subtasks.push_back(std::move(s));
  }
  return plan;
}

std::string describe_subtask(const Subtask& subtask, const Observation& obs) {
  const SubtaskGoal& g = subtask.goal;
  const SceneObject& object = require(obs.scene(), g.object_id);
  std::string text = std::string(skill_verb(g.skill)) + " object '" + g.object_id +
                     "' at cell " + cell_text(object.position);
  if (g.destination_id) {
    const SceneObject& dest = require(obs.scene(), *g.destination_id);
    text += " onto '" + dest.id + "' at cell " + cell_text(dest.position);
  }
  text += " with " + std::string(arm_name(g.arm)) + " arm";
  return text;
}

bool predicate_met(const SubtaskGoal& goal, const Observation& before,
                   const Observation& after, const SkillGeometry& geometry) {
  const SceneObject* obj = after.scene().find(goal.object_id);
  const SceneObject* prev = before.scene().find(goal.object_id);
  if (obj == nullptr || prev == nullptr) return false;
  const bool held = obj->grasped_by == goal.arm;
  switch (goal.skill) {
    case Skill::Approach:
      return (after.tool_point(goal.arm) - obj->position).norm() <=
                 geometry.reach_tolerance &&
             after.joint_state().aperture(goal.arm) >= geometry.grip_open;
    case Skill::Grasp:
      return held;
    case Skill::Lift:
      return held && obj->position.y() - prev->position.y() >=
                         geometry.lift_height - geometry.lift_tolerance;
    case Skill::Place: {
      if (obj->grasped_by || !goal.destination_id) return false;
      const SceneObject* dest = after.scene().find(*goal.destination_id);
      return dest != nullptr &&
             (obj->position - dest->position).norm() <= geometry.place_tolerance;
    }
    case Skill::Push:
      return !obj->grasped_by &&
             (obj->position - prev->position).dot(geometry.push_direction.normalized()) >=
                 geometry.push_distance - geometry.push_tolerance;
    case Skill::Release:
      return !held;
  }
  return false;
}

Verdict true_verdict(const Plan& plan, std::size_t cursor, const Observation& before,
                     const Observation& after, const SkillGeometry& geometry) {
  const SubtaskGoal& goal = plan.subtasks.at(cursor).goal;
  for (const auto& o : after.scene().objects) {
    if (!o.in_reach) {
      return {VerdictKind::Irrecoverable, "object '" + o.id + "' is out of reach"};
    }
  }
  if (predicate_met(goal, before, after, geometry)) {
    if (cursor + 1 == plan.subtasks.size()) {
      return {VerdictKind::TaskComplete, "all subtasks satisfied"};
    }
    return {VerdictKind::ContinueNext,
            std::string(skill_verb(goal.skill)) + " of '" + goal.object_id + "' succeeded"};
  }
  for (const auto& o : after.scene().objects) {
    if (o.id == goal.object_id) continue;
    const SceneObject* prev = before.scene().find(o.id);
    if (prev == nullptr) continue;
    if (prev->grasped_by != o.grasped_by ||
        (o.position - prev->position).norm() > geometry.disturbance_tolerance) {
      return {VerdictKind::Replan, "object '" + o.id + "' was disturbed"};
    }
  }
  if (goal.skill == Skill::Lift || goal.skill == Skill::Place) {
    const SceneObject* obj = after.scene().find(goal.object_id);
    if (obj == nullptr || obj->grasped_by != goal.arm) {
      return {VerdictKind::Replan, "'" + goal.object_id + "' is no longer held"};
    }
  }
  return {VerdictKind::RetryCurrent,
          std::string(skill_verb(goal.skill)) + " of '" + goal.object_id + "' not achieved"};
}

Verdict evaluate_outcome(const Plan& plan, std::size_t cursor,
                         const Observation& before, const Observation& after,
                         const OracleConfig& oracle, Rng& rng,
                         const SkillGeometry& geometry) {
  Verdict v = true_verdict(plan, cursor, before, after, geometry);
  const double u = rng.uniform();
  if (is_success(v.kind) && u < oracle.false_negative_rate) {
    return {VerdictKind::RetryCurrent, "judged failed: " + v.rationale};
  }
  if (v.kind == VerdictKind::RetryCurrent && u < oracle.false_positive_rate) {
    const bool last = cursor + 1 == plan.subtasks.size();
    return {last ? VerdictKind::TaskComplete : VerdictKind::ContinueNext,
            "judged successful: " + v.rationale};
  }
  return v;
}

OracleReasoner::OracleReasoner(const SkillLibrary& library, OracleConfig oracle,
                               SkillGeometry geometry)
    : library_(library), oracle_(oracle), geometry_(geometry) {
  oracle_.validate();
}

Plan OracleReasoner::decompose(std::string_view instruction, const Observation& obs,
                               int attempt) {
  return decompose_task(library_, instruction, obs, attempt);
}

std::string OracleReasoner::describe(const Subtask& subtask, const Observation& obs) {
  return describe_subtask(subtask, obs);
}

Verdict OracleReasoner::evaluate(const Plan& plan, std::size_t cursor,
                                 const Observation& before, const Observation& after,
                                 Rng& rng) {
  return evaluate_outcome(plan, cursor, before, after, oracle_, rng, geometry_);
}

}  // namespace physagent
