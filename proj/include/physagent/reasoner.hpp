#pragma once

// Task decomposition, subtask prompts and outcome evaluation. The oracle
// reasoner judges outcomes from the simulated scene with injectable error
// rates; the remote reasoner asks a VLM service for the verdict.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "physagent/remote.hpp"
#include "physagent/rng.hpp"
#include "physagent/scene.hpp"
#include "physagent/task.hpp"

namespace physagent {

struct Subtask {
  std::string id;  // "s0", "s1", ...
  SubtaskGoal goal;
  std::string prompt;
};

struct Plan {
  std::string task;
  std::vector<Subtask> subtasks;
  int created_at_attempt = 1;
};

enum class VerdictKind { TaskComplete, ContinueNext, RetryCurrent, Replan, Irrecoverable };

std::string_view verdict_name(VerdictKind kind);  // "TaskComplete"
VerdictKind verdict_from_name(std::string_view name);  // ConfigError

struct Verdict {
  VerdictKind kind = VerdictKind::RetryCurrent;
  std::string rationale;
};

// Strict protocol: a leading COMPLETE / CONTINUE / RETRY / REPLAN /
// IRRECOVERABLE token (any case), optionally followed by ':' and a rationale.
// Throws ParseError.
Verdict parse_verdict(std::string_view text);
std::string render_verdict(const Verdict& verdict);

struct OracleConfig {
  double false_negative_rate = 0.0;  // success judged as failure
  double false_positive_rate = 0.0;  // failure judged as success
  std::uint64_t seed = 0;

  void validate() const;
};

// One step of a task template.
struct TemplateStep {
  Skill skill = Skill::Approach;
  std::string object;
  std::optional<std::string> destination;
  std::optional<Arm> arm;  // default: assign_arm at plan time
};

struct TaskTemplate {
  std::string phrase;  // normalized
  std::string title;   // as listed in the suite
  std::vector<TemplateStep> steps;
  SceneState scene;    // default scene for the task
};

// Lowercase, trimmed, single-spaced, without a trailing period.
std::string normalize_task(std::string_view text);

class SkillLibrary {
 public:
  // skills.json: {"format_version": 1, "tasks": [{"task", "steps": [{"skill",
  //   "object", "destination"?, "arm"?}], "scene": [{"id", "x", "y",
  //   "graspable"?, "pushable"?}]}]}
  static SkillLibrary load(const std::filesystem::path& path);
  static SkillLibrary from_json(const nlohmann::json& j);
  // The bundled table of the ten suite tasks.
  static const SkillLibrary& bundled();

  const TaskTemplate* find(std::string_view task) const;
  const std::vector<TaskTemplate>& tasks() const { return tasks_; }

 private:
  std::vector<TaskTemplate> tasks_;
};

std::filesystem::path default_skills_path();

// Grid cell of a position: floor(coordinate / cell_size).
std::pair<int, int> grid_cell(const Vec2& p, double cell_size = 0.1);

// Throws UnknownTask for unmapped phrases or empty instructions, and
// UnknownObject when a template object is missing from the scene.
Plan decompose_task(const SkillLibrary& library, std::string_view instruction,
                    const Observation& obs, int attempt = 1);

// "grasp object 'cube' at cell (2,1) with right arm". Throws UnknownObject.
std::string describe_subtask(const Subtask& subtask, const Observation& obs);

// Geometric success predicate of one subtask.
bool predicate_met(const SubtaskGoal& goal, const Observation& before,
                   const Observation& after, const SkillGeometry& geometry);

// Judgment with error rates zero.
Verdict true_verdict(const Plan& plan, std::size_t cursor,
                     const Observation& before, const Observation& after,
                     const SkillGeometry& geometry);

// Ground-truth judgment, then at most one flip decided by a single draw.
Verdict evaluate_outcome(const Plan& plan, std::size_t cursor,
                         const Observation& before, const Observation& after,
                         const OracleConfig& oracle, Rng& rng,
                         const SkillGeometry& geometry = {});

class Reasoner {
 public:
  virtual ~Reasoner() = default;
  virtual Plan decompose(std::string_view instruction, const Observation& obs,
                         int attempt) = 0;
  virtual std::string describe(const Subtask& subtask, const Observation& obs) = 0;
  virtual Verdict evaluate(const Plan& plan, std::size_t cursor,
                           const Observation& before, const Observation& after,
                           Rng& rng) = 0;
};

class OracleReasoner : public Reasoner {
 public:
  OracleReasoner(const SkillLibrary& library, OracleConfig oracle,
                 SkillGeometry geometry = {});

  Plan decompose(std::string_view instruction, const Observation& obs,
                 int attempt) override;
  std::string describe(const Subtask& subtask, const Observation& obs) override;
  Verdict evaluate(const Plan& plan, std::size_t cursor, const Observation& before,
                   const Observation& after, Rng& rng) override;

 private:
  const SkillLibrary& library_;
  OracleConfig oracle_;
  SkillGeometry geometry_;
};

// Wire request for the VLM service.
nlohmann::json vlm_request(const Plan& plan, std::size_t cursor,
                           const Observation& before, const Observation& after);

// Decomposition and prompts come from the local template table; the verdict
// comes from the remote service. Transport failures propagate.
class RemoteReasoner : public Reasoner {
 public:
  RemoteReasoner(const SkillLibrary& library, RemoteEndpoint endpoint);

  Plan decompose(std::string_view instruction, const Observation& obs,
                 int attempt) override;
  std::string describe(const Subtask& subtask, const Observation& obs) override;
  Verdict evaluate(const Plan& plan, std::size_t cursor, const Observation& before,
                   const Observation& after, Rng& rng) override;

 private:
  const SkillLibrary& library_;
  RemoteEndpoint endpoint_;
};

}  // namespace physagent
