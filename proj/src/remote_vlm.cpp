#include "physagent/reasoner.hpp"

#include "physagent/errors.hpp"
#include "physagent/wire.hpp"

namespace physagent {

nlohmann::json vlm_request(const Plan& plan, std::size_t cursor,
                           const Observation& before, const Observation& after) {
  nlohmann::json allowed = nlohmann::json::array();
  for (const char* token : {"COMPLETE", "CONTINUE", "RETRY", "REPLAN", "IRRECOVERABLE"}) {
    allowed.push_back(token);
  }
  return {{"task", plan.task},
          {"subtask", plan.subtasks.at(cursor).prompt},
          {"before_frame", wire::frame_to_json(before.frame())},
          {"after_frame", wire::frame_to_json(after.frame())},
          {"allowed_verdicts", allowed}};
}

RemoteReasoner::RemoteReasoner(const SkillLibrary& library, RemoteEndpoint endpoint)
    : library_(library), endpoint_(std::move(endpoint)) {}

Plan RemoteReasoner::decompose(std::string_view instruction, const Observation& obs,
                               int attempt) {
  return decompose_task(library_, instruction, obs, attempt);
}

std::string RemoteReasoner::describe(const Subtask& subtask, const Observation& obs) {
  return describe_subtask(subtask, obs);
}

Verdict RemoteReasoner::evaluate(const Plan& plan, std::size_t cursor,
                                 const Observation& before, const Observation& after,
                                 Rng&) {
  const nlohmann::json reply = post_json(endpoint_, vlm_request(plan, cursor, before, after));
  if (!reply.is_object() || !reply.contains("verdict_text") ||
      !reply["verdict_text"].is_string()) {
    throw MalformedResponse("VLM reply lacks a verdict_text string");
  }
  return parse_verdict(reply["verdict_text"].get<std::string>());
}

}  // namespace physagent
