#pragma once

// JSON-over-HTTP plumbing for the remote world model and reasoner.

#include <chrono>
#include <nlohmann/json.hpp>
#include <string>

#include "physagent/world_model.hpp"

namespace physagent {

struct RemoteEndpoint {
  std::string url;  // e.g. http://127.0.0.1:8080/generate
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;  // retries after the first attempt
  std::chrono::milliseconds retry_delay{20};
};

struct RemoteStats {
  int attempts = 0;
};

// POSTs `body` and returns the parsed JSON reply. Transport errors and 5xx
// replies are retried; the final failure is rethrown as Timeout,
// TransportError or ServiceError. Unparseable bodies raise MalformedResponse.
nlohmann::json post_json(const RemoteEndpoint& endpoint,
                         const nlohmann::json& body,
                         RemoteStats* stats = nullptr);

// One request to an image-to-video service following the wire schema.
Rollout remote_generate(const RemoteEndpoint& endpoint,
                        const RolloutRequest& request, const CameraModel& camera,
                        bool include_raster = true,
                        RemoteStats* stats = nullptr);

class RemoteWorldModel : public WorldModel {
 public:
  RemoteWorldModel(RemoteEndpoint endpoint, CameraModel camera)
      : endpoint_(std::move(endpoint)), camera_(camera) {}

  // The goal is conveyed by the prompt text; the seed is recorded only.
  Rollout generate(const RolloutRequest& request, const SubtaskGoal& goal,
                   std::uint64_t seed) override;

 private:
  RemoteEndpoint endpoint_;
  CameraModel camera_;
};

}  // namespace physagent
