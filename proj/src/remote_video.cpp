#include "physagent/remote.hpp"

#include <httplib.h>

#include <thread>

#include "physagent/errors.hpp"
#include "physagent/wire.hpp"

namespace physagent {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host:port
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw ConfigError("endpoint '" + url + "' lacks a scheme");
  }
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

bool is_timeout(httplib::Error e) {
  return e == httplib::Error::ConnectionTimeout || e == httplib::Error::Read ||
         e == httplib::Error::Write;
}

}  // namespace

nlohmann::json post_json(const RemoteEndpoint& endpoint,
                         const nlohmann::json& body, RemoteStats* stats) {
  const SplitUrl url = split_url(endpoint.url);
  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
      endpoint.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  const std::string payload = body.dump();
  const int attempts = 1 + std::max(0, endpoint.max_retries);
  for (int attempt = 1;; ++attempt) {
    if (stats != nullptr) stats->attempts = attempt;
    auto res = client.Post(url.path, payload, "application/json");
    const bool last = attempt == attempts;
    if (!res) {
      if (last) {
        const std::string msg = endpoint.url + ": " + httplib::to_string(res.error());
        if (is_timeout(res.error())) throw Timeout(msg);
        throw TransportError(msg);
      }
    } else if (res->status >= 500) {
      if (last) {
        throw ServiceError(res->status, endpoint.url + " returned HTTP " +
                                            std::to_string(res->status));
      }
    } else if (res->status < 200 || res->status >= 300) {
      throw ServiceError(res->status, endpoint.url + " returned HTTP " +
                                          std::to_string(res->status));
    } else {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw MalformedResponse(std::string("unparseable reply: ") + e.what());
      }
    }
    std::this_thread::sleep_for(endpoint.retry_delay);
  }
}

Rollout remote_generate(const RemoteEndpoint& endpoint,
                        const RolloutRequest& request, const CameraModel& camera,
                        bool include_raster, RemoteStats* stats) {
  const auto reply =
      post_json(endpoint, wire::video_request(request, camera, include_raster),
                stats);
  Rollout rollout = wire::rollout_from_response(reply);
  rollout.prompt = request.prompt;
  return rollout;
}

Rollout RemoteWorldModel::generate(const RolloutRequest& request,
                                   const SubtaskGoal& goal, std::uint64_t seed) {
  (void)goal;
  Rollout rollout = remote_generate(endpoint_, request, camera_);
  rollout.seed = seed;
  return rollout;
}

}  // namespace physagent
