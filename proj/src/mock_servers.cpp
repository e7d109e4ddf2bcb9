#include "physagent/mock_servers.hpp"

#include <httplib.h>

#include <cmath>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "physagent/errors.hpp"

namespace physagent {

struct MockServer::Impl {
  httplib::Server server;
  std::thread thread;
};

MockServer::MockServer() : impl_(std::make_unique<Impl>()) {}

MockServer::~MockServer() { stop(); }

int MockServer::start(const std::string& host, int port) {
  port_ = port == 0 ? impl_->server.bind_to_any_port(host)
                    : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw IoError("cannot bind mock server to " + host);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void MockServer::listen_blocking(const std::string& host, int port) {
  port_ = port;
  if (!impl_->server.listen(host, port)) {
    throw IoError("cannot listen on " + host + ":" + std::to_string(port));
  }
}

void MockServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockServer::url(const std::string& path) const {
  return "http://127.0.0.1:" + std::to_string(port_) + path;
}

MockVideoServer::MockVideoServer(MockVideoOptions options) {
  impl_->server.Post("/generate", [this, options](const httplib::Request& req,
                                                  httplib::Response& res) {
    const int n = ++requests_;
    if (n <= options.fail_first) {
      res.status = 503;
      res.set_content(R"({"error":"busy"})", "application/json");
      return;
    }
    double fps = 0.0;
    double duration = 0.0;
    nlohmann::json frame;
    try {
      const auto body = nlohmann::json::parse(req.body);
      if (!body.is_object()) {
        res.status = 400;
        return;
      }
      fps = body.value("fps", 8.0);
      duration = body.value("duration_s", 5.0);
      frame = body.at("first_frame").at("keypoints");
    } catch (const nlohmann::json::exception&) {
      res.status = 400;
      return;
    }
    while (static_cast<int>(frame.size()) > options.keypoints_per_frame) {
      frame.erase(frame.size() - 1);
    }
    nlohmann::json frames = nlohmann::json::array();
    const long count = std::lround(duration * fps);
    for (long i = 0; i < count; ++i) frames.push_back(frame);
    const nlohmann::json reply = {{"generator_id", options.generator_id},
                                  {"fps", fps},
                                  {"frames", frames}};
    res.set_content(reply.dump(), "application/json");
  });
}

MockVlmServer::MockVlmServer(MockVlmOptions options) {
  if (options.replies.empty()) options.replies.emplace_back("CONTINUE");
  impl_->server.Post("/evaluate", [this, options](const httplib::Request& req,
                                                  httplib::Response& res) {
    const int n = ++requests_;
    if (n <= options.fail_first) {
      res.status = 503;
      return;
    }
    try {
      const auto body = nlohmann::json::parse(req.body);
      if (!body.contains("task") || !body.contains("allowed_verdicts")) {
        res.status = 400;
        return;
      }
    } catch (const nlohmann::json::exception&) {
      res.status = 400;
      return;
    }
    const int served = n - options.fail_first - 1;
    const std::size_t idx = std::min<std::size_t>(
        static_cast<std::size_t>(served), options.replies.size() - 1);
    res.set_content(nlohmann::json{{"verdict_text", options.replies[idx]}}.dump(),
                    "application/json");
  });
}

}  // namespace physagent
