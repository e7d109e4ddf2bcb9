#pragma once

// In-process HTTP servers implementing the remote wire schemas; used by the
// integration tests and the `mock-video` / `mock-vlm` CLI commands.

#include <atomic>
#include <memory>
#include <string>
#include <vector>

namespace physagent {

class MockServer {
 public:
  virtual ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Serves on the calling thread until stop() is called elsewhere.
  void listen_blocking(const std::string& host, int port);
  void stop();

  int port() const { return port_; }
  int requests() const { return requests_.load(); }
  std::string url(const std::string& path) const;

 protected:
  MockServer();
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<int> requests_{0};
  int port_ = 0;
};

struct MockVideoOptions {
  int fail_first = 0;  // respond 503 to this many requests first
  int keypoints_per_frame = 14;
  std::string generator_id = "mock-echo";
};

// POST /generate: echoes the first frame for round(duration_s * fps) frames.
class MockVideoServer : public MockServer {
 public:
  explicit MockVideoServer(MockVideoOptions options = {});
};

struct MockVlmOptions {
  int fail_first = 0;
  // Replies served in order, the last one repeating.
  std::vector<std::string> replies{"CONTINUE: mock judge"};
};

// POST /evaluate: returns {"verdict_text": ...}.
class MockVlmServer : public MockServer {
 public:
  explicit MockVlmServer(MockVlmOptions options = {});
};

}  // namespace physagent
