#include <gtest/gtest.h>
#include <zlib.h>

#include <chrono>
#include <cstring>

#include "physagent/errors.hpp"
#include "physagent/mock_servers.hpp"
#include "physagent/reasoner.hpp"
#include "physagent/remote.hpp"
#include "physagent/wire.hpp"

using namespace physagent;
using namespace std::chrono_literals;

namespace {

RolloutRequest home_request() {
  const RobotModel m = default_robot();
  SceneState s;
  s.objects.push_back({"cube", Vec2(0.1, 0.2)});
  return {Observation::capture(m, default_camera(), home_state(m), s), "grasp object 'cube'", 5.0,
          8.0};
}

RemoteEndpoint endpoint(const MockServer& server, const std::string& path) {
  RemoteEndpoint e;
  e.url = server.url(path);
  e.timeout = 2000ms;
  e.retry_delay = 1ms;
  return e;
}

std::uint32_t be32(const std::string& s, std::size_t at) {
  return (std::uint32_t(std::uint8_t(s[at])) << 24) | (std::uint32_t(std::uint8_t(s[at + 1])) << 16) |
         (std::uint32_t(std::uint8_t(s[at + 2])) << 8) | std::uint32_t(std::uint8_t(s[at + 3]));
}

}  // namespace

TEST(Wire, FrameJsonRoundTrip) {
  const RolloutRequest req = home_request();
  const KeypointFrame f = req.initial.frame();
  const KeypointFrame back = wire::frame_from_json(wire::frame_to_json(f));
  for (std::size_t k = 0; k < kKeypointCount; ++k) {
    EXPECT_EQ(back.points[k].visible, f.points[k].visible);
    if (f.points[k].visible) {
      EXPECT_DOUBLE_EQ(back.points[k].u, f.points[k].u);
      EXPECT_DOUBLE_EQ(back.points[k].v, f.points[k].v);
    }
  }
}

TEST(Wire, ThirteenKeypointsIsMalformed) {
  nlohmann::json j = wire::frame_to_json(home_request().initial.frame());
  j.erase(j.size() - 1);
  EXPECT_THROW(wire::frame_from_json(j), MalformedResponse);
  EXPECT_THROW(wire::frame_from_json(nlohmann::json::object()), MalformedResponse);
}

TEST(Wire, RasterIsAValidGrayscalePng) {
  const std::string png = wire::render_png(home_request().initial.frame(), 64, 48);
  ASSERT_GT(png.size(), 33u);
  EXPECT_EQ(png.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
  EXPECT_EQ(png.substr(12, 4), "IHDR");
  EXPECT_EQ(be32(png, 16), 64u);
  EXPECT_EQ(be32(png, 20), 48u);
  const std::size_t idat = png.find("IDAT");
  ASSERT_NE(idat, std::string::npos);
  const std::uint32_t len = be32(png, idat - 4);
  std::vector<unsigned char> raw(64 * 48 + 48);
  uLongf raw_len = raw.size();
  ASSERT_EQ(uncompress(raw.data(), &raw_len,
                       reinterpret_cast<const Bytef*>(png.data() + idat + 4), len),
            Z_OK);
  EXPECT_EQ(raw_len, raw.size());
}

TEST(RemoteVideo, EchoServerYieldsFortyFrames) {
  MockVideoServer server;
  server.start();
  RemoteStats stats;
  const Rollout r = remote_generate(endpoint(server, "/generate"), home_request(),
                                    default_camera(), true, &stats);
  EXPECT_EQ(r.frames.size(), 40u);
  EXPECT_EQ(r.generator_id, "mock-echo");
  EXPECT_EQ(stats.attempts, 1);
}

TEST(RemoteVideo, ThirteenKeypointsPerFrameIsMalformed) {
  MockVideoOptions opt;
  opt.keypoints_per_frame = 13;
  MockVideoServer server(opt);
  server.start();
  EXPECT_THROW(remote_generate(endpoint(server, "/generate"), home_request(), default_camera()),
               MalformedResponse);
}

TEST(RemoteVideo, RetriesTransientFailures) {
  MockVideoOptions opt;
  opt.fail_first = 2;
  MockVideoServer server(opt);
  server.start();
  RemoteStats stats;
  const Rollout r =
      remote_generate(endpoint(server, "/generate"), home_request(), default_camera(), false, &stats);
  EXPECT_EQ(stats.attempts, 3);
  EXPECT_EQ(server.requests(), 3);
  EXPECT_EQ(r.frames.size(), 40u);
}

TEST(RemoteVideo, PersistentFailureIsServiceErrorAfterFourAttempts) {
  MockVideoOptions opt;
  opt.fail_first = 100;
  MockVideoServer server(opt);
  server.start();
  RemoteStats stats;
  try {
    remote_generate(endpoint(server, "/generate"), home_request(), default_camera(), false, &stats);
    FAIL() << "expected ServiceError";
  } catch (const ServiceError& e) {
    EXPECT_EQ(e.status(), 503);
  }
  EXPECT_EQ(stats.attempts, 4);
}

TEST(RemoteVideo, ClientErrorsAreNotRetried) {
  MockVideoServer server;
  server.start();
  RemoteStats stats;
  EXPECT_THROW(post_json(endpoint(server, "/generate"), nlohmann::json("not an object"), &stats),
               ServiceError);
  EXPECT_EQ(stats.attempts, 1);
}

TEST(RemoteVideo, ClosedPortIsTransportError) {
  int port = 0;
  {
    MockVideoServer probe;
    port = probe.start();
  }
  RemoteEndpoint e;
  e.url = "http://127.0.0.1:" + std::to_string(port) + "/generate";
  e.timeout = 500ms;
  e.retry_delay = 1ms;
  EXPECT_THROW(remote_generate(e, home_request(), default_camera()), TransportError);
}

TEST(RemoteVideo, WorldModelRecordsSeed) {
  MockVideoServer server;
  server.start();
  RemoteWorldModel world(endpoint(server, "/generate"), default_camera());
  const Rollout r = world.generate(home_request(), {Skill::Grasp, Arm::Right, "cube", {}}, 99);
  EXPECT_EQ(r.seed, 99u);
}

TEST(RemoteReasoner, ParsesServedVerdicts) {
  MockVlmOptions opt;
  opt.fail_first = 1;
  opt.replies = {"RETRY: missed", "complete"};
  MockVlmServer server(opt);
  server.start();
  RemoteReasoner reasoner(SkillLibrary::bundled(), endpoint(server, "/evaluate"));
  const RobotModel m = default_robot();
  const SceneState scene = SkillLibrary::bundled().find("pick the cube")->scene;
  const Observation obs = Observation::capture(m, default_camera(), home_state(m), scene);
  const Plan plan = reasoner.decompose("Pick the cube", obs, 1);
  ASSERT_EQ(plan.subtasks.size(), 3u);
  Rng rng(1);
  EXPECT_EQ(reasoner.evaluate(plan, 0, obs, obs, rng).kind, VerdictKind::RetryCurrent);
  EXPECT_EQ(reasoner.evaluate(plan, 0, obs, obs, rng).kind, VerdictKind::TaskComplete);
  EXPECT_EQ(server.requests(), 3);
}

TEST(RemoteReasoner, UnparseableVerdictIsParseError) {
  MockVlmOptions opt;
  opt.replies = {"the robot did something"};
  MockVlmServer server(opt);
  server.start();
  RemoteReasoner reasoner(SkillLibrary::bundled(), endpoint(server, "/evaluate"));
  const RobotModel m = default_robot();
  const SceneState scene = SkillLibrary::bundled().find("pick the cube")->scene;
  const Observation obs = Observation::capture(m, default_camera(), home_state(m), scene);
  const Plan plan = reasoner.decompose("pick the cube", obs, 1);
  Rng rng(1);
  EXPECT_THROW(reasoner.evaluate(plan, 0, obs, obs, rng), ParseError);
}

TEST(RemoteReasoner, RequestCarriesSchemaFields) {
  const RobotModel m = default_robot();
  const SceneState scene = SkillLibrary::bundled().find("pick the cube")->scene;
  const Observation obs = Observation::capture(m, default_camera(), home_state(m), scene);
  const Plan plan = decompose_task(SkillLibrary::bundled(), "pick the cube", obs);
  const nlohmann::json j = vlm_request(plan, 1, obs, obs);
  EXPECT_EQ(j.at("task"), plan.task);
  EXPECT_EQ(j.at("before_frame").size(), 14u);
  EXPECT_EQ(j.at("after_frame").size(), 14u);
  EXPECT_EQ(j.at("allowed_verdicts").size(), 5u);
}
