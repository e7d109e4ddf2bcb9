#pragma once

// Rollout generation: the synthetic keypoint-trajectory generator standing in
// for an image-to-video model, behind the WorldModel interface shared with
// the remote client.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "physagent/ik.hpp"
#include "physagent/rng.hpp"
#include "physagent/scene.hpp"
#include "physagent/task.hpp"

namespace physagent {

enum class FailureMode { WrongObject, PrematureRelease, OffsetGoal, DropOutOfReach };

std::string_view failure_mode_name(FailureMode mode);
FailureMode failure_mode_from_name(std::string_view name);
bool is_recoverable(FailureMode mode);

struct FailureConfig {
  double p_recoverable = 0.0;
  double p_irrecoverable = 0.0;
  // Relative weights of the recoverable modes.
  std::map<FailureMode, double> weights{{FailureMode::WrongObject, 1.0},
                                        {FailureMode::PrematureRelease, 1.0},
                                        {FailureMode::OffsetGoal, 1.0}};

  void validate() const;
  // One uniform draw decides whether and which failure happens.
  std::optional<FailureMode> sample(Rng& rng) const;
};

struct Rollout {
  std::vector<KeypointFrame> frames;
  double fps = 8.0;
  std::string prompt;
  std::string generator_id;
  std::uint64_t seed = 0;
  std::optional<FailureMode> intended_failure;
  // Joint trajectory behind the frames (synthetic generator only).
  std::vector<JointState> joint_trajectory;

  // Throws MalformedResponse on fewer than 2 frames or fps <= 0.
  void validate() const;
};

struct RolloutRequest {
  Observation initial;
  std::string prompt;
  double duration = 5.0;  // seconds
  double fps = 8.0;

  int frame_count() const;
};

// Motion timing: gripper pre-phase, arm transfer, gripper post-phase.
struct RolloutTiming {
  double arm_start = 0.2;
  double arm_end = 0.8;
};

struct GeneratorSettings {
  RobotModel robot = default_robot();
  CameraModel camera = default_camera();
  SkillGeometry geometry;
  Workspace workspace;
  RolloutTiming timing;
  double offset_distance = 0.08;  // OffsetGoal displacement
  double drop_margin = 0.08;      // how far past the workspace edge to drop
  IkOptions ik;
};

// Minimum-jerk profile 10s^3 - 15s^4 + 6s^5 on s clamped to [0, 1].
double minimum_jerk(double s);

// Synthesizes a rollout toward `goal` from the request's first frame.
// Throws UnknownObject for ids missing from the scene and propagates
// Unreachable / NoConvergence from IK for the nominal goal.
Rollout generate_rollout(const GeneratorSettings& settings,
                         const RolloutRequest& request, const SubtaskGoal& goal,
                         const FailureConfig& failure, std::uint64_t seed);

class WorldModel {
 public:
  virtual ~WorldModel() = default;
  virtual Rollout generate(const RolloutRequest& request,
                           const SubtaskGoal& goal, std::uint64_t seed) = 0;
};

class SyntheticWorldModel : public WorldModel {
 public:
  SyntheticWorldModel(GeneratorSettings settings, FailureConfig failure)
      : settings_(std::move(settings)), failure_(std::move(failure)) {
    failure_.validate();
  }

  Rollout generate(const RolloutRequest& request, const SubtaskGoal& goal,
                   std::uint64_t seed) override {
    return generate_rollout(settings_, request, goal, failure_, seed);
  }

  const GeneratorSettings& settings() const { return settings_; }
  const FailureConfig& failure() const { return failure_; }

 private:
  GeneratorSettings settings_;
  FailureConfig failure_;
};

inline constexpr std::string_view kSyntheticGeneratorId = "synthetic-minjerk-v1";

}  // namespace physagent
