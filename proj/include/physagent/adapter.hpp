#pragma once

// Embodiment adapter: keypoint frames -> features -> imputation -> one
// gradient-boosted regressor per command dimension.
//
// Dataset CSV: header row, then one row per sample with
//   u0,v0,...,u13,v13   pixel coordinates (empty when invisible)
//   vis0..vis13         0/1 visibility
//   q0..q13             joint-state target
//   seed,width,height,camera
//
// Model JSON:
//   { "format_version": 1, "image_size": [w, h], "keypoint_ordering": [...],
//     "limits": [[lo, hi] x14], "imputer": {"column_means": [40], "fallback"},
//     "regressors": [14 gbdt models], "training_report": {"mae": [14], ...} }

#include <array>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "physagent/features.hpp"
#include "physagent/gbdt.hpp"
#include "physagent/world_model.hpp"

namespace physagent {

struct AdapterSample {
  KeypointFrame frame;
  JointState target;
  std::string camera_id;
};

struct AdapterDataset {
  std::vector<AdapterSample> samples;
  ImageSize image_size;
  std::uint64_t seed = 0;
};

// Joint states drawn uniformly within the model's limits; keypoints from FK
// and projection. Throws ConfigError when n == 0.
AdapterDataset collect_dataset(const RobotModel& robot, const CameraModel& camera,
                               std::size_t n, std::uint64_t seed,
                               const std::string& camera_id = "cam0");

void save_dataset_csv(const AdapterDataset& dataset,
                      const std::filesystem::path& path);
// Throws IoError when unreadable, ParseError on malformed rows.
AdapterDataset load_dataset_csv(const std::filesystem::path& path);

struct TrainingReport {
  std::array<double, kCommandDim> mae{};
  std::array<std::size_t, kCommandDim> trees{};
  std::size_t train_samples = 0;
  std::size_t holdout_samples = 0;

  // Outputs whose held-out MAE is below `threshold`.
  std::size_t outputs_below(double threshold) const;
};

struct AdapterModel {
  ImputerModel imputer;
  std::vector<gbdt::GBDTModel> regressors;  // one per command dimension
  ImageSize image_size;
  std::array<JointLimit, kCommandDim> limits{};
  TrainingReport report;

  bool fitted() const { return regressors.size() == kCommandDim; }
};

struct AdapterFitOptions {
  gbdt::GBDTConfig gbdt;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.1;
  // Worker threads over the 14 outputs; 0 picks the hardware concurrency.
  unsigned jobs = 0;
};

// Throws EmptyDataset below 100 samples.
AdapterModel fit_adapter(const AdapterDataset& dataset, const RobotModel& robot,
                         const AdapterFitOptions& options);

// Raw regressor outputs for one frame (no clamping). Throws UnfittedModel.
std::array<double, kCommandDim> predict_raw(const AdapterModel& model,
                                            const KeypointFrame& frame);
// Clamped prediction for one frame.
JointState predict_command(const AdapterModel& model, const KeypointFrame& frame);
// One clamped command per rollout frame, stamped at frame times.
std::vector<JointState> predict_commands(const AdapterModel& model,
                                         const Rollout& rollout);

nlohmann::json to_json(const AdapterModel& model);
AdapterModel adapter_from_json(const nlohmann::json& j);
void save_adapter(const AdapterModel& model, const std::filesystem::path& path);
// Throws IoError when unreadable, ParseError on a bad container.
AdapterModel load_adapter(const std::filesystem::path& path);

std::string keypoint_name(std::size_t index);

}  // namespace physagent
