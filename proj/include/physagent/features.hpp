#pragma once

// 40-dim per-frame features: 28 normalised keypoint coordinates followed by
// 12 consecutive-keypoint link lengths, with a presence mask.

#include <array>
#include <span>
#include <vector>

#include "physagent/kinematics.hpp"

namespace physagent {

inline constexpr std::size_t kCoordFeatures = 2 * kKeypointCount;        // 28
inline constexpr std::size_t kLinkFeatures = 2 * kJointsPerArm;          // 12
inline constexpr std::size_t kFeatureDim = kCoordFeatures + kLinkFeatures;  // 40

struct ImageSize {
  int width = 640;
  int height = 480;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

struct FeatureVector {
  std::array<double, kFeatureDim> values{};
  std::array<bool, kFeatureDim> present{};
};

// Feature index of link `link` (0..5) of `arm`.
constexpr std::size_t link_feature(Arm arm, std::size_t link) {
  return kCoordFeatures + (arm == Arm::Left ? 0 : kJointsPerArm) + link;
}

FeatureVector extract_features(const KeypointFrame& frame, ImageSize size);

struct ImputerModel {
  std::array<double, kFeatureDim> column_means{};
  double fallback = 0.5;
};

// Throws EmptyDataset on an empty span.
ImputerModel fit_imputer(std::span<const FeatureVector> samples,
                         double fallback = 0.5);
// Fills absent entries; present entries are returned untouched.
FeatureVector apply_imputer(const ImputerModel& model, FeatureVector fv);

}  // namespace physagent
