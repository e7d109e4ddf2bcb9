#include "physagent/features.hpp"

#include <cmath>
#include <limits>

#include "physagent/errors.hpp"

namespace physagent {

FeatureVector extract_features(const KeypointFrame& frame, ImageSize size) {
  const double w = size.width;
  const double h = size.height;
  FeatureVector fv;
  for (std::size_t i = 0; i < kKeypointCount; ++i) {
    const Keypoint& kp = frame.points[i];
    fv.present[2 * i] = fv.present[2 * i + 1] = kp.visible;
    fv.values[2 * i] =
        kp.visible ? kp.u / w : std::numeric_limits<double>::quiet_NaN();
    fv.values[2 * i + 1] =
        kp.visible ? kp.v / h : std::numeric_limits<double>::quiet_NaN();
  }
  for (Arm arm : {Arm::Left, Arm::Right}) {
    for (std::size_t link = 0; link < kJointsPerArm; ++link) {
      const std::size_t a = joint_offset(arm) + link;
      const std::size_t f = link_feature(arm, link);
      const bool ok = frame.points[a].visible && frame.points[a + 1].visible;
      fv.present[f] = ok;
      fv.values[f] = ok ? std::hypot(fv.values[2 * a + 2] - fv.values[2 * a],
                                     fv.values[2 * a + 3] - fv.values[2 * a + 1])
                        : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return fv;
}

ImputerModel fit_imputer(std::span<const FeatureVector> samples,
                         double fallback) {
  if (samples.empty()) throw EmptyDataset("fit_imputer: no samples");
  ImputerModel model;
  model.fallback = fallback;
  for (std::size_t c = 0; c < kFeatureDim; ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : samples) {
      if (s.present[c]) {
        sum += s.values[c];
        ++count;
      }
    }
    model.column_means[c] = count > 0 ? sum / static_cast<double>(count) : fallback;
  }
  return model;
}

FeatureVector apply_imputer(const ImputerModel& model, FeatureVector fv) {
  for (std::size_t c = 0; c < kFeatureDim; ++c) {
    if (!fv.present[c]) fv.values[c] = model.column_means[c];
  }
  return fv;
}

}  // namespace physagent
