#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "physagent/errors.hpp"
#include "physagent/features.hpp"
#include "physagent/scene.hpp"
#include "support.hpp"

using namespace physagent;
using physagent::testing::random_state;

namespace {

KeypointFrame straight_frame(double scale) {
  const RobotModel m = default_robot();
  CameraModel cam;
  cam.scale = scale;
  return project(cam, forward_kinematics(m, home_state(m)));
}

}  // namespace

TEST(Features, AllVisibleGivesFortyPresentValues) {
  const FeatureVector fv = extract_features(straight_frame(300.0), {640, 480});
  EXPECT_EQ(fv.values.size(), 40u);
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    EXPECT_TRUE(fv.present[i]) << i;
    EXPECT_TRUE(std::isfinite(fv.values[i]));
  }
}

TEST(Features, InvisibleKeypointMasksItsCoordinatesAndAdjacentLinks) {
  KeypointFrame f = straight_frame(300.0);
  f.points[3].visible = false;
  const FeatureVector fv = extract_features(f, {640, 480});
  for (std::size_t i = 0; i < kCoordFeatures; ++i) {
    EXPECT_EQ(fv.present[i], i != 6 && i != 7) << i;
  }
  for (Arm arm : {Arm::Left, Arm::Right}) {
    for (std::size_t link = 0; link < kJointsPerArm; ++link) {
      const bool masked = arm == Arm::Left && (link == 2 || link == 3);
      EXPECT_EQ(fv.present[link_feature(arm, link)], !masked);
    }
  }
}

TEST(Features, StraightArmLinkLengthsMatchProjectionArithmetic) {
  const FeatureVector fv = extract_features(straight_frame(100.0), {640, 480});
  for (std::size_t link = 0; link + 1 < kJointsPerArm; ++link) {
    EXPECT_NEAR(fv.values[link_feature(Arm::Left, link)], 10.0 / 640.0, 1e-12);
  }
  // The last segment runs from J6 to the open gripper tip.
  EXPECT_NEAR(fv.values[link_feature(Arm::Left, kJointsPerArm - 1)], 15.0 / 640.0,
              1e-12);
}

TEST(Features, LinkMaskMatchesEndpointVisibility) {
  Rng rng(61);
  const KeypointFrame base = straight_frame(300.0);
  for (int trial = 0; trial < 200; ++trial) {
    KeypointFrame f = base;
    for (auto& p : f.points) p.visible = rng.uniform() < 0.7;
    const FeatureVector fv = extract_features(f, {640, 480});
    for (Arm arm : {Arm::Left, Arm::Right}) {
      for (std::size_t link = 0; link < kJointsPerArm; ++link) {
        const std::size_t a = joint_offset(arm) + link;
        EXPECT_EQ(fv.present[link_feature(arm, link)],
                  f.points[a].visible && f.points[a + 1].visible);
      }
    }
  }
}

TEST(Features, ScalingImageAndPixelsTogetherIsInvariant) {
  const RobotModel m = default_robot();
  Rng rng(62);
  for (int trial = 0; trial < 100; ++trial) {
    const KeypointFrame f = project(default_camera(), forward_kinematics(m, random_state(m, rng)));
    const double c = rng.uniform(0.5, 3.0);
    KeypointFrame g = f;
    for (auto& p : g.points) {
      p.u *= c;
      p.v *= c;
    }
    const FeatureVector a = extract_features(f, {640, 480});
    const FeatureVector b = extract_features(g, {static_cast<int>(640 * c), static_cast<int>(480 * c)});
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
      ASSERT_EQ(a.present[i], b.present[i]);
      if (!a.present[i]) continue;
      // Integer image sizes introduce rounding of at most one pixel.
      EXPECT_NEAR(a.values[i], b.values[i], 2.0 / (480 * c));
    }
  }
}

TEST(Features, ExactScalingIsBitwiseInvariantForPowersOfTwo) {
  const KeypointFrame f = straight_frame(300.0);
  KeypointFrame g = f;
  for (auto& p : g.points) {
    p.u *= 2.0;
    p.v *= 2.0;
  }
  const FeatureVector a = extract_features(f, {640, 480});
  const FeatureVector b = extract_features(g, {1280, 960});
  for (std::size_t i = 0; i < kFeatureDim; ++i) EXPECT_DOUBLE_EQ(a.values[i], b.values[i]);
}

TEST(Imputer, NoAbsentEntriesIsIdentity) {
  const FeatureVector fv = extract_features(straight_frame(300.0), {640, 480});
  const std::vector<FeatureVector> data{fv};
  const FeatureVector out = apply_imputer(fit_imputer(data), fv);
  for (std::size_t i = 0; i < kFeatureDim; ++i) EXPECT_EQ(out.values[i], fv.values[i]);
}

TEST(Imputer, FillsWithColumnMeanOrFallback) {
  FeatureVector a, b;
  a.present.fill(true);
  b.present.fill(true);
  a.values[0] = 1.0;
  b.values[0] = 3.0;
  a.present[5] = b.present[5] = false;
  const std::vector<FeatureVector> data{a, b};
  const ImputerModel model = fit_imputer(data);
  FeatureVector q;
  q.present.fill(true);
  q.present[0] = false;
  q.present[5] = false;
  const FeatureVector out = apply_imputer(model, q);
  EXPECT_DOUBLE_EQ(out.values[0], 2.0);
  EXPECT_DOUBLE_EQ(out.values[5], 0.5);
}

TEST(Imputer, NeverAltersPresentEntries) {
  Rng rng(63);
  std::vector<FeatureVector> data(50);
  for (auto& fv : data) {
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
      fv.present[i] = rng.uniform() < 0.8;
      fv.values[i] = fv.present[i] ? rng.uniform() : std::nan("");
    }
  }
  const ImputerModel model = fit_imputer(data);
  for (const auto& fv : data) {
    const FeatureVector out = apply_imputer(model, fv);
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
      if (fv.present[i]) EXPECT_EQ(out.values[i], fv.values[i]);
      else EXPECT_TRUE(std::isfinite(out.values[i]));
    }
  }
}

TEST(Imputer, EmptyFitThrows) {
  EXPECT_THROW(fit_imputer(std::span<const FeatureVector>{}), EmptyDataset);
}
