#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "physagent/errors.hpp"
#include "physagent/gbdt.hpp"
#include "physagent/rng.hpp"

using namespace physagent;
using namespace physagent::gbdt;

namespace {

struct Data {
  Matrix X;
  std::vector<double> y;
};

Data make_data(std::size_t n, std::size_t d, std::uint64_t seed, double missing = 0.0) {
  Rng rng(seed);
  Data out{Matrix(n, d), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out.X(i, j) = rng.uniform() < missing ? std::numeric_limits<double>::quiet_NaN()
                                            : rng.uniform(-1.0, 1.0);
    }
    const double x0 = std::isnan(out.X(i, 0)) ? 0.0 : out.X(i, 0);
    const double x1 = d > 1 && !std::isnan(out.X(i, 1)) ? out.X(i, 1) : 0.0;
    out.y[i] = std::sin(3.0 * x0) + x1 * x1 + 0.1 * rng.uniform(-1.0, 1.0);
  }
  return out;
}

// Routes through the raw-value thresholds only.
double naive_predict(const GBDTModel& m, std::span<const double> x) {
  double sum = 0.0;
  for (const auto& tree : m.trees) {
    int node = 0;
    while (!tree.nodes[node].is_leaf()) {
      const TreeNode& n = tree.nodes[node];
      const double v = x[n.feature];
      const bool left = std::isnan(v) ? n.missing_left : v <= n.threshold;
      node = left ? n.left : n.right;
    }
    sum += tree.nodes[node].value;
  }
  return m.baseline + m.learning_rate * sum;
}

void check_tree_shape(const RegressionTree& t, const GBDTConfig& c) {
  std::size_t leaves = 0;
  std::vector<int> parents(t.nodes.size(), 0);
  for (const auto& n : t.nodes) {
    if (n.is_leaf()) {
      ++leaves;
      EXPECT_GE(n.sample_count, c.min_samples_leaf);
    } else {
      ASSERT_GT(n.left, 0);
      ASSERT_GT(n.right, 0);
      ++parents[n.left];
      ++parents[n.right];
      EXPECT_EQ(t.nodes[n.left].sample_count + t.nodes[n.right].sample_count, n.sample_count);
    }
  }
  for (std::size_t i = 1; i < parents.size(); ++i) EXPECT_EQ(parents[i], 1);
  EXPECT_LE(leaves, static_cast<std::size_t>(c.max_leaf_nodes));
  EXPECT_EQ(leaves, t.leaf_count());
}

}  // namespace

TEST(BinMapper, FewDistinctValuesGetOneBinEach) {
  Matrix X(9, 1);
  for (std::size_t i = 0; i < 9; ++i) X(i, 0) = 1.0 + static_cast<double>(i % 3);
  const BinMapper b = BinMapper::fit(X, 256);
  ASSERT_EQ(b.thresholds(0).size(), 2u);
  EXPECT_EQ(b.bin(0, 1.0), 0);
  EXPECT_EQ(b.bin(0, 2.0), 1);
  EXPECT_EQ(b.bin(0, 3.0), 2);
  EXPECT_EQ(b.bin(0, std::nan("")), b.missing_bin());
}

TEST(BinMapper, ThresholdsStrictlyIncreasing) {
  const Data d = make_data(5000, 5, 71, 0.1);
  const BinMapper b = BinMapper::fit(d.X, 256);
  for (std::size_t f = 0; f < 5; ++f) {
    const auto& t = b.thresholds(f);
    EXPECT_LE(t.size(), 255u);
    for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LT(t[i - 1], t[i]);
  }
}

TEST(BinMapper, UniformDataFillsBinsEvenly) {
  Rng rng(72);
  Matrix X(10000, 1);
  for (std::size_t i = 0; i < X.rows; ++i) X(i, 0) = rng.uniform();
  for (int max_bins : {16, 64}) {
    const BinMapper b = BinMapper::fit(X, max_bins);
    std::map<Bin, int> counts;
    for (std::size_t i = 0; i < X.rows; ++i) ++counts[b.bin(0, X(i, 0))];
    ASSERT_EQ(counts.size(), static_cast<std::size_t>(max_bins));
    const double share = 10000.0 / max_bins;
    for (const auto& [bin, c] : counts) EXPECT_LT(std::abs(c - share) / share, 0.2) << bin;
  }
}

TEST(BinMapper, BinAgreesWithThresholdOrder) {
  const Data d = make_data(2000, 1, 73);
  const BinMapper b = BinMapper::fit(d.X, 32);
  const auto& t = b.thresholds(0);
  for (std::size_t i = 0; i < d.X.rows; ++i) {
    const double v = d.X(i, 0);
    const Bin k = b.bin(0, v);
    if (k < t.size()) EXPECT_LE(v, t[k]);
    if (k > 0) EXPECT_GT(v, t[k - 1]);
  }
}

TEST(Fit, ConstantTargetGivesBaselineOnly) {
  Data d = make_data(200, 3, 74);
  std::fill(d.y.begin(), d.y.end(), 7.0);
  const GBDTModel m = fit(d.X, d.y, {});
  EXPECT_TRUE(m.trees.empty());
  for (std::size_t i = 0; i < 20; ++i) EXPECT_DOUBLE_EQ(predict(m, d.X.row(i)), 7.0);
}

TEST(Fit, RecoversLinearFunction) {
  Rng rng(75);
  const std::size_t n = 1000;
  Matrix X(n, 40);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 40; ++j) X(i, j) = rng.uniform();
    const double u1 = rng.uniform(), u2 = rng.uniform();
    const double noise = 0.01 * std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(6.283185307179586 * u2);
    y[i] = 3.0 * X(i, 0) + noise;
  }
  Matrix Xtr(800, 40), Xte(200, 40);
  std::copy_n(X.data.begin(), 800 * 40, Xtr.data.begin());
  std::copy(X.data.begin() + 800 * 40, X.data.end(), Xte.data.begin());
  GBDTConfig c;
  c.seed = 3;
  const GBDTModel m = fit(Xtr, std::span<const double>(y.data(), 800), c);
  double mae = 0.0;
  for (std::size_t i = 0; i < 200; ++i) mae += std::abs(predict(m, Xte.row(i)) - y[800 + i]);
  EXPECT_LT(mae / 200.0, 0.05);
}

TEST(Fit, LeavesRespectMinSamplesAndShape) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Data d = make_data(1500, 4, 100 + seed, 0.05);
    GBDTConfig c;
    c.max_iter = 40;
    c.seed = seed;
    const GBDTModel m = fit(d.X, d.y, c);
    ASSERT_FALSE(m.trees.empty());
    for (const auto& t : m.trees) check_tree_shape(t, c);
  }
}

TEST(Fit, TrainingLossNonIncreasing) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Data d = make_data(600, 3, 200 + seed, 0.05);
    GBDTConfig c;
    c.max_iter = 60;
    c.early_stopping = false;
    c.seed = seed;
    const GBDTModel m = fit(d.X, d.y, c);
    ASSERT_EQ(m.train_loss.size(), m.trees.size() + 1);
    for (std::size_t i = 1; i < m.train_loss.size(); ++i) {
      EXPECT_LE(m.train_loss[i], m.train_loss[i - 1] + 1e-12);
    }
  }
}

TEST(Fit, WithoutEarlyStoppingBuildsExactlyMaxIter) {
  const Data d = make_data(400, 3, 76);
  GBDTConfig c;
  c.max_iter = 37;
  c.early_stopping = false;
  EXPECT_EQ(fit(d.X, d.y, c).trees.size(), 37u);
}

TEST(Fit, EarlyStoppingStopsBeforeMaxIterOnNoise) {
  Data d = make_data(500, 3, 77);
  Rng rng(5);
  for (double& v : d.y) v = rng.uniform();
  GBDTConfig c;
  c.max_iter = 500;
  const GBDTModel m = fit(d.X, d.y, c);
  EXPECT_LT(m.trees.size(), 500u);
  EXPECT_EQ(m.validation_loss.size(), m.trees.size() + 1);
}

TEST(Fit, DeterministicForSameSeed) {
  const Data d = make_data(800, 4, 78, 0.05);
  GBDTConfig c;
  c.seed = 9;
  const nlohmann::json a = to_json(fit(d.X, d.y, c));
  const nlohmann::json b = to_json(fit(d.X, d.y, c));
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Fit, InputValidation) {
  const Data d = make_data(30, 2, 79);
  EXPECT_THROW(fit(d.X, d.y, {}), EmptyDataset);
  const Data big = make_data(100, 2, 80);
  EXPECT_THROW(fit(big.X, std::span<const double>(big.y.data(), 99), {}), DimensionMismatch);
  GBDTConfig bad;
  bad.learning_rate = 0.0;
  EXPECT_THROW(fit(big.X, big.y, bad), ConfigError);
  bad = {};
  bad.max_bins = 300;
  EXPECT_THROW(fit(big.X, big.y, bad), ConfigError);
  bad = {};
  bad.max_iter = 0;
  EXPECT_THROW(fit(big.X, big.y, bad), ConfigError);
}

TEST(Predict, EmptyTreeListIsBaseline) {
  GBDTModel m;
  m.baseline = 1.25;
  m.n_features = 2;
  const double x[2] = {0.0, 1.0};
  EXPECT_DOUBLE_EQ(predict(m, x), 1.25);
}

TEST(Predict, HandBuiltStumpRoutesByThreshold) {
  GBDTModel m;
  m.baseline = 1.0;
  m.learning_rate = 0.5;
  m.n_features = 2;
  m.bin_mapper = BinMapper::from_thresholds({{0.0, 0.5}, {0.0}}, 256);
  RegressionTree t;
  t.nodes.resize(3);
  t.nodes[0].feature = 1;
  t.nodes[0].bin_threshold = 0;
  t.nodes[0].threshold = 0.0;
  t.nodes[0].left = 1;
  t.nodes[0].right = 2;
  t.nodes[1].value = -2.0;
  t.nodes[2].value = 4.0;
  m.trees.push_back(t);
  const double lo[2] = {9.0, -0.3};
  const double hi[2] = {9.0, 0.3};
  EXPECT_DOUBLE_EQ(predict(m, lo), 0.0);
  EXPECT_DOUBLE_EQ(predict(m, hi), 3.0);
  const double three[3] = {0, 0, 0};
  EXPECT_THROW(predict(m, three), DimensionMismatch);
}

TEST(Predict, AgreesWithNaiveTraversal) {
  const Data d = make_data(2000, 5, 81, 0.1);
  GBDTConfig c;
  c.max_iter = 50;
  const GBDTModel m = fit(d.X, d.y, c);
  const Data probe = make_data(500, 5, 82, 0.2);
  for (std::size_t i = 0; i < probe.X.rows; ++i) {
    EXPECT_NEAR(predict(m, probe.X.row(i)), naive_predict(m, probe.X.row(i)), 1e-12);
  }
}

TEST(Serialization, JsonRoundTripPreservesPredictions) {
  const Data d = make_data(1000, 3, 83, 0.1);
  GBDTConfig c;
  c.max_iter = 30;
  const GBDTModel m = fit(d.X, d.y, c);
  const GBDTModel back = model_from_json(nlohmann::json::parse(to_json(m).dump()));
  for (std::size_t i = 0; i < d.X.rows; ++i) {
    EXPECT_EQ(predict(m, d.X.row(i)), predict(back, d.X.row(i)));
  }
}
