#pragma once

// Histogram-based gradient-boosted regression trees (least-squares loss,
// leaf-wise growth, early stopping on a held-out validation split).

#include <cstddef>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <vector>

namespace physagent::gbdt {

// Row-major dense matrix of feature values; NaN marks a missing value.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }
};

struct GBDTConfig {
  int max_iter = 500;
  double learning_rate = 0.1;
  int min_samples_leaf = 20;
  bool early_stopping = true;
  double validation_fraction = 0.1;
  int n_iter_no_change = 10;
  double tol = 1e-7;
  int max_bins = 256;
  int max_leaf_nodes = 31;
  double l2_regularization = 0.0;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
};

using Bin = std::uint16_t;

class BinMapper {
 public:
  BinMapper() = default;

  // Quantile thresholds per feature over the non-missing values; features
  // with at most max_bins distinct values get one bin per value.
  static BinMapper fit(const Matrix& X, int max_bins);
  static BinMapper from_thresholds(std::vector<std::vector<double>> thresholds,
                                   int max_bins);

  Bin bin(std::size_t feature, double value) const;
  // Values v with bin(f, v) <= b satisfy v <= thresholds(f)[b].
  const std::vector<double>& thresholds(std::size_t feature) const {
    return thresholds_[feature];
  }
  std::size_t n_features() const { return thresholds_.size(); }
  Bin missing_bin() const { return static_cast<Bin>(max_bins_); }
  int max_bins() const { return max_bins_; }
  // Non-missing bins used by a feature.
  std::size_t n_bins(std::size_t feature) const {
    return thresholds_[feature].size() + 1;
  }

 private:
  std::vector<std::vector<double>> thresholds_;
  int max_bins_ = 256;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  Bin bin_threshold = 0;
  double threshold = 0.0;  // raw-value form of bin_threshold
  bool missing_left = false;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output before the learning rate
  int sample_count = 0;

  bool is_leaf() const { return feature < 0; }
};

class RegressionTree {
 public:
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  std::size_t leaf_count() const;
};

struct GBDTModel {
  double baseline = 0.0;
  double learning_rate = 0.1;
  std::size_t n_features = 0;
  std::vector<RegressionTree> trees;
  BinMapper bin_mapper;
  // Entry 0 is the baseline-only loss; entry k follows tree k.
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
};

// Throws EmptyDataset when X has no rows or fewer than
// max(2 * min_samples_leaf, 10); DimensionMismatch when y.size() != X.rows.
GBDTModel fit(const Matrix& X, std::span<const double> y,
              const GBDTConfig& config);

// baseline + learning_rate * sum of routed leaf values.
double predict(const GBDTModel& model, std::span<const double> x);

nlohmann::json to_json(const GBDTModel& model);
GBDTModel model_from_json(const nlohmann::json& j);

}  // namespace physagent::gbdt
