#include "physagent/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <string>

#include "physagent/errors.hpp"
#include "physagent/rng.hpp"

namespace physagent::gbdt {
namespace {

struct HistBin {
  double sum_g = 0.0;
  std::uint32_t count = 0;
};

struct SplitInfo {
  double gain = 0.0;
  int feature = -1;
  Bin bin = 0;
  bool missing_left = false;
  std::uint32_t left_count = 0;
};

// Column-major binned training data.
struct BinnedData {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Bin> bins;

  Bin at(std::size_t row, std::size_t col) const { return bins[col * rows + row]; }
};

BinnedData bin_rows(const Matrix& X, std::span<const std::uint32_t> rows,
                    const BinMapper& mapper) {
  BinnedData out;
  out.rows = rows.size();
  out.cols = X.cols;
  out.bins.resize(out.rows * out.cols);
  for (std::size_t f = 0; f < X.cols; ++f) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.bins[f * out.rows + i] = mapper.bin(f, X(rows[i], f));
    }
  }
  return out;
}

double half_mse(std::span<const double> y, std::span<const double> pred) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - pred[i];
    s += r * r;
  }
  return y.empty() ? 0.0 : 0.5 * s / static_cast<double>(y.size());
}

class TreeGrower {
 public:
  TreeGrower(const BinnedData& data, const BinMapper& mapper,
             std::span<const double> gradients, const GBDTConfig& config)
      : data_(data),
        mapper_(mapper),
        grad_(gradients),
        config_(config),
        stride_(static_cast<std::size_t>(config.max_bins) + 1) {}

  // Grows one tree; `leaf_of` receives the leaf node id of every row.
  RegressionTree grow(std::vector<int>& leaf_of) {
    index_.resize(data_.rows);
    std::iota(index_.begin(), index_.end(), 0u);
    tree_.nodes.clear();
    ranges_.clear();
    hists_.clear();

    const int root = add_node(0, static_cast<std::uint32_t>(data_.rows));
    hists_[root] = build_histogram(0, static_cast<std::uint32_t>(data_.rows));
    consider(root);

    std::size_t leaves = 1;
    while (!queue_.empty() &&
           leaves < static_cast<std::size_t>(config_.max_leaf_nodes)) {
      const auto [gain, neg_id] = queue_.top();
      queue_.pop();
      split(-neg_id);
      ++leaves;
    }
    queue_ = {};

    leaf_of.assign(data_.rows, 0);
    for (std::size_t id = 0; id < tree_.nodes.size(); ++id) {
      TreeNode& node = tree_.nodes[id];
      if (!node.is_leaf()) continue;
      const auto [begin, end] = ranges_[id];
      double g = 0.0;
      for (std::uint32_t k = begin; k < end; ++k) g += grad_[index_[k]];
      node.value = -g / (static_cast<double>(end - begin) +
                         config_.l2_regularization);
      for (std::uint32_t k = begin; k < end; ++k) {
        leaf_of[index_[k]] = static_cast<int>(id);
      }
    }
    return std::move(tree_);
  }

 private:
  int add_node(std::uint32_t begin, std::uint32_t end) {
    TreeNode node;
    node.sample_count = static_cast<int>(end - begin);
    tree_.nodes.push_back(node);
    ranges_.emplace_back(begin, end);
    pending_.emplace_back();
    return static_cast<int>(tree_.nodes.size() - 1);
  }

  std::vector<HistBin> build_histogram(std::uint32_t begin,
                                       std::uint32_t end) const {
    std::vector<HistBin> h(data_.cols * stride_);
    for (std::size_t f = 0; f < data_.cols; ++f) {
      HistBin* hf = h.data() + f * stride_;
      const Bin* col = data_.bins.data() + f * data_.rows;
      for (std::uint32_t k = begin; k < end; ++k) {
        const std::uint32_t i = index_[k];
        HistBin& b = hf[col[i]];
        b.sum_g += grad_[i];
        ++b.count;
      }
    }
    return h;
  }

  SplitInfo best_split(const std::vector<HistBin>& h, std::uint32_t n) const {
    const double lambda = config_.l2_regularization;
    const auto min_leaf = static_cast<std::uint32_t>(config_.min_samples_leaf);
    double total_g = 0.0;
    for (std::size_t b = 0; b < stride_; ++b) total_g += h[b].sum_g;
    const double parent = total_g * total_g / (n + lambda);

    SplitInfo best;
    for (std::size_t f = 0; f < data_.cols; ++f) {
      const HistBin* hf = h.data() + f * stride_;
      const HistBin& miss = hf[mapper_.missing_bin()];
      const std::size_t nb = mapper_.n_bins(f);
      // Without missing values in this node, unseen missing values follow
      // the larger child.
      const bool has_missing = miss.count > 0;
      double left_g = 0.0;
      std::uint32_t left_n = 0;
      const std::size_t last = has_missing ? nb : nb - 1;
      for (std::size_t b = 0; b < last; ++b) {
        left_g += hf[b].sum_g;
        left_n += hf[b].count;
        for (int miss_left = 0; miss_left < (has_missing ? 2 : 1); ++miss_left) {
          const double lg = left_g + (miss_left ? miss.sum_g : 0.0);
          const std::uint32_t ln = left_n + (miss_left ? miss.count : 0);
          const std::uint32_t rn = n - ln;
          if (ln < min_leaf || rn < min_leaf) continue;
          const double rg = total_g - lg;
          const double gain =
              lg * lg / (ln + lambda) + rg * rg / (rn + lambda) - parent;
          if (gain > best.gain) {
            best.gain = gain;
            best.feature = static_cast<int>(f);
            best.bin = static_cast<Bin>(b);
            best.missing_left = has_missing ? miss_left == 1 : ln >= rn;
            best.left_count = ln;
          }
        }
      }
    }
    return best;
  }

  void consider(int id) {
    const auto [begin, end] = ranges_[id];
    const std::uint32_t n = end - begin;
    SplitInfo s;
    if (n >= 2 * static_cast<std::uint32_t>(config_.min_samples_leaf)) {
      s = best_split(hists_[id], n);
    }
    if (s.feature >= 0 && s.gain > 0.0) {
      pending_[id] = s;
      queue_.emplace(s.gain, -id);
    } else {
      hists_.erase(id);
    }
  }

  void split(int id) {
    const SplitInfo s = pending_[id];
    const auto [begin, end] = ranges_[id];
    const std::size_t f = static_cast<std::size_t>(s.feature);
    const Bin missing = mapper_.missing_bin();
    const Bin* col = data_.bins.data() + f * data_.rows;
    auto mid_it = std::stable_partition(
        index_.begin() + begin, index_.begin() + end, [&](std::uint32_t i) {
          const Bin b = col[i];
          return b == missing ? s.missing_left : b <= s.bin;
        });
    const auto mid = static_cast<std::uint32_t>(mid_it - index_.begin());

    const int left = add_node(begin, mid);
    const int right = add_node(mid, end);
    TreeNode& node = tree_.nodes[id];
    node.feature = s.feature;
    node.bin_threshold = s.bin;
    const auto& th = mapper_.thresholds(f);
    node.threshold = s.bin < th.size() ? th[s.bin]
                                       : std::numeric_limits<double>::infinity();
    node.missing_left = s.missing_left;
    node.left = left;
    node.right = right;

    // Histogram subtraction: scan the smaller child only.
    const bool left_small = (mid - begin) <= (end - mid);
    const int small = left_small ? left : right;
    const int large = left_small ? right : left;
    std::vector<HistBin> parent = std::move(hists_[id]);
    hists_.erase(id);
    std::vector<HistBin> hs =
        build_histogram(ranges_[small].first, ranges_[small].second);
    for (std::size_t k = 0; k < parent.size(); ++k) {
      parent[k].sum_g -= hs[k].sum_g;
      parent[k].count -= hs[k].count;
    }
    hists_[small] = std::move(hs);
    hists_[large] = std::move(parent);
    consider(left);
    consider(right);
  }

  const BinnedData& data_;
  const BinMapper& mapper_;
  std::span<const double> grad_;
  const GBDTConfig& config_;
  std::size_t stride_;

  RegressionTree tree_;
  std::vector<std::uint32_t> index_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> ranges_;
  std::vector<SplitInfo> pending_;
  std::map<int, std::vector<HistBin>> hists_;
  // Max gain first; ties go to the older node.
  std::priority_queue<std::pair<double, int>> queue_;
};

int route_binned(const RegressionTree& tree, const BinnedData& data,
                 std::size_t row, Bin missing) {
  int id = 0;
  while (!tree.nodes[id].is_leaf()) {
    const TreeNode& n = tree.nodes[id];
    const Bin b = data.at(row, static_cast<std::size_t>(n.feature));
    const bool go_left = b == missing ? n.missing_left : b <= n.bin_threshold;
    id = go_left ? n.left : n.right;
  }
  return id;
}

}  // namespace

void GBDTConfig::validate() const {
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw ConfigError("learning_rate must lie in (0, 1]");
  }
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
  if (max_bins < 2 || max_bins > 256) {
    throw ConfigError("max_bins must lie in [2, 256]");
  }
  if (max_leaf_nodes < 2) throw ConfigError("max_leaf_nodes must be >= 2");
  if (early_stopping &&
      !(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in (0, 1)");
  }
  if (n_iter_no_change < 1) throw ConfigError("n_iter_no_change must be >= 1");
  if (!(l2_regularization >= 0.0)) {
    throw ConfigError("l2_regularization must be >= 0");
  }
}

BinMapper BinMapper::fit(const Matrix& X, int max_bins) {
  BinMapper m;
  m.max_bins_ = max_bins;
  m.thresholds_.resize(X.cols);
  std::vector<double> values;
  for (std::size_t f = 0; f < X.cols; ++f) {
    values.clear();
    for (std::size_t i = 0; i < X.rows; ++i) {
      const double v = X(i, f);
      if (!std::isnan(v)) values.push_back(v);
    }
    std::sort(values.begin(), values.end());
    std::vector<double> distinct = values;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    auto& th = m.thresholds_[f];
    if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
      for (std::size_t k = 0; k + 1 < distinct.size(); ++k) {
        th.push_back(0.5 * (distinct[k] + distinct[k + 1]));
      }
      continue;
    }
    // Linear-interpolated empirical quantiles at k / max_bins.
    const double last = static_cast<double>(values.size() - 1);
    for (int k = 1; k < max_bins; ++k) {
      const double pos = last * k / max_bins;
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, values.size() - 1);
      const double t = values[lo] + (pos - lo) * (values[hi] - values[lo]);
      if (th.empty() || t > th.back()) th.push_back(t);
    }
    // The top threshold must leave the maximum in the last bin.
    while (!th.empty() && th.back() >= values.back()) th.pop_back();
  }
  return m;
}

BinMapper BinMapper::from_thresholds(std::vector<std::vector<double>> thresholds,
                                     int max_bins) {
  BinMapper m;
  m.max_bins_ = max_bins;
  m.thresholds_ = std::move(thresholds);
  for (const auto& th : m.thresholds_) {
    if (th.size() + 1 > static_cast<std::size_t>(max_bins)) {
      throw ConfigError("too many thresholds for max_bins");
    }
    for (std::size_t k = 1; k < th.size(); ++k) {
      if (!(th[k - 1] < th[k])) {
        throw ConfigError("bin thresholds must be strictly increasing");
      }
    }
  }
  return m;
}

Bin BinMapper::bin(std::size_t feature, double value) const {
  if (std::isnan(value)) return missing_bin();
  const auto& th = thresholds_[feature];
  return static_cast<Bin>(std::lower_bound(th.begin(), th.end(), value) -
                          th.begin());
}

double RegressionTree::predict(std::span<const double> x) const {
  int id = 0;
  while (!nodes[id].is_leaf()) {
    const TreeNode& n = nodes[id];
    const double v = x[static_cast<std::size_t>(n.feature)];
    const bool go_left = std::isnan(v) ? n.missing_left : v <= n.threshold;
    id = go_left ? n.left : n.right;
  }
  return nodes[id].value;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(),
                    [](const TreeNode& n) { return n.is_leaf(); }));
}

GBDTModel fit(const Matrix& X, std::span<const double> y,
              const GBDTConfig& config) {
  config.validate();
  if (X.rows == 0) throw EmptyDataset("gbdt fit: no samples");
  if (y.size() != X.rows) {
    throw DimensionMismatch("gbdt fit: " + std::to_string(y.size()) +
                            " targets for " + std::to_string(X.rows) + " rows");
  }
  const std::size_t min_rows = std::max<std::size_t>(
      2 * static_cast<std::size_t>(config.min_samples_leaf), 10);
  if (X.rows < min_rows) {
    throw EmptyDataset("gbdt fit: need at least " + std::to_string(min_rows) +
                       " samples, got " + std::to_string(X.rows));
  }

  std::vector<std::uint32_t> order(X.rows);
  std::iota(order.begin(), order.end(), 0u);
  std::vector<std::uint32_t> train_rows = order;
  std::vector<std::uint32_t> val_rows;
  if (config.early_stopping) {
    Rng rng(config.seed);
    rng.shuffle(order.begin(), order.end());
    const auto n_val = static_cast<std::size_t>(
        std::ceil(config.validation_fraction * static_cast<double>(X.rows)));
    val_rows.assign(order.begin(), order.begin() + n_val);
    train_rows.assign(order.begin() + n_val, order.end());
    std::sort(val_rows.begin(), val_rows.end());
    std::sort(train_rows.begin(), train_rows.end());
  }

  Matrix X_train(train_rows.size(), X.cols);
  std::vector<double> y_train(train_rows.size());
  for (std::size_t i = 0; i < train_rows.size(); ++i) {
    std::copy_n(X.row(train_rows[i]).begin(), X.cols, &X_train(i, 0));
    y_train[i] = y[train_rows[i]];
  }
  std::vector<double> y_val(val_rows.size());
  for (std::size_t i = 0; i < val_rows.size(); ++i) y_val[i] = y[val_rows[i]];

  GBDTModel model;
  model.learning_rate = config.learning_rate;
  model.n_features = X.cols;
  model.bin_mapper = BinMapper::fit(X_train, config.max_bins);
  model.baseline = std::accumulate(y_train.begin(), y_train.end(), 0.0) /
                   static_cast<double>(y_train.size());

  std::vector<std::uint32_t> all_train(train_rows.size());
  std::iota(all_train.begin(), all_train.end(), 0u);
  const BinnedData train_bins = bin_rows(X_train, all_train, model.bin_mapper);
  const BinnedData val_bins = bin_rows(X, val_rows, model.bin_mapper);

  std::vector<double> pred(y_train.size(), model.baseline);
  std::vector<double> val_pred(y_val.size(), model.baseline);
  model.train_loss.push_back(half_mse(y_train, pred));
  if (config.early_stopping) model.validation_loss.push_back(half_mse(y_val, val_pred));

  const auto [lo, hi] = std::minmax_element(y_train.begin(), y_train.end());
  if (*lo == *hi) return model;  // constant target: the baseline is exact

  std::vector<double> grad(y_train.size());
  std::vector<int> leaf_of;
  for (int iter = 0; iter < config.max_iter; ++iter) {
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = pred[i] - y_train[i];
    TreeGrower grower(train_bins, model.bin_mapper, grad, config);
    RegressionTree tree = grower.grow(leaf_of);
    if (tree.nodes.size() == 1) break;  // nothing left to split

    for (std::size_t i = 0; i < pred.size(); ++i) {
      pred[i] += config.learning_rate * tree.nodes[leaf_of[i]].value;
    }
    model.train_loss.push_back(half_mse(y_train, pred));
    for (std::size_t i = 0; i < val_pred.size(); ++i) {
      const int leaf = route_binned(tree, val_bins, i, model.bin_mapper.missing_bin());
      val_pred[i] += config.learning_rate * tree.nodes[leaf].value;
    }
    model.trees.push_back(std::move(tree));

    if (config.early_stopping) {
      model.validation_loss.push_back(half_mse(y_val, val_pred));
      const auto& vl = model.validation_loss;
      const auto window = static_cast<std::size_t>(config.n_iter_no_change);
      if (vl.size() > window) {
        const double reference = vl[vl.size() - window - 1];
        const bool stalled =
            std::all_of(vl.end() - static_cast<std::ptrdiff_t>(window), vl.end(),
                        [&](double l) { return l > reference - config.tol; });
        if (stalled) break;
      }
    }
  }
  return model;
}

double predict(const GBDTModel& model, std::span<const double> x) {
  if (x.size() != model.n_features) {
    throw DimensionMismatch("gbdt predict: expected " +
                            std::to_string(model.n_features) + " features, got " +
                            std::to_string(x.size()));
  }
  double sum = 0.0;
  for (const auto& tree : model.trees) sum += tree.predict(x);
  return model.baseline + model.learning_rate * sum;
}

nlohmann::json to_json(const GBDTModel& model) {
  using nlohmann::json;
  json trees = json::array();
  for (const auto& t : model.trees) {
    json feature = json::array(), bin = json::array(), miss = json::array(),
         left = json::array(), right = json::array(), value = json::array(),
         count = json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      bin.push_back(n.bin_threshold);
      miss.push_back(n.missing_left ? 1 : 0);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
      count.push_back(n.sample_count);
    }
    trees.push_back({{"feature", feature},
                     {"bin", bin},
                     {"missing_left", miss},
                     {"left", left},
                     {"right", right},
                     {"value", value},
                     {"count", count}});
  }
  json thresholds = json::array();
  for (std::size_t f = 0; f < model.bin_mapper.n_features(); ++f) {
    thresholds.push_back(model.bin_mapper.thresholds(f));
  }
  return {{"baseline", model.baseline},
          {"learning_rate", model.learning_rate},
          {"n_features", model.n_features},
          {"max_bins", model.bin_mapper.max_bins()},
          {"bin_thresholds", thresholds},
          {"train_loss", model.train_loss},
          {"validation_loss", model.validation_loss},
          {"trees", trees}};
}

GBDTModel model_from_json(const nlohmann::json& j) {
  GBDTModel m;
  m.baseline = j.at("baseline").get<double>();
  m.learning_rate = j.at("learning_rate").get<double>();
  m.n_features = j.at("n_features").get<std::size_t>();
  m.bin_mapper = BinMapper::from_thresholds(
      j.at("bin_thresholds").get<std::vector<std::vector<double>>>(),
      j.at("max_bins").get<int>());
  m.train_loss = j.at("train_loss").get<std::vector<double>>();
  m.validation_loss = j.at("validation_loss").get<std::vector<double>>();
  for (const auto& jt : j.at("trees")) {
    RegressionTree t;
    const auto& feature = jt.at("feature");
    t.nodes.resize(feature.size());
    for (std::size_t k = 0; k < feature.size(); ++k) {
      TreeNode& n = t.nodes[k];
      n.feature = feature[k].get<int>();
      n.bin_threshold = jt.at("bin")[k].get<Bin>();
      n.missing_left = jt.at("missing_left")[k].get<int>() != 0;
      n.left = jt.at("left")[k].get<int>();
      n.right = jt.at("right")[k].get<int>();
      n.value = jt.at("value")[k].get<double>();
      n.sample_count = jt.at("count")[k].get<int>();
      if (!n.is_leaf()) {
        const auto& th = m.bin_mapper.thresholds(static_cast<std::size_t>(n.feature));
        n.threshold = n.bin_threshold < th.size()
                          ? th[n.bin_threshold]
                          : std::numeric_limits<double>::infinity();
      }
    }
    m.trees.push_back(std::move(t));
  }
  return m;
}

}  // namespace physagent::gbdt
