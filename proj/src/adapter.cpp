#include "physagent/adapter.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "physagent/errors.hpp"
#include "physagent/rng.hpp"

namespace physagent {
namespace {

constexpr int kFormatVersion = 1;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("dataset line " + std::to_string(line_no) +
                     ": bad number '" + s + "'");
  }
}

gbdt::Matrix feature_matrix(const ImputerModel& imputer,
                            std::span<const FeatureVector> features) {
  gbdt::Matrix X(features.size(), kFeatureDim);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const FeatureVector fv = apply_imputer(imputer, features[i]);
    std::copy(fv.values.begin(), fv.values.end(), &X(i, 0));
  }
  return X;
}

}  // namespace

std::string keypoint_name(std::size_t index) {
  const Arm arm = index < kDofPerArm ? Arm::Left : Arm::Right;
  const std::size_t k = index % kDofPerArm;
  std::string name = arm_name(arm);
  name += k == kJointsPerArm ? "_tip" : "_j" + std::to_string(k + 1);
  return name;
}

AdapterDataset collect_dataset(const RobotModel& robot, const CameraModel& camera,
                               std::size_t n, std::uint64_t seed,
                               const std::string& camera_id) {
  if (n == 0) throw ConfigError("collect_dataset: n must be >= 1");
  robot.validate();
  camera.validate();
  AdapterDataset ds;
  ds.seed = seed;
  ds.image_size = {camera.width, camera.height};
  ds.samples.reserve(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    AdapterSample s;
    for (std::size_t d = 0; d < kCommandDim; ++d) {
      const JointLimit lim = robot.limit(d);
      s.target.values[d] = rng.uniform(lim.lo, lim.hi);
    }
    s.frame = project(camera, forward_kinematics(robot, s.target));
    s.camera_id = camera_id;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void save_dataset_csv(const AdapterDataset& dataset,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < kKeypointCount; ++i) {
    out << 'u' << i << ",v" << i << ',';
  }
  for (std::size_t i = 0; i < kKeypointCount; ++i) out << "vis" << i << ',';
  for (std::size_t i = 0; i < kCommandDim; ++i) out << 'q' << i << ',';
  out << "seed,width,height,camera\n";
  for (const auto& s : dataset.samples) {
    for (const auto& kp : s.frame.points) {
      if (kp.visible) {
        out << fmt(kp.u) << ',' << fmt(kp.v) << ',';
      } else {
        out << ",,";
      }
    }
    for (const auto& kp : s.frame.points) out << (kp.visible ? 1 : 0) << ',';
    for (double q : s.target.values) out << fmt(q) << ',';
    out << dataset.seed << ',' << dataset.image_size.width << ','
        << dataset.image_size.height << ',' << s.camera_id << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

AdapterDataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  constexpr std::size_t kColumns = 2 * kKeypointCount + kKeypointCount + kCommandDim + 4;
  std::string line;
  if (!std::getline(in, line) || split_csv(line).size() != kColumns) {
    throw ParseError(path.string() + ": missing or malformed header");
  }
  AdapterDataset ds;
  std::size_t line_no = 1;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != kColumns) {
      throw ParseError("dataset line " + std::to_string(line_no) + ": expected " +
                       std::to_string(kColumns) + " columns, got " +
                       std::to_string(cells.size()));
    }
    AdapterSample s;
    std::size_t c = 2 * kKeypointCount;
    for (std::size_t i = 0; i < kKeypointCount; ++i) {
      Keypoint& kp = s.frame.points[i];
      kp.visible = cells[c + i] == "1";
      if (kp.visible) {
        kp.u = parse_double(cells[2 * i], line_no);
        kp.v = parse_double(cells[2 * i + 1], line_no);
      } else {
        kp.u = kp.v = std::numeric_limits<double>::quiet_NaN();
      }
    }
    c += kKeypointCount;
    for (std::size_t d = 0; d < kCommandDim; ++d) {
      s.target.values[d] = parse_double(cells[c + d], line_no);
    }
    c += kCommandDim;
    const auto seed = static_cast<std::uint64_t>(std::stoull(cells[c]));
    const ImageSize size{static_cast<int>(parse_double(cells[c + 1], line_no)),
                         static_cast<int>(parse_double(cells[c + 2], line_no))};
    if (first) {
      ds.seed = seed;
      ds.image_size = size;
      first = false;
    } else if (!(size == ds.image_size)) {
      throw ParseError("dataset line " + std::to_string(line_no) +
                       ": image size differs from earlier rows");
    }
    s.camera_id = cells[c + 3];
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw EmptyDataset(path.string() + ": no samples");
  return ds;
}

std::size_t TrainingReport::outputs_below(double threshold) const {
  return static_cast<std::size_t>(std::count_if(
      mae.begin(), mae.end(), [&](double m) { return m < threshold; }));
}

AdapterModel fit_adapter(const AdapterDataset& dataset, const RobotModel& robot,
                         const AdapterFitOptions& options) {
  const std::size_t n = dataset.samples.size();
  if (n < 100) {
    throw EmptyDataset("fit_adapter: need at least 100 samples, got " +
                       std::to_string(n));
  }
  options.gbdt.validate();
  if (!(options.holdout_fraction > 0.0 && options.holdout_fraction < 1.0)) {
    throw ConfigError("holdout_fraction must lie in (0, 1)");
  }

  // Canonical order first so the split does not depend on input order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dataset.samples[a].target.values < dataset.samples[b].target.values;
  });
  Rng rng(options.seed);
  rng.shuffle(order.begin(), order.end());
  const auto n_hold = static_cast<std::size_t>(
      std::ceil(options.holdout_fraction * static_cast<double>(n)));
  const std::vector<std::size_t> hold(order.begin(), order.begin() + n_hold);
  const std::vector<std::size_t> train(order.begin() + n_hold, order.end());

  std::vector<FeatureVector> train_features, hold_features;
  for (std::size_t i : train) {
    train_features.push_back(
        extract_features(dataset.samples[i].frame, dataset.image_size));
  }
  for (std::size_t i : hold) {
    hold_features.push_back(
        extract_features(dataset.samples[i].frame, dataset.image_size));
  }

  AdapterModel model;
  model.image_size = dataset.image_size;
  for (std::size_t d = 0; d < kCommandDim; ++d) model.limits[d] = robot.limit(d);
  model.imputer = fit_imputer(train_features);
  const gbdt::Matrix X = feature_matrix(model.imputer, train_features);
  const gbdt::Matrix X_hold = feature_matrix(model.imputer, hold_features);
  model.regressors.resize(kCommandDim);
  model.report.train_samples = train.size();
  model.report.holdout_samples = hold.size();

  auto fit_output = [&](std::size_t d) {
    std::vector<double> y(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      y[i] = dataset.samples[train[i]].target.values[d];
    }
    gbdt::GBDTConfig config = options.gbdt;
    config.seed = Rng::mix(options.seed + d);
    model.regressors[d] = gbdt::fit(X, y, config);
    double err = 0.0;
    for (std::size_t i = 0; i < hold.size(); ++i) {
      err += std::abs(gbdt::predict(model.regressors[d], X_hold.row(i)) -
                      dataset.samples[hold[i]].target.values[d]);
    }
    model.report.mae[d] = err / static_cast<double>(hold.size());
    model.report.trees[d] = model.regressors[d].trees.size();
  };

  unsigned jobs = options.jobs == 0 ? std::thread::hardware_concurrency() : options.jobs;
  jobs = std::clamp<unsigned>(jobs, 1, kCommandDim);
  if (jobs == 1) {
    for (std::size_t d = 0; d < kCommandDim; ++d) fit_output(d);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t d; (d = next++) < kCommandDim;) fit_output(d);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return model;
}

std::array<double, kCommandDim> predict_raw(const AdapterModel& model,
                                            const KeypointFrame& frame) {
  if (!model.fitted()) throw UnfittedModel("adapter has no fitted regressors");
  const FeatureVector fv =
      apply_imputer(model.imputer, extract_features(frame, model.image_size));
  std::array<double, kCommandDim> out{};
  for (std::size_t d = 0; d < kCommandDim; ++d) {
    out[d] = gbdt::predict(model.regressors[d], fv.values);
  }
  return out;
}

JointState predict_command(const AdapterModel& model, const KeypointFrame& frame) {
  const auto raw = predict_raw(model, frame);
  JointState q;
  for (std::size_t d = 0; d < kCommandDim; ++d) {
    q.values[d] = std::clamp(raw[d], model.limits[d].lo, model.limits[d].hi);
  }
  return q;
}

std::vector<JointState> predict_commands(const AdapterModel& model,
                                         const Rollout& rollout) {
  if (!model.fitted()) throw UnfittedModel("adapter has no fitted regressors");
  std::vector<JointState> out;
  out.reserve(rollout.frames.size());
  for (std::size_t i = 0; i < rollout.frames.size(); ++i) {
    JointState q = predict_command(model, rollout.frames[i]);
    q.timestamp = static_cast<double>(i) / rollout.fps;
    out.push_back(q);
  }
  return out;
}

nlohmann::json to_json(const AdapterModel& model) {
  using nlohmann::json;
  json ordering = json::array();
  for (std::size_t i = 0; i < kKeypointCount; ++i) ordering.push_back(keypoint_name(i));
  json limits = json::array();
  for (const auto& l : model.limits) limits.push_back({l.lo, l.hi});
  json regressors = json::array();
  for (const auto& r : model.regressors) regressors.push_back(gbdt::to_json(r));
  return {{"format_version", kFormatVersion},
          {"image_size", {model.image_size.width, model.image_size.height}},
          {"keypoint_ordering", ordering},
          {"limits", limits},
          {"imputer",
           {{"column_means", model.imputer.column_means},
            {"fallback", model.imputer.fallback}}},
          {"regressors", regressors},
          {"training_report",
           {{"mae", model.report.mae},
            {"trees", model.report.trees},
            {"train_samples", model.report.train_samples},
            {"holdout_samples", model.report.holdout_samples}}}};
}

AdapterModel adapter_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw ParseError("unsupported adapter format_version " + std::to_string(version));
    }
    AdapterModel m;
    const auto size = j.at("image_size").get<std::array<int, 2>>();
    m.image_size = {size[0], size[1]};
    const auto limits = j.at("limits").get<std::vector<std::array<double, 2>>>();
    if (limits.size() != kCommandDim) throw ParseError("adapter: expected 14 limits");
    for (std::size_t d = 0; d < kCommandDim; ++d) m.limits[d] = {limits[d][0], limits[d][1]};
    m.imputer.column_means =
        j.at("imputer").at("column_means").get<std::array<double, kFeatureDim>>();
    m.imputer.fallback = j.at("imputer").at("fallback").get<double>();
    for (const auto& r : j.at("regressors")) m.regressors.push_back(gbdt::model_from_json(r));
    if (m.regressors.size() != kCommandDim) {
      throw ParseError("adapter: expected 14 regressors, got " +
                       std::to_string(m.regressors.size()));
    }
    const auto& rep = j.at("training_report");
    m.report.mae = rep.at("mae").get<std::array<double, kCommandDim>>();
    m.report.trees = rep.at("trees").get<std::array<std::size_t, kCommandDim>>();
    m.report.train_samples = rep.at("train_samples").get<std::size_t>();
    m.report.holdout_samples = rep.at("holdout_samples").get<std::size_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("adapter container: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("adapter container: ") + e.what());
  }
}

void save_adapter(const AdapterModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(model).dump() << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

AdapterModel load_adapter(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return adapter_from_json(j);
}

}  // namespace physagent
