#include "physagent/robot_config.hpp"

#include <fstream>

#include "physagent/errors.hpp"

namespace physagent {
namespace {

using nlohmann::json;

json chain_to_json(const KinematicChain& c) {
  json limits = json::array();
  for (const auto& l : c.joint_limits) limits.push_back({l.lo, l.hi});
  return {{"link_lengths", c.link_lengths},
          {"joint_limits", limits},
          {"gripper_link", c.gripper_link},
          {"base_position", {c.base_position.x(), c.base_position.y()}},
          {"base_orientation", c.base_orientation},
          {"finger_swing", c.finger_swing}};
}

KinematicChain chain_from_json(const json& j) {
  KinematicChain c;
  const auto lengths = j.at("link_lengths").get<std::vector<double>>();
  const auto& limits = j.at("joint_limits");
  if (lengths.size() != kJointsPerArm || limits.size() != kJointsPerArm) {
    throw ConfigError("chain needs exactly 6 links and 6 joint limits");
  }
  for (std::size_t k = 0; k < kJointsPerArm; ++k) {
    c.link_lengths[k] = lengths[k];
    c.joint_limits[k] = {limits[k].at(0).get<double>(),
                         limits[k].at(1).get<double>()};
  }
  c.gripper_link = j.at("gripper_link").get<double>();
  const auto base = j.at("base_position").get<std::vector<double>>();
  if (base.size() != 2) throw ConfigError("base_position must be [x, y]");
  c.base_position = Vec2(base[0], base[1]);
  c.base_orientation = j.at("base_orientation").get<double>();
  c.finger_swing = j.value("finger_swing", 0.0);
  c.validate();
  return c;
}

}  // namespace

json to_json(const CameraModel& camera) {
  return {{"scale", camera.scale},
          {"offset", {camera.offset.x(), camera.offset.y()}},
          {"image_size", {camera.width, camera.height}},
          {"flip_x", camera.flip_x}};
}

json to_json(const RobotConfig& config) {
  return {{"format_version", 1},
          {"left", chain_to_json(config.robot.left)},
          {"right", chain_to_json(config.robot.right)},
          {"rate_limits", config.robot.rate_limits},
          {"camera", to_json(config.camera)}};
}

CameraModel camera_from_json(const json& j) {
  try {
    CameraModel cam;
    cam.scale = j.at("scale").get<double>();
    const auto off = j.at("offset").get<std::vector<double>>();
    const auto size = j.at("image_size").get<std::vector<int>>();
    if (off.size() != 2 || size.size() != 2) {
      throw ConfigError("camera offset and image_size must have 2 entries");
    }
    cam.offset = Vec2(off[0], off[1]);
    cam.width = size[0];
    cam.height = size[1];
    cam.flip_x = j.value("flip_x", false);
    cam.validate();
    return cam;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid camera config: ") + e.what());
  }
}

RobotConfig robot_config_from_json(const json& j) {
  try {
    RobotConfig config;
    config.robot.left = chain_from_json(j.at("left"));
    config.robot.right = chain_from_json(j.at("right"));
    const auto rates = j.at("rate_limits").get<std::vector<double>>();
    if (rates.size() != kCommandDim) {
      throw ConfigError("rate_limits must have 14 entries");
    }
    std::copy(rates.begin(), rates.end(), config.robot.rate_limits.begin());
    config.robot.validate();
    if (j.contains("camera")) config.camera = camera_from_json(j.at("camera"));
    return config;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid robot config: ") + e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

RobotConfig load_robot_config(const std::filesystem::path& path) {
  return robot_config_from_json(read_json_file(path));
}

CameraModel load_camera(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  return camera_from_json(j.contains("camera") ? j.at("camera") : j);
}

void save_robot_config(const RobotConfig& config,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(config).dump(2) << '\n';
}

}  // namespace physagent
