#pragma once

// robot.json: chains, limits, rate limits and the camera.
//
// {
//   "format_version": 1,
//   "left":  { "link_lengths": [6], "joint_limits": [[lo, hi] x6],
//              "gripper_link": m, "base_position": [x, y],
//              "base_orientation": rad, "finger_swing": rad },
//   "right": { ... },
//   "rate_limits": [14],
//   "camera": { "scale": px/m, "offset": [u, v], "image_size": [w, h],
//               "flip_x": bool }
// }

#include <filesystem>
#include <nlohmann/json.hpp>

#include "physagent/kinematics.hpp"

namespace physagent {

struct RobotConfig {
  RobotModel robot = default_robot();
  CameraModel camera = default_camera();
};

nlohmann::json to_json(const RobotConfig& config);
nlohmann::json to_json(const CameraModel& camera);
RobotConfig robot_config_from_json(const nlohmann::json& j);
CameraModel camera_from_json(const nlohmann::json& j);

// Throws ConfigError for missing files or invalid content.
RobotConfig load_robot_config(const std::filesystem::path& path);
// Accepts either a bare camera object or a file with a "camera" member.
CameraModel load_camera(const std::filesystem::path& path);
void save_robot_config(const RobotConfig& config,
                       const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace physagent
