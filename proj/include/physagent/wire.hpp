#pragma once

// JSON wire formats shared by the remote clients and the mock servers.
//
// Keypoint frame: [[u, v, visible] x 14]; invisible points carry null
// coordinates.
// Video request:  {prompt, fps, duration_s,
//                  first_frame: {width, height, keypoints, raster_png_base64?}}
// Video response: {generator_id, fps, frames: [frame...]}
// VLM request:    {task, before_frame, after_frame, allowed_verdicts}
// VLM response:   {verdict_text}

#include <nlohmann/json.hpp>
#include <string>

#include "physagent/kinematics.hpp"
#include "physagent/world_model.hpp"

namespace physagent::wire {

nlohmann::json frame_to_json(const KeypointFrame& frame);
// Throws MalformedResponse unless exactly 14 well-formed entries.
KeypointFrame frame_from_json(const nlohmann::json& j);

nlohmann::json video_request(const RolloutRequest& request,
                             const CameraModel& camera, bool include_raster);
Rollout rollout_from_response(const nlohmann::json& j);
nlohmann::json rollout_to_response(const Rollout& rollout);

// 8-bit grayscale PNG of the keypoint skeleton.
std::string render_png(const KeypointFrame& frame, int width, int height);

}  // namespace physagent::wire
