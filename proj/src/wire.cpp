#include "physagent/wire.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <httplib.h>
#include <vector>

#include "physagent/errors.hpp"

namespace physagent::wire {
namespace {

using nlohmann::json;

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

void put_chunk(std::string& out, const char* type, const std::string& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  put_u32(out, static_cast<std::uint32_t>(crc32(
                   0, reinterpret_cast<const Bytef*>(body.data()),
                   static_cast<uInt>(body.size()))));
}

void draw_line(std::vector<std::uint8_t>& img, int w, int h, double u0,
               double v0, double u1, double v1, std::uint8_t shade) {
  const int steps =
      std::max(1, static_cast<int>(std::ceil(std::hypot(u1 - u0, v1 - v0))));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const int x = static_cast<int>(std::lround(u0 + t * (u1 - u0)));
    const int y = static_cast<int>(std::lround(v0 + t * (v1 - v0)));
    if (x >= 0 && x < w && y >= 0 && y < h) img[y * w + x] = shade;
  }
}

}  // namespace

json frame_to_json(const KeypointFrame& frame) {
  json out = json::array();
  for (const auto& kp : frame.points) {
    if (kp.visible) {
      out.push_back({kp.u, kp.v, true});
    } else {
      out.push_back({nullptr, nullptr, false});
    }
  }
  return out;
}

KeypointFrame frame_from_json(const json& j) {
  if (!j.is_array() || j.size() != kKeypointCount) {
    throw MalformedResponse("frame must hold exactly 14 keypoints, got " +
                            std::to_string(j.is_array() ? j.size() : 0));
  }
  KeypointFrame frame;
  for (std::size_t i = 0; i < kKeypointCount; ++i) {
    const json& p = j[i];
    if (!p.is_array() || p.size() != 3) {
      throw MalformedResponse("keypoint must be [u, v, visible]");
    }
    const bool visible =
        p[2].is_boolean() ? p[2].get<bool>()
                          : (p[2].is_number() && p[2].get<double>() != 0.0);
    if (visible) {
      if (!p[0].is_number() || !p[1].is_number()) {
        throw MalformedResponse("visible keypoint needs numeric u, v");
      }
      frame.points[i] = {p[0].get<double>(), p[1].get<double>(), true};
    } else {
      frame.points[i] = {std::nan(""), std::nan(""), false};
    }
  }
  return frame;
}

json video_request(const RolloutRequest& request, const CameraModel& camera,
                   bool include_raster) {
  json first = {{"width", camera.width},
                {"height", camera.height},
                {"keypoints", frame_to_json(request.initial.frame())}};
  if (include_raster) {
    first["raster_png_base64"] = httplib::detail::base64_encode(
        render_png(request.initial.frame(), camera.width, camera.height));
  }
  return {{"prompt", request.prompt},
          {"fps", request.fps},
          {"duration_s", request.duration},
          {"first_frame", first}};
}

Rollout rollout_from_response(const json& j) {
  try {
    Rollout r;
    if (!j.is_object()) throw MalformedResponse("response must be an object");
    r.generator_id = j.at("generator_id").get<std::string>();
    r.fps = j.at("fps").get<double>();
    const json& frames = j.at("frames");
    if (!frames.is_array()) throw MalformedResponse("frames must be an array");
    for (const auto& f : frames) r.frames.push_back(frame_from_json(f));
    r.validate();
    return r;
  } catch (const json::exception& e) {
    throw MalformedResponse(std::string("video response: ") + e.what());
  }
}

json rollout_to_response(const Rollout& rollout) {
  json frames = json::array();
  for (const auto& f : rollout.frames) frames.push_back(frame_to_json(f));
  return {{"generator_id", rollout.generator_id},
          {"fps", rollout.fps},
          {"frames", frames}};
}

std::string render_png(const KeypointFrame& frame, int width, int height) {
  std::vector<std::uint8_t> img(static_cast<std::size_t>(width) * height, 0);
  for (std::size_t arm = 0; arm < 2; ++arm) {
    for (std::size_t k = 0; k + 1 < kDofPerArm; ++k) {
      const auto& a = frame.points[arm * kDofPerArm + k];
      const auto& b = frame.points[arm * kDofPerArm + k + 1];
      if (a.visible && b.visible) {
        draw_line(img, width, height, a.u, a.v, b.u, b.v, 255);
      }
    }
  }
  // Filter byte 0 (None) per scanline.
  std::string raw;
  raw.reserve(img.size() + height);
  for (int y = 0; y < height; ++y) {
    raw.push_back('\0');
    raw.append(reinterpret_cast<const char*>(img.data()) + y * width, width);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(packed_size, '\0');
  if (compress(reinterpret_cast<Bytef*>(packed.data()), &packed_size,
               reinterpret_cast<const Bytef*>(raw.data()),
               static_cast<uLong>(raw.size())) != Z_OK) {
    throw IoError("png compression failed");
  }
  packed.resize(packed_size);

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(width));
  put_u32(ihdr, static_cast<std::uint32_t>(height));
  ihdr += std::string("\x08\x00\x00\x00\x00", 5);  // 8-bit grayscale
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", packed);
  put_chunk(png, "IEND", "");
  return png;
}

}  // namespace physagent::wire
