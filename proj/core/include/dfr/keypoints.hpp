#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

#include "dfr/errors.hpp"

namespace dfr {

inline constexpr int kKeypointCount = 20;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Fixed keypoint order (schema "keypoints-v1"): 4 brow points, 4 eye
// corners, 2 eye centers, nose bridge, nose tip, 2 nostrils, 2 mouth
// corners, 2 lip centers, 2 jaw points.
inline const std::array<std::string_view, kKeypointCount>& keypoint_names() {
  static const std::array<std::string_view, kKeypointCount> names = {
      "brow_outer_l", "brow_inner_l", "brow_inner_r", "brow_outer_r",
      "eye_outer_l",  "eye_inner_l",  "eye_inner_r",  "eye_outer_r",
      "eye_center_l", "eye_center_r", "nose_bridge",  "nose_tip",
      "nostril_l",    "nostril_r",    "mouth_l",      "mouth_r",
      "lip_top",      "lip_bottom",   "jaw_l",        "jaw_r"};
  return names;
}

inline int keypoint_index(std::string_view name) {
  const auto& names = keypoint_names();
  for (int i = 0; i < kKeypointCount; ++i)
    if (names[i] == name) return i;
  throw ConfigError("unknown keypoint name: " + std::string(name));
}

// 20 named (x, y) image-space coordinates with per-point visibility.
struct KeypointSet {
  std::array<Point, kKeypointCount> points{};
  std::array<bool, kKeypointCount> visible{};

  KeypointSet() { visible.fill(true); }

  Point& operator[](int i) { return points[static_cast<size_t>(i)]; }
  const Point& operator[](int i) const { return points[static_cast<size_t>(i)]; }
};

}  // namespace dfr
