#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "dfr/dataset.hpp"
#include "dfr/keypoints.hpp"

namespace dfr {

// Per-subject face geometry: the canonical template deformed by four
// seeded offsets, kept pairwise separated so identity is recoverable.
struct SubjectTemplate {
  int subject_id = 0;
  double eye_spacing = 1.0;  // scales eye/brow x positions
  double nose_length = 1.0;  // scales nose drop below the bridge
  double mouth_width = 1.0;  // scales mouth corner x positions
  double jaw_width = 1.0;    // scales jaw x positions and head outline

  std::array<Point, kKeypointCount> keypoints() const;  // face frame
};

std::vector<SubjectTemplate> make_subjects(int n_subjects, uint64_t seed);

inline constexpr std::array<int, 5> kViewpointsDeg = {-20, -10, 0, 10, 20};
inline constexpr int kBackgroundCount = 8;

// Deterministic per-sample placement; the generator draws these from the
// sample's seeded stream, tests pass fixed values.
struct RenderParams {
  double center_dx = 0.0;      // pixels
  double center_dy = 0.0;      // pixels
  double scale_mul = 1.0;      // face scale jitter
  double illumination = 1.0;   // global brightness factor
  uint64_t texture_seed = 0;   // background / fabric noise
};

Image render_face(const SubjectTemplate& subject, std::optional<DisguiseKind> disguise,
                  int viewpoint_deg, int background_id, int size, const RenderParams& params);

// Template keypoints mapped into the image frame (same transform as
// render_face), with visibility cleared for disguise-occluded points.
KeypointSet place_keypoints(const SubjectTemplate& subject, std::optional<DisguiseKind> disguise,
                            int viewpoint_deg, int size, const RenderParams& params);

Sample synthesize_sample(const SubjectTemplate& subject, std::optional<DisguiseKind> disguise,
                         int viewpoint_deg, int background_id, int size,
                         const RenderParams& params);

// n_subjects x per_subject samples: disguises cycled over the ten
// combinations, viewpoints/backgrounds/jitter drawn per sample from streams
// derived from (seed, sample index), so generation order and thread count
// cannot change the output.
Dataset generate_dataset(int n_subjects, int per_subject, uint64_t seed, int size);

}  // namespace dfr
