#include "dfr/synth.hpp"

#include <algorithm>
#include <cmath>

#include "dfr/errors.hpp"
#include "dfr/geometry.hpp"
#include "dfr/rng.hpp"

namespace dfr {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBaseFaceScale = 0.40;  // face-frame unit -> fraction of image size

struct FaceGeometry {
  std::array<Point, kKeypointCount> kp;
  double head_rx, head_ry, head_cy;
  double eye_rx, eye_ry;
};

FaceGeometry subject_geometry(const SubjectTemplate& s) {
  FaceGeometry g;
  g.kp = s.keypoints();
  // Head outline passes through the jaw keypoints.
  g.head_cy = 0.02;
  g.head_ry = 0.92;
  const double jaw_x = g.kp[keypoint_index("jaw_r")].x;
  const double jaw_v = (g.kp[keypoint_index("jaw_r")].y - g.head_cy) / g.head_ry;
  g.head_rx = jaw_x / std::sqrt(1.0 - jaw_v * jaw_v);
  g.eye_rx = 0.165 * s.eye_spacing;
  g.eye_ry = 0.055;
  return g;
}

double sq(double v) { return v * v; }

bool in_ellipse(double u, double v, double cu, double cv, double ru, double rv) {
  return sq((u - cu) / ru) + sq((v - cv) / rv) <= 1.0;
}

// Distance from point to segment, for stroked lines.
double segment_distance(double u, double v, const Point& a, const Point& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((u - a.x) * dx + (v - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::sqrt(sq(u - (a.x + t * dx)) + sq(v - (a.y + t * dy)));
}

double hash_noise(uint64_t seed, int x, int y) {
  const uint64_t h = splitmix64(seed ^ (static_cast<uint64_t>(x) * 0x100000001b3ULL + 0x9e37ULL) ^
                                (static_cast<uint64_t>(y) << 32));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double background_intensity(int bg_id, int x, int y, int size, uint64_t seed) {
  const double fx = static_cast<double>(x) / size;
  const double fy = static_cast<double>(y) / size;
  const double p0 = hash_noise(seed, -1, bg_id);  // per-sample pattern parameter
  switch (bg_id) {
    case 0:  // flat
      return 40.0 + 70.0 * p0;
    case 1:  // horizontal gradient
      return 30.0 + 90.0 * fx + 20.0 * p0;
    case 2:  // vertical gradient
      return 30.0 + 90.0 * fy + 20.0 * p0;
    case 3: {  // diagonal stripes
      const double period = 8.0 + 10.0 * p0;
      return std::fmod(static_cast<double>(x + y), period) < period / 2 ? 35.0 : 105.0;
    }
    case 4: {  // checkerboard
      const int cell = 6 + static_cast<int>(8.0 * p0);
      return ((x / cell + y / cell) % 2 == 0) ? 45.0 : 110.0;
    }
    case 5: {  // radial gradient
      const double r = std::sqrt(sq(fx - 0.5) + sq(fy - 0.5)) * 2.0;
      return 110.0 - 70.0 * std::min(1.0, r) + 15.0 * p0;
    }
    case 6: {  // coarse blocky noise
      const int cell = 8;
      return 35.0 + 85.0 * hash_noise(seed, x / cell, y / cell);
    }
    case 7: {  // grid lines
      const int period = 10 + static_cast<int>(6.0 * p0);
      return (x % period < 2 || y % period < 2) ? 30.0 : 95.0;
    }
    default:
      throw ParameterError("background id must lie in [0, 8)");
  }
}

// Shades one face-frame point. Order: skin, then facial features, then
// disguise occluders on top.
double face_intensity(const FaceGeometry& g, std::optional<DisguiseKind> disguise, double u,
                      double v, uint64_t seed, bool* hit) {
  *hit = false;
  if (!in_ellipse(u, v, 0.0, g.head_cy, g.head_rx, g.head_ry)) return 0.0;
  *hit = true;
  double c = 190.0;  // skin

  const auto kp = [&g](const char* name) -> const Point& { return g.kp[keypoint_index(name)]; };

  // brows
  if (segment_distance(u, v, kp("brow_outer_l"), kp("brow_inner_l")) < 0.035) c = 70.0;
  if (segment_distance(u, v, kp("brow_outer_r"), kp("brow_inner_r")) < 0.035) c = 70.0;
  // eyes: white with dark iris, corners on the ellipse rim
  for (const char* side : {"l", "r"}) {
    const Point& ec = g.kp[keypoint_index(side[0] == 'l' ? "eye_center_l" : "eye_center_r")];
    if (in_ellipse(u, v, ec.x, ec.y, g.eye_rx, g.eye_ry)) {
      c = 235.0;
      if (sq(u - ec.x) + sq(v - ec.y) < sq(0.045)) c = 50.0;
    }
  }
  // nose stem and nostrils
  if (segment_distance(u, v, kp("nose_bridge"), kp("nose_tip")) < 0.028) c = 150.0;
  if (sq(u - kp("nostril_l").x) + sq(v - kp("nostril_l").y) < sq(0.030)) c = 90.0;
  if (sq(u - kp("nostril_r").x) + sq(v - kp("nostril_r").y) < sq(0.030)) c = 90.0;
  // mouth: ellipse through the four lip keypoints
  {
    const double mcx = 0.5 * (kp("mouth_l").x + kp("mouth_r").x);
    const double mcy = 0.5 * (kp("lip_top").y + kp("lip_bottom").y);
    const double mrx = 0.5 * (kp("mouth_r").x - kp("mouth_l").x);
    const double mry = 0.5 * (kp("lip_bottom").y - kp("lip_top").y);
    if (in_ellipse(u, v, mcx, mcy, mrx, mry)) {
      c = 105.0;
      if (std::fabs(v - mcy) < 0.012) c = 75.0;  // lip split
    }
  }

  if (disguise) {
    if (disguise_has_beard(*disguise) && v >= 0.49 &&
        in_ellipse(u, v, 0.0, g.head_cy, g.head_rx * 1.02, g.head_ry * 1.02)) {
      c = 55.0 + 25.0 * hash_noise(seed ^ 0xbea4dULL, static_cast<int>(u * 200),
                                   static_cast<int>(v * 200));
    }
    if (disguise_has_scarf(*disguise) && v >= 0.08 && std::fabs(u) <= 0.45) {
      const double weave = std::fmod((u + v) * 24.0 + 48.0, 2.0) < 1.0 ? 0.0 : 18.0;
      c = 160.0 + weave;
    }
    if (disguise_has_glasses(*disguise)) {
      const Point& el = kp("eye_center_l");
      const Point& er = kp("eye_center_r");
      const double lens_rx = g.eye_rx + 0.045, lens_ry = 0.12;
      const bool lens = in_ellipse(u, v, el.x, el.y, lens_rx, lens_ry) ||
                        in_ellipse(u, v, er.x, er.y, lens_rx, lens_ry);
      const bool bridge = std::fabs(v - el.y) < 0.03 && u > el.x && u < er.x;
      const bool arms = std::fabs(v - el.y) < 0.022 && (u < el.x - lens_rx || u > er.x + lens_rx);
      if (lens || bridge || arms) c = 95.0;
    }
    if (disguise_has_cap(*disguise) && v <= -0.40 && std::fabs(u) <= 0.80) {
      c = 120.0 + (std::fmod(u * 10.0 + 16.0, 2.0) < 1.0 ? 0.0 : 14.0);
      if (v > -0.46) c = 100.0;  // brim
    }
  }
  return c;
}

struct Placement {
  double cx, cy, scale, cos_t, sin_t;
};

Placement placement_for(int viewpoint_deg, int size, const RenderParams& p) {
  const double theta = viewpoint_deg * kPi / 180.0;
  return {size * 0.5 + p.center_dx, size * 0.5 + p.center_dy,
          kBaseFaceScale * size * p.scale_mul, std::cos(theta), std::sin(theta)};
}

}  // namespace

std::array<Point, kKeypointCount> SubjectTemplate::keypoints() const {
  std::array<Point, kKeypointCount> kp = canonical_face_template().points;
  const double bridge_y = kp[keypoint_index("nose_bridge")].y;
  for (const char* name : {"brow_outer_l", "brow_inner_l", "brow_inner_r", "brow_outer_r",
                           "eye_outer_l", "eye_inner_l", "eye_inner_r", "eye_outer_r",
                           "eye_center_l", "eye_center_r"})
    kp[keypoint_index(name)].x *= eye_spacing;
  for (const char* name : {"nose_tip", "nostril_l", "nostril_r"})
    kp[keypoint_index(name)].y = bridge_y + (kp[keypoint_index(name)].y - bridge_y) * nose_length;
  for (const char* name : {"mouth_l", "mouth_r"}) kp[keypoint_index(name)].x *= mouth_width;
  for (const char* name : {"jaw_l", "jaw_r"}) kp[keypoint_index(name)].x *= jaw_width;
  return kp;
}

std::vector<SubjectTemplate> make_subjects(int n_subjects, uint64_t seed) {
  if (n_subjects < 1) throw ParameterError("make_subjects: need at least 1 subject");
  Rng rng(splitmix64(seed) ^ 0x50b7ec7500ULL);
  std::vector<SubjectTemplate> subjects;
  std::vector<std::array<double, 4>> normalized;  // offsets scaled to [0,1]
  double min_gap = 0.12;
  int attempts_at_gap = 0;
  while (static_cast<int>(subjects.size()) < n_subjects) {
    const std::array<double, 4> unit = {rng.uniform01(), rng.uniform01(), rng.uniform01(),
                                        rng.uniform01()};
    bool ok = true;
    for (const auto& other : normalized) {
      double gap = 0.0;
      for (int d = 0; d < 4; ++d) gap = std::max(gap, std::fabs(unit[d] - other[d]));
      if (gap < min_gap) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      // Relax the separation if the box fills up, so generation terminates.
      if (++attempts_at_gap > 2000) {
        min_gap *= 0.5;
        attempts_at_gap = 0;
      }
      continue;
    }
    attempts_at_gap = 0;
    normalized.push_back(unit);
    SubjectTemplate s;
    s.subject_id = static_cast<int>(subjects.size());
    s.eye_spacing = 0.80 + 0.40 * unit[0];
    s.nose_length = 0.75 + 0.50 * unit[1];
    s.mouth_width = 0.75 + 0.50 * unit[2];
    s.jaw_width = 0.80 + 0.40 * unit[3];
    subjects.push_back(s);
  }
  return subjects;
}

Image render_face(const SubjectTemplate& subject, std::optional<DisguiseKind> disguise,
                  int viewpoint_deg, int background_id, int size, const RenderParams& params) {
  if (size < 8) throw ParameterError("render_face: size too small");
  if (background_id < 0 || background_id >= kBackgroundCount)
    throw ParameterError("render_face: background id out of range");

  const FaceGeometry geom = subject_geometry(subject);
  const Placement pl = placement_for(viewpoint_deg, size, params);
  Image img(size, size);

  // 2x2 supersampling smooths edges enough for sub-pixel regression.
  constexpr double kSub[2] = {0.25, 0.75};
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double acc = 0.0;
      for (double oy : kSub) {
        for (double ox : kSub) {
          const double dx = (x + ox) - pl.cx;
          const double dy = (y + oy) - pl.cy;
          // Inverse rotation into the face frame.
          const double u = (dx * pl.cos_t + dy * pl.sin_t) / pl.scale;
          const double v = (-dx * pl.sin_t + dy * pl.cos_t) / pl.scale;
          bool on_face = false;
          const double face = face_intensity(geom, disguise, u, v, params.texture_seed, &on_face);
          acc += on_face ? face
                         : background_intensity(background_id, x, y, size, params.texture_seed);
        }
      }
      const double value = acc / 4.0 * params.illumination;
      img.at(x, y) = static_cast<uint8_t>(std::clamp(value, 0.0, 255.0));
    }
  }
  return img;
}

KeypointSet place_keypoints(const SubjectTemplate& subject, std::optional<DisguiseKind> disguise,
                            int viewpoint_deg, int size, const RenderParams& params) {
  const Placement pl = placement_for(viewpoint_deg, size, params);
  const auto face_kp = subject.keypoints();
  KeypointSet out;
  for (int i = 0; i < kKeypointCount; ++i) {
    const double u = face_kp[static_cast<size_t>(i)].x * pl.scale;
    const double v = face_kp[static_cast<size_t>(i)].y * pl.scale;
    out[i].x = pl.cx + u * pl.cos_t - v * pl.sin_t;
    out[i].y = pl.cy + u * pl.sin_t + v * pl.cos_t;
  }
  if (disguise)
    for (int idx : disguise_occluded_points(*disguise))
      out.visible[static_cast<size_t>(idx)] = false;
  return out;
}

Sample synthesize_sample(const SubjectTemplate& subject, std::optional<DisguiseKind> disguise,
                         int viewpoint_deg, int background_id, int size,
                         const RenderParams& params) {
  Sample s;
  s.subject_id = subject.subject_id;
  s.disguise = disguise;
  s.viewpoint_deg = viewpoint_deg;
  s.image = render_face(subject, disguise, viewpoint_deg, background_id, size, params);
  s.annotation = place_keypoints(subject, disguise, viewpoint_deg, size, params);
  return s;
}

Dataset generate_dataset(int n_subjects, int per_subject, uint64_t seed, int size) {
  if (n_subjects < 2) throw ParameterError("generate_dataset: need at least 2 subjects");
  if (per_subject < 1) throw ParameterError("generate_dataset: per_subject must be >= 1");

  const auto subjects = make_subjects(n_subjects, seed);
  Dataset ds;
  ds.samples.resize(static_cast<size_t>(n_subjects) * per_subject);
  for (int si = 0; si < n_subjects; ++si) {
    for (int k = 0; k < per_subject; ++k) {
      const size_t index = static_cast<size_t>(si) * per_subject + k;
      Rng rng = Rng::stream(seed, index);
      const DisguiseKind disguise = static_cast<DisguiseKind>(k % kDisguiseCount);
      const int viewpoint = kViewpointsDeg[rng.pick(static_cast<int>(kViewpointsDeg.size()))];
      const int background = rng.pick(kBackgroundCount);
      RenderParams p;
      p.center_dx = rng.uniform(-0.04, 0.04) * size;
      p.center_dy = rng.uniform(-0.04, 0.04) * size;
      p.scale_mul = rng.uniform(0.95, 1.05);
      p.illumination = rng.uniform(0.85, 1.15);
      p.texture_seed = rng.next_u64();
      ds.samples[index] = synthesize_sample(subjects[static_cast<size_t>(si)], disguise,
                                            viewpoint, background, size, p);
    }
  }
  return ds;
}

}  // namespace dfr
