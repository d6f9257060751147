#include "dfr/geometry.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dfr/errors.hpp"
#include "dfr/text.hpp"

namespace dfr {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Canonical template face in a unit frame (y grows downward). Also the base
// geometry the synthetic generator deforms per subject.
const std::array<Point, kKeypointCount>& canonical_points() {
  static const std::array<Point, kKeypointCount> pts = {{
      {-0.52, -0.48},  // brow_outer_l
      {-0.18, -0.54},  // brow_inner_l
      {0.18, -0.54},   // brow_inner_r
      {0.52, -0.48},   // brow_outer_r
      {-0.55, -0.28},  // eye_outer_l
      {-0.25, -0.26},  // eye_inner_l
      {0.25, -0.26},   // eye_inner_r
      {0.55, -0.28},   // eye_outer_r
      {-0.40, -0.27},  // eye_center_l
      {0.40, -0.27},   // eye_center_r
      {0.00, -0.18},   // nose_bridge
      {0.00, 0.22},    // nose_tip
      {-0.12, 0.28},   // nostril_l
      {0.12, 0.28},    // nostril_r
      {-0.28, 0.52},   // mouth_l
      {0.28, 0.52},    // mouth_r
      {0.00, 0.45},    // lip_top
      {0.00, 0.60},    // lip_bottom
      {-0.62, 0.55},   // jaw_l
      {0.62, 0.55},    // jaw_r
  }};
  return pts;
}

std::optional<double> feature_value(const RatioFeature& f, const KeypointSet& kps) {
  return distance_ratio(kps[f.kp[0]], kps[f.kp[1]], kps[f.kp[2]], kps[f.kp[3]]);
}

std::optional<double> feature_value(const AngleFeature& f, const KeypointSet& kps) {
  const Point& a1 = kps[f.kp[0]];
  const Point& a2 = kps[f.kp[1]];
  const Point& b1 = kps[f.kp[2]];
  const Point& b2 = kps[f.kp[3]];
  if ((a1.x == a2.x && a1.y == a2.y) || (b1.x == b2.x && b1.y == b2.y)) return std::nullopt;
  return angle_between_lines(a1, a2, b1, b2);
}

}  // namespace

KeypointSet canonical_face_template() {
  KeypointSet kps;
  kps.points = canonical_points();
  return kps;
}

double euclidean_distance(const Point& p1, const Point& p2) {
  const double dx = p1.x - p2.x;
  const double dy = p1.y - p2.y;
  return std::sqrt(dx * dx + dy * dy);
}

std::optional<double> slope(const Point& p1, const Point& p2) {
  if (p2.x == p1.x) return std::nullopt;
  return (p2.y - p1.y) / (p2.x - p1.x);
}

double angle_between_lines(const Point& a1, const Point& a2, const Point& b1, const Point& b2) {
  const double ux = a2.x - a1.x, uy = a2.y - a1.y;
  const double vx = b2.x - b1.x, vy = b2.y - b1.y;
  if ((ux == 0.0 && uy == 0.0) || (vx == 0.0 && vy == 0.0))
    throw ParameterError("angle_between_lines: degenerate line (coincident endpoints)");
  const double cross = ux * vy - uy * vx;
  const double dot = ux * vx + uy * vy;
  return std::atan2(std::fabs(cross), std::fabs(dot)) * (180.0 / kPi);
}

std::optional<double> distance_ratio(const Point& a1, const Point& a2, const Point& b1,
                                     const Point& b2) {
  const double denom = euclidean_distance(b1, b2);
  if (denom == 0.0) return std::nullopt;
  return euclidean_distance(a1, a2) / denom;
}

FeatureSchema::FeatureSchema(std::string version, std::vector<RatioFeature> ratios,
                             std::vector<AngleFeature> angles, KeypointSet canonical)
    : version_(std::move(version)),
      ratios_(std::move(ratios)),
      angles_(std::move(angles)),
      canonical_(canonical) {
  if (version_.empty()) throw ConfigError("feature schema: empty version");
  canonical_values_.reserve(ratios_.size() + angles_.size());
  for (const RatioFeature& f : ratios_) {
    const auto v = feature_value(f, canonical_);
    if (!v || *v <= 0.0)
      throw ConfigError("feature schema: ratio denominator degenerate under canonical template");
    canonical_values_.push_back(*v);
  }
  for (const AngleFeature& f : angles_) {
    const auto v = feature_value(f, canonical_);
    if (!v) throw ConfigError("feature schema: angle line degenerate under canonical template");
    canonical_values_.push_back(*v);
  }
}

FeatureSchema FeatureSchema::default_v1() {
  const auto R = [](const char* a, const char* b, const char* c, const char* d) {
    return RatioFeature{{keypoint_index(a), keypoint_index(b), keypoint_index(c),
                         keypoint_index(d)}};
  };
  const auto A = [](const char* a, const char* b, const char* c, const char* d) {
    return AngleFeature{{keypoint_index(a), keypoint_index(b), keypoint_index(c),
                         keypoint_index(d)}};
  };

  std::vector<RatioFeature> ratios = {
      R("eye_outer_l", "eye_outer_r", "jaw_l", "jaw_r"),
      R("eye_center_l", "eye_center_r", "nose_bridge", "nose_tip"),
      R("mouth_l", "mouth_r", "eye_outer_l", "eye_outer_r"),
      R("mouth_l", "mouth_r", "jaw_l", "jaw_r"),
      R("nose_bridge", "nose_tip", "nose_bridge", "lip_top"),
      R("nostril_l", "nostril_r", "mouth_l", "mouth_r"),
      R("brow_outer_l", "brow_outer_r", "eye_outer_l", "eye_outer_r"),
      R("eye_outer_l", "eye_inner_l", "eye_inner_r", "eye_outer_r"),
      R("eye_inner_l", "eye_inner_r", "eye_outer_l", "eye_outer_r"),
      R("nose_bridge", "nose_tip", "nose_tip", "lip_top"),
      R("jaw_l", "jaw_r", "brow_outer_l", "brow_outer_r"),
      R("lip_top", "lip_bottom", "mouth_l", "mouth_r"),
  };
  std::vector<AngleFeature> angles = {
      A("eye_outer_l", "mouth_l", "eye_outer_r", "mouth_r"),
      A("eye_outer_l", "jaw_l", "eye_outer_r", "jaw_r"),
      A("nose_tip", "mouth_l", "nose_tip", "mouth_r"),
      A("nose_bridge", "jaw_l", "nose_bridge", "jaw_r"),
      A("eye_center_l", "nose_tip", "eye_center_r", "nose_tip"),
      A("brow_outer_l", "brow_inner_l", "brow_outer_r", "brow_inner_r"),
      A("eye_outer_l", "eye_inner_l", "eye_outer_r", "eye_inner_r"),
      A("nose_bridge", "nose_tip", "mouth_l", "mouth_r"),
      A("eye_center_l", "eye_center_r", "eye_center_l", "nose_tip"),
      A("jaw_l", "lip_bottom", "jaw_r", "lip_bottom"),
      A("nostril_l", "nose_tip", "nostril_r", "nose_tip"),
      A("brow_inner_l", "nose_bridge", "brow_inner_r", "nose_bridge"),
      A("eye_inner_l", "nose_tip", "eye_inner_r", "nose_tip"),
      A("mouth_l", "lip_top", "mouth_r", "lip_top"),
      A("eye_outer_l", "brow_outer_l", "eye_outer_r", "brow_outer_r"),
      A("eye_center_l", "mouth_l", "eye_center_r", "mouth_r"),
  };
  return FeatureSchema("default-v1", std::move(ratios), std::move(angles),
                       canonical_face_template());
}

std::string FeatureSchema::serialize() const {
  std::ostringstream out;
  out << "# dfr feature schema\n";
  out << "version " << version_ << "\n";
  const auto& names = keypoint_names();
  for (int i = 0; i < kKeypointCount; ++i)
    out << "canonical " << names[i] << " " << format_double(canonical_[i].x) << " "
        << format_double(canonical_[i].y) << "\n";
  for (const RatioFeature& f : ratios_)
    out << "ratio " << names[f.kp[0]] << " " << names[f.kp[1]] << " " << names[f.kp[2]] << " "
        << names[f.kp[3]] << "\n";
  for (const AngleFeature& f : angles_)
    out << "angle " << names[f.kp[0]] << " " << names[f.kp[1]] << " " << names[f.kp[2]] << " "
        << names[f.kp[3]] << "\n";
  return out.str();
}

FeatureSchema FeatureSchema::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string version;
  KeypointSet canonical;
  std::array<bool, kKeypointCount> seen{};
  std::vector<RatioFeature> ratios;
  std::vector<AngleFeature> angles;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    const auto fail = [lineno](const std::string& msg) -> FormatError {
      return FormatError("feature schema line " + std::to_string(lineno) + ": " + msg);
    };
    if (tag == "version") {
      if (!(ls >> version)) throw fail("missing version value");
    } else if (tag == "canonical") {
      std::string name;
      double x = 0, y = 0;
      if (!(ls >> name >> x >> y)) throw fail("expected 'canonical <name> <x> <y>'");
      const int idx = keypoint_index(name);
      canonical[idx] = {x, y};
      seen[static_cast<size_t>(idx)] = true;
    } else if (tag == "ratio" || tag == "angle") {
      std::string a, b, c, d;
      if (!(ls >> a >> b >> c >> d)) throw fail("expected four keypoint names");
      const std::array<int, 4> kp = {keypoint_index(a), keypoint_index(b), keypoint_index(c),
                                     keypoint_index(d)};
      if (tag == "ratio")
        ratios.push_back(RatioFeature{kp});
      else
        angles.push_back(AngleFeature{kp});
    } else {
      throw fail("unknown directive '" + tag + "'");
    }
  }
  if (version.empty()) throw FormatError("feature schema: missing version line");
  for (int i = 0; i < kKeypointCount; ++i)
    if (!seen[static_cast<size_t>(i)])
      throw FormatError("feature schema: missing canonical position for " +
                        std::string(keypoint_names()[i]));
  return FeatureSchema(version, std::move(ratios), std::move(angles), canonical);
}

FeatureSchema FeatureSchema::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature schema: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void FeatureSchema::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature schema: " + path);
  out << serialize();
}

FeatureVector extract_features(const KeypointSet& kps, const FeatureSchema& schema) {
  FeatureVector fv;
  fv.values.reserve(static_cast<size_t>(schema.feature_count()));
  fv.mask.reserve(static_cast<size_t>(schema.feature_count()));
  size_t idx = 0;
  const auto emit = [&](const std::array<int, 4>& kp, std::optional<double> value) {
    bool ok = value.has_value();
    for (int k : kp) ok = ok && kps.visible[static_cast<size_t>(k)];
    // Occluded or degenerate entries fall back to the canonical template
    // value rather than zero, keeping the feature scale intact.
    fv.values.push_back(ok ? *value : schema.canonical_values()[idx]);
    fv.mask.push_back(ok);
    ++idx;
  };
  for (const RatioFeature& f : schema.ratios()) {
    auto v = feature_value(f, kps);
    if (v && *v <= 0.0) v = std::nullopt;  // zero numerator counts as degenerate
    emit(f.kp, v);
  }
  for (const AngleFeature& f : schema.angles()) emit(f.kp, feature_value(f, kps));
  return fv;
}

}  // namespace dfr
