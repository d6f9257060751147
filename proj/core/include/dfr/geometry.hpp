#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dfr/keypoints.hpp"

namespace dfr {

// Canonical template face in a unit frame (y grows downward); the base
// geometry both for feature imputation and the synthetic generator.
KeypointSet canonical_face_template();

double euclidean_distance(const Point& p1, const Point& p2);

// Line slope (y2-y1)/(x2-x1); nullopt signals a vertical line. Callers that
// need an angle must go through angle_between_lines, which has no such
// singularity.
std::optional<double> slope(const Point& p1, const Point& p2);

// Unsigned intersection angle of two lines, in degrees within [0, 90].
// Computed from direction vectors (atan2 of |cross| over |dot|), which
// agrees with |atan((m1-m2)/(1+m1*m2))| wherever both slopes exist and is
// still defined for vertical and perpendicular lines.
double angle_between_lines(const Point& a1, const Point& a2, const Point& b1, const Point& b2);

// distance(pairA) / distance(pairB); nullopt when the denominator pair is
// degenerate (masked-feature signal, not an error).
std::optional<double> distance_ratio(const Point& a1, const Point& a2, const Point& b1,
                                     const Point& b2);

// One keypoint-pair-over-keypoint-pair distance ratio.
struct RatioFeature {
  std::array<int, 4> kp;  // a1, a2, b1, b2
};

// Angle between line (kp[0],kp[1]) and line (kp[2],kp[3]).
struct AngleFeature {
  std::array<int, 4> kp;
};

// Which ratios and inter-line angles form the SVM feature vector, plus the
// canonical template face used to impute entries whose keypoints are
// occluded. Versioned so experiments can swap feature sets.
class FeatureSchema {
 public:
  static FeatureSchema default_v1();
  static FeatureSchema load(const std::string& path);
  void save(const std::string& path) const;
  static FeatureSchema parse(const std::string& text);
  std::string serialize() const;

  const std::string& version() const { return version_; }
  const std::vector<RatioFeature>& ratios() const { return ratios_; }
  const std::vector<AngleFeature>& angles() const { return angles_; }
  const KeypointSet& canonical_template() const { return canonical_; }
  int feature_count() const { return static_cast<int>(ratios_.size() + angles_.size()); }

  // Feature values of the canonical template, used for imputation.
  const std::vector<double>& canonical_values() const { return canonical_values_; }

  FeatureSchema(std::string version, std::vector<RatioFeature> ratios,
                std::vector<AngleFeature> angles, KeypointSet canonical);

 private:
  std::string version_;
  std::vector<RatioFeature> ratios_;
  std::vector<AngleFeature> angles_;
  KeypointSet canonical_;
  std::vector<double> canonical_values_;
};

// Ordered feature values; mask[i] is true when every contributing keypoint
// was visible (unmasked entries carry the canonical-template value).
struct FeatureVector {
  std::vector<double> values;
  std::vector<bool> mask;
};

FeatureVector extract_features(const KeypointSet& kps, const FeatureSchema& schema);

}  // namespace dfr
