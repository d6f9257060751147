#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "dfr/geometry.hpp"
#include "dfr/rng.hpp"

using dfr::FeatureSchema;
using dfr::KeypointSet;
using dfr::Point;

namespace {

KeypointSet transformed(const KeypointSet& kps, double angle_deg, double scale, double tx,
                        double ty) {
  const double rad = angle_deg * 3.14159265358979323846 / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  KeypointSet out = kps;
  for (int i = 0; i < dfr::kKeypointCount; ++i) {
    const double x = kps[i].x, y = kps[i].y;
    out[i].x = scale * (x * c - y * s) + tx;
    out[i].y = scale * (x * s + y * c) + ty;
  }
  return out;
}

}  // namespace

TEST(Distance, KnownCases) {
  EXPECT_DOUBLE_EQ(dfr::euclidean_distance({0, 0}, {3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(dfr::euclidean_distance({2, -7}, {2, -7}), 0.0);
  EXPECT_DOUBLE_EQ(dfr::euclidean_distance({1, 1}, {4, 5}), 5.0);
}

TEST(Distance, TriangleInequality) {
  dfr::Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const Point a{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    const Point b{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    const Point c{rng.uniform(-10, 10), rng.uniform(-10, 10)};
    EXPECT_LE(dfr::euclidean_distance(a, c),
              dfr::euclidean_distance(a, b) + dfr::euclidean_distance(b, c) + 1e-12);
  }
}

TEST(Slope, KnownCasesAndVerticalSignal) {
  EXPECT_DOUBLE_EQ(*dfr::slope({0, 0}, {2, 2}), 1.0);
  EXPECT_DOUBLE_EQ(*dfr::slope({0, 5}, {3, 5}), 0.0);
  EXPECT_FALSE(dfr::slope({1, 0}, {1, 9}).has_value());
}

TEST(AngleBetweenLines, KnownCases) {
  EXPECT_NEAR(dfr::angle_between_lines({0, 0}, {1, 1}, {0, 0}, {1, 0}), 45.0, 1e-9);
  EXPECT_NEAR(dfr::angle_between_lines({0, 0}, {1, 1}, {5, 5}, {7, 7}), 0.0, 1e-9);
  EXPECT_NEAR(dfr::angle_between_lines({0, 0}, {0, 1}, {0, 0}, {1, 0}), 90.0, 1e-9);
}

TEST(AngleBetweenLines, DegenerateLineThrows) {
  EXPECT_THROW(dfr::angle_between_lines({1, 1}, {1, 1}, {0, 0}, {1, 0}), dfr::ParameterError);
}

TEST(AngleBetweenLines, SymmetricInArgumentsAndEndpoints) {
  dfr::Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const Point a1{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Point a2{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Point b1{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Point b2{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    if ((a1.x == a2.x && a1.y == a2.y) || (b1.x == b2.x && b1.y == b2.y)) continue;
    const double fwd = dfr::angle_between_lines(a1, a2, b1, b2);
    EXPECT_NEAR(fwd, dfr::angle_between_lines(b1, b2, a1, a2), 1e-12);
    EXPECT_NEAR(fwd, dfr::angle_between_lines(a2, a1, b1, b2), 1e-9);
    EXPECT_NEAR(fwd, dfr::angle_between_lines(a1, a2, b2, b1), 1e-9);
    EXPECT_GE(fwd, 0.0);
    EXPECT_LE(fwd, 90.0);
  }
}

TEST(AngleBetweenLines, AgreesWithSlopeFormulaWhereDefined) {
  // |atan((m1 - m2) / (1 + m1 m2))| wherever both slopes exist and the
  // denominator is nonzero.
  dfr::Rng rng(10);
  int checked = 0;
  while (checked < 1000) {
    const Point a1{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Point a2{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Point b1{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Point b2{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const auto m1 = dfr::slope(a1, a2);
    const auto m2 = dfr::slope(b1, b2);
    if (!m1 || !m2) continue;
    const double denom = 1.0 + *m1 * *m2;
    if (std::fabs(denom) < 1e-6) continue;
    const double expected = std::fabs(std::atan((*m1 - *m2) / denom)) * 180.0 / 3.14159265358979323846;
    EXPECT_NEAR(dfr::angle_between_lines(a1, a2, b1, b2), expected, 1e-9);
    ++checked;
  }
}

TEST(DistanceRatio, KnownAndCompositional) {
  EXPECT_DOUBLE_EQ(*dfr::distance_ratio({0, 0}, {1, 1}, {0, 0}, {1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(*dfr::distance_ratio({0, 0}, {0, 4}, {0, 0}, {0, 2}), 2.0);
  EXPECT_FALSE(dfr::distance_ratio({0, 0}, {1, 1}, {3, 3}, {3, 3}).has_value());
  dfr::Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const Point a{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Point b{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Point c{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const Point d{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    if (dfr::euclidean_distance(c, d) == 0.0) continue;
    EXPECT_DOUBLE_EQ(*dfr::distance_ratio(a, b, c, d),
                     dfr::euclidean_distance(a, b) / dfr::euclidean_distance(c, d));
  }
}

TEST(FeatureSchema, DefaultShape) {
  const FeatureSchema schema = FeatureSchema::default_v1();
  EXPECT_EQ(schema.version(), "default-v1");
  EXPECT_EQ(schema.ratios().size(), 12u);
  EXPECT_EQ(schema.angles().size(), 16u);
  EXPECT_EQ(schema.feature_count(), 28);
  EXPECT_EQ(schema.canonical_values().size(), 28u);
}

TEST(FeatureSchema, SerializeParseRoundTrip) {
  const FeatureSchema schema = FeatureSchema::default_v1();
  const FeatureSchema reparsed = FeatureSchema::parse(schema.serialize());
  EXPECT_EQ(reparsed.serialize(), schema.serialize());
  EXPECT_EQ(reparsed.canonical_values(), schema.canonical_values());
}

TEST(FeatureSchema, ShippedFileMatchesBuiltin) {
  const std::filesystem::path path =
      std::filesystem::path(DFR_SOURCE_DIR) / "schema" / "default-v1";
  ASSERT_TRUE(std::filesystem::exists(path)) << path;
  const FeatureSchema from_file = FeatureSchema::load(path.string());
  EXPECT_EQ(from_file.serialize(), FeatureSchema::default_v1().serialize());
}

TEST(FeatureSchema, RejectsUnknownKeypointAndMissingVersion) {
  EXPECT_THROW(FeatureSchema::parse("version v1\nratio nose_tip nose_tip foo bar\n"),
               dfr::ConfigError);
  EXPECT_THROW(FeatureSchema::parse("ratio nose_tip nose_bridge jaw_l jaw_r\n"),
               dfr::FormatError);
}

TEST(ExtractFeatures, CanonicalTemplateAllVisible) {
  const FeatureSchema schema = FeatureSchema::default_v1();
  const auto fv = dfr::extract_features(dfr::canonical_face_template(), schema);
  ASSERT_EQ(fv.values.size(), 28u);
  for (size_t i = 0; i < fv.values.size(); ++i) {
    EXPECT_TRUE(fv.mask[i]);
    if (i < schema.ratios().size())
      EXPECT_GT(fv.values[i], 0.0);
    else {
      EXPECT_GE(fv.values[i], 0.0);
      EXPECT_LE(fv.values[i], 90.0);
    }
  }
}

TEST(ExtractFeatures, InvisibleNoseMasksDependentEntries) {
  const FeatureSchema schema = FeatureSchema::default_v1();
  KeypointSet kps = dfr::canonical_face_template();
  const int nose_tip = dfr::keypoint_index("nose_tip");
  kps.visible[static_cast<size_t>(nose_tip)] = false;
  // Perturb geometry so imputation is observable.
  kps[nose_tip].y += 0.1;
  const auto fv = dfr::extract_features(kps, schema);

  size_t idx = 0;
  size_t masked = 0;
  const auto check = [&](const std::array<int, 4>& used) {
    const bool uses_nose =
        std::find(used.begin(), used.end(), nose_tip) != used.end();
    EXPECT_EQ(fv.mask[idx], !uses_nose);
    if (uses_nose) {
      EXPECT_DOUBLE_EQ(fv.values[idx], schema.canonical_values()[idx]);
      ++masked;
    }
    ++idx;
  };
  for (const auto& f : schema.ratios()) check(f.kp);
  for (const auto& f : schema.angles()) check(f.kp);
  EXPECT_GT(masked, 0u);
}

TEST(ExtractFeatures, SimilarityInvariance) {
  const FeatureSchema schema = FeatureSchema::default_v1();
  dfr::Rng rng(33);
  KeypointSet base = dfr::canonical_face_template();
  // Scaled x2 plus translation, the worked example.
  const auto scaled = transformed(base, 0.0, 2.0, 13.0, -4.5);
  const auto fv0 = dfr::extract_features(base, schema);
  const auto fv1 = dfr::extract_features(scaled, schema);
  for (size_t i = 0; i < fv0.values.size(); ++i) EXPECT_NEAR(fv0.values[i], fv1.values[i], 1e-9);

  for (int round = 0; round < 300; ++round) {
    KeypointSet kps;
    for (int i = 0; i < dfr::kKeypointCount; ++i)
      kps[i] = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const auto ref = dfr::extract_features(kps, schema);
    const auto moved = transformed(kps, rng.uniform(0, 360), rng.uniform(0.1, 10),
                                   rng.uniform(-100, 100), rng.uniform(-100, 100));
    const auto got = dfr::extract_features(moved, schema);
    for (size_t i = 0; i < ref.values.size(); ++i)
      ASSERT_NEAR(ref.values[i], got.values[i], 1e-9);
  }
}
