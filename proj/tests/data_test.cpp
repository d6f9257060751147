#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "dfr/dataset.hpp"
#include "dfr/geometry.hpp"
#include "dfr/rng.hpp"
#include "dfr/synth.hpp"

namespace fs = std::filesystem;
using dfr::Dataset;
using dfr::DisguiseKind;
using dfr::Image;
using dfr::KeypointSet;
using dfr::Sample;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Dataset fake_dataset(int n_subjects, int per_subject) {
  Dataset ds;
  for (int s = 0; s < n_subjects; ++s)
    for (int i = 0; i < per_subject; ++i) {
      Sample sample;
      sample.subject_id = s;
      sample.disguise = static_cast<DisguiseKind>(i % dfr::kDisguiseCount);
      sample.viewpoint_deg = 10;
      for (int k = 0; k < dfr::kKeypointCount; ++k)
        sample.annotation[k] = {static_cast<double>(s), static_cast<double>(i + k) / 3.0};
      ds.samples.push_back(sample);
    }
  return ds;
}

}  // namespace

TEST(Png, RoundTrip) {
  dfr::Rng rng(1);
  Image img(33, 17);
  for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.uniform_int(256));
  const auto dir = temp_dir("dfr_png_test");
  const std::string path = (dir / "t.png").string();
  dfr::write_png(img, path);
  const Image back = dfr::read_png(path);
  EXPECT_EQ(back.width, img.width);
  EXPECT_EQ(back.height, img.height);
  EXPECT_EQ(back.pixels, img.pixels);
  fs::remove_all(dir);
}

TEST(Resize, HalvingMapsKeypointsProportionally) {
  Image img(454, 454);
  KeypointSet kps;
  kps[0] = {100.0, 200.0};
  const auto [small, kps2] = dfr::resize_with_keypoints(img, kps, 227);
  EXPECT_EQ(small.width, 227);
  EXPECT_DOUBLE_EQ(kps2[0].x, 50.0);
  EXPECT_DOUBLE_EQ(kps2[0].y, 100.0);
}

TEST(Resize, IdentityAndRoundTrip) {
  dfr::Rng rng(2);
  Image img(227, 227);
  for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.uniform_int(256));
  KeypointSet kps;
  for (int k = 0; k < dfr::kKeypointCount; ++k)
    kps[k] = {rng.uniform(0, 227), rng.uniform(0, 227)};

  const auto [same, kps_same] = dfr::resize_with_keypoints(img, kps, 227);
  EXPECT_EQ(same.pixels, img.pixels);
  for (int k = 0; k < dfr::kKeypointCount; ++k) {
    EXPECT_DOUBLE_EQ(kps_same[k].x, kps[k].x);
    EXPECT_DOUBLE_EQ(kps_same[k].y, kps[k].y);
  }

  const auto [up, kps_up] = dfr::resize_with_keypoints(img, kps, 454);
  const auto [down, kps_down] = dfr::resize_with_keypoints(up, kps_up, 227);
  for (int k = 0; k < dfr::kKeypointCount; ++k) {
    EXPECT_NEAR(kps_down[k].x, kps[k].x, 1e-9);
    EXPECT_NEAR(kps_down[k].y, kps[k].y, 1e-9);
  }
}

TEST(Resize, PreservesFeatureGeometryUnderUniformScale) {
  const auto schema = dfr::FeatureSchema::default_v1();
  const auto subjects = dfr::make_subjects(1, 3);
  const KeypointSet kps = dfr::place_keypoints(subjects[0], std::nullopt, 0, 96, {});
  Image img(96, 96);
  const auto [resized, kps2] = dfr::resize_with_keypoints(img, kps, 192);
  const auto f1 = dfr::extract_features(kps, schema);
  const auto f2 = dfr::extract_features(kps2, schema);
  for (size_t i = 0; i < f1.values.size(); ++i) EXPECT_NEAR(f1.values[i], f2.values[i], 1e-9);
}

TEST(Split, PaperScaleArithmetic) {
  const Dataset ds = fake_dataset(20, 200);
  const auto [train, test] = dfr::split(ds, 0.875, 7);
  EXPECT_EQ(train.size(), 3500u);
  EXPECT_EQ(test.size(), 500u);
  std::set<int> train_subjects, test_subjects;
  for (const auto& s : train.samples) train_subjects.insert(s.subject_id);
  for (const auto& s : test.samples) test_subjects.insert(s.subject_id);
  EXPECT_EQ(train_subjects.size(), 20u);
  EXPECT_EQ(test_subjects.size(), 20u);
}

TEST(Split, FractionRoundingWithStratification) {
  const Dataset ds = fake_dataset(2, 5);
  const auto [train, test] = dfr::split(ds, 0.85, 3);
  EXPECT_EQ(train.size(), 8u);
  EXPECT_EQ(test.size(), 2u);
  std::set<int> test_subjects;
  for (const auto& s : test.samples) test_subjects.insert(s.subject_id);
  EXPECT_EQ(test_subjects.size(), 2u);
}

TEST(Split, DeterministicAndShareBounded) {
  const Dataset ds = fake_dataset(5, 37);
  const auto [a_train, a_test] = dfr::split(ds, 0.8, 11);
  const auto [b_train, b_test] = dfr::split(ds, 0.8, 11);
  ASSERT_EQ(a_test.size(), b_test.size());
  for (size_t i = 0; i < a_test.size(); ++i) {
    EXPECT_EQ(a_test.samples[i].subject_id, b_test.samples[i].subject_id);
    EXPECT_EQ(a_test.samples[i].annotation[0].y, b_test.samples[i].annotation[0].y);
  }
  // Each subject's test share within +-1 sample of the global fraction.
  for (int subject = 0; subject < 5; ++subject) {
    int count = 0;
    for (const auto& s : a_test.samples)
      if (s.subject_id == subject) ++count;
    EXPECT_NEAR(count, 37 * 0.2, 1.0);
  }
}

TEST(Split, RejectsTinySubjects) {
  Dataset ds = fake_dataset(2, 5);
  Sample lonely;
  lonely.subject_id = 99;
  ds.samples.push_back(lonely);
  EXPECT_THROW(dfr::split(ds, 0.8, 1), dfr::ParameterError);
  EXPECT_THROW(dfr::split(fake_dataset(2, 4), 0.0, 1), dfr::ParameterError);
}

TEST(Annotations, SaveLoadRoundTrip) {
  dfr::Rng rng(5);
  Dataset ds = fake_dataset(3, 4);
  for (auto& s : ds.samples) {
    s.image_path = "images/x.png";
    for (int k = 0; k < dfr::kKeypointCount; ++k) {
      s.annotation[k] = {rng.uniform(0, 96), rng.uniform(0, 96)};
      s.annotation.visible[static_cast<size_t>(k)] = rng.uniform01() < 0.8;
    }
  }
  const auto dir = temp_dir("dfr_ann_test");
  const std::string path = (dir / "annotations.csv").string();
  dfr::save_annotations(ds, path);
  const Dataset back = dfr::load_annotations(path);
  ASSERT_EQ(back.size(), ds.size());
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& a = ds.samples[i];
    const auto& b = back.samples[i];
    EXPECT_EQ(a.image_path, b.image_path);
    EXPECT_EQ(a.subject_id, b.subject_id);
    EXPECT_EQ(a.disguise, b.disguise);
    EXPECT_EQ(a.viewpoint_deg, b.viewpoint_deg);
    for (int k = 0; k < dfr::kKeypointCount; ++k) {
      EXPECT_EQ(a.annotation[k].x, b.annotation[k].x);  // lossless, not just close
      EXPECT_EQ(a.annotation[k].y, b.annotation[k].y);
      EXPECT_EQ(a.annotation.visible[static_cast<size_t>(k)],
                b.annotation.visible[static_cast<size_t>(k)]);
    }
  }
  fs::remove_all(dir);
}

TEST(Annotations, RowErrorsAreAddressed) {
  const auto dir = temp_dir("dfr_ann_err");
  const std::string path = (dir / "annotations.csv").string();
  {
    Dataset ds = fake_dataset(2, 2);
    dfr::save_annotations(ds, path);
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    // Drop the last column (one missing coordinate).
    row = row.substr(0, row.rfind(','));
    std::ofstream out(path, std::ios::binary);
    out << header << "\n" << row << "\n";
  }
  try {
    dfr::load_annotations(path);
    FAIL() << "expected FormatError";
  } catch (const dfr::FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }

  {
    std::ofstream out(path, std::ios::binary);
    Dataset empty;
    dfr::save_annotations(empty, path);
  }
  EXPECT_TRUE(dfr::load_annotations(path).empty());  // header-only file is fine

  {
    std::ofstream out(path, std::ios::binary);
    out << "bogus,header\n";
  }
  EXPECT_THROW(dfr::load_annotations(path), dfr::FormatError);
  fs::remove_all(dir);
}

TEST(Disguises, SlugsRoundTripAndOcclusionSemantics) {
  for (int d = 0; d < dfr::kDisguiseCount; ++d) {
    const auto kind = static_cast<DisguiseKind>(d);
    EXPECT_EQ(dfr::disguise_from_slug(dfr::disguise_slug(kind)), kind);
  }
  EXPECT_EQ(dfr::disguise_from_slug("none"), std::nullopt);
  EXPECT_THROW(dfr::disguise_from_slug("wig"), dfr::FormatError);

  // Any scarf variant hides the nose tip and both mouth corners.
  for (const auto kind : {DisguiseKind::kScarf, DisguiseKind::kScarfGlasses,
                          DisguiseKind::kCapScarf, DisguiseKind::kCapGlassesScarf}) {
    const auto occ = dfr::disguise_occluded_points(kind);
    for (const char* name : {"nose_tip", "nostril_l", "nostril_r", "mouth_l", "mouth_r"})
      EXPECT_NE(std::find(occ.begin(), occ.end(), dfr::keypoint_index(name)), occ.end())
          << dfr::disguise_slug(kind) << " must occlude " << name;
  }
  // Glasses never hide the nose tip.
  const auto glasses = dfr::disguise_occluded_points(DisguiseKind::kGlasses);
  EXPECT_EQ(std::find(glasses.begin(), glasses.end(), dfr::keypoint_index("nose_tip")),
            glasses.end());
}

TEST(Synth, IdentityPlacementMatchesTemplate) {
  const auto subjects = dfr::make_subjects(3, 42);
  const auto& subj = subjects[1];
  const int size = 96;
  const Sample s = dfr::synthesize_sample(subj, std::nullopt, 0, 0, size, {});
  const auto face_kp = subj.keypoints();
  for (int k = 0; k < dfr::kKeypointCount; ++k) {
    EXPECT_NEAR(s.annotation[k].x, size * 0.5 + face_kp[static_cast<size_t>(k)].x * 0.40 * size,
                1e-9);
    EXPECT_NEAR(s.annotation[k].y, size * 0.5 + face_kp[static_cast<size_t>(k)].y * 0.40 * size,
                1e-9);
    EXPECT_TRUE(s.annotation.visible[static_cast<size_t>(k)]);
  }
}

TEST(Synth, SubjectsAreSeparatedAndDeterministic) {
  const auto a = dfr::make_subjects(20, 7);
  const auto b = dfr::make_subjects(20, 7);
  ASSERT_EQ(a.size(), 20u);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].eye_spacing, b[i].eye_spacing);
    EXPECT_EQ(a[i].jaw_width, b[i].jaw_width);
  }
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = i + 1; j < a.size(); ++j) {
      const double gap = std::max({std::fabs(a[i].eye_spacing - a[j].eye_spacing) / 0.40,
                                   std::fabs(a[i].nose_length - a[j].nose_length) / 0.50,
                                   std::fabs(a[i].mouth_width - a[j].mouth_width) / 0.50,
                                   std::fabs(a[i].jaw_width - a[j].jaw_width) / 0.40});
      EXPECT_GE(gap, 0.12) << "subjects " << i << " and " << j;
    }
}

TEST(Synth, GeneratedDatasetInvariants) {
  const Dataset ds = dfr::generate_dataset(4, 20, 11, 64);
  ASSERT_EQ(ds.size(), 80u);
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    const Sample& s = ds.samples[i];
    ASSERT_TRUE(s.disguise.has_value());
    EXPECT_EQ(static_cast<int>(*s.disguise), static_cast<int>(i % 10u));  // cycled
    EXPECT_EQ(s.image.width, 64);
    const auto occluded = dfr::disguise_occluded_points(*s.disguise);
    for (int k = 0; k < dfr::kKeypointCount; ++k) {
      EXPECT_GE(s.annotation[k].x, 0.0);
      EXPECT_LE(s.annotation[k].x, 64.0);
      EXPECT_GE(s.annotation[k].y, 0.0);
      EXPECT_LE(s.annotation[k].y, 64.0);
      const bool should_hide =
          std::find(occluded.begin(), occluded.end(), k) != occluded.end();
      EXPECT_EQ(s.annotation.visible[static_cast<size_t>(k)], !should_hide);
    }
    EXPECT_TRUE(std::find(dfr::kViewpointsDeg.begin(), dfr::kViewpointsDeg.end(),
                          s.viewpoint_deg) != dfr::kViewpointsDeg.end());
  }
}

TEST(Synth, ByteForByteDeterminism) {
  const Dataset a = dfr::generate_dataset(2, 6, 123, 48);
  const Dataset b = dfr::generate_dataset(2, 6, 123, 48);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[i].image.pixels, b.samples[i].image.pixels);
    for (int k = 0; k < dfr::kKeypointCount; ++k) {
      EXPECT_EQ(a.samples[i].annotation[k].x, b.samples[i].annotation[k].x);
      EXPECT_EQ(a.samples[i].annotation[k].y, b.samples[i].annotation[k].y);
    }
  }
  const Dataset c = dfr::generate_dataset(2, 6, 124, 48);
  bool any_pixel_differs = false;
  for (size_t i = 0; i < a.size() && !any_pixel_differs; ++i)
    any_pixel_differs = a.samples[i].image.pixels != c.samples[i].image.pixels;
  EXPECT_TRUE(any_pixel_differs);
}

TEST(Synth, DatasetDirRoundTrip) {
  const Dataset ds = dfr::generate_dataset(2, 4, 9, 48);
  const auto dir = temp_dir("dfr_ds_roundtrip");
  dfr::save_dataset(ds, dir.string(), {9, 2, 4, 48});
  const Dataset back = dfr::load_dataset(dir.string());
  ASSERT_EQ(back.size(), ds.size());
  for (size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back.samples[i].image.pixels, ds.samples[i].image.pixels);
    EXPECT_EQ(back.samples[i].subject_id, ds.samples[i].subject_id);
  }
  const auto manifest = dfr::load_manifest(dir.string());
  EXPECT_EQ(manifest.seed, 9u);
  EXPECT_EQ(manifest.per_subject, 4);
  fs::remove_all(dir);
}
