#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dfr/image.hpp"
#include "dfr/keypoints.hpp"

namespace dfr {

// The ten disguise combinations used throughout the pipeline.
enum class DisguiseKind {
  kBeard,
  kCap,
  kGlasses,
  kScarf,
  kCapGlasses,
  kBeardGlasses,
  kBeardCap,
  kScarfGlasses,
  kCapScarf,
  kCapGlassesScarf,
};
inline constexpr int kDisguiseCount = 10;

const char* disguise_slug(DisguiseKind kind);
std::optional<DisguiseKind> disguise_from_slug(const std::string& slug);  // "none" -> nullopt

bool disguise_has_beard(DisguiseKind kind);
bool disguise_has_cap(DisguiseKind kind);
bool disguise_has_glasses(DisguiseKind kind);
bool disguise_has_scarf(DisguiseKind kind);

// Keypoint indices hidden by a disguise (union over its components).
std::vector<int> disguise_occluded_points(DisguiseKind kind);

struct Sample {
  std::string image_path;  // relative to the dataset root
  Image image;             // may be empty until loaded
  KeypointSet annotation;
  int subject_id = 0;
  std::optional<DisguiseKind> disguise;
  int viewpoint_deg = 0;
};

struct Dataset {
  std::vector<Sample> samples;

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Bilinear image resize with keypoints rescaled proportionally per axis.
std::pair<Image, KeypointSet> resize_with_keypoints(const Image& image, const KeypointSet& kps,
                                                    int target);

// Seeded shuffle followed by a per-subject (stratified) partition; every
// subject lands in both halves.
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, uint64_t seed);

// Annotation CSV: one row per sample, header required.
//   image,subject_id,disguise_id,viewpoint,<name>_x,<name>_y,<name>_v,...
// Coordinates serialize with shortest-round-trip formatting, so a save/load
// cycle is lossless.
void save_annotations(const Dataset& dataset, const std::string& path);
Dataset load_annotations(const std::string& path);

// Writes images/NNNN.png plus annotations.csv and manifest.txt.
struct DatasetManifest {
  uint64_t seed = 0;
  int n_subjects = 0;
  int per_subject = 0;
  int size = 0;
};
void save_dataset(const Dataset& dataset, const std::string& dir, const DatasetManifest& manifest);
Dataset load_dataset(const std::string& dir);  // reads annotations + images
DatasetManifest load_manifest(const std::string& dir);

}  // namespace dfr
