#include "dfr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dfr/errors.hpp"
#include "dfr/rng.hpp"
#include "dfr/text.hpp"

namespace dfr {

namespace {

namespace fs = std::filesystem;

constexpr const char* kSlugs[kDisguiseCount] = {
    "beard",          "cap",       "glasses",   "scarf",     "cap_glasses",
    "beard_glasses",  "beard_cap", "scarf_glasses", "cap_scarf", "cap_glasses_scarf"};

double parse_cell(const std::string& s, int row, const std::string& column) {
  return parse_double(s, "annotations row " + std::to_string(row) + ", column '" + column + "'");
}

std::vector<std::string> annotation_header() {
  std::vector<std::string> h = {"image", "subject_id", "disguise_id", "viewpoint"};
  for (const auto& name : keypoint_names()) {
    h.push_back(std::string(name) + "_x");
    h.push_back(std::string(name) + "_y");
    h.push_back(std::string(name) + "_v");
  }
  return h;
}

}  // namespace

const char* disguise_slug(DisguiseKind kind) { return kSlugs[static_cast<int>(kind)]; }

std::optional<DisguiseKind> disguise_from_slug(const std::string& slug) {
  if (slug == "none") return std::nullopt;
  for (int i = 0; i < kDisguiseCount; ++i)
    if (slug == kSlugs[i]) return static_cast<DisguiseKind>(i);
  throw FormatError("unknown disguise id '" + slug + "'");
}

bool disguise_has_beard(DisguiseKind k) {
  return k == DisguiseKind::kBeard || k == DisguiseKind::kBeardGlasses ||
         k == DisguiseKind::kBeardCap;
}
bool disguise_has_cap(DisguiseKind k) {
  return k == DisguiseKind::kCap || k == DisguiseKind::kCapGlasses ||
         k == DisguiseKind::kBeardCap || k == DisguiseKind::kCapScarf ||
         k == DisguiseKind::kCapGlassesScarf;
}
bool disguise_has_glasses(DisguiseKind k) {
  return k == DisguiseKind::kGlasses || k == DisguiseKind::kCapGlasses ||
         k == DisguiseKind::kBeardGlasses || k == DisguiseKind::kScarfGlasses ||
         k == DisguiseKind::kCapGlassesScarf;
}
bool disguise_has_scarf(DisguiseKind k) {
  return k == DisguiseKind::kScarf || k == DisguiseKind::kScarfGlasses ||
         k == DisguiseKind::kCapScarf || k == DisguiseKind::kCapGlassesScarf;
}

std::vector<int> disguise_occluded_points(DisguiseKind kind) {
  std::vector<int> occ;
  const auto add = [&occ](const char* name) { occ.push_back(keypoint_index(name)); };
  if (disguise_has_cap(kind)) {
    add("brow_outer_l");
    add("brow_inner_l");
    add("brow_inner_r");
    add("brow_outer_r");
  }
  if (disguise_has_glasses(kind)) {
    add("eye_outer_l");
    add("eye_inner_l");
    add("eye_inner_r");
    add("eye_outer_r");
    add("eye_center_l");
    add("eye_center_r");
  }
  if (disguise_has_scarf(kind)) {
    add("nose_tip");
    add("nostril_l");
    add("nostril_r");
    add("mouth_l");
    add("mouth_r");
    add("lip_top");
    add("lip_bottom");
  }
  if (disguise_has_beard(kind)) {
    for (const char* name : {"mouth_l", "mouth_r", "lip_bottom", "jaw_l", "jaw_r"}) {
      const int idx = keypoint_index(name);
      if (std::find(occ.begin(), occ.end(), idx) == occ.end()) occ.push_back(idx);
    }
  }
  std::sort(occ.begin(), occ.end());
  return occ;
}

std::pair<Image, KeypointSet> resize_with_keypoints(const Image& image, const KeypointSet& kps,
                                                    int target) {
  if (target < 1) throw ParameterError("resize_with_keypoints: target must be >= 1");
  const double fx = static_cast<double>(target) / image.width;
  const double fy = static_cast<double>(target) / image.height;
  KeypointSet out = kps;
  for (int i = 0; i < kKeypointCount; ++i) {
    out[i].x = kps[i].x * fx;
    out[i].y = kps[i].y * fy;
  }
  return {resize_bilinear(image, target, target), out};
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ParameterError("split: train_fraction must lie in (0, 1)");

  std::map<int, std::vector<size_t>> by_subject;
  for (size_t i = 0; i < dataset.samples.size(); ++i)
    by_subject[dataset.samples[i].subject_id].push_back(i);

  Rng rng(seed);
  Dataset train, test;
  for (auto& [subject, indices] : by_subject) {
    if (indices.size() < 2)
      throw ParameterError("split: subject " + std::to_string(subject) +
                           " has fewer than 2 samples; cannot stratify");
    rng.shuffle(indices);
    size_t n_test = static_cast<size_t>(
        std::llround((1.0 - train_fraction) * static_cast<double>(indices.size())));
    n_test = std::clamp<size_t>(n_test, 1, indices.size() - 1);
    for (size_t k = 0; k < indices.size(); ++k)
      (k < n_test ? test : train).samples.push_back(dataset.samples[indices[k]]);
  }
  return {std::move(train), std::move(test)};
}

void save_annotations(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write annotations: " + path);
  const auto header = annotation_header();
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const Sample& s : dataset.samples) {
    out << s.image_path << "," << s.subject_id << ","
        << (s.disguise ? disguise_slug(*s.disguise) : "none") << "," << s.viewpoint_deg;
    for (int k = 0; k < kKeypointCount; ++k)
      out << "," << format_double(s.annotation[k].x) << "," << format_double(s.annotation[k].y)
          << "," << (s.annotation.visible[static_cast<size_t>(k)] ? 1 : 0);
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

Dataset load_annotations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open annotations: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("annotations: missing header row");
  const auto header = annotation_header();
  const auto got = split_on(line, ',');
  if (got != header) {
    if (got.size() != header.size())
      throw FormatError("annotations: header has " + std::to_string(got.size()) +
                        " columns, expected " + std::to_string(header.size()));
    for (size_t i = 0; i < header.size(); ++i)
      if (got[i] != header[i])
        throw FormatError("annotations: header column " + std::to_string(i + 1) + " is '" +
                          got[i] + "', expected '" + header[i] + "'");
  }

  Dataset ds;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_on(line, ',');
    if (fields.size() != header.size())
      throw FormatError("annotations row " + std::to_string(row) + ": has " +
                        std::to_string(fields.size()) + " columns, expected " +
                        std::to_string(header.size()));
    Sample s;
    s.image_path = fields[0];
    s.subject_id = static_cast<int>(parse_cell(fields[1], row, "subject_id"));
    s.disguise = disguise_from_slug(fields[2]);
    s.viewpoint_deg = static_cast<int>(parse_cell(fields[3], row, "viewpoint"));
    for (int k = 0; k < kKeypointCount; ++k) {
      const size_t base = 4 + static_cast<size_t>(k) * 3;
      s.annotation[k].x = parse_cell(fields[base], row, header[base]);
      s.annotation[k].y = parse_cell(fields[base + 1], row, header[base + 1]);
      const std::string& v = fields[base + 2];
      if (v != "0" && v != "1")
        throw FormatError("annotations row " + std::to_string(row) + ", column '" +
                          header[base + 2] + "': visibility must be 0 or 1");
      s.annotation.visible[static_cast<size_t>(k)] = v == "1";
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& dir,
                  const DatasetManifest& manifest) {
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  if (ec) throw IoError("cannot create dataset directory: " + (root / "images").string());

  Dataset with_paths = dataset;
  for (size_t i = 0; i < with_paths.samples.size(); ++i) {
    Sample& s = with_paths.samples[i];
    if (s.image_path.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "images/%05zu.png", i);
      s.image_path = name;
    }
    if (!s.image.empty()) write_png(s.image, (root / s.image_path).string());
  }
  save_annotations(with_paths, (root / "annotations.csv").string());

  std::ofstream mf(root / "manifest.txt", std::ios::binary);
  if (!mf) throw IoError("cannot write manifest: " + (root / "manifest.txt").string());
  mf << "seed=" << manifest.seed << "\n"
     << "subjects=" << manifest.n_subjects << "\n"
     << "per_subject=" << manifest.per_subject << "\n"
     << "size=" << manifest.size << "\n"
     << "samples=" << dataset.samples.size() << "\n";
}

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  Dataset ds = load_annotations((root / "annotations.csv").string());
  for (Sample& s : ds.samples)
    if (!s.image_path.empty()) s.image = read_png((root / s.image_path).string());
  return ds;
}

DatasetManifest load_manifest(const std::string& dir) {
  const fs::path path = fs::path(dir) / "manifest.txt";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  DatasetManifest m;
  std::string line;
  while (std::getline(in, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "seed") m.seed = std::stoull(value);
    if (key == "subjects") m.n_subjects = std::stoi(value);
    if (key == "per_subject") m.per_subject = std::stoi(value);
    if (key == "size") m.size = std::stoi(value);
  }
  return m;
}

}  // namespace dfr
