#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dfr/dataset.hpp"
#include "dfr/geometry.hpp"
#include "dfr/keypoint_net.hpp"
#include "dfr/keypoints.hpp"
#include "dfr/svm.hpp"

namespace dfr {

inline constexpr int kHistogramBins = 21;  // 1 px bins 0..20 plus overflow

struct KeypointErrorReport {
  int sample_count = 0;
  double tau = 5.0;
  double overall_mae = 0.0;       // per-coordinate MAE
  double accuracy_at_tau = 0.0;   // fraction of keypoints with error <= tau
  std::vector<double> per_keypoint_mean_error;          // kKeypointCount
  std::vector<std::vector<int>> per_keypoint_histogram; // kKeypointCount x kHistogramBins
  std::vector<std::pair<double, double>> accuracy_curve;  // (tau, accuracy), tau = 1..20
};

KeypointErrorReport keypoint_errors(const std::vector<KeypointSet>& preds,
                                    const std::vector<KeypointSet>& gts, double tau = 5.0);

// Published accuracies embedded in report footers for side-by-side reading.
// The comparison table labels its rows "[2]" and "[3]" while the running
// text credits references [15] and [16]; both citations are recorded.
struct ReferenceResults {
  double dfr_simple = 86.6;
  double dfr_complex = 72.4;
  double dhamecha_simple = 65.2;
  double dhamecha_complex = 53.4;
  double singh_simple = 78.4;
  double singh_complex = 62.6;
};

struct DisguiseAccuracy {
  DisguiseKind disguise = DisguiseKind::kBeard;
  int total = 0;
  int correct = 0;
  double accuracy = 0.0;
};

struct ClassificationReport {
  std::vector<int> labels;                  // sorted subject ids
  std::vector<std::vector<int>> confusion;  // [true][predicted]
  int total = 0;
  double overall_accuracy = 0.0;
  std::vector<DisguiseAccuracy> per_disguise;  // only disguises present, enum order
  ReferenceResults reference;
};

ClassificationReport classification_report(const std::vector<int>& predicted,
                                           const std::vector<int>& truth,
                                           const std::vector<DisguiseKind>& disguises);

struct FpsReport {
  int batch = 0;
  int warmup_frames = 0;
  // inference only
  int frames = 0;
  double wall_seconds = 0.0;
  double seconds_per_frame = 0.0;
  double fps = 0.0;
  // including the resize preprocessing step
  int frames_pre = 0;
  double wall_seconds_pre = 0.0;
  double seconds_per_frame_pre = 0.0;
  double fps_pre = 0.0;
};

// Monotonic seconds; injectable so report arithmetic is testable.
using ClockFn = std::function<double()>;
ClockFn steady_clock_fn();

// Times batched end-to-end prediction (keypoints, then optionally features
// + SVM). The first batch is warm-up and excluded from the totals.
FpsReport fps_benchmark(const TrainedModel& model, const SvmModel* svm,
                        const FeatureSchema* schema, const std::vector<Image>& frames, int batch,
                        ClockFn clock = {});

}  // namespace dfr
