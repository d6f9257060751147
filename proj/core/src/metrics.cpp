#include "dfr/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "dfr/errors.hpp"

namespace dfr {

KeypointErrorReport keypoint_errors(const std::vector<KeypointSet>& preds,
                                    const std::vector<KeypointSet>& gts, double tau) {
  if (preds.size() != gts.size())
    throw ParameterError("keypoint_errors: prediction / ground-truth count mismatch");
  if (preds.empty()) throw ParameterError("keypoint_errors: empty input");
  if (tau <= 0.0) throw ParameterError("keypoint_errors: tau must be positive");

  KeypointErrorReport r;
  r.sample_count = static_cast<int>(preds.size());
  r.tau = tau;
  r.per_keypoint_mean_error.assign(kKeypointCount, 0.0);
  r.per_keypoint_histogram.assign(kKeypointCount, std::vector<int>(kHistogramBins, 0));

  double abs_sum = 0.0;
  long within_tau = 0;
  std::vector<double> distances;
  distances.reserve(preds.size() * kKeypointCount);
  for (size_t s = 0; s < preds.size(); ++s) {
    for (int k = 0; k < kKeypointCount; ++k) {
      const Point& p = preds[s][k];
      const Point& g = gts[s][k];
      const double d = euclidean_distance(p, g);
      distances.push_back(d);
      r.per_keypoint_mean_error[static_cast<size_t>(k)] += d;
      const int bin = std::min(kHistogramBins - 1, static_cast<int>(std::floor(d)));
      r.per_keypoint_histogram[static_cast<size_t>(k)][static_cast<size_t>(bin)] += 1;
      if (d <= tau) ++within_tau;
      abs_sum += std::fabs(p.x - g.x) + std::fabs(p.y - g.y);
    }
  }
  for (double& e : r.per_keypoint_mean_error) e /= static_cast<double>(preds.size());
  const double n_points = static_cast<double>(preds.size()) * kKeypointCount;
  r.overall_mae = abs_sum / (n_points * 2.0);
  r.accuracy_at_tau = static_cast<double>(within_tau) / n_points;
  for (int t = 1; t <= 20; ++t) {
    long cnt = 0;
    for (double d : distances)
      if (d <= static_cast<double>(t)) ++cnt;
    r.accuracy_curve.emplace_back(static_cast<double>(t), static_cast<double>(cnt) / n_points);
  }
  return r;
}

ClassificationReport classification_report(const std::vector<int>& predicted,
                                           const std::vector<int>& truth,
                                           const std::vector<DisguiseKind>& disguises) {
  if (predicted.size() != truth.size() || predicted.size() != disguises.size())
    throw ParameterError("classification_report: input lengths differ");
  if (predicted.empty()) throw ParameterError("classification_report: empty input");

  ClassificationReport r;
  r.total = static_cast<int>(predicted.size());
  r.labels = truth;
  for (int p : predicted) r.labels.push_back(p);
  std::sort(r.labels.begin(), r.labels.end());
  r.labels.erase(std::unique(r.labels.begin(), r.labels.end()), r.labels.end());

  const auto label_index = [&r](int label) {
    return static_cast<size_t>(std::lower_bound(r.labels.begin(), r.labels.end(), label) -
                               r.labels.begin());
  };

  r.confusion.assign(r.labels.size(), std::vector<int>(r.labels.size(), 0));
  int correct_total = 0;
  std::array<int, kDisguiseCount> total{}, correct{};
  for (size_t i = 0; i < predicted.size(); ++i) {
    r.confusion[label_index(truth[i])][label_index(predicted[i])] += 1;
    const int d = static_cast<int>(disguises[i]);
    if (d < 0 || d >= kDisguiseCount)
      throw ParameterError("classification_report: unknown disguise id " + std::to_string(d));
    total[static_cast<size_t>(d)] += 1;
    if (predicted[i] == truth[i]) {
      ++correct_total;
      correct[static_cast<size_t>(d)] += 1;
    }
  }
  r.overall_accuracy = static_cast<double>(correct_total) / static_cast<double>(r.total);
  for (int d = 0; d < kDisguiseCount; ++d) {
    if (total[static_cast<size_t>(d)] == 0) continue;
    DisguiseAccuracy da;
    da.disguise = static_cast<DisguiseKind>(d);
    da.total = total[static_cast<size_t>(d)];
    da.correct = correct[static_cast<size_t>(d)];
    da.accuracy = static_cast<double>(da.correct) / da.total;
    r.per_disguise.push_back(da);
  }
  return r;
}

ClockFn steady_clock_fn() {
  return [] {
    const auto now = std::chrono::steady_clock::now().time_since_epoch();
    return std::chrono::duration<double>(now).count();
  };
}

FpsReport fps_benchmark(const TrainedModel& model, const SvmModel* svm,
                        const FeatureSchema* schema, const std::vector<Image>& frames, int batch,
                        ClockFn clock) {
  if (frames.empty()) throw ParameterError("fps_benchmark: no frames");
  if (batch < 1) throw ParameterError("fps_benchmark: batch must be >= 1");
  if (svm && !schema) throw ParameterError("fps_benchmark: svm given without feature schema");
  if (!clock) clock = steady_clock_fn();

  const int input_size = model.config().input_size;
  std::vector<Image> resized;
  resized.reserve(frames.size());
  for (const Image& f : frames) resized.push_back(resize_bilinear(f, input_size, input_size));

  const auto run_frame = [&](const Image& frame) {
    const KeypointSet kps = predict_keypoints(model, frame);
    if (svm) {
      const FeatureVector fv = extract_features(kps, *schema);
      (void)svm->predict(fv.values);
    }
  };

  FpsReport r;
  r.batch = batch;

  // Pass 1: inference only, on pre-resized frames.
  {
    double timed = 0.0;
    int timed_frames = 0;
    size_t i = 0;
    int batch_no = 0;
    while (i < resized.size()) {
      const size_t bn = std::min<size_t>(static_cast<size_t>(batch), resized.size() - i);
      const double t0 = clock();
      for (size_t k = 0; k < bn; ++k) run_frame(resized[i + k]);
      const double t1 = clock();
      // Discard the warm-up batch when more than one batch is available.
      if (batch_no > 0 || resized.size() <= bn) {
        timed += t1 - t0;
        timed_frames += static_cast<int>(bn);
      } else {
        r.warmup_frames = static_cast<int>(bn);
      }
      i += bn;
      ++batch_no;
    }
    r.frames = timed_frames;
    r.wall_seconds = timed;
    r.seconds_per_frame = timed / timed_frames;
    r.fps = timed_frames / timed;
  }

  // Pass 2: resize included in the timed region.
  {
    double timed = 0.0;
    int timed_frames = 0;
    size_t i = 0;
    int batch_no = 0;
    while (i < frames.size()) {
      const size_t bn = std::min<size_t>(static_cast<size_t>(batch), frames.size() - i);
      const double t0 = clock();
      for (size_t k = 0; k < bn; ++k)
        run_frame(resize_bilinear(frames[i + k], input_size, input_size));
      const double t1 = clock();
      if (batch_no > 0 || frames.size() <= bn) {
        timed += t1 - t0;
        timed_frames += static_cast<int>(bn);
      }
      i += bn;
      ++batch_no;
    }
    r.frames_pre = timed_frames;
    r.wall_seconds_pre = timed;
    r.seconds_per_frame_pre = timed / timed_frames;
    r.fps_pre = timed_frames / timed;
  }
  return r;
}

}  // namespace dfr
