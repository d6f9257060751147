#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfr/geometry.hpp"

namespace dfr {

enum class KernelKind { kLinear, kRbf };

struct SvmParams {
  KernelKind kernel = KernelKind::kRbf;
  double C = 1.0;
  // gamma <= 0 selects 1 / (feature_count * feature variance), computed on
  // the standardized training matrix the kernel actually sees.
  double gamma = 0.0;
  double tolerance = 1e-3;
  int max_passes = 10;
  uint64_t seed = 0;
};

double kernel_eval(const std::vector<double>& x, const std::vector<double>& y, KernelKind kernel,
                   double gamma);

// One binary decision function of the one-vs-one decomposition.
struct PairClassifier {
  int label_a = 0;  // predicted for decision value > 0
  int label_b = 0;
  std::vector<std::vector<double>> support_vectors;  // standardized space
  std::vector<double> coeffs;                        // alpha_i * y_i
  double bias = 0.0;
};

class SvmModel {
 public:
  SvmModel() = default;

  const std::vector<int>& labels() const { return labels_; }
  const std::vector<PairClassifier>& pairs() const { return pairs_; }
  int feature_count() const { return static_cast<int>(mean_.size()); }
  KernelKind kernel() const { return kernel_; }
  double gamma() const { return gamma_; }
  double C() const { return c_; }
  const std::vector<double>& feature_mean() const { return mean_; }
  const std::vector<double>& feature_scale() const { return scale_; }

  std::vector<double> standardize(const std::vector<double>& features) const;

  // Majority vote over all class pairs; ties broken by summed signed
  // margins, then by label order.
  struct Prediction {
    int label = 0;
    std::vector<int> votes;          // aligned with labels()
    std::vector<double> margin_sum;  // aligned with labels()
  };
  Prediction predict(const std::vector<double>& features) const;

  void save(const std::string& path) const;
  static SvmModel load(const std::string& path);

  friend SvmModel train_svm(const std::vector<FeatureVector>& features,
                            const std::vector<int>& labels, const SvmParams& params);

 private:
  std::vector<int> labels_;
  std::vector<PairClassifier> pairs_;
  std::vector<double> mean_, scale_;
  KernelKind kernel_ = KernelKind::kRbf;
  double gamma_ = 0.0;
  double c_ = 1.0;
};

SvmModel train_svm(const std::vector<FeatureVector>& features, const std::vector<int>& labels,
                   const SvmParams& params);

// Exhaustive grid search over the dual variables of a tiny binary problem
// (alpha on a [0, C] grid, equality constraint solved for the last
// coordinate). Test oracle for the SMO path; refuses more than 6 samples.
struct DualSolution {
  std::vector<double> alpha;
  double bias = 0.0;
  double objective = 0.0;
};
DualSolution brute_force_dual(const std::vector<std::vector<double>>& x,
                              const std::vector<int>& y, const SvmParams& params,
                              double grid_step);

// Dual objective sum(alpha) - 0.5 * sum_ij alpha_i alpha_j y_i y_j K(i,j).
double dual_objective(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                      const std::vector<double>& alpha, KernelKind kernel, double gamma);

}  // namespace dfr
