#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "dfr/rng.hpp"
#include "dfr/svm.hpp"

using dfr::FeatureVector;
using dfr::KernelKind;
using dfr::SvmModel;
using dfr::SvmParams;

namespace {

FeatureVector fv(std::vector<double> values) {
  FeatureVector f;
  f.mask.assign(values.size(), true);
  f.values = std::move(values);
  return f;
}

// Dual objective of a trained pair, reconstructed from its stored support
// vectors (alpha = |coeff|, y = sign(coeff)).
double pair_objective(const dfr::PairClassifier& pc, KernelKind kernel, double gamma) {
  std::vector<int> y;
  std::vector<double> alpha;
  for (double c : pc.coeffs) {
    y.push_back(c > 0 ? 1 : -1);
    alpha.push_back(std::fabs(c));
  }
  return dfr::dual_objective(pc.support_vectors, y, alpha, kernel, gamma);
}

double grid_decision(const dfr::DualSolution& sol, const std::vector<std::vector<double>>& x,
                     const std::vector<int>& y, const std::vector<double>& q, KernelKind kernel,
                     double gamma) {
  double f = sol.bias;
  for (size_t i = 0; i < x.size(); ++i)
    f += sol.alpha[i] * y[i] * dfr::kernel_eval(x[i], q, kernel, gamma);
  return f;
}

struct OracleCase {
  std::string name;
  std::vector<FeatureVector> features;
  std::vector<int> labels;  // two classes: 0 and 1
  SvmParams params;
};

std::vector<OracleCase> committed_binary_instances() {
  std::vector<OracleCase> cases;
  {
    OracleCase c;
    c.name = "linear_1d";
    c.features = {fv({-2}), fv({-1}), fv({1}), fv({2})};
    c.labels = {0, 0, 1, 1};
    c.params.kernel = KernelKind::kLinear;
    c.params.C = 1.0;
    c.params.gamma = 1.0;
    cases.push_back(c);
  }
  {
    OracleCase c;
    c.name = "xor_rbf";
    c.features = {fv({0, 0}), fv({1, 1}), fv({0, 1}), fv({1, 0})};
    c.labels = {0, 0, 1, 1};
    c.params.kernel = KernelKind::kRbf;
    c.params.C = 1.0;
    c.params.gamma = 1.0;
    cases.push_back(c);
  }
  {
    OracleCase c;
    c.name = "contradictory_point_small_c";
    c.features = {fv({-1}), fv({0}), fv({0}), fv({1})};
    c.labels = {0, 0, 1, 1};  // the two x=0 samples disagree
    c.params.kernel = KernelKind::kRbf;
    c.params.C = 0.1;
    c.params.gamma = 1.0;
    cases.push_back(c);
  }
  {
    OracleCase c;
    c.name = "two_point_pair";
    c.features = {fv({-1}), fv({1})};
    c.labels = {0, 1};
    c.params.kernel = KernelKind::kLinear;
    c.params.C = 1.0;
    c.params.gamma = 1.0;
    cases.push_back(c);
  }
  return cases;
}

}  // namespace

TEST(KernelEval, BasicIdentities) {
  const std::vector<double> x = {1.0, -2.0, 0.5};
  const std::vector<double> zero = {0.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(dfr::kernel_eval(x, x, KernelKind::kRbf, 0.7), 1.0);
  EXPECT_DOUBLE_EQ(dfr::kernel_eval(x, zero, KernelKind::kLinear, 0), 0.0);
  const std::vector<double> y = {0.25, 3.0, -1.0};
  EXPECT_DOUBLE_EQ(dfr::kernel_eval(x, y, KernelKind::kRbf, 0.7),
                   dfr::kernel_eval(y, x, KernelKind::kRbf, 0.7));
  EXPECT_THROW(dfr::kernel_eval(x, {1.0}, KernelKind::kLinear, 0), dfr::DimensionError);
}

TEST(TrainSvm, RejectsDegenerateInputs) {
  EXPECT_THROW(dfr::train_svm({fv({1}), fv({2})}, {0, 0}, {}), dfr::ParameterError);
  EXPECT_THROW(dfr::train_svm({fv({1}), fv({2, 3})}, {0, 1}, {}), dfr::DimensionError);
  EXPECT_THROW(dfr::train_svm({}, {}, {}), dfr::ParameterError);
}

TEST(TrainSvm, LinearBoundaryCrossesZero) {
  // {-2,-1} -> A, {+1,+2} -> B.
  SvmParams params;
  params.kernel = KernelKind::kLinear;
  params.C = 1.0;
  const SvmModel model =
      dfr::train_svm({fv({-2}), fv({-1}), fv({1}), fv({2})}, {0, 0, 1, 1}, params);
  EXPECT_EQ(model.predict(fv({-2}).values).label, 0);
  EXPECT_EQ(model.predict(fv({-1}).values).label, 0);
  EXPECT_EQ(model.predict(fv({1}).values).label, 1);
  EXPECT_EQ(model.predict(fv({2}).values).label, 1);
  // Boundary between the classes: the two sides of zero disagree.
  EXPECT_EQ(model.predict({-0.4}).label, 0);
  EXPECT_EQ(model.predict({0.4}).label, 1);
}

TEST(TrainSvm, XorWithRbf) {
  SvmParams params;
  params.kernel = KernelKind::kRbf;
  params.gamma = 1.0;
  params.C = 1.0;
  const std::vector<FeatureVector> xs = {fv({0, 0}), fv({1, 1}), fv({0, 1}), fv({1, 0})};
  const std::vector<int> ys = {0, 0, 1, 1};
  const SvmModel model = dfr::train_svm(xs, ys, params);
  for (size_t i = 0; i < xs.size(); ++i) EXPECT_EQ(model.predict(xs[i].values).label, ys[i]);
}

TEST(TrainSvm, DualFeasibility) {
  dfr::Rng rng(4);
  std::vector<FeatureVector> xs;
  std::vector<int> ys;
  for (int i = 0; i < 40; ++i) {
    const int label = i % 2;
    xs.push_back(fv({rng.uniform(0, 1) + 2.0 * label, rng.uniform(0, 1)}));
    ys.push_back(label);
  }
  SvmParams params;
  params.C = 1.0;
  const SvmModel model = dfr::train_svm(xs, ys, params);
  for (const auto& pc : model.pairs()) {
    double sum = 0.0;
    for (double c : pc.coeffs) {
      EXPECT_LE(std::fabs(c), params.C + 1e-12);  // 0 <= alpha <= C
      sum += c;
    }
    EXPECT_NEAR(sum, 0.0, 1e-8);  // sum alpha_i y_i = 0
  }
}

TEST(TrainSvm, KktConditionsWithinToleranceOnTrainingData) {
  const auto cases = committed_binary_instances();
  for (const auto& c : cases) {
    const SvmModel model = dfr::train_svm(c.features, c.labels, c.params);
    ASSERT_EQ(model.pairs().size(), 1u) << c.name;
    const auto& pc = model.pairs()[0];
    for (size_t i = 0; i < c.features.size(); ++i) {
      const auto z = model.standardize(c.features[i].values);
      double f = pc.bias;
      for (size_t s = 0; s < pc.support_vectors.size(); ++s)
        f += pc.coeffs[s] * dfr::kernel_eval(pc.support_vectors[s], z, model.kernel(),
                                             model.gamma());
      const int y = c.labels[i] == model.labels()[0] ? +1 : -1;
      // Recover this point's alpha from the stored support vectors.
      double alpha = 0.0;
      for (size_t s = 0; s < pc.support_vectors.size(); ++s)
        if (pc.support_vectors[s] == z && (pc.coeffs[s] > 0) == (y > 0))
          alpha = std::fabs(pc.coeffs[s]);
      const double margin = y * f;
      const double tol = 10 * c.params.tolerance;
      if (alpha < 1e-9)
        EXPECT_GE(margin, 1.0 - tol) << c.name << " sample " << i;
      else if (alpha > c.params.C - 1e-9)
        EXPECT_LE(margin, 1.0 + tol) << c.name << " sample " << i;
      else
        EXPECT_NEAR(margin, 1.0, tol) << c.name << " sample " << i;
    }
  }
}

TEST(BruteForceDual, CLimitAndSymmetry) {
  SvmParams params;
  params.kernel = KernelKind::kLinear;
  params.gamma = 1.0;
  params.C = 1e-9;
  const std::vector<std::vector<double>> x = {{-1}, {1}};
  const std::vector<int> y = {+1, -1};
  const auto tiny = dfr::brute_force_dual(x, y, params, 1e-10);
  EXPECT_NEAR(tiny.alpha[0], 0.0, 1e-9);
  EXPECT_NEAR(tiny.alpha[1], 0.0, 1e-9);

  params.C = 1.0;
  const auto sol = dfr::brute_force_dual(x, y, params, 0.01);
  EXPECT_NEAR(sol.alpha[0], sol.alpha[1], 1e-12);  // symmetric pair

  EXPECT_THROW(dfr::brute_force_dual({{1}, {2}, {3}, {4}, {5}, {6}, {7}},
                                     {1, 1, 1, -1, -1, -1, -1}, params, 0.1),
               dfr::ParameterError);
}

TEST(OracleAgreement, SmoMatchesGridSearchOnCommittedInstances) {
  const double grid_step = 0.02;
  for (const auto& c : committed_binary_instances()) {
    const SvmModel model = dfr::train_svm(c.features, c.labels, c.params);
    ASSERT_EQ(model.pairs().size(), 1u);
    const auto& pc = model.pairs()[0];

    // Same standardized space and gamma the model trained in.
    std::vector<std::vector<double>> z;
    std::vector<int> y;
    for (size_t i = 0; i < c.features.size(); ++i) {
      z.push_back(model.standardize(c.features[i].values));
      y.push_back(c.labels[i] == model.labels()[0] ? +1 : -1);
    }
    SvmParams grid_params = c.params;
    grid_params.gamma = model.gamma();
    const auto grid = dfr::brute_force_dual(z, y, grid_params, grid_step * c.params.C);

    const double smo_obj = pair_objective(pc, model.kernel(), model.gamma());
    // Grid resolution translates to an objective slack.
    const double grid_tol = 0.05 * c.params.C + 1e-6;
    EXPECT_GE(smo_obj, grid.objective - grid_tol) << c.name;

    for (size_t i = 0; i < c.features.size(); ++i) {
      const double gdec = grid_decision(grid, z, y, z[i], model.kernel(), model.gamma());
      const int gpred = gdec > 0 ? model.labels()[0] : model.labels()[1];
      const int mpred = model.predict(c.features[i].values).label;
      // Contradictory duplicates sit on the boundary; skip exact-zero
      // decisions, which have no well-defined side.
      if (std::fabs(gdec) < 1e-9) continue;
      EXPECT_EQ(mpred, gpred) << c.name << " sample " << i;
    }
  }
}

TEST(Predict, ThreeClassVoteTable) {
  dfr::Rng rng(6);
  std::vector<FeatureVector> xs;
  std::vector<int> ys;
  const double centers[3][2] = {{0, 0}, {4, 0}, {0, 4}};
  for (int label = 0; label < 3; ++label)
    for (int i = 0; i < 10; ++i) {
      xs.push_back(fv({centers[label][0] + rng.uniform(-0.5, 0.5),
                       centers[label][1] + rng.uniform(-0.5, 0.5)}));
      ys.push_back(label + 5);  // non-contiguous ids
    }
  const SvmModel model = dfr::train_svm(xs, ys, {});
  int correct = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const auto pred = model.predict(xs[i].values);
    int votes = 0;
    for (int v : pred.votes) votes += v;
    EXPECT_EQ(votes, 3);  // C(3,2)
    if (pred.label == ys[i]) ++correct;
  }
  EXPECT_EQ(correct, 30);
}

TEST(Predict, SymmetricTieIsDeterministic) {
  const SvmModel model =
      dfr::train_svm({fv({-1}), fv({1})}, {0, 1}, {.kernel = KernelKind::kRbf, .gamma = 1.0});
  const auto a = model.predict({0.0});
  const auto b = model.predict({0.0});
  EXPECT_EQ(a.label, b.label);
  // Equidistant query: decision value is 0, which by contract falls to the
  // second label of the pair.
  EXPECT_EQ(a.label, 1);
}

TEST(Predict, LengthMismatchThrows) {
  const SvmModel model = dfr::train_svm({fv({-1, 0}), fv({1, 0})}, {0, 1}, {});
  EXPECT_THROW(model.predict({1.0}), dfr::DimensionError);
}

TEST(StandardizationInvariance, PerDimensionScaleDoesNotChangeLabels) {
  dfr::Rng rng(14);
  std::vector<FeatureVector> xs;
  std::vector<int> ys;
  for (int i = 0; i < 60; ++i) {
    const int label = i % 3;
    xs.push_back(fv({rng.uniform(0, 1) + 1.5 * label, rng.uniform(0, 1) - 0.7 * label,
                     rng.uniform(0, 1)}));
    ys.push_back(label);
  }
  const SvmModel base = dfr::train_svm(xs, ys, {});

  const std::vector<double> scales = {100.0, 0.003, 7.0};
  std::vector<FeatureVector> scaled = xs;
  for (auto& f : scaled)
    for (size_t d = 0; d < f.values.size(); ++d) f.values[d] *= scales[d];
  const SvmModel rescaled = dfr::train_svm(scaled, ys, {});

  dfr::Rng probe_rng(15);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> q = {probe_rng.uniform(-1, 3), probe_rng.uniform(-2, 1),
                             probe_rng.uniform(0, 1)};
    std::vector<double> qs = q;
    for (size_t d = 0; d < q.size(); ++d) qs[d] *= scales[d];
    EXPECT_EQ(base.predict(q).label, rescaled.predict(qs).label);
  }
}

TEST(Serialization, RoundTripAndDeterminism) {
  dfr::Rng rng(20);
  std::vector<FeatureVector> xs;
  std::vector<int> ys;
  for (int i = 0; i < 30; ++i) {
    const int label = i % 3;
    xs.push_back(fv({rng.uniform(0, 1) + 2.0 * label, rng.uniform(0, 1)}));
    ys.push_back(label);
  }
  SvmParams params;
  params.seed = 99;
  const SvmModel a = dfr::train_svm(xs, ys, params);
  const SvmModel b = dfr::train_svm(xs, ys, params);

  const auto tmp = std::filesystem::temp_directory_path();
  const std::string pa = (tmp / "dfr_svm_a.dfrs").string();
  const std::string pb = (tmp / "dfr_svm_b.dfrs").string();
  a.save(pa);
  b.save(pb);
  std::ifstream fa(pa, std::ios::binary), fb(pb, std::ios::binary);
  const std::string bytes_a((std::istreambuf_iterator<char>(fa)), {});
  const std::string bytes_b((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(bytes_a, bytes_b);  // fixed seed + data order -> identical model

  const SvmModel loaded = SvmModel::load(pa);
  for (const auto& x : xs)
    EXPECT_EQ(a.predict(x.values).label, loaded.predict(x.values).label);

  // Corrupt the magic.
  std::string corrupted = bytes_a;
  corrupted[1] = 'X';
  const std::string pc = (tmp / "dfr_svm_c.dfrs").string();
  std::ofstream(pc, std::ios::binary).write(corrupted.data(),
                                            static_cast<std::streamsize>(corrupted.size()));
  EXPECT_THROW(SvmModel::load(pc), dfr::FormatError);

  // Truncate mid-payload.
  const std::string pd = (tmp / "dfr_svm_d.dfrs").string();
  std::ofstream(pd, std::ios::binary).write(bytes_a.data(),
                                            static_cast<std::streamsize>(bytes_a.size() / 2));
  EXPECT_THROW(SvmModel::load(pd), dfr::FormatError);

  std::filesystem::remove(pa);
  std::filesystem::remove(pb);
  std::filesystem::remove(pc);
  std::filesystem::remove(pd);
}
