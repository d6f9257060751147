#include "dfr/svm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "dfr/errors.hpp"
#include "dfr/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

namespace dfr {

namespace {

struct BinaryProblem {
  const std::vector<std::vector<double>>& x;
  std::vector<int> y;  // -1 / +1
};

struct BinarySolution {
  std::vector<double> alpha;
  double bias = 0.0;
};

std::vector<std::vector<double>> gram_matrix(const std::vector<std::vector<double>>& x,
                                             KernelKind kernel, double gamma) {
  const size_t n = x.size();
  std::vector<std::vector<double>> k(n, std::vector<double>(n));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i; j < n; ++j) k[i][j] = k[j][i] = kernel_eval(x[i], x[j], kernel, gamma);
  return k;
}

// Sequential minimal optimization, simplified working-set selection: sweep
// all points, pair each KKT violator with a random partner. Stops after
// max_passes consecutive sweeps without an update.
BinarySolution smo_train(const BinaryProblem& prob, const std::vector<std::vector<double>>& k,
                         const SvmParams& params, Rng& rng) {
  const int n = static_cast<int>(prob.x.size());
  const double c = params.C;
  const double tol = params.tolerance;

  std::vector<double> alpha(static_cast<size_t>(n), 0.0);
  double b = 0.0;

  const auto decision = [&](int i) {
    double f = b;
    for (int j = 0; j < n; ++j)
      if (alpha[j] != 0.0) f += alpha[j] * prob.y[j] * k[j][i];
    return f;
  };

  int quiet_passes = 0;
  const long sweep_cap = 200L + 50L * n;  // termination guard
  for (long sweep = 0; quiet_passes < params.max_passes && sweep < sweep_cap; ++sweep) {
    int changed = 0;
    for (int i = 0; i < n; ++i) {
      const double ei = decision(i) - prob.y[i];
      const double yei = prob.y[i] * ei;
      if (!((yei < -tol && alpha[i] < c) || (yei > tol && alpha[i] > 0))) continue;

      int j = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n - 1)));
      if (j >= i) ++j;
      const double ej = decision(j) - prob.y[j];

      const double ai_old = alpha[i], aj_old = alpha[j];
      double lo, hi;
      if (prob.y[i] != prob.y[j]) {
        lo = std::max(0.0, aj_old - ai_old);
        hi = std::min(c, c + aj_old - ai_old);
      } else {
        lo = std::max(0.0, ai_old + aj_old - c);
        hi = std::min(c, ai_old + aj_old);
      }
      if (lo >= hi) continue;

      const double eta = 2.0 * k[i][j] - k[i][i] - k[j][j];
      if (eta >= 0.0) continue;

      double aj = aj_old - prob.y[j] * (ei - ej) / eta;
      aj = std::clamp(aj, lo, hi);
      if (std::fabs(aj - aj_old) < 1e-7) continue;
      const double ai = ai_old + prob.y[i] * prob.y[j] * (aj_old - aj);

      const double b1 =
          b - ei - prob.y[i] * (ai - ai_old) * k[i][i] - prob.y[j] * (aj - aj_old) * k[i][j];
      const double b2 =
          b - ej - prob.y[i] * (ai - ai_old) * k[i][j] - prob.y[j] * (aj - aj_old) * k[j][j];
      if (ai > 0.0 && ai < c)
        b = b1;
      else if (aj > 0.0 && aj < c)
        b = b2;
      else
        b = 0.5 * (b1 + b2);

      alpha[i] = ai;
      alpha[j] = aj;
      ++changed;
    }
    quiet_passes = changed == 0 ? quiet_passes + 1 : 0;
  }
  return {std::move(alpha), b};
}

// -- serialization helpers -------------------------------------------------

void write_bytes(std::ofstream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
template <typename T>
void write_pod(std::ofstream& out, T v) {
  write_bytes(out, &v, sizeof(T));
}
void write_f64s(std::ofstream& out, const std::vector<double>& v) {
  write_bytes(out, v.data(), v.size() * sizeof(double));
}

void read_bytes(std::ifstream& in, void* p, size_t n, const char* section) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n)
    throw FormatError(std::string("svm model: truncated ") + section);
}
template <typename T>
T read_pod(std::ifstream& in, const char* section) {
  T v{};
  read_bytes(in, &v, sizeof(T), section);
  return v;
}
std::vector<double> read_f64s(std::ifstream& in, size_t n, const char* section) {
  std::vector<double> v(n);
  read_bytes(in, v.data(), n * sizeof(double), section);
  return v;
}

constexpr char kSvmMagic[4] = {'D', 'F', 'R', 'S'};
constexpr uint16_t kSvmVersion = 1;

}  // namespace

double kernel_eval(const std::vector<double>& x, const std::vector<double>& y, KernelKind kernel,
                   double gamma) {
  if (x.size() != y.size()) throw DimensionError("kernel_eval: length mismatch");
  if (kernel == KernelKind::kLinear) {
    double dot = 0.0;
    for (size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
    return dot;
  }
  double d2 = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

std::vector<double> SvmModel::standardize(const std::vector<double>& features) const {
  if (features.size() != mean_.size())
    throw DimensionError("svm: feature length " + std::to_string(features.size()) +
                         " does not match model dimension " + std::to_string(mean_.size()));
  std::vector<double> z(features.size());
  for (size_t i = 0; i < features.size(); ++i) z[i] = (features[i] - mean_[i]) / scale_[i];
  return z;
}

SvmModel::Prediction SvmModel::predict(const std::vector<double>& features) const {
  const std::vector<double> z = standardize(features);
  Prediction pred;
  pred.votes.assign(labels_.size(), 0);
  pred.margin_sum.assign(labels_.size(), 0.0);

  for (const PairClassifier& pc : pairs_) {
    double f = pc.bias;
    for (size_t s = 0; s < pc.support_vectors.size(); ++s)
      f += pc.coeffs[s] * kernel_eval(pc.support_vectors[s], z, kernel_, gamma_);
    const auto ia = static_cast<size_t>(
        std::lower_bound(labels_.begin(), labels_.end(), pc.label_a) - labels_.begin());
    const auto ib = static_cast<size_t>(
        std::lower_bound(labels_.begin(), labels_.end(), pc.label_b) - labels_.begin());
    pred.votes[f > 0.0 ? ia : ib] += 1;
    pred.margin_sum[ia] += f;
    pred.margin_sum[ib] -= f;
  }

  size_t best = 0;
  for (size_t i = 1; i < labels_.size(); ++i) {
    if (pred.votes[i] > pred.votes[best] ||
        (pred.votes[i] == pred.votes[best] && pred.margin_sum[i] > pred.margin_sum[best]))
      best = i;
  }
  pred.label = labels_[best];
  return pred;
}

SvmModel train_svm(const std::vector<FeatureVector>& features, const std::vector<int>& labels,
                   const SvmParams& params) {
  if (features.size() != labels.size())
    throw DimensionError("train_svm: feature / label count mismatch");
  if (features.empty()) throw ParameterError("train_svm: empty training set");
  if (params.C <= 0.0) throw ParameterError("train_svm: C must be positive");
  if (params.tolerance <= 0.0) throw ParameterError("train_svm: tolerance must be positive");

  const size_t dim = features[0].values.size();
  for (const FeatureVector& f : features)
    if (f.values.size() != dim) throw DimensionError("train_svm: inconsistent feature lengths");

  const std::set<int> label_set(labels.begin(), labels.end());
  if (label_set.size() < 2) throw ParameterError("train_svm: need at least 2 distinct labels");

  SvmModel model;
  model.labels_.assign(label_set.begin(), label_set.end());
  model.kernel_ = params.kernel;
  model.c_ = params.C;

  // Per-dimension standardization statistics from the full training set.
  model.mean_.assign(dim, 0.0);
  model.scale_.assign(dim, 1.0);
  for (const FeatureVector& f : features)
    for (size_t d = 0; d < dim; ++d) model.mean_[d] += f.values[d];
  for (double& m : model.mean_) m /= static_cast<double>(features.size());
  std::vector<double> var(dim, 0.0);
  for (const FeatureVector& f : features)
    for (size_t d = 0; d < dim; ++d) {
      const double c = f.values[d] - model.mean_[d];
      var[d] += c * c;
    }
  for (size_t d = 0; d < dim; ++d) {
    var[d] /= static_cast<double>(features.size());
    model.scale_[d] = var[d] > 0.0 ? std::sqrt(var[d]) : 1.0;
  }

  std::vector<std::vector<double>> z(features.size());
  for (size_t i = 0; i < features.size(); ++i) z[i] = model.standardize(features[i].values);

  if (params.gamma > 0.0) {
    model.gamma_ = params.gamma;
  } else {
    double total_var = 0.0;
    for (size_t d = 0; d < dim; ++d) {
      double m = 0.0;
      for (const auto& row : z) m += row[d];
      m /= static_cast<double>(z.size());
      for (const auto& row : z) total_var += (row[d] - m) * (row[d] - m);
    }
    total_var /= static_cast<double>(z.size() * dim);
    model.gamma_ = total_var > 0.0 ? 1.0 / (static_cast<double>(dim) * total_var)
                                   : 1.0 / static_cast<double>(dim);
  }

  // One-vs-one: a binary SMO problem per label pair, in ascending label
  // order so a fixed seed reproduces the model exactly.
  for (size_t a = 0; a < model.labels_.size(); ++a) {
    for (size_t bidx = a + 1; bidx < model.labels_.size(); ++bidx) {
      const int la = model.labels_[a], lb = model.labels_[bidx];
      std::vector<std::vector<double>> px;
      std::vector<int> py;
      for (size_t i = 0; i < z.size(); ++i) {
        if (labels[i] == la) {
          px.push_back(z[i]);
          py.push_back(+1);
        } else if (labels[i] == lb) {
          px.push_back(z[i]);
          py.push_back(-1);
        }
      }
      Rng rng(splitmix64(params.seed) ^ splitmix64((static_cast<uint64_t>(a) << 32) | bidx));
      const auto gram = gram_matrix(px, params.kernel, model.gamma_);
      const BinarySolution sol = smo_train({px, py}, gram, params, rng);

      PairClassifier pc;
      pc.label_a = la;
      pc.label_b = lb;
      pc.bias = sol.bias;
      for (size_t i = 0; i < px.size(); ++i) {
        if (sol.alpha[i] > 1e-12) {
          pc.support_vectors.push_back(px[i]);
          pc.coeffs.push_back(sol.alpha[i] * py[i]);
        }
      }
      model.pairs_.push_back(std::move(pc));
    }
  }
  return model;
}

double dual_objective(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                      const std::vector<double>& alpha, KernelKind kernel, double gamma) {
  const size_t n = x.size();
  double obj = 0.0;
  for (size_t i = 0; i < n; ++i) obj += alpha[i];
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      obj -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * kernel_eval(x[i], x[j], kernel, gamma);
  return obj;
}

DualSolution brute_force_dual(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                              const SvmParams& params, double grid_step) {
  const size_t n = x.size();
  if (n == 0 || n > 6) throw ParameterError("brute_force_dual: supports 1..6 samples");
  if (x.size() != y.size()) throw DimensionError("brute_force_dual: sample / label mismatch");
  if (grid_step <= 0.0) throw ParameterError("brute_force_dual: grid step must be positive");

  const double c = params.C;
  const int steps = static_cast<int>(std::floor(c / grid_step + 1e-9));
  std::vector<double> grid;
  for (int i = 0; i <= steps; ++i) grid.push_back(std::min(c, i * grid_step));

  const double gamma = params.gamma > 0.0 ? params.gamma : 1.0;
  DualSolution best;
  best.objective = -1.0;
  std::vector<double> alpha(n, 0.0);

  // Enumerate the first n-1 coordinates; the equality constraint
  // sum(alpha_i y_i) = 0 pins the last one.
  std::vector<size_t> idx(n - 1, 0);
  while (true) {
    for (size_t d = 0; d + 1 < n; ++d) alpha[d] = grid[idx[d]];
    double s = 0.0;
    for (size_t d = 0; d + 1 < n; ++d) s += alpha[d] * y[d];
    const double last = -s * y[n - 1];
    if (last >= -1e-9 && last <= c + 1e-9) {
      alpha[n - 1] = std::clamp(last, 0.0, c);
      const double obj = dual_objective(x, y, alpha, params.kernel, gamma);
      if (obj > best.objective) {
        best.objective = obj;
        best.alpha = alpha;
      }
    }
    size_t d = 0;
    for (; d + 1 < n; ++d) {
      if (++idx[d] < grid.size()) break;
      idx[d] = 0;
    }
    if (d + 1 >= n) break;
  }

  // Bias from the KKT conditions of the best grid point.
  std::vector<double> fw(n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      fw[i] += best.alpha[j] * y[j] * kernel_eval(x[j], x[i], params.kernel, gamma);
  double interior_sum = 0.0;
  int interior = 0;
  double lb = -1e300, ub = 1e300;
  for (size_t i = 0; i < n; ++i) {
    if (best.alpha[i] > grid_step * 0.5 && best.alpha[i] < c - grid_step * 0.5) {
      interior_sum += y[i] - fw[i];
      ++interior;
    } else if (best.alpha[i] <= grid_step * 0.5) {
      // alpha = 0: y_i f(x_i) >= 1
      if (y[i] > 0)
        lb = std::max(lb, 1.0 - fw[i]);
      else
        ub = std::min(ub, -1.0 - fw[i]);
    } else {
      // alpha = C: y_i f(x_i) <= 1
      if (y[i] > 0)
        ub = std::min(ub, 1.0 - fw[i]);
      else
        lb = std::max(lb, -1.0 - fw[i]);
    }
  }
  if (interior > 0)
    best.bias = interior_sum / interior;
  else
    best.bias = 0.5 * (lb + ub);  // box may be slightly infeasible at grid resolution
  return best;
}

void SvmModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write svm model: " + path);
  write_bytes(out, kSvmMagic, 4);
  write_pod(out, kSvmVersion);
  write_pod(out, static_cast<uint8_t>(kernel_));
  write_pod(out, c_);
  write_pod(out, gamma_);
  write_pod(out, static_cast<uint32_t>(mean_.size()));
  write_f64s(out, mean_);
  write_f64s(out, scale_);
  write_pod(out, static_cast<uint32_t>(labels_.size()));
  for (int l : labels_) write_pod(out, static_cast<int32_t>(l));
  write_pod(out, static_cast<uint32_t>(pairs_.size()));
  for (const PairClassifier& pc : pairs_) {
    write_pod(out, static_cast<int32_t>(pc.label_a));
    write_pod(out, static_cast<int32_t>(pc.label_b));
    write_pod(out, static_cast<uint32_t>(pc.support_vectors.size()));
    write_pod(out, pc.bias);
    for (const auto& sv : pc.support_vectors) write_f64s(out, sv);
    write_f64s(out, pc.coeffs);
  }
  if (!out) throw IoError("write failed: " + path);
}

SvmModel SvmModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open svm model: " + path);
  char magic[4];
  read_bytes(in, magic, 4, "header");
  if (std::memcmp(magic, kSvmMagic, 4) != 0) throw FormatError("svm model: bad magic (header)");
  const auto version = read_pod<uint16_t>(in, "header");
  if (version != kSvmVersion)
    throw FormatError("svm model: unsupported format version " + std::to_string(version) +
                      " (supported: " + std::to_string(kSvmVersion) + ")");

  SvmModel m;
  const auto kernel = read_pod<uint8_t>(in, "kernel block");
  if (kernel > 1) throw FormatError("svm model: unknown kernel id (kernel block)");
  m.kernel_ = static_cast<KernelKind>(kernel);
  m.c_ = read_pod<double>(in, "kernel block");
  m.gamma_ = read_pod<double>(in, "kernel block");

  const auto dim = read_pod<uint32_t>(in, "normalization block");
  if (dim == 0 || dim > 1u << 20) throw FormatError("svm model: implausible dimension");
  m.mean_ = read_f64s(in, dim, "normalization block");
  m.scale_ = read_f64s(in, dim, "normalization block");

  const auto nlabels = read_pod<uint32_t>(in, "label block");
  if (nlabels < 2 || nlabels > 1u << 20) throw FormatError("svm model: implausible label count");
  m.labels_.resize(nlabels);
  for (auto& l : m.labels_) l = read_pod<int32_t>(in, "label block");

  const auto npairs = read_pod<uint32_t>(in, "pair block");
  if (npairs != nlabels * (nlabels - 1) / 2)
    throw FormatError("svm model: pair count does not match label count (pair block)");
  m.pairs_.resize(npairs);
  for (PairClassifier& pc : m.pairs_) {
    pc.label_a = read_pod<int32_t>(in, "pair block");
    pc.label_b = read_pod<int32_t>(in, "pair block");
    const auto nsv = read_pod<uint32_t>(in, "pair block");
    pc.bias = read_pod<double>(in, "pair block");
    pc.support_vectors.resize(nsv);
    for (auto& sv : pc.support_vectors) sv = read_f64s(in, dim, "support vectors");
    pc.coeffs = read_f64s(in, nsv, "dual coefficients");
  }
  return m;
}

}  // namespace dfr
