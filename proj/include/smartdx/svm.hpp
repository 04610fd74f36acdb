#pragma once

// Soft-margin kernel SVM: SMO dual solver with per-sample box bounds,
// balanced class weighting, and one-vs-one multiclass voting.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smartdx/error.hpp"

namespace smartdx {

using json = nlohmann::json;

/// Dense row-major matrix used at the SVM boundary.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  DenseMatrix(std::initializer_list<std::initializer_list<double>> init) {
    rows = init.size();
    cols = rows ? init.begin()->size() : 0;
    for (const auto& r : init) {
      if (r.size() != cols) throw NumericError("DenseMatrix: ragged initializer");
      data.insert(data.end(), r.begin(), r.end());
    }
  }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data).subspan(i * cols, cols);
  }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool operator==(const DenseMatrix&) const = default;
};

enum class KernelKind { rbf, linear };

/// Numeric gamma or the data-dependent `scale` heuristic.
struct Gamma {
  bool scale = true;
  double value = 0.0;

  static Gamma of(double v) { return {false, v}; }
  static Gamma scaled() { return {true, 0.0}; }

  std::string to_string() const;
  bool operator==(const Gamma&) const = default;
};

inline std::string Gamma::to_string() const {
  if (scale) return "scale";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

struct KernelConfig {
  KernelKind kind = KernelKind::rbf;
  Gamma gamma = Gamma::scaled();
};

enum class ClassWeightMode { balanced, none };

struct SvmConfig {
  double C = 1.0;
  KernelConfig kernel{};
  ClassWeightMode class_weight = ClassWeightMode::balanced;
  double tolerance = 1e-3;
  double max_iter_per_sample = 100.0;
};

/// `scale` resolves to 1 / (n_features * mean per-column population variance).
inline double resolve_gamma(const Gamma& g, const DenseMatrix& x) {
  if (!g.scale) {
    if (!(g.value > 0.0)) throw NumericError("gamma must be positive");
    return g.value;
  }
  if (x.rows == 0 || x.cols == 0) throw NumericError("resolve_gamma: empty matrix");
  const double n = static_cast<double>(x.rows);
  double total = 0.0;
  for (std::size_t c = 0; c < x.cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) mean += x.at(r, c);
    mean /= n;
    double ss = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) ss += (x.at(r, c) - mean) * (x.at(r, c) - mean);
    total += ss / n;
  }
  const double mean_var = total / static_cast<double>(x.cols);
  if (!(mean_var > 0.0)) throw NumericError("resolve_gamma: training rows have zero variance");
  return 1.0 / (static_cast<double>(x.cols) * mean_var);
}

/// weight(c) = n_total / (n_classes * n_c) over the classes present.
template <typename Label>
std::map<Label, double> class_weights(std::span<const Label> labels) {
  if (labels.empty()) throw NumericError("class_weights: no labels");
  std::map<Label, std::size_t> counts;
  for (const auto& l : labels) ++counts[l];
  std::map<Label, double> w;
  const double total = static_cast<double>(labels.size());
  const double k = static_cast<double>(counts.size());
  for (const auto& [label, n] : counts) w[label] = total / (k * static_cast<double>(n));
  return w;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Kernel with gamma already resolved.
struct ResolvedKernel {
  KernelKind kind = KernelKind::rbf;
  double gamma = 1.0;

  double operator()(std::span<const double> a, std::span<const double> b) const {
    return kind == KernelKind::rbf ? std::exp(-gamma * squared_distance(a, b)) : dot(a, b);
  }
};

struct DualSolution {
  std::vector<double> alpha;
  double bias = 0.0;  ///< f(x) = sum_i alpha_i y_i K(x_i, x) + bias
  bool converged = false;
  long iterations = 0;
};

/// Sequential minimal optimization on
///   max sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij,  0 <= a_i <= upper_i,  sum a_i y_i = 0
/// with maximal-violating-pair working-set selection (lowest index on ties).
/// `kernel(i, j)` returns K_ij; `y` holds +-1. A feasible `start` (same
/// size, within bounds, sum a_i y_i = 0) replaces the zero initial point.
/// Problems up to kSmoDenseLimit rows keep the whole kernel matrix.
inline constexpr std::size_t kSmoDenseLimit = 2048;

template <typename KernelFn>
DualSolution smo_solve(std::size_t n, KernelFn&& kernel, std::span<const double> y,
                       std::span<const double> upper, double tol, long max_iter,
                       std::span<const double> start = {}) {
  DualSolution sol;
  sol.alpha.assign(n, 0.0);
  if (n == 0) return sol;
  bool has_pos = false, has_neg = false;
  for (double v : y) (v > 0 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw NumericError("smo: both classes must be present");

  auto& a = sol.alpha;
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a
  std::vector<double> diag(n);
  const bool dense = n <= kSmoDenseLimit;
  std::vector<double> full;
  if (dense) {
    full.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < n; ++t) {
        const double v = kernel(i, t);
        if (!std::isfinite(v)) throw NumericError("smo: non-finite kernel value");
        full[i * n + t] = v;
      }
  }
  for (std::size_t i = 0; i < n; ++i) {
    diag[i] = dense ? full[i * n + i] : kernel(i, i);
    if (!std::isfinite(diag[i])) throw NumericError("smo: non-finite kernel value");
  }
  if (!start.empty()) {
    if (start.size() != n) throw Error("smo: start vector has wrong size");
    for (std::size_t s = 0; s < n; ++s) {
      if (start[s] < 0.0 || start[s] > upper[s]) throw Error("smo: start vector outside bounds");
      a[s] = start[s];
      if (a[s] == 0.0) continue;
      for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * y[s] * a[s] * kernel(s, t);
    }
  }
  std::vector<double> ki(n), kj(n);
  constexpr double kTau = 1e-12;

  auto in_up = [&](std::size_t t) { return y[t] > 0 ? a[t] < upper[t] : a[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return y[t] > 0 ? a[t] > 0.0 : a[t] < upper[t]; };

  // Maximal violating pair; the scan is fused into the gradient update.
  double gmax = -std::numeric_limits<double>::infinity();
  double gmin = std::numeric_limits<double>::infinity();
  std::size_t i = n, j = n;
  auto consider = [&](std::size_t t) {
    const double v = -y[t] * grad[t];
    if (in_up(t) && v > gmax) {
      gmax = v;
      i = t;
    }
    if (in_low(t) && v < gmin) {
      gmin = v;
      j = t;
    }
  };
  for (std::size_t t = 0; t < n; ++t) consider(t);

  for (;;) {
    if (i == n || j == n || gmax - gmin <= tol) {
      sol.converged = true;
      break;
    }
    if (sol.iterations >= max_iter) break;
    ++sol.iterations;

    const double* ri = ki.data();
    const double* rj = kj.data();
    if (dense) {
      ri = &full[i * n];
      rj = &full[j * n];
    } else {
      for (std::size_t t = 0; t < n; ++t) {
        ki[t] = kernel(i, t);
        kj[t] = kernel(j, t);
        if (!std::isfinite(ki[t]) || !std::isfinite(kj[t]))
          throw NumericError("smo: non-finite kernel value");
      }
    }
    const double ci = upper[i], cj = upper[j];
    const double old_ai = a[i], old_aj = a[j];
    double quad = diag[i] + diag[j] - 2.0 * ri[j];
    if (quad <= 0.0) quad = kTau;
    if (y[i] != y[j]) {
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) {
          a[j] = 0.0;
          a[i] = diff;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = -diff;
      }
      if (diff > ci - cj) {
        if (a[i] > ci) {
          a[i] = ci;
          a[j] = ci - diff;
        }
      } else if (a[j] > cj) {
        a[j] = cj;
        a[i] = cj + diff;
      }
    } else {
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > ci) {
        if (a[i] > ci) {
          a[i] = ci;
          a[j] = sum - ci;
        }
      } else if (a[j] < 0.0) {
        a[j] = 0.0;
        a[i] = sum;
      }
      if (sum > cj) {
        if (a[j] > cj) {
          a[j] = cj;
          a[i] = sum - cj;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = sum;
      }
    }
    const double si = y[i] * (a[i] - old_ai), sj = y[j] * (a[j] - old_aj);
    double* g = grad.data();
    const double* yy = y.data();
    gmax = -std::numeric_limits<double>::infinity();
    gmin = std::numeric_limits<double>::infinity();
    i = j = n;
    for (std::size_t t = 0; t < n; ++t) {
      g[t] += yy[t] * (ri[t] * si + rj[t] * sj);
      consider(t);
    }
  }

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (a[t] >= upper[t]) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (a[t] <= 0.0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  const double rho = free_count ? free_sum / static_cast<double>(free_count) : 0.5 * (ub + lb);
  sol.bias = -rho;
  return sol;
}

/// Dual objective sum(a) - 1/2 a'Qa.
template <typename KernelFn>
double dual_objective(std::span<const double> alpha, KernelFn&& kernel, std::span<const double> y) {
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    lin += alpha[i];
    if (alpha[i] == 0.0) continue;
    for (std::size_t j = 0; j < alpha.size(); ++j)
      quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel(i, j);
  }
  return lin - 0.5 * quad;
}

inline constexpr long kIterationFloor = 10'000'000;

inline long iteration_cap(double per_sample, std::size_t n) {
  return std::max(kIterationFloor, static_cast<long>(std::ceil(per_sample * static_cast<double>(n))));
}

inline long iteration_cap(const SvmConfig& cfg, std::size_t n) { return iteration_cap(cfg.max_iter_per_sample, n); }

inline constexpr std::size_t kGramCacheLimit = 4096;

/// Trained two-class model: f(x) = sum coef_s K(sv_s, x) + bias, positive
/// values predict +1.
struct BinarySvm {
  DenseMatrix support_vectors;
  std::vector<double> dual_coef;  ///< alpha_s * y_s
  double bias = 0.0;
  ResolvedKernel kernel{};
  bool converged = false;
  long iterations = 0;

  double decision(std::span<const double> x) const {
    double f = bias;
    for (std::size_t s = 0; s < dual_coef.size(); ++s)
      f += dual_coef[s] * kernel(support_vectors.row(s), x);
    return f;
  }
};

/// Full binary fit, exposing the multipliers for inspection.
struct BinaryFit {
  BinarySvm model;
  DualSolution dual;
  std::vector<double> upper;
};

inline BinaryFit fit_binary(const DenseMatrix& x, std::span<const int> labels, const SvmConfig& cfg,
                            std::optional<double> gamma_override = std::nullopt) {
  if (x.rows != labels.size()) throw NumericError("train_binary: row/label count mismatch");
  if (!(cfg.C > 0.0)) throw NumericError("train_binary: C must be positive");
  for (double v : x.data)
    if (!std::isfinite(v)) throw NumericError("train_binary: non-finite input");
  std::vector<double> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1 && labels[i] != -1) throw NumericError("train_binary: labels must be +-1");
    y[i] = labels[i];
  }
  const ResolvedKernel k{cfg.kernel.kind,
                         gamma_override ? *gamma_override
                         : cfg.kernel.kind == KernelKind::rbf ? resolve_gamma(cfg.kernel.gamma, x)
                                                              : 0.0};
  std::vector<double> upper(x.rows, cfg.C);
  if (cfg.class_weight == ClassWeightMode::balanced) {
    const auto w = class_weights(labels);
    for (std::size_t i = 0; i < x.rows; ++i) upper[i] = cfg.C * w.at(labels[i]);
  }
  const long cap = iteration_cap(cfg, x.rows);
  DualSolution dual;
  if (x.rows <= kGramCacheLimit) {
    std::vector<double> gram(x.rows * x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
      for (std::size_t j = i; j < x.rows; ++j)
        gram[i * x.rows + j] = gram[j * x.rows + i] = k(x.row(i), x.row(j));
    dual = smo_solve(
        x.rows, [&](std::size_t i, std::size_t j) { return gram[i * x.rows + j]; }, y, upper,
        cfg.tolerance, cap);
  } else {
    dual = smo_solve(
        x.rows, [&](std::size_t i, std::size_t j) { return k(x.row(i), x.row(j)); }, y, upper,
        cfg.tolerance, cap);
  }

  BinaryFit fit;
  fit.upper = std::move(upper);
  auto& m = fit.model;
  m.kernel = k;
  m.bias = dual.bias;
  m.converged = dual.converged;
  m.iterations = dual.iterations;
  m.support_vectors.cols = x.cols;
  for (std::size_t i = 0; i < x.rows; ++i) {
    if (dual.alpha[i] <= 0.0) continue;
    const auto r = x.row(i);
    m.support_vectors.data.insert(m.support_vectors.data.end(), r.begin(), r.end());
    ++m.support_vectors.rows;
    m.dual_coef.push_back(dual.alpha[i] * y[i]);
  }
  fit.dual = std::move(dual);
  return fit;
}

inline BinarySvm train_binary(const DenseMatrix& x, std::span<const int> labels,
                              const SvmConfig& cfg) {
  return fit_binary(x, labels, cfg).model;
}

/// Per-pair decision values -> predicted class index. Votes first, then the
/// summed decision values in each class's favour, then the lower index.
/// `pairs[p]` = (a, b) with a < b; decision > 0 votes for a.
inline std::size_t ovo_vote(std::size_t n_classes, std::span<const std::pair<int, int>> pairs,
                            std::span<const double> decisions) {
  std::vector<int> votes(n_classes, 0);
  std::vector<double> strength(n_classes, 0.0);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [a, b] = pairs[p];
    ++votes[decisions[p] > 0.0 ? a : b];
    strength[a] += decisions[p];
    strength[b] -= decisions[p];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < n_classes; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best]))
      best = c;
  }
  return best;
}

inline std::vector<std::pair<int, int>> class_pairs(std::size_t n_classes) {
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t a = 0; a < n_classes; ++a)
    for (std::size_t b = a + 1; b < n_classes; ++b)
      pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
  return pairs;
}

/// One-vs-one model over classes given as ascending integer codes.
struct TrainedSvm {
  std::vector<int> classes;
  std::vector<std::pair<int, int>> pairs;  ///< indices into `classes`
  std::vector<BinarySvm> models;
  SvmConfig config{};
  double gamma = 0.0;

  bool converged() const {
    return std::all_of(models.begin(), models.end(), [](const auto& m) { return m.converged; });
  }
};

/// Class weights are computed once over all training labels, then each pair
/// problem uses C * weight(class) as the per-sample bound.
inline TrainedSvm train_multiclass(const DenseMatrix& x, std::span<const int> labels,
                                   const SvmConfig& cfg) {
  if (x.rows != labels.size()) throw NumericError("train_multiclass: row/label count mismatch");
  TrainedSvm model;
  model.config = cfg;
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  if (model.classes.size() < 2) throw NumericError("train_multiclass: need at least 2 classes");
  model.gamma = cfg.kernel.kind == KernelKind::rbf ? resolve_gamma(cfg.kernel.gamma, x) : 0.0;
  model.pairs = class_pairs(model.classes.size());

  std::map<int, double> weights;
  if (cfg.class_weight == ClassWeightMode::balanced) weights = class_weights(labels);

  for (const auto& [a, b] : model.pairs) {
    const int ca = model.classes[a], cb = model.classes[b];
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == ca || labels[i] == cb) idx.push_back(i);
    DenseMatrix sub(idx.size(), x.cols);
    std::vector<double> y(idx.size()), upper(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto src = x.row(idx[r]);
      std::copy(src.begin(), src.end(), sub.data.begin() + static_cast<std::ptrdiff_t>(r * x.cols));
      y[r] = labels[idx[r]] == ca ? 1.0 : -1.0;
      upper[r] = cfg.C * (weights.empty() ? 1.0 : weights.at(labels[idx[r]]));
    }
    const ResolvedKernel k{cfg.kernel.kind, model.gamma};
    std::vector<double> gram(idx.size() * idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = i; j < idx.size(); ++j)
        gram[i * idx.size() + j] = gram[j * idx.size() + i] = k(sub.row(i), sub.row(j));
    const auto dual = smo_solve(
        idx.size(), [&](std::size_t i, std::size_t j) { return gram[i * idx.size() + j]; }, y,
        upper, cfg.tolerance, iteration_cap(cfg, idx.size()));
    BinarySvm m;
    m.kernel = k;
    m.bias = dual.bias;
    m.converged = dual.converged;
    m.iterations = dual.iterations;
    m.support_vectors.cols = x.cols;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (dual.alpha[i] <= 0.0) continue;
      const auto r = sub.row(i);
      m.support_vectors.data.insert(m.support_vectors.data.end(), r.begin(), r.end());
      ++m.support_vectors.rows;
      m.dual_coef.push_back(dual.alpha[i] * y[i]);
    }
    model.models.push_back(std::move(m));
  }
  return model;
}

inline std::vector<int> predict(const TrainedSvm& model, const DenseMatrix& x) {
  if (model.models.size() != model.pairs.size() || model.classes.size() < 2)
    throw NumericError("predict: model is not trained");
  std::vector<int> out(x.rows);
  std::vector<double> dec(model.pairs.size());
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t p = 0; p < model.pairs.size(); ++p) dec[p] = model.models[p].decision(x.row(r));
    out[r] = model.classes[ovo_vote(model.classes.size(), model.pairs, dec)];
  }
  return out;
}


/// One pair model of a one-vs-one fit over a precomputed kernel. Support
/// vectors are indices into the caller's index space.
struct GramPairModel {
  std::vector<std::size_t> support;
  std::vector<double> coef;
  double bias = 0.0;
  bool converged = false;
  std::vector<double> alpha;  // over the pair's training rows, in `train` order
};

/// One-vs-one training on rows `train` of an implicit kernel `kernel(p, q)`.
/// `y[k]` is the class index (0..n_classes-1) of `train[k]`; class weights are
/// taken over all of `y`.
template <typename KernelFn>
std::vector<GramPairModel> train_ovo_gram(KernelFn&& kernel, std::span<const std::size_t> train,
                                          std::span<const int> y, std::size_t n_classes, double C,
                                          ClassWeightMode mode, double tol,
                                          double max_iter_per_sample,
                                          std::span<const GramPairModel> warm = {}) {
  std::vector<double> weight(n_classes, 1.0);
  if (mode == ClassWeightMode::balanced) {
    for (const auto& [cls, w] : class_weights(y)) weight[static_cast<std::size_t>(cls)] = w;
  }
  std::vector<GramPairModel> models;
  std::vector<std::size_t> idx;
  std::vector<double> ys, upper;
  for (const auto& [a, b] : class_pairs(n_classes)) {
    idx.clear();
    ys.clear();
    upper.clear();
    for (std::size_t k = 0; k < train.size(); ++k) {
      if (y[k] != a && y[k] != b) continue;
      idx.push_back(train[k]);
      ys.push_back(y[k] == a ? 1.0 : -1.0);
      upper.push_back(C * weight[static_cast<std::size_t>(y[k])]);
    }
    std::span<const double> start;
    if (warm.size() > models.size()) {
      const auto& prev = warm[models.size()].alpha;
      bool fits = prev.size() == idx.size();
      for (std::size_t i = 0; fits && i < prev.size(); ++i) fits = prev[i] <= upper[i];
      if (fits) start = prev;
    }
    auto dual = smo_solve(
        idx.size(), [&](std::size_t i, std::size_t j) { return kernel(idx[i], idx[j]); }, ys, upper,
        tol, iteration_cap(max_iter_per_sample, idx.size()), start);
    GramPairModel m;
    m.bias = dual.bias;
    m.converged = dual.converged;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (dual.alpha[i] <= 0.0) continue;
      m.support.push_back(idx[i]);
      m.coef.push_back(dual.alpha[i] * ys[i]);
    }
    m.alpha = std::move(dual.alpha);
    models.push_back(std::move(m));
  }
  return models;
}

template <typename KernelFn>
int predict_ovo_gram(std::span<const GramPairModel> models, std::size_t n_classes,
                     KernelFn&& kernel, std::size_t row) {
  static thread_local std::vector<double> dec;
  const auto pairs = class_pairs(n_classes);
  dec.assign(models.size(), 0.0);
  for (std::size_t p = 0; p < models.size(); ++p) {
    double f = models[p].bias;
    for (std::size_t s = 0; s < models[p].support.size(); ++s)
      f += models[p].coef[s] * kernel(row, models[p].support[s]);
    dec[p] = f;
  }
  return static_cast<int>(ovo_vote(n_classes, pairs, dec));
}

inline constexpr int kModelFormatVersion = 1;

inline json model_to_json(const TrainedSvm& m) {
  json pairs = json::array();
  for (std::size_t p = 0; p < m.pairs.size(); ++p) {
    const auto& b = m.models[p];
    std::vector<std::vector<double>> svs;
    for (std::size_t s = 0; s < b.support_vectors.rows; ++s) {
      const auto r = b.support_vectors.row(s);
      svs.emplace_back(r.begin(), r.end());
    }
    pairs.push_back(json{{"positive", m.classes[m.pairs[p].first]},
                         {"negative", m.classes[m.pairs[p].second]},
                         {"bias", b.bias},
                         {"dual_coef", b.dual_coef},
                         {"support_vectors", svs},
                         {"converged", b.converged},
                         {"iterations", b.iterations}});
  }
  return json{{"format", "smartdx-svm"},
              {"version", kModelFormatVersion},
              {"classes", m.classes},
              {"C", m.config.C},
              {"kernel", m.config.kernel.kind == KernelKind::rbf ? "rbf" : "linear"},
              {"gamma_spec", m.config.kernel.gamma.to_string()},
              {"gamma", m.gamma},
              {"class_weight", m.config.class_weight == ClassWeightMode::balanced ? "balanced" : "none"},
              {"tolerance", m.config.tolerance},
              {"pairs", pairs}};
}

inline TrainedSvm model_from_json(const json& j) {
  try {
    if (j.at("format") != "smartdx-svm") throw SchemaError("model: unknown format");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw SchemaError("model: unsupported version " + j.at("version").dump());
    TrainedSvm m;
    m.classes = j.at("classes").get<std::vector<int>>();
    m.config.C = j.at("C").get<double>();
    m.config.kernel.kind = j.at("kernel") == "linear" ? KernelKind::linear : KernelKind::rbf;
    const auto gs = j.at("gamma_spec").get<std::string>();
    m.config.kernel.gamma = gs == "scale" ? Gamma::scaled() : Gamma::of(std::stod(gs));
    m.config.class_weight =
        j.at("class_weight") == "none" ? ClassWeightMode::none : ClassWeightMode::balanced;
    m.config.tolerance = j.at("tolerance").get<double>();
    m.gamma = j.at("gamma").get<double>();
    m.pairs = class_pairs(m.classes.size());
    const auto& pairs = j.at("pairs");
    if (pairs.size() != m.pairs.size()) throw SchemaError("model: pair count mismatch");
    for (const auto& pj : pairs) {
      BinarySvm b;
      b.kernel = {m.config.kernel.kind, m.gamma};
      b.bias = pj.at("bias").get<double>();
      b.dual_coef = pj.at("dual_coef").get<std::vector<double>>();
      b.converged = pj.at("converged").get<bool>();
      b.iterations = pj.at("iterations").get<long>();
      const auto svs = pj.at("support_vectors").get<std::vector<std::vector<double>>>();
      b.support_vectors.rows = svs.size();
      b.support_vectors.cols = svs.empty() ? 0 : svs.front().size();
      for (const auto& r : svs) b.support_vectors.data.insert(b.support_vectors.data.end(), r.begin(), r.end());
      m.models.push_back(std::move(b));
    }
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model: ") + e.what());
  }
}

}  // namespace smartdx
