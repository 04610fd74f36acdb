#pragma once

// Repeated stratified k-fold cross-validation with nested grid search and
// balanced-accuracy scoring.
//
// The engine works on squared-distance (or dot-product) blocks computed per
// feature group and per scaler context, then sums the blocks of the active
// groups in ascending group order. A run on a column subset and a run on the
// full matrix restricted to the same groups therefore see bit-identical
// kernels, and the greedy selection study can reuse blocks across candidates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smartdx/error.hpp"
#include "smartdx/features.hpp"
#include "smartdx/parallel.hpp"
#include "smartdx/rng.hpp"
#include "smartdx/svm.hpp"

namespace smartdx {

enum class ClassificationTask { pd_vs_hc, pddd_vs_hc, pd_vs_dd, pd_vs_dd_vs_hc };

inline constexpr ClassificationTask kAllTasks[] = {
    ClassificationTask::pd_vs_hc, ClassificationTask::pddd_vs_hc, ClassificationTask::pd_vs_dd,
    ClassificationTask::pd_vs_dd_vs_hc};

inline std::string_view to_string(ClassificationTask t) {
  switch (t) {
    case ClassificationTask::pd_vs_hc: return "pd-vs-hc";
    case ClassificationTask::pddd_vs_hc: return "pddd-vs-hc";
    case ClassificationTask::pd_vs_dd: return "pd-vs-dd";
    case ClassificationTask::pd_vs_dd_vs_hc: return "pd-vs-dd-vs-hc";
  }
  return "?";
}

inline ClassificationTask parse_task(std::string_view s) {
  for (auto t : kAllTasks)
    if (to_string(t) == s) return t;
  throw SchemaError("unknown classification task '" + std::string(s) + "'");
}

/// Rows taking part in a task and their class indices (0-based, in class
/// order). PD and DD are merged into one class for pddd-vs-hc.
struct TaskTargets {
  std::vector<std::size_t> rows;
  std::vector<int> y;
  std::vector<std::string> class_names;
};

inline TaskTargets task_targets(ClassificationTask task, std::span<const DiagnosisLabel> labels) {
  TaskTargets t;
  auto code = [&](DiagnosisLabel l) -> int {
    switch (task) {
      case ClassificationTask::pd_vs_hc:
        return l == DiagnosisLabel::PD ? 0 : l == DiagnosisLabel::HC ? 1 : -1;
      case ClassificationTask::pddd_vs_hc: return l == DiagnosisLabel::HC ? 1 : 0;
      case ClassificationTask::pd_vs_dd:
        return l == DiagnosisLabel::PD ? 0 : l == DiagnosisLabel::DD ? 1 : -1;
      case ClassificationTask::pd_vs_dd_vs_hc: return static_cast<int>(l);
    }
    return -1;
  };
  switch (task) {
    case ClassificationTask::pd_vs_hc: t.class_names = {"PD", "HC"}; break;
    case ClassificationTask::pddd_vs_hc: t.class_names = {"PD+DD", "HC"}; break;
    case ClassificationTask::pd_vs_dd: t.class_names = {"PD", "DD"}; break;
    case ClassificationTask::pd_vs_dd_vs_hc: t.class_names = {"PD", "DD", "HC"}; break;
  }
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const int c = code(labels[r]);
    if (c < 0) continue;
    t.rows.push_back(r);
    t.y.push_back(c);
  }
  return t;
}

struct CvPlan {
  int n_folds = 5;
  int n_repeats = 3;
  std::uint64_t master_seed = 42;

  std::uint64_t repeat_seed(int r) const {
    return derive_seed(master_seed, "cv-repeat", {static_cast<std::uint64_t>(r)});
  }
  std::uint64_t inner_seed(int r, int f) const {
    return derive_seed(master_seed, "cv-inner",
                       {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(f)});
  }
};

struct GridCell {
  double C = 1.0;
  Gamma gamma = Gamma::scaled();
};

/// Cells enumerate C-major, gamma-minor; earlier cells win ties.
struct GridSpec {
  std::vector<double> C{0.1, 1.0, 10.0, 100.0, 1000.0};
  std::vector<Gamma> gamma{Gamma::of(1e-6), Gamma::of(1e-5), Gamma::of(1e-4), Gamma::scaled(),
                           Gamma::of(1e-3)};
  KernelKind kernel = KernelKind::rbf;

  std::vector<GridCell> cells() const {
    std::vector<GridCell> out;
    for (double c : C) {
      if (kernel == KernelKind::linear) {
        out.push_back({c, Gamma::of(1.0)});
        continue;
      }
      for (const auto& g : gamma) out.push_back({c, g});
    }
    return out;
  }
};

enum class ScalerScope { fold, full };
enum class GridScope { nested, outer };

struct EvalOptions {
  ScalerScope scaler_scope = ScalerScope::fold;
  GridScope grid_scope = GridScope::nested;
  int inner_folds = 3;
  double tolerance = 1e-3;
  double max_iter_per_sample = 100.0;
  ClassWeightMode class_weight = ClassWeightMode::balanced;
  unsigned jobs = 1;
};

/// Stratified k-fold: each class's members are shuffled by a generator
/// seeded with `seed` and dealt round-robin, the deal continuing across
/// classes so fold sizes stay within one of each other. Folds are sorted.
inline std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, int k,
                                                              std::uint64_t seed) {
  if (k < 2) throw InfeasibleSplitError("stratified_folds: need at least 2 folds");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  for (const auto& [cls, idx] : members) {
    if (idx.size() < static_cast<std::size_t>(k))
      throw InfeasibleSplitError("stratified_folds: class " + std::to_string(cls) + " has " +
                                 std::to_string(idx.size()) + " members, fewer than " +
                                 std::to_string(k) + " folds");
  }
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  std::size_t deal = 0;
  for (auto& [cls, idx] : members) {
    rng.shuffle(std::span<std::size_t>(idx));
    for (std::size_t i : idx) folds[deal++ % folds.size()].push_back(i);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

/// Unweighted mean of per-class recall over the classes present in y_true.
template <typename Label>
double balanced_accuracy(std::span<const Label> y_true, std::span<const Label> y_pred) {
  if (y_true.size() != y_pred.size()) throw NumericError("balanced_accuracy: length mismatch");
  if (y_true.empty()) throw NumericError("balanced_accuracy: empty input");
  std::map<Label, std::pair<std::size_t, std::size_t>> tally;  // (hits, total)
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    auto& t = tally[y_true[i]];
    ++t.second;
    if (y_pred[i] == y_true[i]) ++t.first;
  }
  double sum = 0.0;
  for (const auto& [label, t] : tally)
    sum += static_cast<double>(t.first) / static_cast<double>(t.second);
  return sum / static_cast<double>(tally.size());
}

template <typename Label>
double balanced_accuracy(const std::vector<Label>& y_true, const std::vector<Label>& y_pred) {
  return balanced_accuracy(std::span<const Label>(y_true), std::span<const Label>(y_pred));
}

struct FoldResult {
  int repeat = 0;
  int fold = 0;
  double balanced_accuracy = 0.0;
  double C = 0.0;
  Gamma gamma{};
  double gamma_value = 0.0;
  bool converged = true;
  int grid_nonconverged = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

struct CvReport {
  ClassificationTask task = ClassificationTask::pd_vs_hc;
  std::vector<std::string> class_names;
  CvPlan plan{};
  GridSpec grid{};
  EvalOptions options{};
  std::vector<int> groups;
  std::size_t n_features = 0;
  std::size_t n_samples = 0;
  std::vector<FoldResult> folds;
  double mean = 0.0;
  double sd = 0.0;

  bool all_converged() const {
    return std::all_of(folds.begin(), folds.end(), [](const auto& f) { return f.converged; });
  }
};

/// Mean and population SD of fold scores, reduced in (repeat, fold) order.
inline std::pair<double, double> aggregate(std::vector<FoldResult> folds) {
  if (folds.empty()) return {0.0, 0.0};
  std::sort(folds.begin(), folds.end(), [](const auto& a, const auto& b) {
    return std::pair(a.repeat, a.fold) < std::pair(b.repeat, b.fold);
  });
  double sum = 0.0;
  for (const auto& f : folds) sum += f.balanced_accuracy;
  const double n = static_cast<double>(folds.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (const auto& f : folds) ss += (f.balanced_accuracy - mean) * (f.balanced_accuracy - mean);
  return {mean, std::sqrt(ss / n)};
}

inline json gamma_to_json(const Gamma& g) {
  return g.scale ? json("scale") : json(g.value);
}

inline Gamma gamma_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "scale") throw SchemaError("gamma: unknown symbolic value");
    return Gamma::scaled();
  }
  return Gamma::of(j.get<double>());
}

inline json to_json(const CvReport& r) {
  json per_fold = json::array(), choices = json::array();
  for (const auto& f : r.folds) {
    per_fold.push_back(json{{"repeat", f.repeat},
                            {"fold", f.fold},
                            {"balanced_accuracy", f.balanced_accuracy},
                            {"C", f.C},
                            {"gamma", gamma_to_json(f.gamma)},
                            {"gamma_value", f.gamma_value},
                            {"converged", f.converged},
                            {"grid_nonconverged", f.grid_nonconverged},
                            {"n_train", f.n_train},
                            {"n_test", f.n_test}});
    choices.push_back(json{{"repeat", f.repeat}, {"fold", f.fold}, {"C", f.C},
                           {"gamma", gamma_to_json(f.gamma)}});
  }
  json gammas = json::array();
  for (const auto& g : r.grid.gamma) gammas.push_back(gamma_to_json(g));
  return json{
      {"task", to_string(r.task)},
      {"classes", r.class_names},
      {"plan",
       {{"n_folds", r.plan.n_folds}, {"n_repeats", r.plan.n_repeats}, {"master_seed", r.plan.master_seed}}},
      {"grid",
       {{"C", r.grid.C}, {"gamma", gammas},
        {"kernel", r.grid.kernel == KernelKind::rbf ? "rbf" : "linear"}}},
      {"options",
       {{"scaler_scope", r.options.scaler_scope == ScalerScope::fold ? "fold" : "full"},
        {"grid_scope", r.options.grid_scope == GridScope::nested ? "nested" : "outer"},
        {"inner_folds", r.options.inner_folds},
        {"tolerance", r.options.tolerance},
        {"class_weight", r.options.class_weight == ClassWeightMode::balanced ? "balanced" : "none"}}},
      {"groups", r.groups},
      {"n_features", r.n_features},
      {"n_samples", r.n_samples},
      {"per_fold", per_fold},
      {"grid_choices", choices},
      {"all_converged", r.all_converged()},
      {"mean", r.mean},
      {"sd", r.sd}};
}

inline CvReport cv_report_from_json(const json& j) {
  try {
    CvReport r;
    r.task = parse_task(j.at("task").get<std::string>());
    r.class_names = j.at("classes").get<std::vector<std::string>>();
    r.plan.n_folds = j.at("plan").at("n_folds");
    r.plan.n_repeats = j.at("plan").at("n_repeats");
    r.plan.master_seed = j.at("plan").at("master_seed");
    r.grid.C = j.at("grid").at("C").get<std::vector<double>>();
    r.grid.gamma.clear();
    for (const auto& g : j.at("grid").at("gamma")) r.grid.gamma.push_back(gamma_from_json(g));
    r.grid.kernel = j.at("grid").at("kernel") == "linear" ? KernelKind::linear : KernelKind::rbf;
    const auto& o = j.at("options");
    r.options.scaler_scope = o.at("scaler_scope") == "full" ? ScalerScope::full : ScalerScope::fold;
    r.options.grid_scope = o.at("grid_scope") == "outer" ? GridScope::outer : GridScope::nested;
    r.options.inner_folds = o.at("inner_folds");
    r.options.tolerance = o.at("tolerance");
    r.options.class_weight =
        o.at("class_weight") == "none" ? ClassWeightMode::none : ClassWeightMode::balanced;
    r.groups = j.at("groups").get<std::vector<int>>();
    r.n_features = j.at("n_features");
    r.n_samples = j.at("n_samples");
    for (const auto& f : j.at("per_fold")) {
      FoldResult fr;
      fr.repeat = f.at("repeat");
      fr.fold = f.at("fold");
      fr.balanced_accuracy = f.at("balanced_accuracy");
      fr.C = f.at("C");
      fr.gamma = gamma_from_json(f.at("gamma"));
      fr.gamma_value = f.at("gamma_value");
      fr.converged = f.at("converged");
      fr.grid_nonconverged = f.at("grid_nonconverged");
      fr.n_train = f.at("n_train");
      fr.n_test = f.at("n_test");
      r.folds.push_back(fr);
    }
    r.mean = j.at("mean");
    r.sd = j.at("sd");
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("cv report: ") + e.what());
  }
}

inline void write_cv_csv(std::ostream& os, const CvReport& r) {
  os << "task,repeat,fold,balanced_accuracy,C,gamma,gamma_value,converged\n";
  for (const auto& f : r.folds) {
    os << to_string(r.task) << ',' << f.repeat << ',' << f.fold << ','
       << format_double(f.balanced_accuracy) << ',' << format_double(f.C) << ','
       << f.gamma.to_string() << ',' << format_double(f.gamma_value) << ','
       << (f.converged ? "true" : "false") << '\n';
  }
}

namespace detail {

/// Per-group pairwise blocks over one context's rows, computed in a scaler
/// fitted on `scaler_rows`.
struct BlockSet {
  std::vector<std::vector<double>> per_group;  ///< n x n each; empty if not built
};

struct Context {
  std::vector<std::size_t> rows;   ///< task-local row indices
  std::vector<std::size_t> train;  ///< positions into rows
  std::vector<std::size_t> test;   ///< positions into rows
  std::vector<int> y;              ///< class index per position
  std::vector<std::size_t> scaler_rows;  ///< task-local rows the scaler is fitted on
  std::vector<std::vector<double>> blocks;  ///< per group
  std::vector<double> var_sum;              ///< per group, over train positions after scaling
  std::vector<bool> built;
};

}  // namespace detail

struct GridSearchResult {
  std::size_t best = 0;
  GridCell cell{};
  std::vector<double> cell_scores;
  int nonconverged = 0;
};

/// Cross-validation engine bound to one matrix, task, plan, and grid.
/// `retain_blocks` keeps per-group blocks across `evaluate` calls.
class CvEngine {
 public:
  CvEngine(const FeatureMatrix& m, ClassificationTask task, CvPlan plan, GridSpec grid,
           EvalOptions opt = {}, bool retain_blocks = false)
      : m_(m), task_(task), plan_(plan), grid_(std::move(grid)), opt_(opt), retain_(retain_blocks) {
    targets_ = task_targets(task_, m_.labels);
    if (targets_.rows.empty()) throw InfeasibleSplitError("cv: no rows for task " + std::string(to_string(task_)));
    if (targets_.class_names.size() < 2 ||
        std::set<int>(targets_.y.begin(), targets_.y.end()).size() != targets_.class_names.size())
      throw InfeasibleSplitError("cv: task " + std::string(to_string(task_)) +
                                 " needs every class present");
    groups_ = m_.groups();
    for (int g : groups_) group_cols_.push_back(m_.columns_of_group(g));
    if (grid_.cells().empty()) throw Error("cv: empty hyperparameter grid");
    build_contexts();
  }

  /// The engine keeps a reference to the matrix.
  CvEngine(FeatureMatrix&&, ClassificationTask, CvPlan, GridSpec, EvalOptions = {}, bool = false) = delete;

  ClassificationTask task() const { return task_; }
  const TaskTargets& targets() const { return targets_; }
  const std::vector<int>& groups() const { return groups_; }

  CvReport evaluate_all() { return evaluate(groups_); }

  /// Runs the full plan using only the columns of `active` groups.
  CvReport evaluate(const std::vector<int>& active) {
    std::vector<std::size_t> gi;
    std::size_t n_features = 0;
    for (int g : std::set<int>(active.begin(), active.end())) {
      const auto it = std::lower_bound(groups_.begin(), groups_.end(), g);
      if (it == groups_.end() || *it != g)
        throw Error("cv: feature group " + std::to_string(g) + " not in matrix");
      gi.push_back(static_cast<std::size_t>(it - groups_.begin()));
      n_features += group_cols_[gi.back()].size();
    }
    if (gi.empty()) throw Error("cv: no active feature groups");

    CvReport rep;
    rep.task = task_;
    rep.class_names = targets_.class_names;
    rep.plan = plan_;
    rep.grid = grid_;
    rep.options = opt_;
    for (std::size_t i : gi) rep.groups.push_back(groups_[i]);
    rep.n_features = n_features;
    rep.n_samples = targets_.rows.size();
    rep.folds.resize(units_.size());

    const auto cells = grid_.cells();
    if (opt_.grid_scope == GridScope::nested) {
      parallel_for(units_.size(), opt_.jobs, [&](std::size_t u) {
        auto& unit = units_[u];
        const auto gs = search(unit.inner, gi, cells);
        auto& f = rep.folds[u];
        f = score_cell(unit.outer, gi, gs.cell);
        f.grid_nonconverged = gs.nonconverged;
        f.repeat = unit.repeat;
        f.fold = unit.fold;
        release(unit);
      });
    } else {
      std::vector<std::vector<FoldResult>> per_cell(units_.size());
      parallel_for(units_.size(), opt_.jobs, [&](std::size_t u) {
        auto& unit = units_[u];
        for (const auto& cell : cells) per_cell[u].push_back(score_cell(unit.outer, gi, cell));
        release(unit);
      });
      std::size_t best = 0;
      double best_score = -1.0;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        double s = 0.0;
        for (std::size_t u = 0; u < units_.size(); ++u) s += per_cell[u][c].balanced_accuracy;
        s /= static_cast<double>(units_.size());
        if (s > best_score) {
          best_score = s;
          best = c;
        }
      }
      for (std::size_t u = 0; u < units_.size(); ++u) {
        rep.folds[u] = per_cell[u][best];
        rep.folds[u].repeat = units_[u].repeat;
        rep.folds[u].fold = units_[u].fold;
      }
    }
    std::tie(rep.mean, rep.sd) = aggregate(rep.folds);
    return rep;
  }

  /// Inner-CV grid search over all task rows (no outer split).
  GridSearchResult grid_search_rows(std::uint64_t seed) {
    detail::Context whole;
    for (std::size_t i = 0; i < targets_.rows.size(); ++i) {
      whole.rows.push_back(i);
      whole.train.push_back(i);
      whole.y.push_back(targets_.y[i]);
    }
    auto inner = make_inner(whole, seed);
    std::vector<std::size_t> gi(groups_.size());
    std::iota(gi.begin(), gi.end(), std::size_t{0});
    return search(inner, gi, grid_.cells());
  }

 private:
  struct Unit {
    int repeat = 0;
    int fold = 0;
    detail::Context outer;
    std::vector<detail::Context> inner;
  };

  std::vector<detail::Context> make_inner(const detail::Context& outer, std::uint64_t seed) const {
    std::vector<int> y_train;
    for (std::size_t p : outer.train) y_train.push_back(outer.y[p]);
    const auto folds = stratified_folds(y_train, opt_.inner_folds, seed);
    std::vector<detail::Context> inner;
    for (const auto& fold : folds) {
      detail::Context c;
      for (std::size_t p : outer.train) c.rows.push_back(outer.rows[p]);
      c.y = y_train;
      std::vector<bool> held(c.rows.size(), false);
      for (std::size_t k : fold) held[k] = true;
      for (std::size_t k = 0; k < c.rows.size(); ++k) (held[k] ? c.test : c.train).push_back(k);
      init_scaler_rows(c);
      inner.push_back(std::move(c));
    }
    return inner;
  }

  void init_scaler_rows(detail::Context& c) const {
    c.scaler_rows.clear();
    if (opt_.scaler_scope == ScalerScope::full) {
      for (std::size_t i = 0; i < targets_.rows.size(); ++i) c.scaler_rows.push_back(i);
    } else {
      for (std::size_t p : c.train) c.scaler_rows.push_back(c.rows[p]);
    }
    c.blocks.assign(groups_.size(), {});
    c.var_sum.assign(groups_.size(), 0.0);
    c.built.assign(groups_.size(), false);
  }

  void build_contexts() {
    const auto& y = targets_.y;
    for (int r = 0; r < plan_.n_repeats; ++r) {
      const auto folds = stratified_folds(y, plan_.n_folds, plan_.repeat_seed(r));
      for (int f = 0; f < plan_.n_folds; ++f) {
        Unit u;
        u.repeat = r;
        u.fold = f;
        std::vector<bool> held(y.size(), false);
        for (std::size_t i : folds[static_cast<std::size_t>(f)]) held[i] = true;
        for (std::size_t i = 0; i < y.size(); ++i) {
          u.outer.rows.push_back(i);
          u.outer.y.push_back(y[i]);
          (held[i] ? u.outer.test : u.outer.train).push_back(i);
        }
        init_scaler_rows(u.outer);
        if (opt_.grid_scope == GridScope::nested) u.inner = make_inner(u.outer, plan_.inner_seed(r, f));
        units_.push_back(std::move(u));
      }
    }
  }

  void release(Unit& u) const {
    if (retain_) return;
    auto drop = [&](detail::Context& c) {
      for (std::size_t g = 0; g < groups_.size(); ++g) {
        c.blocks[g] = {};
        c.built[g] = false;
      }
    };
    drop(u.outer);
    for (auto& c : u.inner) drop(c);
  }

  void ensure_block(detail::Context& c, std::size_t g) const {
    if (c.built[g]) return;
    const auto& cols = group_cols_[g];
    const std::size_t n = c.rows.size(), m = cols.size();
    const double ns = static_cast<double>(c.scaler_rows.size());
    std::vector<double> mean(m, 0.0), sd(m, 0.0);
    for (std::size_t r : c.scaler_rows) {
      const auto x = m_.row(targets_.rows[r]);
      for (std::size_t j = 0; j < m; ++j) mean[j] += x[cols[j]];
    }
    for (double& v : mean) v /= ns;
    for (std::size_t r : c.scaler_rows) {
      const auto x = m_.row(targets_.rows[r]);
      for (std::size_t j = 0; j < m; ++j) {
        const double d = x[cols[j]] - mean[j];
        sd[j] += d * d;
      }
    }
    for (double& v : sd) v = std::sqrt(v / ns);

    std::vector<double> z(n * m);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = m_.row(targets_.rows[c.rows[i]]);
      for (std::size_t j = 0; j < m; ++j) {
        const double centered = x[cols[j]] - mean[j];
        z[i * m + j] = sd[j] > 0.0 ? centered / sd[j] : centered;
      }
    }
    double var_sum = 0.0;
    const double nt = static_cast<double>(c.train.size());
    for (std::size_t j = 0; j < m; ++j) {
      double mu = 0.0;
      for (std::size_t p : c.train) mu += z[p * m + j];
      mu /= nt;
      double ss = 0.0;
      for (std::size_t p : c.train) ss += (z[p * m + j] - mu) * (z[p * m + j] - mu);
      var_sum += ss / nt;
    }

    std::vector<double> block(n * n, 0.0);
    const bool linear = grid_.kernel == KernelKind::linear;
    for (std::size_t i = 0; i < n; ++i) {
      const double* zi = &z[i * m];
      for (std::size_t k = linear ? i : i + 1; k < n; ++k) {
        const double* zk = &z[k * m];
        double s = 0.0;
        if (linear) {
          for (std::size_t j = 0; j < m; ++j) s += zi[j] * zk[j];
        } else {
          for (std::size_t j = 0; j < m; ++j) {
            const double d = zi[j] - zk[j];
            s += d * d;
          }
        }
        block[i * n + k] = block[k * n + i] = s;
      }
    }
    c.blocks[g] = std::move(block);
    c.var_sum[g] = var_sum;
    c.built[g] = true;
  }

  /// Sum of active blocks (ascending group order) and of their variances.
  std::pair<std::vector<double>, double> combined(detail::Context& c,
                                                  std::span<const std::size_t> gi) const {
    const std::size_t n = c.rows.size();
    std::vector<double> total(n * n, 0.0);
    double var = 0.0;
    for (std::size_t g : gi) {
      ensure_block(c, g);
      const auto& b = c.blocks[g];
      for (std::size_t k = 0; k < total.size(); ++k) total[k] += b[k];
      var += c.var_sum[g];
    }
    return {std::move(total), var};
  }

  double resolve(const Gamma& g, double var_sum) const {
    if (grid_.kernel == KernelKind::linear) return 0.0;
    if (!g.scale) return g.value;
    if (!(var_sum > 0.0)) throw NumericError("cv: training rows have zero variance (gamma=scale)");
    return 1.0 / var_sum;
  }

  struct CellOutcome {
    double score = 0.0;
    bool converged = true;
  };

  std::vector<double> kernel_matrix(const std::vector<double>& base, double gamma) const {
    if (grid_.kernel == KernelKind::linear) return base;
    std::vector<double> kern(base.size());
    for (std::size_t k = 0; k < base.size(); ++k) kern[k] = std::exp(-gamma * base[k]);
    return kern;
  }

  CellOutcome fit_and_score(const detail::Context& c, const std::vector<double>& kern, double C,
                            std::vector<GramPairModel>* models = nullptr) const {
    const std::size_t n = c.rows.size();
    auto kernel = [&](std::size_t a, std::size_t b) { return kern[a * n + b]; };
    std::vector<int> y_train;
    y_train.reserve(c.train.size());
    for (std::size_t p : c.train) y_train.push_back(c.y[p]);
    const std::size_t k = targets_.class_names.size();
    std::vector<GramPairModel> fitted;
    auto& out_models = models ? *models : fitted;
    out_models = train_ovo_gram(kernel, c.train, y_train, k, C, opt_.class_weight, opt_.tolerance,
                                opt_.max_iter_per_sample, std::span<const GramPairModel>(out_models));
    std::vector<int> truth, pred;
    for (std::size_t p : c.test) {
      truth.push_back(c.y[p]);
      pred.push_back(predict_ovo_gram(std::span<const GramPairModel>(out_models), k, kernel, p));
    }
    CellOutcome out;
    out.score = balanced_accuracy(truth, pred);
    out.converged = std::all_of(out_models.begin(), out_models.end(), [](const auto& m) { return m.converged; });
    return out;
  }

  /// Cells sharing a gamma are fitted in ascending C, each starting from the
  /// previous solution (still feasible because the box only grows).
  GridSearchResult search(std::vector<detail::Context>& inner, std::span<const std::size_t> gi,
                          const std::vector<GridCell>& cells) const {
    std::vector<std::vector<std::size_t>> paths;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
      auto it = std::find_if(paths.begin(), paths.end(),
                             [&](const auto& p) { return cells[p.front()].gamma == cells[ci].gamma; });
      if (it == paths.end()) paths.push_back({ci});
      else it->push_back(ci);
    }
    for (auto& p : paths)
      std::stable_sort(p.begin(), p.end(), [&](std::size_t a, std::size_t b) { return cells[a].C < cells[b].C; });

    GridSearchResult res;
    res.cell_scores.assign(cells.size(), 0.0);
    for (auto& c : inner) {
      const auto [base, var] = combined(c, gi);
      for (const auto& path : paths) {
        const auto kern = kernel_matrix(base, resolve(cells[path.front()].gamma, var));
        std::vector<GramPairModel> models;
        for (std::size_t ci : path) {
          const auto out = fit_and_score(c, kern, cells[ci].C, &models);
          res.cell_scores[ci] += out.score;
          if (!out.converged) ++res.nonconverged;
        }
      }
    }
    for (double& s : res.cell_scores) s /= static_cast<double>(inner.size());
    for (std::size_t ci = 1; ci < cells.size(); ++ci)
      if (res.cell_scores[ci] > res.cell_scores[res.best]) res.best = ci;
    res.cell = cells[res.best];
    return res;
  }

  FoldResult score_cell(detail::Context& c, std::span<const std::size_t> gi, const GridCell& cell) const {
    const auto [base, var] = combined(c, gi);
    FoldResult f;
    f.C = cell.C;
    f.gamma = cell.gamma;
    f.gamma_value = resolve(cell.gamma, var);
    const auto out = fit_and_score(c, kernel_matrix(base, f.gamma_value), cell.C);
    f.balanced_accuracy = out.score;
    f.converged = out.converged;
    f.n_train = c.train.size();
    f.n_test = c.test.size();
    return f;
  }

  const FeatureMatrix& m_;
  ClassificationTask task_;
  CvPlan plan_;
  GridSpec grid_;
  EvalOptions opt_;
  bool retain_;
  TaskTargets targets_;
  std::vector<int> groups_;
  std::vector<std::vector<std::size_t>> group_cols_;
  std::vector<Unit> units_;
};

/// Repeated stratified CV of one classification task on all matrix columns.
inline CvReport run_cv(const FeatureMatrix& m, ClassificationTask task, const CvPlan& plan,
                       const GridSpec& grid, const EvalOptions& opt = {}) {
  return CvEngine(m, task, plan, grid, opt, false).evaluate_all();
}

/// Inner stratified CV over the given rows (all task rows of `m`), scaler
/// refit per inner fold. Returns the best cell, earliest on ties.
inline GridSearchResult grid_search(const FeatureMatrix& m, ClassificationTask task,
                                    const GridSpec& grid, std::uint64_t inner_seed,
                                    const EvalOptions& opt = {}) {
  EvalOptions o = opt;
  o.grid_scope = GridScope::outer;  // no nested contexts needed for the engine itself
  CvPlan plan;
  plan.n_repeats = 0;
  return CvEngine(m, task, plan, grid, o, false).grid_search_rows(inner_seed);
}

}  // namespace smartdx
