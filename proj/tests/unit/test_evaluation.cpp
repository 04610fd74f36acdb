#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "smartdx/evaluation.hpp"
#include "smartdx/rng.hpp"
#include "smartdx/scaler.hpp"

using namespace smartdx;

TEST(BalancedAccuracy, HandCase) {
  const std::vector<int> truth{0, 0, 0, 0, 1, 1, 1, 1};
  const std::vector<int> pred{0, 0, 0, 0, 0, 0, 0, 1};
  EXPECT_DOUBLE_EQ(balanced_accuracy(truth, pred), 0.625);
}

TEST(BalancedAccuracy, MatchesMeanOfRecalls) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + rng.below(60);
    const std::size_t k = 2 + rng.below(4);
    std::vector<int> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(rng.below(k));
      pred[i] = static_cast<int>(rng.below(k + 1));
    }
    EXPECT_NEAR(balanced_accuracy(truth, pred), oracle::mean_of_recalls(truth, pred), 1e-12);
  }
  EXPECT_THROW(balanced_accuracy(std::vector<int>{}, std::vector<int>{}), NumericError);
  EXPECT_THROW(balanced_accuracy(std::vector<int>{1}, std::vector<int>{1, 2}), NumericError);
}

TEST(Folds, StratifiedAndDeterministic) {
  std::vector<int> y;
  for (int i = 0; i < 47; ++i) y.push_back(i < 30 ? 0 : i < 40 ? 1 : 2);
  const auto a = stratified_folds(y, 5, 99);
  EXPECT_EQ(a, stratified_folds(y, 5, 99));
  EXPECT_NE(a, stratified_folds(y, 5, 100));
  std::set<std::size_t> seen;
  std::size_t lo = y.size(), hi = 0;
  for (const auto& f : a) {
    lo = std::min(lo, f.size());
    hi = std::max(hi, f.size());
    std::array<int, 3> per{};
    for (std::size_t i : f) {
      EXPECT_TRUE(seen.insert(i).second);
      ++per[static_cast<std::size_t>(y[i])];
    }
    EXPECT_EQ(per[0], 6);
    EXPECT_GE(per[1], 2);
    EXPECT_GE(per[2], 1);
    EXPECT_TRUE(std::is_sorted(f.begin(), f.end()));
  }
  EXPECT_EQ(seen.size(), y.size());
  EXPECT_LE(hi - lo, 1u);
  EXPECT_THROW(stratified_folds(std::vector<int>{0, 0, 0, 1, 1}, 3, 1), InfeasibleSplitError);
}

TEST(Targets, TaskEncodings) {
  const std::vector<DiagnosisLabel> l{DiagnosisLabel::PD, DiagnosisLabel::DD, DiagnosisLabel::HC,
                                      DiagnosisLabel::PD};
  const auto hc = task_targets(ClassificationTask::pd_vs_hc, l);
  EXPECT_EQ(hc.rows, (std::vector<std::size_t>{0, 2, 3}));
  EXPECT_EQ(hc.y, (std::vector<int>{0, 1, 0}));
  const auto pooled = task_targets(ClassificationTask::pddd_vs_hc, l);
  EXPECT_EQ(pooled.y, (std::vector<int>{0, 0, 1, 0}));
  const auto dd = task_targets(ClassificationTask::pd_vs_dd, l);
  EXPECT_EQ(dd.rows, (std::vector<std::size_t>{0, 1, 3}));
  const auto three = task_targets(ClassificationTask::pd_vs_dd_vs_hc, l);
  EXPECT_EQ(three.y, (std::vector<int>{0, 1, 2, 0}));
  EXPECT_EQ(parse_task("pd-vs-dd-vs-hc"), ClassificationTask::pd_vs_dd_vs_hc);
  EXPECT_THROW(parse_task("nope"), Error);
}

TEST(Aggregate, PopulationSd) {
  std::vector<FoldResult> f(4);
  const double s[4] = {0.5, 0.7, 0.9, 0.7};
  for (int i = 0; i < 4; ++i) {
    f[i].repeat = i / 2;
    f[i].fold = i % 2;
    f[i].balanced_accuracy = s[i];
  }
  const auto [mean, sd] = aggregate(f);
  EXPECT_NEAR(mean, 0.7, 1e-15);
  EXPECT_NEAR(sd, std::sqrt(0.02), 1e-15);
}

TEST(Scaler, FitsOnGivenRowsOnly) {
  auto m = fixture::one_informative(6, 1, 0, 0.0, 1, 2);
  m.at(5, 0) = 1000.0;
  for (std::size_t r = 0; r < 6; ++r) m.at(r, 1) = 3.0;
  const std::vector<std::size_t> rows{0, 1, 2, 3};
  const auto p = fit_scaler(m, rows);
  double mean = 0.0;
  for (std::size_t r : rows) mean += m.at(r, 0);
  EXPECT_NEAR(p.mean[0], mean / 4, 1e-12);
  EXPECT_TRUE(p.degenerate[1]);
  const auto out = apply_scaler(p, m, rows);
  EXPECT_EQ(out.rows(), 4u);
  EXPECT_DOUBLE_EQ(out.at(0, 1), 0.0);
  EXPECT_THROW(fit_scaler(m, std::vector<std::size_t>{}), NumericError);
}

TEST(Cv, SeparableFixtureScoresHigh) {
  const auto m = fixture::one_informative(60, 3, 2, 1.5, 5);
  GridSpec grid;
  grid.C = {1.0, 10.0};
  grid.gamma = {Gamma::scaled()};
  CvPlan plan;
  const auto rep = run_cv(m, ClassificationTask::pd_vs_hc, plan, grid);
  EXPECT_EQ(rep.folds.size(), 15u);
  EXPECT_GT(rep.mean, 0.85);
  EXPECT_TRUE(rep.all_converged());
  EXPECT_THROW(run_cv(m, ClassificationTask::pd_vs_dd, plan, grid), InfeasibleSplitError);
}

TEST(Cv, ResultsDoNotDependOnJobsOrScopeDefaults) {
  const auto m = fixture::one_informative(45, 3, 1, 0.8, 8);
  GridSpec grid;
  grid.C = {0.1, 1.0, 10.0};
  CvPlan plan;
  plan.master_seed = 7;
  EvalOptions one, four;
  four.jobs = 4;
  const auto a = run_cv(m, ClassificationTask::pd_vs_hc, plan, grid, one);
  const auto b = run_cv(m, ClassificationTask::pd_vs_hc, plan, grid, four);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EvalOptions outer;
  outer.grid_scope = GridScope::outer;
  outer.scaler_scope = ScalerScope::full;
  const auto c = run_cv(m, ClassificationTask::pd_vs_hc, plan, grid, outer);
  EXPECT_EQ(c.folds.size(), 15u);
  // every fold picks the same cell when the grid is searched once
  for (const auto& f : c.folds) EXPECT_EQ(f.C, c.folds.front().C);
}

TEST(Cv, EngineSubsetMatchesColumnSelection) {
  const auto m = fixture::one_informative(40, 3, 3, 1.0, 12);
  GridSpec grid;
  grid.C = {1.0, 10.0};
  CvPlan plan;
  CvEngine engine(m, ClassificationTask::pd_vs_hc, plan, grid, {}, true);
  const auto sub = engine.evaluate({1, 3});
  const auto direct = run_cv(m.select_groups({1, 3}), ClassificationTask::pd_vs_hc, plan, grid);
  EXPECT_NEAR(sub.mean, direct.mean, 1e-12);
  EXPECT_EQ(sub.n_features, 8u);
  EXPECT_THROW(engine.evaluate({9}), Error);
}

TEST(Cv, JsonRoundTrip) {
  const auto m = fixture::one_informative(30, 2, 1, 1.0, 4);
  GridSpec grid;
  grid.C = {1.0};
  const auto rep = run_cv(m, ClassificationTask::pd_vs_hc, CvPlan{}, grid);
  const auto back = cv_report_from_json(to_json(rep));
  EXPECT_EQ(to_json(back).dump(), to_json(rep).dump());
}
