#include <gtest/gtest.h>

#include "oracles.hpp"
#include "smartdx/rng.hpp"
#include "smartdx/svm.hpp"

using namespace smartdx;

namespace {

struct Instance {
  DenseMatrix x;
  std::vector<int> labels;
};

Instance random_instance(std::uint64_t seed, std::size_t n = 8) {
  Rng rng(seed);
  Instance in{DenseMatrix(n, 2), {}};
  for (std::size_t i = 0; i < n; ++i) {
    in.labels.push_back(i % 2 ? 1 : -1);
    in.x.at(i, 0) = rng.normal() + (i % 2 ? 0.7 : -0.7);
    in.x.at(i, 1) = rng.normal();
  }
  return in;
}

std::vector<double> gram(const DenseMatrix& x, const ResolvedKernel& k) {
  std::vector<double> K(x.rows * x.rows);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.rows; ++j) K[i * x.rows + j] = k(x.row(i), x.row(j));
  return K;
}

}  // namespace

TEST(Smo, TwoPointAnalytic) {
  const DenseMatrix x{{0.0}, {1.0}};
  const std::vector<int> y{-1, 1};
  SvmConfig cfg;
  cfg.C = 10.0;
  cfg.kernel.kind = KernelKind::linear;
  const auto fit = fit_binary(x, y, cfg);
  EXPECT_NEAR(fit.dual.alpha[0], 2.0, 1e-6);
  EXPECT_NEAR(fit.dual.alpha[1], 2.0, 1e-6);
  EXPECT_NEAR(fit.model.bias, -1.0, 1e-6);
  for (double t : {-1.0, 0.0, 0.3, 2.0}) {
    const std::vector<double> p{t};
    EXPECT_NEAR(fit.model.decision(p), 2.0 * t - 1.0, 1e-6);
  }
}

TEST(Smo, MatchesBruteForceDualAndKkt) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto in = random_instance(seed);
    SvmConfig cfg;
    cfg.C = seed % 2 ? 1.0 : 5.0;
    cfg.kernel.gamma = Gamma::of(0.5);
    if (seed > 4) cfg.kernel.kind = KernelKind::linear;
    const auto fit = fit_binary(in.x, in.labels, cfg);
    const auto K = gram(in.x, fit.model.kernel);
    const std::vector<double> y(in.labels.begin(), in.labels.end());
    const double smo = oracle::dual(fit.dual.alpha, K, y);
    EXPECT_GE(smo, oracle::dual_grid_max(K, y, fit.upper, 6) - 1e-3) << "seed " << seed;
    EXPECT_LE(oracle::kkt_gap(fit.dual.alpha, K, y, fit.upper), 1e-3);
    double eq = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      EXPECT_GE(fit.dual.alpha[i], 0.0);
      EXPECT_LE(fit.dual.alpha[i], fit.upper[i]);
      eq += fit.dual.alpha[i] * y[i];
    }
    EXPECT_NEAR(eq, 0.0, 1e-9);
  }
}

TEST(Smo, WarmStartReachesSameOptimum) {
  const auto in = random_instance(21, 30);
  SvmConfig cfg;
  cfg.C = 5.0;
  cfg.kernel.gamma = Gamma::of(0.3);
  const auto cold = fit_binary(in.x, in.labels, cfg);
  const auto K = gram(in.x, cold.model.kernel);
  const std::vector<double> y(in.labels.begin(), in.labels.end());
  auto kern = [&](std::size_t i, std::size_t j) { return K[i * y.size() + j]; };
  std::vector<double> start(y.size(), 0.0);
  start[0] = start[1] = 0.5;  // labels alternate, so this is feasible
  const auto warm = smo_solve(y.size(), kern, y, cold.upper, 1e-3, 100000, start);
  EXPECT_TRUE(warm.converged);
  EXPECT_NEAR(dual_objective(warm.alpha, kern, y), dual_objective(cold.dual.alpha, kern, y), 1e-3);
  std::vector<double> bad(y.size(), 100.0);
  EXPECT_THROW(smo_solve(y.size(), kern, y, cold.upper, 1e-3, 100, bad), Error);
}

TEST(Smo, IterationCapIsReportedNotFatal) {
  const auto in = random_instance(5, 40);
  const std::vector<double> y(in.labels.begin(), in.labels.end());
  const std::vector<double> upper(y.size(), 100.0);
  const ResolvedKernel k{KernelKind::rbf, 0.1};
  const auto K = gram(in.x, k);
  const auto sol = smo_solve(
      y.size(), [&](std::size_t i, std::size_t j) { return K[i * y.size() + j]; }, y, upper, 1e-12, 3);
  EXPECT_FALSE(sol.converged);
  EXPECT_EQ(sol.iterations, 3);
  EXPECT_EQ(iteration_cap(100.0, 10), kIterationFloor);
  EXPECT_EQ(iteration_cap(100.0, 200000), 20000000);
}

TEST(Smo, Errors) {
  const DenseMatrix x{{0.0}, {1.0}};
  EXPECT_THROW(fit_binary(x, std::vector<int>{1, 1}, SvmConfig{}), NumericError);
  EXPECT_THROW(fit_binary(x, std::vector<int>{1, 0}, SvmConfig{}), NumericError);
  SvmConfig zero;
  zero.C = 0.0;
  EXPECT_THROW(fit_binary(x, std::vector<int>{-1, 1}, zero), NumericError);
  DenseMatrix same{{1.0}, {1.0}};
  EXPECT_THROW(resolve_gamma(Gamma::scaled(), same), NumericError);
  EXPECT_THROW(resolve_gamma(Gamma::of(-1.0), same), NumericError);
}

TEST(ClassWeights, BalancedFormula) {
  std::vector<char> labels;
  labels.insert(labels.end(), 279, 'P');
  labels.insert(labels.end(), 134, 'D');
  labels.insert(labels.end(), 91, 'H');
  const auto w = class_weights<char>(labels);
  EXPECT_NEAR(w.at('P'), oracle::balanced_weight(504, 3, 279), 1e-12);
  EXPECT_NEAR(w.at('D'), oracle::balanced_weight(504, 3, 134), 1e-12);
  EXPECT_NEAR(w.at('H'), oracle::balanced_weight(504, 3, 91), 1e-12);
}

TEST(Gamma, ScaleIsInverseTotalVariance) {
  const DenseMatrix x{{0.0, 1.0}, {2.0, 1.0}, {4.0, 4.0}};
  // column variances 8/3 and 2
  EXPECT_NEAR(resolve_gamma(Gamma::scaled(), x), 1.0 / (8.0 / 3.0 + 2.0), 1e-15);
  EXPECT_EQ(Gamma::scaled().to_string(), "scale");
  EXPECT_EQ(Gamma::of(1e-4).to_string(), "1e-04");
}

TEST(Multiclass, OneVsOneSeparatesBlobs) {
  Rng rng(3);
  DenseMatrix x(90, 2);
  std::vector<int> y;
  const double cx[3] = {-3, 0, 3}, cy[3] = {0, 3, 0};
  for (std::size_t i = 0; i < 90; ++i) {
    const int c = static_cast<int>(i % 3);
    x.at(i, 0) = cx[c] + 0.5 * rng.normal();
    x.at(i, 1) = cy[c] + 0.5 * rng.normal();
    y.push_back(c + 10);
  }
  SvmConfig cfg;
  cfg.C = 10.0;
  const auto model = train_multiclass(x, y, cfg);
  EXPECT_EQ(model.classes, (std::vector<int>{10, 11, 12}));
  EXPECT_EQ(model.models.size(), 3u);
  EXPECT_TRUE(model.converged());
  const auto pred = predict(model, x);
  int hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += pred[i] == y[i];
  EXPECT_GE(hits, 88);
}

TEST(Multiclass, VoteTieBreaks) {
  const auto pairs = class_pairs(3);
  ASSERT_EQ(pairs.size(), 3u);
  // 0 beats 1, 1 beats 2, 2 beats 0: three-way vote tie, strength decides
  EXPECT_EQ(ovo_vote(3, pairs, std::vector<double>{0.5, -2.0, 0.5}), 2u);
  EXPECT_EQ(ovo_vote(3, pairs, std::vector<double>{1.0, 1.0, 1.0}), 0u);
}
