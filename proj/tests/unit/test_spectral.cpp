#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "smartdx/features.hpp"
#include "smartdx/rng.hpp"
#include "smartdx/spectral.hpp"

using namespace smartdx;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

std::vector<double> sine(std::size_t n, double f, double fs, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs);
  return x;
}

}  // namespace

TEST(Window, PeriodicHann) {
  const auto w = make_window(WindowKind::hann, 8);
  EXPECT_DOUBLE_EQ(w[0], 0.0);
  EXPECT_NEAR(w[4], 1.0, 1e-15);
  EXPECT_NEAR(w[2], 0.5, 1e-15);
  EXPECT_NEAR(w[6], 0.5, 1e-15);
  for (double v : make_window(WindowKind::rectangular, 5)) EXPECT_EQ(v, 1.0);
}

TEST(Welch, ParsevalSingleRectangularSegment) {
  for (std::size_t n : {64u, 50u, 51u}) {
    const auto x = noise(n, 7 + n);
    WelchConfig cfg{n, 0.5, WindowKind::rectangular, false};
    const auto s = welch_psd(x, 50.0, cfg);
    EXPECT_EQ(s.segments, 1u);
    double area = 0.0;
    for (double d : s.density) area += d * s.bin_width();
    double power = 0.0;
    for (double v : x) power += v * v;
    power /= static_cast<double>(n);
    EXPECT_NEAR(area / power, 1.0, 1e-6) << "n=" << n;
  }
}

TEST(Welch, MatchesDirectDftOracle) {
  const auto x = noise(500, 3);
  const auto s = welch_psd(x, 50.0);
  const auto ref = oracle::welch_density(x, 50.0, 50, 25, true, true);
  ASSERT_EQ(s.density.size(), ref.size());
  EXPECT_EQ(s.segments, 19u);
  for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(s.density[k], ref[k], 1e-9 * (1 + ref[k]));
  EXPECT_DOUBLE_EQ(s.frequencies[5], 5.0);
}

TEST(Welch, OddSegmentHasNoNyquistBin) {
  const auto x = noise(200, 4);
  WelchConfig cfg{45, 0.5, WindowKind::hann, true};
  const auto s = welch_psd(x, 45.0, cfg);
  const auto ref = oracle::welch_density(x, 45.0, 45, 23, true, true);
  ASSERT_EQ(s.density.size(), 23u);
  for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(s.density[k], ref[k], 1e-9 * (1 + ref[k]));
}

TEST(Welch, SinePeaksAtItsBin) {
  const auto x = sine(500, 5.0, 50.0);
  const auto s = welch_psd(x, 50.0);
  const auto peak = std::max_element(s.density.begin(), s.density.end()) - s.density.begin();
  EXPECT_EQ(peak, 5);
}

TEST(Welch, ConstantDetrendRemovesOffset) {
  auto x = noise(500, 5);
  auto shifted = x;
  for (auto& v : shifted) v += 100.0;
  const auto a = welch_psd(x, 50.0), b = welch_psd(shifted, 50.0);
  for (std::size_t k = 0; k < a.density.size(); ++k) EXPECT_NEAR(a.density[k], b.density[k], 1e-9);
}

TEST(Welch, Errors) {
  const auto x = noise(30, 1);
  EXPECT_THROW(welch_psd(x, 50.0), NumericError);
  EXPECT_THROW(welch_psd(noise(100, 1), 0.0), NumericError);
  WelchConfig bad{50, 1.0, WindowKind::hann, true};
  EXPECT_THROW(welch_psd(noise(100, 1), 50.0, bad), NumericError);
  auto nan = noise(100, 1);
  nan[3] = std::nan("");
  EXPECT_THROW(welch_psd(nan, 50.0), NumericError);
}

TEST(LogPsd, DropsDcAndFloorsSilence) {
  const std::vector<double> zeros(500, 0.0);
  const auto v = welch_log_psd(zeros, 50.0);
  ASSERT_EQ(v.size(), 19u);
  for (double d : v) EXPECT_DOUBLE_EQ(d, -12.0);
  const auto x = sine(500, 7.0, 50.0, 2.0);
  const auto lp = welch_log_psd(x, 50.0);
  EXPECT_EQ(std::max_element(lp.begin(), lp.end()) - lp.begin(), 6);
  EXPECT_THROW(welch_log_psd(x, 30.0), NumericError);
}

TEST(LogPsd, AtHundredHzKeepsOneHzBins) {
  const auto x = sine(1000, 12.0, 100.0);
  const auto lp = welch_log_psd(x, 100.0);
  EXPECT_EQ(std::max_element(lp.begin(), lp.end()) - lp.begin(), 11);
}
