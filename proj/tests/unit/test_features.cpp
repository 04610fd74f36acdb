#include <gtest/gtest.h>

#include <sstream>

#include "smartdx/features.hpp"
#include "smartdx/rng.hpp"
#include "smartdx/synth.hpp"

using namespace smartdx;

TEST(SegmentStats, HandComputed) {
  const std::vector<double> x{1, 3, -2, 2, 0, 0, 4, -4, 9};  // last sample dropped
  const auto s = segment_stats(x);
  ASSERT_EQ(s.size(), 12u);
  EXPECT_DOUBLE_EQ(s[0], 1.0);
  EXPECT_DOUBLE_EQ(s[1], 2.0);
  EXPECT_DOUBLE_EQ(s[2], 0.0);
  EXPECT_DOUBLE_EQ(s[3], 4.0);
  EXPECT_DOUBLE_EQ(s[4], 3.0);
  EXPECT_DOUBLE_EQ(s[5], 2.0);
  EXPECT_DOUBLE_EQ(s[6], 0.0);
  EXPECT_DOUBLE_EQ(s[7], 4.0);
  EXPECT_DOUBLE_EQ(s[8], 10.0);
  EXPECT_DOUBLE_EQ(s[9], 8.0);
  EXPECT_DOUBLE_EQ(s[10], 0.0);
  EXPECT_DOUBLE_EQ(s[11], 32.0);
  const auto sample = segment_stats(x, StdDivisor::sample);
  EXPECT_DOUBLE_EQ(sample[0], std::sqrt(2.0));
  EXPECT_THROW(segment_stats(std::vector<double>{1, 2, 3}), NumericError);
}

TEST(Featurizer, LayoutAndNames) {
  Rng rng(9);
  std::vector<double> x(500);
  for (auto& v : x) v = rng.normal();
  const ChannelFeaturizer f(50.0);
  const auto row = f(x);
  ASSERT_EQ(row.size(), 31u);
  const auto lp = welch_log_psd(x, 50.0);
  const auto st = segment_stats(x);
  for (std::size_t i = 0; i < 19; ++i) EXPECT_DOUBLE_EQ(row[i], lp[i]);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_DOUBLE_EQ(row[19 + i], st[i]);
  EXPECT_EQ(feature_suffix(0), "psd01");
  EXPECT_EQ(feature_suffix(18), "psd19");
  EXPECT_EQ(feature_suffix(19), "sd1");
  EXPECT_EQ(feature_suffix(26), "maxabs4");
  EXPECT_EQ(feature_suffix(30), "energy4");
  EXPECT_THROW(ChannelFeaturizer(25.0), NumericError);
}

TEST(FeatureMatrix, ShapeGroupsAndCsvRoundTrip) {
  auto spec = spec_from_table1(6, 11);
  const auto cohort = generate_cohort(spec);
  std::vector<RecordingSession> split;
  for (const auto& s : cohort.sessions) split.push_back(split_long_records(s, spec.manifest));
  const auto m = build_feature_matrix(split, spec.manifest, {}, 2);
  EXPECT_EQ(m.rows(), 6u);
  EXPECT_EQ(m.cols(), 5208u);
  EXPECT_EQ(m.groups().size(), 11u);
  EXPECT_EQ(m.columns_of_group(1).size(), 2u * 12 * 31);
  EXPECT_EQ(m.columns_of_group(4).size(), 12u * 31);
  EXPECT_EQ(m.columns.front().name(), "t01_left_accelerometer_x_psd01");

  const auto serial = build_feature_matrix(split, spec.manifest, {}, 1);
  EXPECT_EQ(serial, m);

  std::stringstream ss;
  write_feature_csv(ss, m);
  const auto back = read_feature_csv(ss, spec.manifest);
  EXPECT_EQ(back, m);

  const auto sub = m.select_groups({2, 5});
  EXPECT_EQ(sub.cols(), 12u * 31 * 3);
  for (const auto& c : sub.columns) EXPECT_TRUE(c.group == 2 || c.group == 5);
}

TEST(FeatureMatrix, RejectsUnsplitAndMismatchedSessions) {
  auto spec = spec_from_table1(3, 2);
  const auto cohort = generate_cohort(spec);
  EXPECT_THROW(featurize_session(cohort.sessions[0]), ValidationError);
  std::vector<RecordingSession> split;
  for (const auto& s : cohort.sessions) split.push_back(split_long_records(s, spec.manifest));
  split[1].channels.erase(split[1].channels.begin());
  EXPECT_THROW(build_feature_matrix(split, spec.manifest), ValidationError);
}
