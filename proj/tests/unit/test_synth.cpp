#include <gtest/gtest.h>

#include <filesystem>

#include "smartdx/synth.hpp"

using namespace smartdx;

namespace {

int count_of(const CohortSpec& s, DiagnosisLabel l, Handedness h) {
  for (const auto& c : s.counts)
    if (c.label == l && c.handedness == h) return c.count;
  return -1;
}

}  // namespace

TEST(Table1, LargestRemainderCounts) {
  const auto s = spec_from_table1(150, 42);
  EXPECT_EQ(s.total(), 150);
  EXPECT_EQ(count_of(s, DiagnosisLabel::PD, Handedness::right), 78);
  EXPECT_EQ(count_of(s, DiagnosisLabel::PD, Handedness::left), 5);
  EXPECT_EQ(count_of(s, DiagnosisLabel::DD, Handedness::right), 36);
  EXPECT_EQ(count_of(s, DiagnosisLabel::DD, Handedness::left), 4);
  EXPECT_EQ(count_of(s, DiagnosisLabel::HC, Handedness::right), 24);
  EXPECT_EQ(count_of(s, DiagnosisLabel::HC, Handedness::left), 3);

  const auto full = spec_from_table1(504, 1);
  EXPECT_EQ(count_of(full, DiagnosisLabel::PD, Handedness::right), 262);
  EXPECT_EQ(count_of(full, DiagnosisLabel::HC, Handedness::left), 11);

  const auto tiny = spec_from_table1(3, 1);
  for (DiagnosisLabel l : kAllLabels)
    EXPECT_EQ(count_of(tiny, l, Handedness::right) + count_of(tiny, l, Handedness::left), 1);
  EXPECT_THROW(spec_from_table1(2, 1), ValidationError);
}

TEST(Spec, DefaultsLeaveTwoNoiseSteps) {
  const auto s = spec_from_table1(30, 1);
  EXPECT_EQ(s.noise_tasks(), (std::set<int>{4, 9}));
  EXPECT_NO_THROW(s.validate());
  auto bad = s;
  bad.movement.reduced_tasks.insert(12);
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Spec, JsonRoundTrip) {
  auto s = spec_from_table1(40, 9);
  s.asymmetry = 0.25;
  s.dominant_arm = DominantArmPolicy::right;
  s.express_at_least_one = false;
  const auto back = spec_from_json(spec_to_json(s));
  EXPECT_EQ(spec_to_json(back).dump(), spec_to_json(s).dump());
}

TEST(Cohort, DeterministicAndWellFormed) {
  const auto spec = spec_from_table1(12, 5);
  const auto a = generate_cohort(spec);
  const auto b = generate_cohort(spec);
  ASSERT_EQ(a.sessions.size(), 12u);
  for (std::size_t i = 0; i < a.sessions.size(); ++i) EXPECT_EQ(a.sessions[i], b.sessions[i]);
  EXPECT_EQ(a.ground_truth.dump(), b.ground_truth.dump());
  const auto other = generate_cohort(spec_from_table1(12, 6));
  EXPECT_NE(other.sessions[0].channels, a.sessions[0].channels);
  for (const auto& s : a.sessions) {
    EXPECT_EQ(s.channels.size(), 132u);
    const auto json = session_to_json(s);
    EXPECT_EQ(parse_session(json, spec.manifest), s);
    const auto split = split_long_records(s, spec.manifest);
    EXPECT_EQ(split.channels.size(), 168u);
  }
}

TEST(Cohort, ZeroAsymmetryLeavesOneArmQuiet) {
  auto spec = spec_from_table1(6, 3);
  spec.asymmetry = 0.0;
  spec.dominant_arm = DominantArmPolicy::right;
  const auto c = generate_cohort(spec);
  for (const auto& p : c.ground_truth.at("participants"))
    EXPECT_EQ(p.at("dominant_signal_arm").get<std::string>(), "right");
}

TEST(Cohort, WriteAndListFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "smartdx_synth_test";
  std::filesystem::remove_all(dir);
  const auto spec = spec_from_table1(4, 2);
  write_cohort(generate_cohort(spec), dir);
  const auto files = cohort_files(dir);
  EXPECT_EQ(files.size(), 4u);
  EXPECT_EQ(load_manifest(dir / "manifest.json"), spec.manifest);
  std::filesystem::remove_all(dir);
}

TEST(Rng, SeedsAndStreams) {
  EXPECT_EQ(derive_seed(1, "a", {2}), derive_seed(1, "a", {2}));
  EXPECT_NE(derive_seed(1, "a", {2}), derive_seed(1, "b", {2}));
  EXPECT_NE(derive_seed(1, "a", {2}), derive_seed(1, "a", {3}));
  Rng r(5);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double v = r.normal();
    sum += v;
    sq += v * v;
  }
  EXPECT_NEAR(sum / 20000, 0.0, 0.03);
  EXPECT_NEAR(sq / 20000, 1.0, 0.05);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(r.below(7), 7u);
}
