#include <gtest/gtest.h>

#include "smartdx/data_model.hpp"
#include "smartdx/features.hpp"
#include "smartdx/synth.hpp"

using namespace smartdx;

namespace {

json minimal_session(const TaskManifest& manifest, double fs = 50.0) {
  RecordingSession s;
  s.participant_id = "P001";
  s.label = DiagnosisLabel::DD;
  s.handedness = Handedness::left;
  s.sampling_rate_hz = fs;
  for (int t = 1; t <= manifest.raw_task_count(); ++t)
    for (Arm a : kAllArms)
      for (Sensor se : kAllSensors)
        for (Axis ax : kAllAxes) {
          const std::size_t n = samples_per_window(fs) * (manifest.is_long(t) ? 2 : 1) + 7;
          std::vector<double> v(n);
          for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(t * 1000 + i);
          s.channels[{t, a, se, ax}] = v;
        }
  return session_to_json(s);
}

}  // namespace

TEST(Manifest, PostSplitNumbering) {
  const TaskManifest m;
  EXPECT_EQ(m.post_split_count(), 14);
  EXPECT_EQ(m.post_split_ids(1), (std::vector<int>{1, 2}));
  EXPECT_EQ(m.post_split_ids(3), (std::vector<int>{5, 6}));
  EXPECT_EQ(m.post_split_ids(4), (std::vector<int>{7}));
  EXPECT_EQ(m.post_split_ids(11), (std::vector<int>{14}));
  EXPECT_EQ(m.raw_of(6), 3);
  EXPECT_EQ(m.raw_of(14), 11);
  EXPECT_THROW(m.raw_of(15), ValidationError);
  EXPECT_THROW(TaskManifest({12}), ValidationError);
}

TEST(Manifest, JsonRoundTrip) {
  const TaskManifest m({2, 5}, 11);
  EXPECT_EQ(TaskManifest::from_json(m.to_json()), m);
  EXPECT_THROW(TaskManifest::from_json(json{{"x", 1}}), SchemaError);
}

TEST(Session, ParseAndSplit) {
  const TaskManifest m;
  const auto s = parse_session(minimal_session(m), m);
  EXPECT_EQ(s.channels.size(), 132u);
  EXPECT_EQ(s.label, DiagnosisLabel::DD);
  const auto split = split_long_records(s, m);
  EXPECT_TRUE(split.normalized);
  EXPECT_EQ(split.channels.size(), 168u);
  for (const auto& [k, v] : split.channels) EXPECT_EQ(v.size(), 500u);
  // second half of a long step starts right after the first
  const auto& first = split.channels.at({1, Arm::left, Sensor::accelerometer, Axis::x});
  const auto& second = split.channels.at({2, Arm::left, Sensor::accelerometer, Axis::x});
  EXPECT_EQ(first.front(), 1000.0);
  EXPECT_EQ(second.front(), 1500.0);
  const auto& short_step = split.channels.at({7, Arm::right, Sensor::gyroscope, Axis::z});
  EXPECT_EQ(short_step.front(), 4000.0);
  EXPECT_EQ(split_long_records(split, m), split);
}

TEST(Session, SchemaErrors) {
  const TaskManifest m;
  auto doc = minimal_session(m);
  auto missing = doc;
  missing.erase("label");
  EXPECT_THROW(parse_session(missing, m), SchemaError);

  auto bad_task = doc;
  bad_task["recordings"][0]["task_id"] = 12;
  EXPECT_THROW(parse_session(bad_task, m), ValidationError);

  auto dup = doc;
  dup["recordings"].push_back(dup["recordings"][0]);
  EXPECT_THROW(parse_session(dup, m), ValidationError);

  auto gap = doc;
  gap["recordings"].erase(gap["recordings"].begin() + 3);
  EXPECT_THROW(parse_session(gap, m), ValidationError);

  auto rate = doc;
  rate["recordings"][0]["sampling_rate_hz"] = 100.0;
  EXPECT_THROW(parse_session(rate, m), ValidationError);

  auto shortrec = doc;
  shortrec["recordings"][0]["samples"] = std::vector<double>(900, 0.0);
  const auto s = parse_session(shortrec, m);
  EXPECT_THROW(split_long_records(s, m), ValidationError);

  EXPECT_THROW(parse_label("XX"), Error);
}

TEST(Session, JsonRoundTrip) {
  const TaskManifest m;
  const auto s = parse_session(minimal_session(m), m);
  EXPECT_EQ(parse_session(session_to_json(s), m), s);
}

TEST(Session, FilterByArmAndSensor) {
  const TaskManifest m;
  const auto s = split_long_records(parse_session(minimal_session(m), m), m);
  EXPECT_EQ(filter_session(s, Arm::right).channels.size(), 84u);
  EXPECT_EQ(filter_session(s, Arm::left, Sensor::gyroscope).channels.size(), 42u);
}
