#pragma once

// Participant sessions: domain enums, channel addressing, the session JSON
// schema, and splitting of 20 s recordings into two 10 s halves.

#include <algorithm>
#include <cmath>
#include <compare>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smartdx/error.hpp"

namespace smartdx {

using json = nlohmann::json;

enum class DiagnosisLabel { PD, DD, HC };
enum class Handedness { left, right };
enum class Arm { left, right };
enum class Sensor { accelerometer, gyroscope };
enum class Axis { x, y, z };

inline constexpr DiagnosisLabel kAllLabels[] = {DiagnosisLabel::PD, DiagnosisLabel::DD,
                                                DiagnosisLabel::HC};
inline constexpr Arm kAllArms[] = {Arm::left, Arm::right};
inline constexpr Sensor kAllSensors[] = {Sensor::accelerometer, Sensor::gyroscope};
inline constexpr Axis kAllAxes[] = {Axis::x, Axis::y, Axis::z};

inline constexpr int kRawTaskCount = 11;
inline constexpr int kChannelsPerTask = 2 * 2 * 3;

inline std::string_view to_string(DiagnosisLabel l) {
  switch (l) {
    case DiagnosisLabel::PD: return "PD";
    case DiagnosisLabel::DD: return "DD";
    case DiagnosisLabel::HC: return "HC";
  }
  return "?";
}
inline std::string_view to_string(Handedness h) { return h == Handedness::left ? "left" : "right"; }
inline std::string_view to_string(Arm a) { return a == Arm::left ? "left" : "right"; }
inline std::string_view to_string(Sensor s) {
  return s == Sensor::accelerometer ? "accelerometer" : "gyroscope";
}
inline std::string_view to_string(Axis a) {
  switch (a) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::z: return "z";
  }
  return "?";
}

inline DiagnosisLabel parse_label(std::string_view s) {
  if (s == "PD") return DiagnosisLabel::PD;
  if (s == "DD") return DiagnosisLabel::DD;
  if (s == "HC") return DiagnosisLabel::HC;
  throw SchemaError("unknown diagnosis label '" + std::string(s) + "'");
}
inline Handedness parse_handedness(std::string_view s) {
  if (s == "left") return Handedness::left;
  if (s == "right") return Handedness::right;
  throw SchemaError("unknown handedness '" + std::string(s) + "'");
}
inline Arm parse_arm(std::string_view s) {
  if (s == "left") return Arm::left;
  if (s == "right") return Arm::right;
  throw SchemaError("unknown arm '" + std::string(s) + "'");
}
inline Sensor parse_sensor(std::string_view s) {
  if (s == "accelerometer") return Sensor::accelerometer;
  if (s == "gyroscope") return Sensor::gyroscope;
  throw SchemaError("unknown sensor '" + std::string(s) + "'");
}
inline Axis parse_axis(std::string_view s) {
  if (s == "x") return Axis::x;
  if (s == "y") return Axis::y;
  if (s == "z") return Axis::z;
  throw SchemaError("unknown axis '" + std::string(s) + "'");
}

inline Arm strong_arm(Handedness h) { return h == Handedness::left ? Arm::left : Arm::right; }
inline Arm opposite(Arm a) { return a == Arm::left ? Arm::right : Arm::left; }

/// Channel address. `task` is a raw assessment step (1..11) before splitting
/// and a post-split task (1..14) after. Member order defines the total order.
struct ChannelKey {
  int task = 1;
  Arm arm = Arm::left;
  Sensor sensor = Sensor::accelerometer;
  Axis axis = Axis::x;

  auto operator<=>(const ChannelKey&) const = default;
};

inline std::string describe(const ChannelKey& k) {
  std::ostringstream os;
  os << "(task " << k.task << ", arm " << to_string(k.arm) << ", sensor " << to_string(k.sensor)
     << ", axis " << to_string(k.axis) << ")";
  return os.str();
}

/// Which raw steps were recorded for 20 s, and how raw steps map onto the
/// post-split task ids. Long steps take two consecutive ids, in raw order.
class TaskManifest {
 public:
  TaskManifest() : TaskManifest(std::set<int>{1, 2, 3}) {}

  explicit TaskManifest(std::set<int> long_task_ids, int raw_task_count = kRawTaskCount)
      : long_(std::move(long_task_ids)), raw_count_(raw_task_count) {
    if (raw_count_ < 1) throw ValidationError("manifest: raw task count must be positive");
    for (int id : long_) {
      if (id < 1 || id > raw_count_)
        throw ValidationError("manifest: long task id " + std::to_string(id) + " outside 1.." +
                              std::to_string(raw_count_));
    }
    int next = 1;
    first_post_.assign(raw_count_ + 1, 0);
    for (int raw = 1; raw <= raw_count_; ++raw) {
      first_post_[raw] = next;
      next += is_long(raw) ? 2 : 1;
      for (int p = first_post_[raw]; p < next; ++p) raw_of_post_.push_back(raw);
    }
  }

  const std::set<int>& long_task_ids() const { return long_; }
  int raw_task_count() const { return raw_count_; }
  int post_split_count() const { return static_cast<int>(raw_of_post_.size()); }
  bool is_long(int raw) const { return long_.contains(raw); }

  std::vector<int> post_split_ids(int raw) const {
    check_raw(raw);
    if (is_long(raw)) return {first_post_[raw], first_post_[raw] + 1};
    return {first_post_[raw]};
  }

  int raw_of(int post) const {
    if (post < 1 || post > post_split_count())
      throw ValidationError("manifest: post-split task id " + std::to_string(post) +
                            " out of range");
    return raw_of_post_[post - 1];
  }

  void check_raw(int raw) const {
    if (raw < 1 || raw > raw_count_)
      throw ValidationError("unknown task id " + std::to_string(raw));
  }

  json to_json() const {
    return json{{"long_task_ids", std::vector<int>(long_.begin(), long_.end())},
                {"raw_task_count", raw_count_}};
  }

  static TaskManifest from_json(const json& j) {
    try {
      std::set<int> ids;
      for (const auto& v : j.at("long_task_ids")) ids.insert(v.get<int>());
      const int count = j.value("raw_task_count", kRawTaskCount);
      return TaskManifest(std::move(ids), count);
    } catch (const json::exception& e) {
      throw SchemaError(std::string("manifest: ") + e.what());
    }
  }

  bool operator==(const TaskManifest& o) const {
    return long_ == o.long_ && raw_count_ == o.raw_count_;
  }

 private:
  std::set<int> long_;
  int raw_count_;
  std::vector<int> first_post_;
  std::vector<int> raw_of_post_;
};

/// One participant. Before `split_long_records` the channel keys carry raw
/// task ids and variable lengths; afterwards every channel is 10 s long.
struct RecordingSession {
  std::string participant_id;
  DiagnosisLabel label = DiagnosisLabel::HC;
  Handedness handedness = Handedness::right;
  double sampling_rate_hz = 50.0;
  std::map<ChannelKey, std::vector<double>> channels;
  bool normalized = false;

  bool operator==(const RecordingSession&) const = default;
};

inline std::size_t samples_per_window(double fs) {
  return static_cast<std::size_t>(std::llround(10.0 * fs));
}

namespace detail {

template <typename T>
T field(const json& j, const char* name, std::string_view where) {
  auto it = j.find(name);
  if (it == j.end()) throw SchemaError(std::string(where) + ": missing field '" + name + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string(where) + ": field '" + name + "' has the wrong type");
  }
}

}  // namespace detail

/// Validates a session document against the schema and the manifest's task
/// set. Returns the raw (unsplit) session.
inline RecordingSession parse_session(const json& doc, const TaskManifest& manifest) {
  if (!doc.is_object()) throw SchemaError("session: document is not an object");
  RecordingSession s;
  s.participant_id = detail::field<std::string>(doc, "participant_id", "session");
  const std::string where = "session '" + s.participant_id + "'";
  s.label = parse_label(detail::field<std::string>(doc, "label", where));
  s.handedness = parse_handedness(detail::field<std::string>(doc, "handedness", where));
  s.sampling_rate_hz = detail::field<double>(doc, "sampling_rate_hz", where);
  if (!(s.sampling_rate_hz > 0.0) || !std::isfinite(s.sampling_rate_hz))
    throw SchemaError(where + ": sampling_rate_hz must be a positive number");

  const auto recs = doc.find("recordings");
  if (recs == doc.end() || !recs->is_array())
    throw SchemaError(where + ": missing array 'recordings'");

  for (const auto& r : *recs) {
    if (!r.is_object()) throw SchemaError(where + ": recording is not an object");
    ChannelKey key;
    key.task = detail::field<int>(r, "task_id", where);
    key.arm = parse_arm(detail::field<std::string>(r, "arm", where));
    key.sensor = parse_sensor(detail::field<std::string>(r, "sensor", where));
    key.axis = parse_axis(detail::field<std::string>(r, "axis", where));
    if (key.task < 1 || key.task > manifest.raw_task_count())
      throw ValidationError(where + ": unknown task id " + std::to_string(key.task) + " in " +
                            describe(key));
    if (auto rate = r.find("sampling_rate_hz"); rate != r.end()) {
      if (!rate->is_number() || rate->get<double>() != s.sampling_rate_hz)
        throw ValidationError(where + ": inconsistent sampling rate at " + describe(key));
    }
    auto samples = detail::field<std::vector<double>>(r, "samples", where);
    if (samples.empty()) throw ValidationError(where + ": empty samples at " + describe(key));
    for (double v : samples) {
      if (!std::isfinite(v))
        throw ValidationError(where + ": non-finite sample at " + describe(key));
    }
    if (!s.channels.emplace(key, std::move(samples)).second)
      throw ValidationError(where + ": duplicate channel " + describe(key));
  }

  for (int task = 1; task <= manifest.raw_task_count(); ++task)
    for (Arm arm : kAllArms)
      for (Sensor sensor : kAllSensors)
        for (Axis axis : kAllAxes) {
          const ChannelKey key{task, arm, sensor, axis};
          if (!s.channels.contains(key))
            throw ValidationError(where + ": missing channel " + describe(key));
        }
  return s;
}

inline RecordingSession load_session(const std::filesystem::path& path,
                                     const TaskManifest& manifest) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open session file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return parse_session(doc, manifest);
}

/// Serializes a session in the ingestion schema. Recordings follow channel
/// order, so output is canonical.
inline json session_to_json(const RecordingSession& s) {
  json recs = json::array();
  for (const auto& [key, samples] : s.channels) {
    recs.push_back(json{{"task_id", key.task},
                        {"arm", to_string(key.arm)},
                        {"sensor", to_string(key.sensor)},
                        {"axis", to_string(key.axis)},
                        {"samples", samples}});
  }
  return json{{"participant_id", s.participant_id},
              {"label", to_string(s.label)},
              {"handedness", to_string(s.handedness)},
              {"sampling_rate_hz", s.sampling_rate_hz},
              {"recordings", std::move(recs)}};
}

/// Cuts each long recording into two 10 s halves and truncates short ones to
/// 10 s. Already-split sessions are returned unchanged.
inline RecordingSession split_long_records(const RecordingSession& raw,
                                           const TaskManifest& manifest) {
  if (raw.normalized) return raw;
  const std::size_t window = samples_per_window(raw.sampling_rate_hz);
  if (window == 0) throw ValidationError("sampling rate too low for a 10 s window");
  RecordingSession out = raw;
  out.channels.clear();
  for (const auto& [key, samples] : raw.channels) {
    const auto post = manifest.post_split_ids(key.task);
    const std::size_t needed = window * post.size();
    if (samples.size() < needed)
      throw ValidationError("session '" + raw.participant_id + "': recording " + describe(key) +
                            " has " + std::to_string(samples.size()) + " samples, needs " +
                            std::to_string(needed));
    for (std::size_t part = 0; part < post.size(); ++part) {
      ChannelKey k = key;
      k.task = post[part];
      const auto first = samples.begin() + static_cast<std::ptrdiff_t>(part * window);
      out.channels.emplace(k, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(window)));
    }
  }
  out.normalized = true;
  return out;
}

inline std::size_t channel_count(const RecordingSession& s) { return s.channels.size(); }

/// Keeps only channels matching the given arm and/or sensor.
inline RecordingSession filter_session(const RecordingSession& s, std::optional<Arm> arm,
                                       std::optional<Sensor> sensor = std::nullopt) {
  RecordingSession out = s;
  std::erase_if(out.channels, [&](const auto& kv) {
    return (arm && kv.first.arm != *arm) || (sensor && kv.first.sensor != *sensor);
  });
  return out;
}

}  // namespace smartdx
