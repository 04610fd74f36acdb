#pragma once

// Per-channel features (19 log-PSD bins + 12 segment statistics) and the
// participants x features matrix with column metadata.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "smartdx/data_model.hpp"
#include "smartdx/error.hpp"
#include "smartdx/parallel.hpp"
#include "smartdx/spectral.hpp"

namespace smartdx {

inline constexpr std::size_t kSegmentStats = 12;
inline constexpr std::size_t kFeaturesPerChannel = kPsdBins + kSegmentStats;  // 31

enum class StdDivisor { population, sample };

struct FeatureConfig {
  WelchConfig welch{};
  StdDivisor sd_divisor = StdDivisor::population;
};

/// Four equal contiguous segments over the first 4*floor(L/4) samples:
/// [sd_1..sd_4, maxabs_1..maxabs_4, energy_1..energy_4], energy = sum x^2.
inline std::vector<double> segment_stats(std::span<const double> x,
                                         StdDivisor divisor = StdDivisor::population) {
  if (x.size() < 4) throw NumericError("segment_stats: need at least 4 samples");
  const std::size_t len = x.size() / 4;
  if (divisor == StdDivisor::sample && len < 2)
    throw NumericError("segment_stats: sample sd needs 2 samples per segment");
  std::vector<double> out(kSegmentStats);
  for (std::size_t s = 0; s < 4; ++s) {
    const auto seg = x.subspan(s * len, len);
    double mean = 0.0, maxabs = 0.0, energy = 0.0;
    for (double v : seg) {
      mean += v;
      maxabs = std::max(maxabs, std::abs(v));
      energy += v * v;
    }
    mean /= static_cast<double>(len);
    double ss = 0.0;
    for (double v : seg) ss += (v - mean) * (v - mean);
    const double denom = static_cast<double>(divisor == StdDivisor::population ? len : len - 1);
    out[s] = std::sqrt(ss / denom);
    out[4 + s] = maxabs;
    out[8 + s] = energy;
  }
  return out;
}

inline std::string feature_suffix(std::size_t index) {
  char buf[16];
  if (index < kPsdBins) {
    std::snprintf(buf, sizeof buf, "psd%02zu", index + 1);
  } else {
    static constexpr const char* kStat[] = {"sd", "maxabs", "energy"};
    const std::size_t s = index - kPsdBins;
    std::snprintf(buf, sizeof buf, "%s%zu", kStat[s / 4], s % 4 + 1);
  }
  return buf;
}

/// Which arm a column describes. Columns re-expressed relative to each
/// participant's handedness use strong/weak.
enum class Side { left, right, strong, weak };

inline std::string_view to_string(Side s) {
  switch (s) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::strong: return "strong";
    case Side::weak: return "weak";
  }
  return "?";
}

inline Side parse_side(std::string_view s) {
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  if (s == "strong") return Side::strong;
  if (s == "weak") return Side::weak;
  throw SchemaError("unknown arm '" + std::string(s) + "'");
}

inline Side side_of(Arm a) { return a == Arm::left ? Side::left : Side::right; }

struct FeatureColumn {
  int task = 1;   ///< post-split task id
  int group = 1;  ///< raw assessment step the task came from
  Side side = Side::left;
  Sensor sensor = Sensor::accelerometer;
  Axis axis = Axis::x;
  std::size_t feature = 0;

  std::string name() const {
    char head[8];
    std::snprintf(head, sizeof head, "t%02d", task);
    std::string n = head;
    n += '_';
    n += to_string(side);
    n += '_';
    n += to_string(sensor);
    n += '_';
    n += to_string(axis);
    n += '_';
    n += feature_suffix(feature);
    return n;
  }

  bool operator==(const FeatureColumn&) const = default;
};

/// Parses `t{task:02}_{arm}_{sensor}_{axis}_{feature}`.
inline FeatureColumn parse_column_name(const std::string& name, const TaskManifest& manifest) {
  std::vector<std::string> parts;
  std::stringstream ss(name);
  for (std::string p; std::getline(ss, p, '_');) parts.push_back(p);
  if (parts.size() != 5 || parts[0].size() < 2 || parts[0][0] != 't')
    throw SchemaError("bad feature column name '" + name + "'");
  FeatureColumn c;
  try {
    c.task = std::stoi(parts[0].substr(1));
  } catch (const std::exception&) {
    throw SchemaError("bad task in feature column name '" + name + "'");
  }
  c.group = manifest.raw_of(c.task);
  c.side = parse_side(parts[1]);
  c.sensor = parse_sensor(parts[2]);
  c.axis = parse_axis(parts[3]);
  bool found = false;
  for (std::size_t i = 0; i < kFeaturesPerChannel; ++i) {
    if (feature_suffix(i) == parts[4]) {
      c.feature = i;
      found = true;
      break;
    }
  }
  if (!found) throw SchemaError("bad feature suffix in column name '" + name + "'");
  return c;
}

/// Rows are participants, columns carry their channel and feature-group
/// metadata. Values are stored row-major.
struct FeatureMatrix {
  std::vector<std::string> participant_ids;
  std::vector<DiagnosisLabel> labels;
  std::vector<Handedness> handedness;
  std::vector<FeatureColumn> columns;
  std::vector<double> values;

  std::size_t rows() const { return labels.size(); }
  std::size_t cols() const { return columns.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * cols(), cols());
  }

  /// Distinct feature groups in ascending order.
  std::vector<int> groups() const {
    std::set<int> g;
    for (const auto& c : columns) g.insert(c.group);
    return {g.begin(), g.end()};
  }

  std::vector<std::size_t> columns_of_group(int group) const {
    std::vector<std::size_t> idx;
    for (std::size_t c = 0; c < cols(); ++c)
      if (columns[c].group == group) idx.push_back(c);
    return idx;
  }

  FeatureMatrix select_columns(std::span<const std::size_t> keep) const {
    FeatureMatrix out;
    out.participant_ids = participant_ids;
    out.labels = labels;
    out.handedness = handedness;
    out.columns.reserve(keep.size());
    for (std::size_t c : keep) out.columns.push_back(columns.at(c));
    out.values.resize(rows() * keep.size());
    for (std::size_t r = 0; r < rows(); ++r)
      for (std::size_t j = 0; j < keep.size(); ++j) out.values[r * keep.size() + j] = at(r, keep[j]);
    return out;
  }

  FeatureMatrix select_groups(const std::set<int>& keep) const {
    std::vector<std::size_t> idx;
    for (std::size_t c = 0; c < cols(); ++c)
      if (keep.contains(columns[c].group)) idx.push_back(c);
    return select_columns(idx);
  }

  FeatureMatrix select_rows(std::span<const std::size_t> keep) const {
    FeatureMatrix out;
    out.columns = columns;
    for (std::size_t r : keep) {
      out.participant_ids.push_back(participant_ids.at(r));
      out.labels.push_back(labels.at(r));
      out.handedness.push_back(handedness.at(r));
      const auto src = row(r);
      out.values.insert(out.values.end(), src.begin(), src.end());
    }
    return out;
  }

  bool operator==(const FeatureMatrix&) const = default;
};

/// Reusable per-sampling-rate featurizer.
class ChannelFeaturizer {
 public:
  ChannelFeaturizer(double fs, FeatureConfig cfg = {})
      : fs_(fs), cfg_(cfg), welch_(checked_fs(fs), cfg.welch, kPsdBins) {}

  /// [psd_log(19) || segment_stats(12)]
  std::vector<double> operator()(std::span<const double> x) const {
    std::vector<double> out;
    out.reserve(kFeaturesPerChannel);
    append(x, out);
    return out;
  }

  void append(std::span<const double> x, std::vector<double>& out) const {
    const auto spec = welch_.estimate(x);
    for (std::size_t k = 1; k <= kPsdBins; ++k)
      out.push_back(std::log10(std::max(spec.density[k], kPsdFloor)));
    const auto stats = segment_stats(x, cfg_.sd_divisor);
    out.insert(out.end(), stats.begin(), stats.end());
  }

 private:
  static double checked_fs(double fs) {
    if (fs < 40.0) throw NumericError("featurize: sampling rate must be at least 40 Hz");
    return fs;
  }
  double fs_;
  FeatureConfig cfg_;
  WelchEstimator welch_;
};

/// Concatenates channel features in channel order. The session must be split.
inline std::vector<double> featurize_session(const RecordingSession& s,
                                             const FeatureConfig& cfg = {}) {
  if (!s.normalized)
    throw ValidationError("featurize: session '" + s.participant_id + "' is not split");
  const ChannelFeaturizer featurize(s.sampling_rate_hz, cfg);
  std::vector<double> row;
  row.reserve(s.channels.size() * kFeaturesPerChannel);
  for (const auto& [key, samples] : s.channels) {
    try {
      featurize.append(samples, row);
    } catch (const Error& e) {
      throw NumericError("featurize: session '" + s.participant_id + "' channel " + describe(key) +
                         ": " + e.what());
    }
  }
  return row;
}

inline std::vector<FeatureColumn> columns_for(const RecordingSession& s,
                                              const TaskManifest& manifest) {
  std::vector<FeatureColumn> cols;
  cols.reserve(s.channels.size() * kFeaturesPerChannel);
  for (const auto& kv : s.channels) {
    const ChannelKey& k = kv.first;
    for (std::size_t f = 0; f < kFeaturesPerChannel; ++f)
      cols.push_back({k.task, manifest.raw_of(k.task), side_of(k.arm), k.sensor, k.axis, f});
  }
  return cols;
}

/// Featurizes split sessions into one matrix. All sessions must share the
/// same channel set. Row order follows the input order.
inline FeatureMatrix build_feature_matrix(std::span<const RecordingSession> sessions,
                                          const TaskManifest& manifest,
                                          const FeatureConfig& cfg = {}, unsigned jobs = 1) {
  FeatureMatrix m;
  if (sessions.empty()) return m;
  m.columns = columns_for(sessions.front(), manifest);
  for (const auto& s : sessions) {
    if (s.channels.size() != sessions.front().channels.size() ||
        !std::equal(s.channels.begin(), s.channels.end(), sessions.front().channels.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; }))
      throw ValidationError("feature matrix: session '" + s.participant_id +
                            "' has a different channel set");
    m.participant_ids.push_back(s.participant_id);
    m.labels.push_back(s.label);
    m.handedness.push_back(s.handedness);
  }
  std::vector<std::vector<double>> rows(sessions.size());
  parallel_for(sessions.size(), jobs, [&](std::size_t i) { rows[i] = featurize_session(sessions[i], cfg); });
  m.values.reserve(sessions.size() * m.cols());
  for (auto& r : rows) m.values.insert(m.values.end(), r.begin(), r.end());
  return m;
}

/// Shortest decimal representation that round-trips.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_feature_csv(std::ostream& os, const FeatureMatrix& m) {
  os << "participant_id,label,handedness";
  for (const auto& c : m.columns) os << ',' << c.name();
  os << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    os << m.participant_ids[r] << ',' << to_string(m.labels[r]) << ',' << to_string(m.handedness[r]);
    for (double v : m.row(r)) os << ',' << format_double(v);
    os << '\n';
  }
}

inline FeatureMatrix read_feature_csv(std::istream& is, const TaskManifest& manifest) {
  FeatureMatrix m;
  std::string line;
  if (!std::getline(is, line)) throw SchemaError("feature csv: empty input");
  {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> head;
    while (std::getline(ss, cell, ',')) head.push_back(cell);
    if (head.size() < 3 || head[0] != "participant_id" || head[1] != "label" ||
        head[2] != "handedness")
      throw SchemaError("feature csv: header must start with participant_id,label,handedness");
    for (std::size_t i = 3; i < head.size(); ++i)
      m.columns.push_back(parse_column_name(head[i], manifest));
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view rest(line);
    for (;;) {
      const auto pos = rest.find(',');
      cells.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (cells.size() != m.cols() + 3)
      throw SchemaError("feature csv: line " + std::to_string(lineno) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(m.cols() + 3));
    m.participant_ids.emplace_back(cells[0]);
    m.labels.push_back(parse_label(cells[1]));
    m.handedness.push_back(parse_handedness(cells[2]));
    for (std::size_t i = 3; i < cells.size(); ++i) {
      double v = 0.0;
      const auto res = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), v);
      if (res.ec != std::errc() || res.ptr != cells[i].data() + cells[i].size())
        throw SchemaError("feature csv: bad number on line " + std::to_string(lineno));
      m.values.push_back(v);
    }
  }
  return m;
}

}  // namespace smartdx
