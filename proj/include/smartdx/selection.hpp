#pragma once

// Reduction studies: arm settings (both / left / right / strong / weak) and
// greedy forward/backward selection over assessment-step feature groups.

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "smartdx/evaluation.hpp"
#include "smartdx/features.hpp"

namespace smartdx {

enum class ArmSetting { both, left, right, strong, weak };

inline constexpr ArmSetting kAllArmSettings[] = {ArmSetting::both, ArmSetting::left, ArmSetting::right,
                                                 ArmSetting::strong, ArmSetting::weak};

inline std::string_view to_string(ArmSetting s) {
  switch (s) {
    case ArmSetting::both: return "both";
    case ArmSetting::left: return "left";
    case ArmSetting::right: return "right";
    case ArmSetting::strong: return "strong";
    case ArmSetting::weak: return "weak";
  }
  return "?";
}

inline ArmSetting parse_arm_setting(std::string_view s) {
  for (auto a : kAllArmSettings)
    if (to_string(a) == s) return a;
  throw SchemaError("unknown arm setting '" + std::string(s) + "'");
}

/// How strong/weak settings lay out columns. `relative`: one block of
/// columns per channel of the selected arm, filled per row from that row's
/// strong (or weak) arm. `in_place`: both arms' columns are kept and the
/// unselected arm's values are zeroed per row.
enum class ArmAlignment { relative, in_place };

inline FeatureMatrix filter_arm(const FeatureMatrix& m, ArmSetting setting,
                                ArmAlignment alignment = ArmAlignment::relative) {
  if (setting == ArmSetting::both) return m;
  for (const auto& c : m.columns)
    if (c.side != Side::left && c.side != Side::right)
      throw Error("filter_arm: matrix is already arm-relative");

  if (setting == ArmSetting::left || setting == ArmSetting::right) {
    const Side want = setting == ArmSetting::left ? Side::left : Side::right;
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (m.columns[c].side == want) keep.push_back(c);
    return m.select_columns(keep);
  }

  auto pick = [&](std::size_t r) {
    const Arm strong = strong_arm(m.handedness[r]);
    return side_of(setting == ArmSetting::strong ? strong : opposite(strong));
  };

  if (alignment == ArmAlignment::in_place) {
    FeatureMatrix out = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const Side keep = pick(r);
      for (std::size_t c = 0; c < m.cols(); ++c)
        if (m.columns[c].side != keep) out.at(r, c) = 0.0;
    }
    return out;
  }

  using Slot = std::tuple<int, Sensor, Axis, std::size_t>;
  std::map<Slot, std::size_t> left, right;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    const auto& col = m.columns[c];
    (col.side == Side::left ? left : right)[{col.task, col.sensor, col.axis, col.feature}] = c;
  }
  if (left.size() != right.size())
    throw Error("filter_arm: left and right channel sets differ");

  FeatureMatrix out;
  out.participant_ids = m.participant_ids;
  out.labels = m.labels;
  out.handedness = m.handedness;
  std::vector<std::pair<std::size_t, std::size_t>> sources;  // (left col, right col)
  for (std::size_t c = 0; c < m.cols(); ++c) {
    const auto& col = m.columns[c];
    if (col.side != Side::left) continue;
    const auto it = right.find({col.task, col.sensor, col.axis, col.feature});
    if (it == right.end()) throw Error("filter_arm: no right-arm counterpart for " + col.name());
    FeatureColumn rel = col;
    rel.side = setting == ArmSetting::strong ? Side::strong : Side::weak;
    out.columns.push_back(rel);
    sources.emplace_back(c, it->second);
  }
  out.values.resize(m.rows() * out.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const bool use_left = pick(r) == Side::left;
    for (std::size_t j = 0; j < sources.size(); ++j)
      out.values[r * out.cols() + j] = m.at(r, use_left ? sources[j].first : sources[j].second);
  }
  return out;
}

enum class Direction { forward, backward };

inline std::string_view to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }

struct CandidateScore {
  int group = 0;
  double mean = 0.0;
  double sd = 0.0;
};

struct SelectionStep {
  int group = -1;  ///< group added (forward) or removed (backward); -1 for the full-set start
  std::vector<int> active;
  CvReport report;
  std::vector<CandidateScore> candidates;
};

struct SelectionTrace {
  Direction direction = Direction::forward;
  ClassificationTask task = ClassificationTask::pd_vs_hc;
  std::string arm = "both";
  std::vector<SelectionStep> steps;
  std::vector<int> minimal;
  double tolerance = 0.005;
};

inline constexpr double kDefaultSubsetTolerance = 0.005;

/// Index of the smallest-cardinality entry scoring at least max - tolerance
/// (absolute units); earlier entries win among equal cardinalities.
inline std::size_t minimal_subset_index(std::span<const double> scores,
                                        std::span<const std::size_t> sizes,
                                        double tolerance = kDefaultSubsetTolerance) {
  if (scores.empty() || scores.size() != sizes.size()) throw Error("minimal_subset: bad trace");
  const double best = *std::max_element(scores.begin(), scores.end());
  const double bar = best - tolerance - 1e-12;
  std::size_t pick = scores.size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < bar) continue;
    if (pick == scores.size() || sizes[i] < sizes[pick]) pick = i;
  }
  return pick;
}

inline std::vector<int> minimal_subset(const SelectionTrace& trace,
                                       double tolerance = kDefaultSubsetTolerance) {
  if (trace.steps.empty()) throw Error("minimal_subset: empty trace");
  std::vector<double> scores;
  std::vector<std::size_t> sizes;
  for (const auto& s : trace.steps) {
    scores.push_back(s.report.mean);
    sizes.push_back(s.active.size());
  }
  return trace.steps[minimal_subset_index(scores, sizes, tolerance)].active;
}

struct SelectionOptions {
  CvPlan plan{};
  GridSpec grid{};
  EvalOptions eval{};
  double tolerance = kDefaultSubsetTolerance;
  std::string arm_label = "both";
};

namespace detail {

inline std::vector<int> sorted(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace detail

/// Greedy forward selection. Each step appends the remaining group with the
/// highest mean score (lowest id on ties). All candidates share the same
/// plan seeds, so comparisons are paired.
inline SelectionTrace forward_select(CvEngine& engine, const SelectionOptions& opt) {
  SelectionTrace t;
  t.direction = Direction::forward;
  t.task = engine.task();
  t.arm = opt.arm_label;
  t.tolerance = opt.tolerance;
  std::vector<int> remaining = engine.groups();
  if (remaining.empty()) throw Error("forward_select: no feature groups");
  std::vector<int> active;
  while (!remaining.empty()) {
    SelectionStep step;
    std::optional<CvReport> best;
    for (int g : remaining) {
      auto candidate = active;
      candidate.push_back(g);
      auto rep = engine.evaluate(candidate);
      step.candidates.push_back({g, rep.mean, rep.sd});
      if (!best || rep.mean > best->mean) {
        best = std::move(rep);
        step.group = g;
      }
    }
    active.push_back(step.group);
    std::erase(remaining, step.group);
    step.active = detail::sorted(active);
    step.report = std::move(*best);
    t.steps.push_back(std::move(step));
  }
  t.minimal = minimal_subset(t, opt.tolerance);
  return t;
}

/// Greedy backward elimination from the full set. Each step removes the group
/// whose removal leaves the best-scoring set (lowest id on ties).
inline SelectionTrace backward_select(CvEngine& engine, const SelectionOptions& opt) {
  SelectionTrace t;
  t.direction = Direction::backward;
  t.task = engine.task();
  t.arm = opt.arm_label;
  t.tolerance = opt.tolerance;
  std::vector<int> active = engine.groups();
  if (active.empty()) throw Error("backward_select: no feature groups");
  {
    SelectionStep start;
    start.active = active;
    start.report = engine.evaluate(active);
    t.steps.push_back(std::move(start));
  }
  while (active.size() > 1) {
    SelectionStep step;
    std::optional<CvReport> best;
    for (int g : active) {
      auto candidate = active;
      std::erase(candidate, g);
      auto rep = engine.evaluate(candidate);
      step.candidates.push_back({g, rep.mean, rep.sd});
      if (!best || rep.mean > best->mean) {
        best = std::move(rep);
        step.group = g;
      }
    }
    std::erase(active, step.group);
    step.active = active;
    step.report = std::move(*best);
    t.steps.push_back(std::move(step));
  }
  t.minimal = minimal_subset(t, opt.tolerance);
  return t;
}

inline SelectionTrace forward_select(const FeatureMatrix& m, ClassificationTask task,
                                     const SelectionOptions& opt) {
  CvEngine engine(m, task, opt.plan, opt.grid, opt.eval, true);
  return forward_select(engine, opt);
}

inline SelectionTrace backward_select(const FeatureMatrix& m, ClassificationTask task,
                                      const SelectionOptions& opt) {
  CvEngine engine(m, task, opt.plan, opt.grid, opt.eval, true);
  return backward_select(engine, opt);
}

struct ConsensusRow {
  int group = 0;
  int excluded = 0;
  int runs = 0;
};

/// Per group, the number of traces whose minimal subset leaves it out.
/// Sorted by exclusion count (descending), then group id.
inline std::vector<ConsensusRow> exclusion_consensus(std::span<const SelectionTrace> traces) {
  if (traces.empty()) throw Error("exclusion_consensus: no traces");
  std::map<int, ConsensusRow> rows;
  for (const auto& t : traces) {
    std::set<int> universe;
    for (const auto& s : t.steps) universe.insert(s.active.begin(), s.active.end());
    const std::set<int> kept(t.minimal.begin(), t.minimal.end());
    for (int g : universe) {
      auto& row = rows[g];
      row.group = g;
      ++row.runs;
      if (!kept.contains(g)) ++row.excluded;
    }
  }
  std::vector<ConsensusRow> out;
  for (const auto& kv : rows) out.push_back(kv.second);
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.excluded > b.excluded; });
  return out;
}

struct ArmStudyEntry {
  ClassificationTask task = ClassificationTask::pd_vs_hc;
  ArmSetting setting = ArmSetting::both;
  CvReport report;
};

/// One CV run per (task, arm setting), optionally restricted to `groups`.
inline std::vector<ArmStudyEntry> arm_study(const FeatureMatrix& m,
                                            std::span<const ClassificationTask> tasks,
                                            std::span<const ArmSetting> settings, const CvPlan& plan,
                                            const GridSpec& grid, const EvalOptions& opt = {},
                                            const std::optional<std::set<int>>& groups = std::nullopt,
                                            ArmAlignment alignment = ArmAlignment::relative) {
  if (settings.empty()) throw Error("arm_study: no arm settings");
  const FeatureMatrix base = groups ? m.select_groups(*groups) : m;
  std::vector<ArmStudyEntry> out;
  for (ArmSetting s : settings) {
    const FeatureMatrix filtered = filter_arm(base, s, alignment);
    for (ClassificationTask task : tasks) out.push_back({task, s, run_cv(filtered, task, plan, grid, opt)});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return static_cast<int>(a.task) < static_cast<int>(b.task);
  });
  return out;
}

inline json to_json(const SelectionTrace& t) {
  json steps = json::array();
  for (std::size_t k = 0; k < t.steps.size(); ++k) {
    const auto& s = t.steps[k];
    json cands = json::array();
    for (const auto& c : s.candidates) cands.push_back({{"group", c.group}, {"mean", c.mean}, {"sd", c.sd}});
    steps.push_back(json{{"step", k},
                         {"group", s.group < 0 ? json(nullptr) : json(s.group)},
                         {"active", s.active},
                         {"cardinality", s.active.size()},
                         {"mean", s.report.mean},
                         {"sd", s.report.sd},
                         {"candidates", cands},
                         {"report", to_json(s.report)}});
  }
  return json{{"direction", to_string(t.direction)},
              {"task", to_string(t.task)},
              {"arm", t.arm},
              {"tolerance", t.tolerance},
              {"minimal_subset", t.minimal},
              {"steps", steps}};
}

inline void write_selection_csv(std::ostream& os, std::span<const SelectionTrace> traces) {
  os << "task,arm,direction,step,group,cardinality,mean,sd\n";
  for (const auto& t : traces) {
    for (std::size_t k = 0; k < t.steps.size(); ++k) {
      const auto& s = t.steps[k];
      os << to_string(t.task) << ',' << t.arm << ',' << to_string(t.direction) << ',' << k << ','
         << (s.group < 0 ? std::string() : std::to_string(s.group)) << ',' << s.active.size() << ','
         << format_double(s.report.mean) << ',' << format_double(s.report.sd) << '\n';
    }
  }
}

inline json to_json(std::span<const ConsensusRow> rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"group", r.group}, {"excluded", r.excluded}, {"runs", r.runs}});
  return out;
}

inline void write_arm_study_csv(std::ostream& os, std::span<const ArmStudyEntry> entries) {
  os << "task,setting,mean,sd\n";
  for (const auto& e : entries)
    os << to_string(e.task) << ',' << to_string(e.setting) << ',' << format_double(e.report.mean)
       << ',' << format_double(e.report.sd) << '\n';
}

}  // namespace smartdx
