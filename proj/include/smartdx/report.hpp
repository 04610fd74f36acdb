#pragma once

// Summary tables in the "mean (sd)" layout and run provenance.

#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "smartdx/evaluation.hpp"
#include "smartdx/rng.hpp"

namespace smartdx {

/// Four-decimal "mean (sd)".
inline std::string format_score(double mean, double sd) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f (%.4f)", mean, sd);
  return buf;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Hash of a canonical JSON document (keys sorted by nlohmann::json).
inline std::string config_hash(const json& config) { return hex64(fnv1a(config.dump())); }

inline constexpr const char* kSummarySettings[] = {"baseline", "reduced", "right", "reduced-right"};
inline constexpr ClassificationTask kSummaryTasks[] = {
    ClassificationTask::pd_vs_hc, ClassificationTask::pddd_vs_hc, ClassificationTask::pd_vs_dd};

inline std::string setting_title(std::string_view s) {
  if (s == "baseline") return "Baseline";
  if (s == "reduced") return "Reduced task set";
  if (s == "right") return "Right arm only";
  return "Reduced task set, right arm only";
}

inline std::string task_title(ClassificationTask t) {
  switch (t) {
    case ClassificationTask::pd_vs_hc: return "PD vs. HC";
    case ClassificationTask::pddd_vs_hc: return "PD + DD vs. HC";
    case ClassificationTask::pd_vs_dd: return "PD vs. DD";
    case ClassificationTask::pd_vs_dd_vs_hc: return "PD vs. DD vs. HC";
  }
  return "?";
}

struct SummaryTable {
  std::vector<ClassificationTask> tasks;
  std::vector<std::string> settings;
  std::vector<std::vector<std::pair<double, double>>> cells;  ///< [task][setting] -> (mean, sd)

  std::string cell_text(std::size_t t, std::size_t s) const {
    return format_score(cells[t][s].first, cells[t][s].second);
  }
};

/// runs[setting][task]; every (setting, task) of the 3 x 4 layout must exist.
inline SummaryTable build_summary(const std::map<std::string, std::map<ClassificationTask, CvReport>>& runs) {
  SummaryTable t;
  t.tasks.assign(std::begin(kSummaryTasks), std::end(kSummaryTasks));
  t.settings.assign(std::begin(kSummarySettings), std::end(kSummarySettings));
  for (auto task : t.tasks) {
    std::vector<std::pair<double, double>> row;
    for (const auto& s : t.settings) {
      const auto it = runs.find(s);
      if (it == runs.end()) throw Error("report: missing run '" + s + "'");
      const auto r = it->second.find(task);
      if (r == it->second.end())
        throw Error("report: run '" + s + "' has no result for task " + std::string(to_string(task)));
      row.emplace_back(r->second.mean, r->second.sd);
    }
    t.cells.push_back(std::move(row));
  }
  return t;
}

inline json to_json(const SummaryTable& t) {
  json rows = json::array();
  for (std::size_t i = 0; i < t.tasks.size(); ++i) {
    json cells = json::object();
    for (std::size_t s = 0; s < t.settings.size(); ++s)
      cells[t.settings[s]] = {{"mean", t.cells[i][s].first}, {"sd", t.cells[i][s].second}, {"text", t.cell_text(i, s)}};
    rows.push_back({{"task", to_string(t.tasks[i])}, {"title", task_title(t.tasks[i])}, {"cells", cells}});
  }
  return {{"settings", t.settings}, {"rows", rows}};
}

inline void write_summary_csv(std::ostream& os, const SummaryTable& t) {
  os << "task";
  for (const auto& s : t.settings) os << ',' << s;
  os << '\n';
  for (std::size_t i = 0; i < t.tasks.size(); ++i) {
    os << to_string(t.tasks[i]);
    for (std::size_t s = 0; s < t.settings.size(); ++s) os << ",\"" << t.cell_text(i, s) << '"';
    os << '\n';
  }
}

inline void write_summary_markdown(std::ostream& os, const SummaryTable& t) {
  os << "| |";
  for (const auto& s : t.settings) os << ' ' << setting_title(s) << " |";
  os << "\n|---|";
  for (std::size_t s = 0; s < t.settings.size(); ++s) os << "---|";
  os << '\n';
  for (std::size_t i = 0; i < t.tasks.size(); ++i) {
    os << "| " << task_title(t.tasks[i]) << " |";
    for (std::size_t s = 0; s < t.settings.size(); ++s) os << ' ' << t.cell_text(i, s) << " |";
    os << '\n';
  }
}

}  // namespace smartdx
