// smartdx: synthetic cohorts, feature extraction, cross-validation, and the
// arm / assessment-step reduction studies from the command line.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "smartdx/smartdx.hpp"

namespace fs = std::filesystem;
using namespace smartdx;

namespace {

struct GlobalFlags {
  std::uint64_t seed = 42;
  std::string out = ".";
  unsigned jobs = 1;
  std::string manifest;
  std::string scaler_scope = "fold";
  std::string grid_scope = "nested";
};

struct EvalFlags {
  std::vector<std::string> tasks;
  std::string arm = "both";
  std::vector<int> groups;
  std::string alignment = "relative";
  std::vector<double> c_grid;
  std::vector<std::string> gamma_grid;
  std::string kernel = "rbf";
  int folds = 5;
  int repeats = 3;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw SchemaError(p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

template <typename Fn>
void write_stream(const fs::path& p, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  write_text(p, os.str());
}

json run_record(const std::string& command, const json& config, const std::string& cohort_hash,
                std::uint64_t seed, const std::vector<std::string>& outputs) {
  return {{"command", command},
          {"config", config},
          {"config_hash", config_hash(config)},
          {"cohort_hash", cohort_hash},
          {"master_seed", seed},
          {"outputs", outputs}};
}

ScalerScope parse_scaler_scope(const std::string& s) {
  if (s == "fold") return ScalerScope::fold;
  if (s == "full") return ScalerScope::full;
  throw Error("--scaler-scope must be fold or full");
}

GridScope parse_grid_scope(const std::string& s) {
  if (s == "nested") return GridScope::nested;
  if (s == "outer") return GridScope::outer;
  throw Error("--grid-scope must be nested or outer");
}

std::vector<ClassificationTask> parse_tasks(const std::vector<std::string>& names,
                                            std::vector<ClassificationTask> fallback) {
  if (names.empty()) return fallback;
  std::vector<ClassificationTask> out;
  for (const auto& n : names) {
    if (n == "all") return {std::begin(kAllTasks), std::end(kAllTasks)};
    out.push_back(parse_task(n));
  }
  return out;
}

GridSpec make_grid(const EvalFlags& f) {
  GridSpec g;
  if (!f.c_grid.empty()) g.C = f.c_grid;
  if (!f.gamma_grid.empty()) {
    g.gamma.clear();
    for (const auto& s : f.gamma_grid) g.gamma.push_back(s == "scale" ? Gamma::scaled() : Gamma::of(std::stod(s)));
  }
  if (f.kernel == "linear") g.kernel = KernelKind::linear;
  else if (f.kernel != "rbf") throw Error("--kernel must be rbf or linear");
  return g;
}

EvalOptions make_eval(const GlobalFlags& g) {
  EvalOptions o;
  o.scaler_scope = parse_scaler_scope(g.scaler_scope);
  o.grid_scope = parse_grid_scope(g.grid_scope);
  o.jobs = std::max(1u, g.jobs);
  return o;
}

CvPlan make_plan(const GlobalFlags& g, const EvalFlags& f) {
  CvPlan p;
  p.master_seed = g.seed;
  p.n_folds = f.folds;
  p.n_repeats = f.repeats;
  return p;
}

json eval_config(const GlobalFlags& g, const EvalFlags& f, const std::vector<ClassificationTask>& tasks) {
  const auto grid = make_grid(f);
  json gammas = json::array();
  for (const auto& x : grid.gamma) gammas.push_back(gamma_to_json(x));
  std::vector<std::string> task_names;
  for (auto t : tasks) task_names.emplace_back(to_string(t));
  return {{"tasks", task_names},
          {"arm", f.arm},
          {"arm_alignment", f.alignment},
          {"groups", f.groups},
          {"plan", {{"n_folds", f.folds}, {"n_repeats", f.repeats}, {"master_seed", g.seed}}},
          {"grid", {{"C", grid.C}, {"gamma", gammas}, {"kernel", f.kernel}}},
          {"scaler_scope", g.scaler_scope},
          {"grid_scope", g.grid_scope}};
}

struct LoadedFeatures {
  FeatureMatrix matrix;
  TaskManifest manifest;
  std::string cohort_hash;
};

LoadedFeatures load_features(const fs::path& dir, const GlobalFlags& g) {
  const auto meta_path = dir / "features.json";
  const auto csv_path = dir / "features.csv";
  if (!fs::exists(meta_path) || !fs::exists(csv_path))
    throw Error("no extracted features in " + dir.string() + " (run `smartdx extract` first)");
  const auto meta = read_json(meta_path);
  LoadedFeatures lf;
  lf.manifest = g.manifest.empty() ? TaskManifest::from_json(meta.at("manifest")) : load_manifest(g.manifest);
  lf.cohort_hash = meta.at("cohort_hash").get<std::string>();
  std::ifstream in(csv_path);
  lf.matrix = read_feature_csv(in, lf.manifest);
  return lf;
}

FeatureMatrix prepare(const LoadedFeatures& lf, const EvalFlags& f) {
  FeatureMatrix m = lf.matrix;
  if (!f.groups.empty()) m = m.select_groups(std::set<int>(f.groups.begin(), f.groups.end()));
  const auto alignment = f.alignment == "in_place" ? ArmAlignment::in_place : ArmAlignment::relative;
  if (f.alignment != "relative" && f.alignment != "in_place")
    throw Error("--arm-alignment must be relative or in_place");
  return filter_arm(m, parse_arm_setting(f.arm), alignment);
}

json with_provenance(json report, const json& config, const std::string& cohort_hash, std::uint64_t seed) {
  report["provenance"] = {{"config_hash", config_hash(config)}, {"cohort_hash", cohort_hash}, {"master_seed", seed}};
  return report;
}

void add_eval_flags(CLI::App* cmd, EvalFlags& f, bool single_arm) {
  if (single_arm) {
    cmd->add_option("--arm", f.arm, "Arm setting: both, left, right, strong, weak");
  }
  cmd->add_option("--groups", f.groups, "Restrict to these assessment steps (feature groups)")->delimiter(',');
  cmd->add_option("--arm-alignment", f.alignment, "strong/weak column layout: relative or in_place");
  cmd->add_option("--c-grid", f.c_grid, "Override the C grid")->delimiter(',');
  cmd->add_option("--gamma-grid", f.gamma_grid, "Override the gamma grid (numbers or 'scale')")->delimiter(',');
  cmd->add_option("--kernel", f.kernel, "rbf or linear");
  cmd->add_option("--folds", f.folds, "Outer folds");
  cmd->add_option("--repeats", f.repeats, "Outer repeats");
}

int cmd_synth(const GlobalFlags& g, int n, double fs_hz, const std::string& spec_file, double asymmetry,
              const std::string& dominant) {
  CohortSpec spec;
  if (!spec_file.empty()) {
    json j = read_json(spec_file);
    if (!j.contains("seed")) j["seed"] = g.seed;
    if (!j.contains("n")) j["n"] = n;
    spec = spec_from_json(j);
  } else {
    spec = spec_from_table1(n, g.seed);
  }
  if (fs_hz > 0.0) spec.sampling_rate_hz = fs_hz;
  if (asymmetry >= 0.0) spec.asymmetry = asymmetry;
  if (!dominant.empty()) spec.dominant_arm = parse_dominant_arm_policy(dominant);
  if (!g.manifest.empty()) spec.manifest = load_manifest(g.manifest);
  const auto cohort = generate_cohort(spec);
  write_cohort(cohort, g.out);
  const json config = spec_to_json(spec);
  write_json(fs::path(g.out) / "run.json",
             run_record("synth", config, "", spec.seed, {"manifest.json", "ground_truth.json"}));
  std::cout << "wrote " << cohort.sessions.size() << " sessions to " << g.out << "\n";
  return 0;
}

int cmd_extract(const GlobalFlags& g, const std::string& cohort_dir) {
  const fs::path dir(cohort_dir);
  const auto manifest_path = g.manifest.empty() ? dir / "manifest.json" : fs::path(g.manifest);
  const auto manifest = load_manifest(manifest_path);
  const auto files = cohort_files(dir);

  std::uint64_t h = fnv1a(read_file(manifest_path));
  for (const auto& f : files) {
    h = fnv1a(f.filename().string(), h);
    h = fnv1a(read_file(f), h);
  }
  const std::string cohort_hash = hex64(h);

  std::vector<RecordingSession> sessions(files.size());
  parallel_for(files.size(), std::max(1u, g.jobs), [&](std::size_t i) {
    sessions[i] = split_long_records(load_session(files[i], manifest), manifest);
  });
  if (!sessions.empty()) {
    for (const auto& s : sessions)
      if (s.sampling_rate_hz != sessions.front().sampling_rate_hz)
        throw ValidationError("cohort mixes sampling rates ('" + s.participant_id + "')");
  }
  const auto matrix = build_feature_matrix(sessions, manifest, {}, std::max(1u, g.jobs));

  fs::create_directories(g.out);
  write_stream(fs::path(g.out) / "features.csv", [&](std::ostream& os) { write_feature_csv(os, matrix); });
  write_json(fs::path(g.out) / "features.json",
             {{"cohort_hash", cohort_hash},
              {"manifest", manifest.to_json()},
              {"rows", matrix.rows()},
              {"columns", matrix.cols()},
              {"sampling_rate_hz", sessions.empty() ? 0.0 : sessions.front().sampling_rate_hz}});
  const json config = {{"cohort", fs::absolute(dir).lexically_normal().string()}, {"manifest", manifest.to_json()}};
  write_json(fs::path(g.out) / "run.json",
             run_record("extract", config, cohort_hash, g.seed, {"features.csv", "features.json"}));
  std::cout << "extracted " << matrix.rows() << " x " << matrix.cols() << " features\n";
  return 0;
}

int cmd_cv(const GlobalFlags& g, const EvalFlags& f, const std::string& features, bool save_model) {
  const auto lf = load_features(features, g);
  const auto tasks = parse_tasks(f.tasks, {ClassificationTask::pd_vs_hc});
  const auto m = prepare(lf, f);
  const auto grid = make_grid(f);
  const auto plan = make_plan(g, f);
  const auto opt = make_eval(g);
  const json config = eval_config(g, f, tasks);
  fs::create_directories(g.out);
  std::vector<std::string> outputs;
  for (auto task : tasks) {
    const auto rep = run_cv(m, task, plan, grid, opt);
    const std::string stem = "cv_" + std::string(to_string(task));
    write_json(fs::path(g.out) / (stem + ".json"), with_provenance(to_json(rep), config, lf.cohort_hash, g.seed));
    write_stream(fs::path(g.out) / (stem + ".csv"), [&](std::ostream& os) { write_cv_csv(os, rep); });
    outputs.push_back(stem + ".json");
    outputs.push_back(stem + ".csv");
    std::cout << to_string(task) << ": " << format_score(rep.mean, rep.sd)
              << (rep.all_converged() ? "" : "  [some models hit the iteration cap]") << "\n";
    if (save_model) {
      const auto choice = grid_search(m, task, grid, derive_seed(g.seed, "final-model"), opt);
      const auto targets = task_targets(task, m.labels);
      const auto scaler = fit_scaler(m, targets.rows);
      const auto scaled = apply_scaler(scaler, m, targets.rows);
      DenseMatrix x(scaled.rows(), scaled.cols());
      x.data = scaled.values;
      SvmConfig cfg;
      cfg.C = choice.cell.C;
      cfg.kernel = {grid.kernel, choice.cell.gamma};
      cfg.tolerance = opt.tolerance;
      const auto model = train_multiclass(x, targets.y, cfg);
      json mj = model_to_json(model);
      mj["class_names"] = targets.class_names;
      mj["scaler"] = {{"mean", scaler.mean}, {"sd", scaler.sd}};
      std::vector<std::string> names;
      for (const auto& c : m.columns) names.push_back(c.name());
      mj["columns"] = names;
      write_json(fs::path(g.out) / ("model_" + std::string(to_string(task)) + ".json"), mj);
      outputs.push_back("model_" + std::string(to_string(task)) + ".json");
    }
  }
  write_json(fs::path(g.out) / "run.json", run_record("cv", config, lf.cohort_hash, g.seed, outputs));
  return 0;
}

int cmd_arm_study(const GlobalFlags& g, const EvalFlags& f, const std::string& features,
                  const std::vector<std::string>& setting_names) {
  const auto lf = load_features(features, g);
  const auto tasks = parse_tasks(f.tasks, {std::begin(kAllTasks), std::end(kAllTasks)});
  std::vector<ArmSetting> settings;
  for (const auto& s : setting_names) settings.push_back(parse_arm_setting(s));
  if (settings.empty()) settings.assign(std::begin(kAllArmSettings), std::end(kAllArmSettings));
  std::optional<std::set<int>> groups;
  if (!f.groups.empty()) groups = std::set<int>(f.groups.begin(), f.groups.end());
  const auto alignment = f.alignment == "in_place" ? ArmAlignment::in_place : ArmAlignment::relative;
  const auto entries = arm_study(lf.matrix, tasks, settings, make_plan(g, f), make_grid(f), make_eval(g), groups, alignment);

  json config = eval_config(g, f, tasks);
  std::vector<std::string> names;
  for (auto s : settings) names.emplace_back(to_string(s));
  config["settings"] = names;
  config.erase("arm");
  json table = json::array();
  for (const auto& e : entries)
    table.push_back({{"task", to_string(e.task)}, {"setting", to_string(e.setting)}, {"mean", e.report.mean},
                     {"sd", e.report.sd}, {"text", format_score(e.report.mean, e.report.sd)},
                     {"report", to_json(e.report)}});
  fs::create_directories(g.out);
  write_json(fs::path(g.out) / "arm_study.json",
             {{"entries", table},
              {"provenance", {{"config_hash", config_hash(config)}, {"cohort_hash", lf.cohort_hash}, {"master_seed", g.seed}}}});
  write_stream(fs::path(g.out) / "arm_study.csv", [&](std::ostream& os) { write_arm_study_csv(os, entries); });
  write_json(fs::path(g.out) / "run.json",
             run_record("arm-study", config, lf.cohort_hash, g.seed, {"arm_study.json", "arm_study.csv"}));
  for (const auto& e : entries)
    std::cout << to_string(e.task) << " " << to_string(e.setting) << ": " << format_score(e.report.mean, e.report.sd) << "\n";
  return 0;
}

int cmd_select_groups(const GlobalFlags& g, const EvalFlags& f, const std::string& features,
                      const std::string& direction, const std::vector<std::string>& arms, double tolerance) {
  if (direction != "forward" && direction != "backward" && direction != "both")
    throw Error("--direction must be forward, backward, or both");
  const auto lf = load_features(features, g);
  const auto tasks = parse_tasks(f.tasks, {ClassificationTask::pd_vs_hc});
  const std::vector<std::string> arm_list = arms.empty() ? std::vector<std::string>{"both"} : arms;
  std::vector<SelectionTrace> traces;
  std::vector<std::string> outputs;
  fs::create_directories(g.out);
  json config = eval_config(g, f, tasks);
  config["arms"] = arm_list;
  config["direction"] = direction;
  config["tolerance"] = tolerance;
  config.erase("arm");

  for (const auto& arm : arm_list) {
    EvalFlags af = f;
    af.arm = arm;
    const auto m = prepare(lf, af);
    for (auto task : tasks) {
      SelectionOptions so;
      so.plan = make_plan(g, f);
      so.grid = make_grid(f);
      so.eval = make_eval(g);
      so.tolerance = tolerance;
      so.arm_label = arm;
      CvEngine engine(m, task, so.plan, so.grid, so.eval, true);
      for (auto dir : {Direction::forward, Direction::backward}) {
        if (direction != "both" && direction != to_string(dir)) continue;
        auto trace = dir == Direction::forward ? forward_select(engine, so) : backward_select(engine, so);
        const std::string name = "selection_" + std::string(to_string(task)) + "_" + arm + "_" +
                                 std::string(to_string(dir)) + ".json";
        json tj = to_json(trace);
        tj["provenance"] = {{"config_hash", config_hash(config)}, {"cohort_hash", lf.cohort_hash}, {"master_seed", g.seed}};
        write_json(fs::path(g.out) / name, tj);
        outputs.push_back(name);
        std::cout << to_string(task) << " " << arm << " " << to_string(dir) << ": minimal subset {";
        for (std::size_t i = 0; i < trace.minimal.size(); ++i) std::cout << (i ? "," : "") << trace.minimal[i];
        std::cout << "}\n";
        traces.push_back(std::move(trace));
      }
    }
  }
  write_stream(fs::path(g.out) / "selection.csv", [&](std::ostream& os) { write_selection_csv(os, traces); });
  const auto consensus = exclusion_consensus(traces);
  write_json(fs::path(g.out) / "consensus.json", to_json(consensus));
  write_stream(fs::path(g.out) / "consensus.csv", [&](std::ostream& os) {
    os << "group,excluded,runs\n";
    for (const auto& r : consensus) os << r.group << ',' << r.excluded << ',' << r.runs << '\n';
  });
  outputs.insert(outputs.end(), {"selection.csv", "consensus.json", "consensus.csv"});
  write_json(fs::path(g.out) / "run.json", run_record("select-groups", config, lf.cohort_hash, g.seed, outputs));
  return 0;
}

int cmd_report(const GlobalFlags& g, const std::map<std::string, std::string>& dirs) {
  std::map<std::string, std::map<ClassificationTask, CvReport>> runs;
  std::string cohort;
  for (const auto& [setting, dir] : dirs) {
    if (dir.empty()) throw Error("report: missing run '" + setting + "' (pass --" + setting + " DIR)");
    for (auto task : kSummaryTasks) {
      const auto path = fs::path(dir) / ("cv_" + std::string(to_string(task)) + ".json");
      if (!fs::exists(path))
        throw Error("report: run '" + setting + "' has no result for task " + std::string(to_string(task)) +
                    " (" + path.string() + ")");
      const auto j = read_json(path);
      const auto hash = j.at("provenance").at("cohort_hash").get<std::string>();
      if (cohort.empty()) cohort = hash;
      if (hash != cohort)
        throw Error("report: run '" + setting + "' comes from a different cohort (" + hash + " vs " + cohort + ")");
      runs[setting][task] = cv_report_from_json(j);
    }
  }
  const auto table = build_summary(runs);
  fs::create_directories(g.out);
  write_json(fs::path(g.out) / "summary.json", to_json(table));
  write_stream(fs::path(g.out) / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, table); });
  write_stream(fs::path(g.out) / "summary.md", [&](std::ostream& os) { write_summary_markdown(os, table); });
  json config = json::object();
  for (const auto& [s, d] : dirs) config[s] = d;
  write_json(fs::path(g.out) / "run.json",
             run_record("report", config, cohort, g.seed, {"summary.json", "summary.csv", "summary.md"}));
  write_summary_markdown(std::cout, table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smartdx: smartwatch movement-disorder screening pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--jobs", g.jobs, "Worker threads (results do not depend on it)");
  app.add_option("--manifest", g.manifest, "Task manifest JSON (overrides the cohort's)");
  app.add_option("--scaler-scope", g.scaler_scope, "fold or full");
  app.add_option("--grid-scope", g.grid_scope, "nested or outer");

  int n = 150;
  double fs_hz = 0.0, asymmetry = -1.0;
  std::string spec_file, dominant;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  synth->add_option("--n", n, "Number of participants");
  synth->add_option("--fs", fs_hz, "Sampling rate in Hz (default 50)");
  synth->add_option("--spec", spec_file, "Cohort spec JSON");
  synth->add_option("--asymmetry", asymmetry, "Signal scale on the non-dominant arm, in [0, 1]");
  synth->add_option("--dominant-arm", dominant, "random, left, right, strong, or weak");

  std::string cohort_dir;
  auto* extract = app.add_subcommand("extract", "Featurize a cohort directory");
  extract->add_option("--cohort", cohort_dir, "Cohort directory")->required();

  EvalFlags ef;
  std::string features;
  bool save_model = false;
  auto* cv = app.add_subcommand("cv", "Repeated stratified cross-validation");
  cv->add_option("--features", features, "Directory written by extract")->required();
  cv->add_option("--task", ef.tasks, "pd-vs-hc, pddd-vs-hc, pd-vs-dd, pd-vs-dd-vs-hc, or all");
  cv->add_flag("--save-model", save_model, "Also fit and save a model on all rows");
  add_eval_flags(cv, ef, true);

  std::vector<std::string> settings;
  auto* arm = app.add_subcommand("arm-study", "Compare arm settings");
  arm->add_option("--features", features, "Directory written by extract")->required();
  arm->add_option("--task", ef.tasks, "Tasks (default all)");
  arm->add_option("--settings", settings, "Arm settings (default all five)")->delimiter(',');
  add_eval_flags(arm, ef, false);

  std::string direction = "both";
  std::vector<std::string> arms;
  double tolerance = kDefaultSubsetTolerance;
  auto* sel = app.add_subcommand("select-groups", "Greedy assessment-step selection");
  sel->add_option("--features", features, "Directory written by extract")->required();
  sel->add_option("--task", ef.tasks, "Tasks (default pd-vs-hc)");
  sel->add_option("--direction", direction, "forward, backward, or both");
  sel->add_option("--arm", arms, "Arm settings to run (default both)")->delimiter(',');
  sel->add_option("--tolerance", tolerance, "Minimal-subset tolerance (absolute)");
  add_eval_flags(sel, ef, false);

  std::map<std::string, std::string> runs{{"baseline", ""}, {"reduced", ""}, {"right", ""}, {"reduced-right", ""}};
  auto* rep = app.add_subcommand("report", "Summary table from four cv runs");
  for (auto& [k, v] : runs) rep->add_option("--" + k, v, "cv output directory for the " + k + " run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(g, n, fs_hz, spec_file, asymmetry, dominant);
    if (*extract) return cmd_extract(g, cohort_dir);
    if (*cv) return cmd_cv(g, ef, features, save_model);
    if (*arm) return cmd_arm_study(g, ef, features, settings);
    if (*sel) return cmd_select_groups(g, ef, features, direction, arms, tolerance);
    if (*rep) return cmd_report(g, runs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
