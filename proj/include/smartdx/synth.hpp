#pragma once

// Seeded synthetic cohorts. Every channel is power-law ("1/f^beta") noise;
// class signal is added as windowed sinusoids on configured assessment
// steps. Every step also carries task-driven voluntary movement whose
// amplitude varies between participants; on a subset of steps it is reduced
// for PD and DD participants. Steps without any class effect are noise with
// respect to the diagnosis.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "smartdx/data_model.hpp"
#include "smartdx/error.hpp"
#include "smartdx/rng.hpp"

namespace smartdx {

struct Band {
  double lo = 0.0;
  double hi = 0.0;
};

/// Narrowband oscillation carried by participants of `labels` on `tasks`.
/// Amplitudes are multiples of the channel's noise scale.
struct SignalEffect {
  std::string name;
  std::set<DiagnosisLabel> labels;
  Band band;
  double amplitude = 3.0;
  double amplitude_sd = 0.5;
  std::set<int> tasks;
  double expression_probability = 1.0;
};

/// Task-driven movement present for every class on `tasks`, drawn per
/// participant and step. On `reduced_tasks`, `class_factor` scales its
/// amplitude per diagnosis, independently per step with probability
/// `expression_probability`.
struct MovementComponent {
  std::set<int> tasks;
  std::set<int> reduced_tasks;
  Band band{1.0, 2.5};
  double amplitude = 4.0;
  double amplitude_sd = 0.4;
  std::map<DiagnosisLabel, double> class_factor{
      {DiagnosisLabel::PD, 0.1}, {DiagnosisLabel::DD, 0.1}, {DiagnosisLabel::HC, 1.0}};
  double expression_probability = 0.5;
};

/// Which arm carries the full-strength class signal.
enum class DominantArmPolicy { random, left, right, strong, weak };

inline std::string_view to_string(DominantArmPolicy p) {
  switch (p) {
    case DominantArmPolicy::random: return "random";
    case DominantArmPolicy::left: return "left";
    case DominantArmPolicy::right: return "right";
    case DominantArmPolicy::strong: return "strong";
    case DominantArmPolicy::weak: return "weak";
  }
  return "?";
}

inline DominantArmPolicy parse_dominant_arm_policy(std::string_view s) {
  for (auto p : {DominantArmPolicy::random, DominantArmPolicy::left, DominantArmPolicy::right,
                 DominantArmPolicy::strong, DominantArmPolicy::weak})
    if (to_string(p) == s) return p;
  throw SchemaError("unknown dominant arm policy '" + std::string(s) + "'");
}

struct CohortCell {
  DiagnosisLabel label = DiagnosisLabel::PD;
  Handedness handedness = Handedness::right;
  int count = 0;
};

struct CohortSpec {
  std::vector<CohortCell> counts;
  double sampling_rate_hz = 50.0;
  std::uint64_t seed = 42;
  TaskManifest manifest{};
  double noise_exponent = 1.0;
  double accelerometer_noise_scale = 0.05;  ///< m/s^2
  double gyroscope_noise_scale = 0.02;      ///< rad/s
  std::vector<SignalEffect> effects;
  MovementComponent movement;
  double asymmetry = 0.5;  ///< signal scale on the non-dominant arm
  DominantArmPolicy dominant_arm = DominantArmPolicy::random;
  double frequency_jitter_hz = 0.1;
  bool express_at_least_one = true;
  double quantum = 1e-6;

  int total() const {
    int n = 0;
    for (const auto& c : counts) n += c.count;
    return n;
  }

  void validate() const {
    if (!(sampling_rate_hz > 0.0)) throw ValidationError("cohort spec: sampling rate must be positive");
    const double nyquist = sampling_rate_hz / 2.0;
    for (const auto& c : counts)
      if (c.count < 0) throw ValidationError("cohort spec: negative count");
    if (!(asymmetry >= 0.0 && asymmetry <= 1.0))
      throw ValidationError("cohort spec: asymmetry must be in [0, 1]");
    if (!(accelerometer_noise_scale > 0.0) || !(gyroscope_noise_scale > 0.0))
      throw ValidationError("cohort spec: noise scales must be positive");
    auto check_band = [&](const Band& b, const std::string& what) {
      if (!(b.lo > 0.0 && b.hi >= b.lo && b.hi < nyquist))
        throw ValidationError("cohort spec: band of " + what + " must lie within (0, fs/2)");
    };
    auto check_tasks = [&](const std::set<int>& tasks, const std::string& what) {
      for (int t : tasks)
        if (t < 1 || t > manifest.raw_task_count())
          throw ValidationError("cohort spec: " + what + " refers to unknown task " + std::to_string(t));
    };
    for (const auto& e : effects) {
      check_band(e.band, e.name);
      check_tasks(e.tasks, e.name);
      if (e.amplitude < 0.0 || e.amplitude_sd < 0.0)
        throw ValidationError("cohort spec: effect " + e.name + " has negative amplitude");
      if (!(e.expression_probability >= 0.0 && e.expression_probability <= 1.0))
        throw ValidationError("cohort spec: effect " + e.name + " expression probability outside [0, 1]");
    }
    check_band(movement.band, "movement");
    check_tasks(movement.tasks, "movement");
    check_tasks(movement.reduced_tasks, "movement");
    for (int t : movement.reduced_tasks)
      if (!movement.tasks.contains(t))
        throw ValidationError("cohort spec: movement reduced on step " + std::to_string(t) + " where it is absent");
    if (!(movement.expression_probability >= 0.0 && movement.expression_probability <= 1.0))
      throw ValidationError("cohort spec: movement expression probability outside [0, 1]");
  }

  /// Steps carrying no class-dependent signal.
  std::set<int> noise_tasks() const {
    std::set<int> out;
    for (int t = 1; t <= manifest.raw_task_count(); ++t) out.insert(t);
    for (const auto& e : effects)
      for (int t : e.tasks) out.erase(t);
    for (int t : movement.reduced_tasks) out.erase(t);
    return out;
  }
};

/// Default effect placement: PD tremor on 4 steps, DD tremor on 3 steps
/// overlapping PD on one, reduced movement on steps 2, 7 and 11, steps 4
/// and 9 without class signal.
inline void apply_default_effects(CohortSpec& spec) {
  spec.effects = {
      SignalEffect{"pd_tremor", {DiagnosisLabel::PD}, {4.0, 6.0}, 15.0, 3.75, {1, 3, 5, 8}, 0.5},
      SignalEffect{"dd_tremor", {DiagnosisLabel::DD}, {6.5, 9.0}, 15.0, 3.75, {3, 6, 10}, 0.5},
  };
  spec.movement.tasks.clear();
  for (int t = 1; t <= spec.manifest.raw_task_count(); ++t) spec.movement.tasks.insert(t);
  spec.movement.reduced_tasks = {2, 7, 11};
}

/// Cohort counts: PD 262/17, DD 122/12, HC 80/11 (right/left).
inline constexpr int kTable1[3][2] = {{262, 17}, {122, 12}, {80, 11}};

namespace detail {

/// Largest-remainder apportionment of `total` over `weights`; ties go to
/// the earlier entry.
inline std::vector<int> apportion(int total, const std::vector<double>& weights) {
  double sum = 0.0;
  for (double w : weights) sum += w;
  std::vector<int> out(weights.size(), 0);
  std::vector<std::pair<double, std::size_t>> frac;
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double q = sum > 0.0 ? total * weights[i] / sum : 0.0;
    out[i] = static_cast<int>(std::floor(q));
    assigned += out[i];
    frac.emplace_back(q - out[i], i);
  }
  std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; k < total - assigned; ++k) ++out[frac[static_cast<std::size_t>(k)].second];
  return out;
}

}  // namespace detail

/// Counts proportional to the reference cohort, scaled to N. Every class
/// receives at least one participant.
inline CohortSpec spec_from_table1(int n, std::uint64_t seed) {
  if (n < 3) throw ValidationError("spec_from_table1: need N >= 3 to cover all classes");
  std::vector<double> class_w;
  for (const auto& row : kTable1) class_w.push_back(row[0] + row[1]);
  auto per_class = detail::apportion(n, class_w);
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    while (per_class[c] == 0) {
      const auto donor = std::max_element(per_class.begin(), per_class.end());
      --*donor;
      ++per_class[c];
    }
  }
  CohortSpec spec;
  spec.seed = seed;
  for (std::size_t c = 0; c < 3; ++c) {
    const auto split = detail::apportion(per_class[c], {static_cast<double>(kTable1[c][0]),
                                                        static_cast<double>(kTable1[c][1])});
    spec.counts.push_back({kAllLabels[c], Handedness::right, split[0]});
    spec.counts.push_back({kAllLabels[c], Handedness::left, split[1]});
  }
  apply_default_effects(spec);
  return spec;
}

/// Power-law noise by fractional-difference (Kasdin) filtering of white
/// noise, normalized to unit variance. Accurate above about fs/taps.
inline std::vector<double> power_law_noise(Rng& rng, std::size_t n, double exponent,
                                           std::size_t taps = 64) {
  std::vector<double> h(taps);
  h[0] = 1.0;
  for (std::size_t k = 1; k < taps; ++k)
    h[k] = h[k - 1] * (static_cast<double>(k) - 1.0 + exponent / 2.0) / static_cast<double>(k);
  double norm = 0.0;
  for (double v : h) norm += v * v;
  norm = std::sqrt(norm);
  std::vector<double> white(n + taps);
  for (double& w : white) w = rng.normal();
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    double s = 0.0;
    const std::size_t at = t + taps;
    for (std::size_t k = 0; k < taps; ++k) s += h[k] * white[at - k];
    out[t] = s / norm;
  }
  return out;
}

/// Tukey taper with 10% cosine ramps at each end.
inline double taper(std::size_t t, std::size_t n) {
  const double ramp = 0.1 * static_cast<double>(n);
  const double x = static_cast<double>(t);
  if (ramp <= 0.0) return 1.0;
  if (x < ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * x / ramp);
  const double tail = static_cast<double>(n - 1) - x;
  if (tail < ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * tail / ramp);
  return 1.0;
}

struct Cohort {
  CohortSpec spec;
  std::vector<RecordingSession> sessions;  ///< raw (unsplit)
  json ground_truth;
};

namespace detail {

struct Oscillator {
  double amplitude = 0.0;
  double frequency = 0.0;
  double axis_weight[3] = {1.0, 1.0, 1.0};
};

inline void draw_axis_weights(Rng& rng, double (&w)[3]) {
  double norm = 0.0;
  for (double& v : w) {
    v = rng.uniform(0.6, 1.4);
    norm += v * v;
  }
  norm = std::sqrt(norm / 3.0);
  for (double& v : w) v /= norm;
}

}  // namespace detail

inline json spec_to_json(const CohortSpec& s);

inline Cohort generate_cohort(const CohortSpec& spec) {
  spec.validate();
  Cohort cohort;
  cohort.spec = spec;
  const double fs = spec.sampling_rate_hz;
  const std::size_t window = samples_per_window(fs);
  json participants = json::array();

  int index = 0;
  for (const auto& cell : spec.counts) {
    for (int k = 0; k < cell.count; ++k, ++index) {
      const std::uint64_t pseed = derive_seed(spec.seed, "participant", {static_cast<std::uint64_t>(index)});
      Rng rng(pseed);
      RecordingSession s;
      char id[16];
      std::snprintf(id, sizeof id, "P%04d", index + 1);
      s.participant_id = id;
      s.label = cell.label;
      s.handedness = cell.handedness;
      s.sampling_rate_hz = fs;

      Arm dominant = Arm::right;
      switch (spec.dominant_arm) {
        case DominantArmPolicy::random: dominant = rng.bernoulli(0.5) ? Arm::right : Arm::left; break;
        case DominantArmPolicy::left: dominant = Arm::left; break;
        case DominantArmPolicy::right: dominant = Arm::right; break;
        case DominantArmPolicy::strong: dominant = strong_arm(cell.handedness); break;
        case DominantArmPolicy::weak: dominant = opposite(strong_arm(cell.handedness)); break;
      }

      std::vector<std::pair<detail::Oscillator, std::set<int>>> active;
      std::vector<std::string> active_names;
      for (const auto& e : spec.effects) {
        if (!e.labels.contains(cell.label)) continue;
        detail::Oscillator osc;
        osc.amplitude = std::max(0.0, rng.normal(e.amplitude, e.amplitude_sd));
        osc.frequency = rng.uniform(e.band.lo, e.band.hi);
        detail::draw_axis_weights(rng, osc.axis_weight);
        std::set<int> expressed;
        for (int t : e.tasks)
          if (rng.bernoulli(e.expression_probability)) expressed.insert(t);
        active.emplace_back(osc, std::move(expressed));
        active_names.push_back(e.name);
      }
      const auto factor_it = spec.movement.class_factor.find(cell.label);
      const double class_factor = factor_it == spec.movement.class_factor.end() ? 1.0 : factor_it->second;
      std::set<int> move_reduced;
      if (class_factor != 1.0)
        for (int t : spec.movement.reduced_tasks)
          if (rng.bernoulli(spec.movement.expression_probability)) move_reduced.insert(t);

      if (spec.express_at_least_one) {
        // (effect index or active.size() for movement, task)
        std::vector<std::pair<std::size_t, int>> slots;
        std::size_t expressed = move_reduced.size();
        for (const auto& a : active) expressed += a.second.size();
        for (std::size_t k = 0, e = 0; e < spec.effects.size(); ++e) {
          if (!spec.effects[e].labels.contains(cell.label)) continue;
          for (int t : spec.effects[e].tasks) slots.emplace_back(k, t);
          ++k;
        }
        if (class_factor != 1.0)
          for (int t : spec.movement.reduced_tasks) slots.emplace_back(active.size(), t);
        if (expressed == 0 && !slots.empty()) {
          const auto [k, t] = slots[static_cast<std::size_t>(rng.below(slots.size()))];
          (k == active.size() ? move_reduced : active[k].second).insert(t);
        }
      }

      json truth_effects = json::array();
      for (std::size_t k = 0; k < active.size(); ++k) {
        const auto& [osc, expressed] = active[k];
        truth_effects.push_back({{"name", active_names[k]},
                                 {"amplitude", osc.amplitude},
                                 {"frequency_hz", osc.frequency},
                                 {"expressed_tasks", std::vector<int>(expressed.begin(), expressed.end())}});
      }

      for (int task = 1; task <= spec.manifest.raw_task_count(); ++task) {
        const std::size_t n = window * (spec.manifest.is_long(task) ? 2 : 1);
        detail::Oscillator move;
        move.amplitude = std::max(0.0, rng.normal(spec.movement.amplitude, spec.movement.amplitude_sd));
        move.frequency = rng.uniform(spec.movement.band.lo, spec.movement.band.hi);
        detail::draw_axis_weights(rng, move.axis_weight);
        for (Arm arm : kAllArms) {
          const double arm_scale = arm == dominant ? 1.0 : spec.asymmetry;
          const double move_factor =
              move_reduced.contains(task) ? 1.0 - (1.0 - class_factor) * arm_scale : 1.0;
          for (Sensor sensor : kAllSensors) {
            const double scale = sensor == Sensor::accelerometer ? spec.accelerometer_noise_scale
                                                                 : spec.gyroscope_noise_scale;
            for (Axis axis : kAllAxes) {
              const auto ai = static_cast<std::size_t>(axis);
              Rng crng(derive_seed(pseed, "channel",
                                   {static_cast<std::uint64_t>(task), static_cast<std::uint64_t>(arm),
                                    static_cast<std::uint64_t>(sensor), ai}));
              auto x = power_law_noise(crng, n, spec.noise_exponent);
              auto add = [&](const detail::Oscillator& osc, double amp) {
                if (amp <= 0.0) return;
                const double f = osc.frequency + crng.uniform(-spec.frequency_jitter_hz, spec.frequency_jitter_hz);
                const double phase = crng.uniform(0.0, 2.0 * std::numbers::pi);
                for (std::size_t t = 0; t < n; ++t)
                  x[t] += amp * taper(t, n) *
                          std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t) / fs + phase);
              };
              for (const auto& [osc, expressed] : active)
                if (expressed.contains(task)) add(osc, osc.amplitude * arm_scale * osc.axis_weight[ai]);
              if (spec.movement.tasks.contains(task))
                add(move, move.amplitude * move_factor * move.axis_weight[ai]);
              for (double& v : x) {
                v *= scale;
                if (spec.quantum > 0.0) v = std::round(v / spec.quantum) * spec.quantum;
              }
              s.channels.emplace(ChannelKey{task, arm, sensor, axis}, std::move(x));
            }
          }
        }
      }
      participants.push_back({{"participant_id", s.participant_id},
                              {"label", to_string(s.label)},
                              {"handedness", to_string(s.handedness)},
                              {"dominant_signal_arm", to_string(dominant)},
                              {"movement_factor", class_factor},
                              {"movement_reduced_tasks", std::vector<int>(move_reduced.begin(), move_reduced.end())},
                              {"effects", truth_effects}});
      cohort.sessions.push_back(std::move(s));
    }
  }

  json effect_tasks = json::object();
  for (const auto& e : spec.effects) effect_tasks[e.name] = std::vector<int>(e.tasks.begin(), e.tasks.end());
  const auto noise = spec.noise_tasks();
  cohort.ground_truth = {{"effect_tasks", effect_tasks},
                         {"movement_tasks", std::vector<int>(spec.movement.tasks.begin(), spec.movement.tasks.end())},
                         {"movement_reduced_tasks",
                          std::vector<int>(spec.movement.reduced_tasks.begin(), spec.movement.reduced_tasks.end())},
                         {"noise_tasks", std::vector<int>(noise.begin(), noise.end())},
                         {"spec", spec_to_json(spec)},
                         {"participants", participants}};
  return cohort;
}

inline json spec_to_json(const CohortSpec& s) {
  json counts = json::array();
  for (const auto& c : s.counts)
    counts.push_back({{"label", to_string(c.label)}, {"handedness", to_string(c.handedness)}, {"count", c.count}});
  json effects = json::array();
  for (const auto& e : s.effects) {
    std::vector<std::string> labels;
    for (auto l : e.labels) labels.emplace_back(to_string(l));
    effects.push_back({{"name", e.name},
                       {"labels", labels},
                       {"band_hz", {e.band.lo, e.band.hi}},
                       {"amplitude", e.amplitude},
                       {"amplitude_sd", e.amplitude_sd},
                       {"tasks", std::vector<int>(e.tasks.begin(), e.tasks.end())},
                       {"expression_probability", e.expression_probability}});
  }
  json factors = json::object();
  for (const auto& [l, f] : s.movement.class_factor) factors[std::string(to_string(l))] = f;
  return {{"counts", counts},
          {"sampling_rate_hz", s.sampling_rate_hz},
          {"seed", s.seed},
          {"manifest", s.manifest.to_json()},
          {"noise_exponent", s.noise_exponent},
          {"accelerometer_noise_scale", s.accelerometer_noise_scale},
          {"gyroscope_noise_scale", s.gyroscope_noise_scale},
          {"effects", effects},
          {"movement",
           {{"tasks", std::vector<int>(s.movement.tasks.begin(), s.movement.tasks.end())},
            {"reduced_tasks", std::vector<int>(s.movement.reduced_tasks.begin(), s.movement.reduced_tasks.end())},
            {"band_hz", {s.movement.band.lo, s.movement.band.hi}},
            {"amplitude", s.movement.amplitude},
            {"amplitude_sd", s.movement.amplitude_sd},
            {"class_factor", factors},
            {"expression_probability", s.movement.expression_probability}}},
          {"asymmetry", s.asymmetry},
          {"dominant_arm", to_string(s.dominant_arm)},
          {"frequency_jitter_hz", s.frequency_jitter_hz},
          {"express_at_least_one", s.express_at_least_one},
          {"quantum", s.quantum}};
}

/// Reads a spec document. Missing fields keep the defaults of
/// spec_from_table1(n, seed) where `n` defaults to 150.
inline CohortSpec spec_from_json(const json& j) {
  try {
    CohortSpec s = spec_from_table1(j.value("n", 150), j.value("seed", std::uint64_t{42}));
    if (j.contains("counts")) {
      s.counts.clear();
      for (const auto& c : j.at("counts"))
        s.counts.push_back({parse_label(c.at("label").get<std::string>()),
                            parse_handedness(c.at("handedness").get<std::string>()), c.at("count").get<int>()});
    }
    s.sampling_rate_hz = j.value("sampling_rate_hz", s.sampling_rate_hz);
    if (j.contains("manifest")) s.manifest = TaskManifest::from_json(j.at("manifest"));
    s.noise_exponent = j.value("noise_exponent", s.noise_exponent);
    s.accelerometer_noise_scale = j.value("accelerometer_noise_scale", s.accelerometer_noise_scale);
    s.gyroscope_noise_scale = j.value("gyroscope_noise_scale", s.gyroscope_noise_scale);
    if (j.contains("effects")) {
      s.effects.clear();
      for (const auto& e : j.at("effects")) {
        SignalEffect eff;
        eff.name = e.at("name").get<std::string>();
        for (const auto& l : e.at("labels")) eff.labels.insert(parse_label(l.get<std::string>()));
        eff.band = {e.at("band_hz").at(0).get<double>(), e.at("band_hz").at(1).get<double>()};
        eff.amplitude = e.value("amplitude", eff.amplitude);
        eff.amplitude_sd = e.value("amplitude_sd", eff.amplitude_sd);
        for (const auto& t : e.at("tasks")) eff.tasks.insert(t.get<int>());
        eff.expression_probability = e.value("expression_probability", eff.expression_probability);
        s.effects.push_back(std::move(eff));
      }
    }
    if (j.contains("movement")) {
      const auto& m = j.at("movement");
      if (m.contains("tasks")) {
        s.movement.tasks.clear();
        for (const auto& t : m.at("tasks")) s.movement.tasks.insert(t.get<int>());
      }
      if (m.contains("reduced_tasks")) {
        s.movement.reduced_tasks.clear();
        for (const auto& t : m.at("reduced_tasks")) s.movement.reduced_tasks.insert(t.get<int>());
      }
      if (m.contains("band_hz")) s.movement.band = {m.at("band_hz").at(0), m.at("band_hz").at(1)};
      s.movement.amplitude = m.value("amplitude", s.movement.amplitude);
      s.movement.amplitude_sd = m.value("amplitude_sd", s.movement.amplitude_sd);
      if (m.contains("class_factor"))
        for (const auto& [k, v] : m.at("class_factor").items()) s.movement.class_factor[parse_label(k)] = v.get<double>();
      s.movement.expression_probability = m.value("expression_probability", s.movement.expression_probability);
    }
    s.asymmetry = j.value("asymmetry", s.asymmetry);
    if (j.contains("dominant_arm")) s.dominant_arm = parse_dominant_arm_policy(j.at("dominant_arm").get<std::string>());
    s.frequency_jitter_hz = j.value("frequency_jitter_hz", s.frequency_jitter_hz);
    s.express_at_least_one = j.value("express_at_least_one", s.express_at_least_one);
    s.quantum = j.value("quantum", s.quantum);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("cohort spec: ") + e.what());
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

/// Writes `<participant>.json` per session plus `manifest.json` and
/// `ground_truth.json`.
inline void write_cohort(const Cohort& cohort, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& s : cohort.sessions)
    write_text(dir / (s.participant_id + ".json"), session_to_json(s).dump() + "\n");
  json manifest = cohort.spec.manifest.to_json();
  manifest["cohort"] = {{"n", cohort.sessions.size()},
                        {"seed", cohort.spec.seed},
                        {"sampling_rate_hz", cohort.spec.sampling_rate_hz},
                        {"generator", "smartdx-synth"}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  write_text(dir / "ground_truth.json", cohort.ground_truth.dump(2) + "\n");
}

inline bool is_cohort_metadata(const std::filesystem::path& p) {
  const auto name = p.filename().string();
  return name == "manifest.json" || name == "ground_truth.json" || name == "run.json";
}

/// Session files of a cohort directory, sorted by file name.
inline std::vector<std::filesystem::path> cohort_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("cohort directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json" && !is_cohort_metadata(e.path()))
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

inline TaskManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  try {
    return TaskManifest::from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace smartdx
