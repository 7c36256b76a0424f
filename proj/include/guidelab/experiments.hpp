#pragma once

// Experiment presets: norm curves, distance law, cut-off, scale sweep and
// respaced sampling. Each preset returns its tables, plots and checks; writing
// files is left to the caller.

#include "guidelab/data.hpp"
#include "guidelab/guidance.hpp"
#include "guidelab/metrics.hpp"
#include "guidelab/models.hpp"
#include "guidelab/report.hpp"
#include "guidelab/sampler.hpp"
#include "guidelab/schedule.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace guidelab {

/// Dataset, schedules and models shared by the presets.
struct Benchmark {
  LabeledDataset data;
  NoiseSchedule full;
  NoiseSchedule sampling;
  DenoiserModel denoiser;
  ClassifierModel classifier;
  /// Classifier used for class fidelity, evaluated at t = 0.
  ClassifierModel oracle;

  /// The default GMM benchmark with analytic backends.
  static Benchmark analytic(const LabeledDataset& data, const ScheduleSpec& spec) {
    require(data.descriptor.has_value(), "benchmark: analytic backends need a dataset descriptor");
    NoiseSchedule full = spec.build();
    NoiseSchedule sampling = spec.respace > 0 ? full.respace(spec.respace) : full;
    auto den = DenoiserModel::analytic(*data.descriptor, full);
    auto cls = ClassifierModel::analytic(*data.descriptor, full);
    return {data, full, sampling, den, cls, cls};
  }
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
  bool asserted = true;  // false: reported only
};

struct ExperimentFile {
  std::string name;
  std::string content;
};

struct ExperimentResult {
  std::string preset;
  std::vector<ExperimentFile> files;
  std::vector<Check> checks;

  std::string summary() const {
    std::string out = "preset " + preset + '\n';
    for (const auto& c : checks) {
      out += std::string(c.asserted ? (c.pass ? "PASS   " : "FAIL   ") : "REPORT ") + c.name + ": " + c.detail + '\n';
    }
    return out;
  }
};

struct ArmResult {
  std::string name;
  GuidanceRule rule;
  SampleBatch batch;
  MetricsReport metrics;
};

struct RunSettings {
  std::uint64_t seed = 0;
  int threads = 1;
};

namespace detail {

inline PointMatrix reference_rows(const LabeledDataset& data, std::size_t n) {
  const auto rows = std::min<Eigen::Index>(data.size(), static_cast<Eigen::Index>(n));
  return data.points.topRows(rows);
}

inline std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

inline std::string sci(double v) {
  std::ostringstream s;
  s.setf(std::ios::scientific);
  s.precision(3);
  s << v;
  return s.str();
}

}  // namespace detail

/// Samples one arm and scores it against the first n_chains dataset rows.
inline ArmResult run_arm(const Benchmark& bench, std::string name, const GuidanceRule& rule,
                         const NoiseSchedule& sampling, std::size_t chains, const RunSettings& run,
                         LogLevel level = LogLevel::none, bool score = true) {
  SampleOptions opt;
  opt.n_chains = chains;
  opt.seed = run.seed;
  opt.threads = run.threads;
  opt.log_level = level;
  ArmResult arm{std::move(name), rule, sample(bench.denoiser, &bench.classifier, rule, sampling, opt), {}};
  if (score) {
    EvalOptions eo;
    eo.threads = run.threads;
    eo.allow_rank_deficient = true;
    arm.metrics = evaluate(arm.batch.samples, arm.batch.targets, detail::reference_rows(bench.data, chains),
                           &bench.oracle, eo);
  }
  return arm;
}

inline CsvTable metrics_table(const std::string& name, const std::vector<ArmResult>& arms) {
  CsvTable t(name, {"arm", "rule", "s", "cutoff", "steps", "frechet", "precision", "recall", "class_fidelity",
                    "n_generated", "n_reference"});
  for (const auto& a : arms) {
    t.row({a.name, to_string(a.rule.kind), cell(a.rule.scale), cell(a.rule.cutoff_fraction), cell(a.batch.steps),
           cell(a.metrics.frechet), cell(a.metrics.precision), cell(a.metrics.recall), cell(a.metrics.class_fidelity),
           cell(a.metrics.n_generated), cell(a.metrics.n_reference)});
  }
  return t;
}

// ---------------------------------------------------------------------------

struct NormCurvesConfig {
  std::size_t chains = 64;
  double adm_g_scale = 1.0;
  double geoguide_scale = 2.0;
};

struct NormCurvesOutcome {
  NormCurveSummary adm_g;
  NormCurveSummary geoguide;
  double expected_geoguide_norm = 0.0;
  double geoguide_max_deviation = 0.0;
  std::size_t geoguide_active_steps = 0;
  ExperimentResult result;
};

inline NormCurvesOutcome run_norm_curves(const Benchmark& bench, const NormCurvesConfig& cfg, const RunSettings& run) {
  NormCurvesOutcome out;
  out.result.preset = "norm_curves";
  const ArmResult adm = run_arm(bench, "adm_g", {GuidanceKind::adm_g, cfg.adm_g_scale}, bench.sampling, cfg.chains,
                                run, LogLevel::norms, false);
  const ArmResult geo = run_arm(bench, "geoguide", {GuidanceKind::geoguide, cfg.geoguide_scale}, bench.sampling,
                                cfg.chains, run, LogLevel::norms, false);
  out.adm_g = norm_curve_summary(adm.batch.logs);
  out.geoguide = norm_curve_summary(geo.batch.logs);
  out.expected_geoguide_norm =
      cfg.geoguide_scale * std::sqrt(static_cast<double>(bench.data.dim())) / bench.sampling.steps();
  out.geoguide_max_deviation = max_active_norm_deviation(geo.batch.logs, out.expected_geoguide_norm);
  for (const auto& log : geo.batch.logs) {
    for (const auto& r : log.records) out.geoguide_active_steps += r.guidance_active;
  }

  PlotSpec plot{"Norm of s*A_t per reverse step", "reverse step (from t = T)", "mean ||s A_t||", true, {}};
  for (const auto* arm : {&adm, &geo}) {
    const NormCurveSummary& s = arm == &adm ? out.adm_g : out.geoguide;
    CsvTable t("norm_curve", {"step", "t", "alpha_bar", "mean_norm"});
    PlotSeries series{arm->name + " (s=" + text::format(arm->rule.scale) + ")", {}, {}};
    const auto& records = arm->batch.logs.front().records;
    for (std::size_t i = 0; i < s.mean_norm.size(); ++i) {
      t.row({cell(records[i].step), cell(records[i].t), cell(records[i].alpha_bar), cell(s.mean_norm[i])});
      series.x.push_back(static_cast<double>(records[i].step));
      series.y.push_back(s.mean_norm[i]);
    }
    out.result.files.push_back({"norm_curves_" + arm->name + ".csv", t.str()});
    plot.series.push_back(std::move(series));
  }
  out.result.files.push_back({"norm_curves.svg", render_svg(plot)});

  const bool geo_ok = out.geoguide_active_steps > 0 && out.geoguide_max_deviation <= 1e-12 &&
                      std::abs(out.geoguide.ratio - 1.0) <= 1e-9;
  out.result.checks.push_back({"geoguide norm constancy", geo_ok,
                               "max rel deviation " + detail::sci(out.geoguide_max_deviation) + " from " +
                                   text::format(out.expected_geoguide_norm) + ", r = " +
                                   text::format(out.geoguide.ratio)});
  out.result.checks.push_back({"adm_g norm decay", out.adm_g.ratio < 0.2,
                               "r = " + detail::sci(out.adm_g.ratio) + " (threshold 0.2)"});
  return out;
}

// ---------------------------------------------------------------------------

/// Mean ||eps|| over `draws` standard normal vectors in R^dim.
inline double mean_noise_norm(int dim, std::size_t draws, std::uint64_t seed) {
  double total = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    RandomStream rng(seed, StreamPurpose::forward, i, 0);
    total += rng.normal_vector(dim).norm();
  }
  return total / static_cast<double>(draws);
}

struct DistanceLawConfig {
  std::size_t draws = 200;
  std::size_t eps_draws = 10000;
  std::size_t reverse_chains = 32;
  double adm_g_scale = 1.0;
  double geoguide_scale = 2.0;
};

struct DistanceLawOutcome {
  DistanceLawFit forward;
  double eps_mean_norm = 0.0;
  std::vector<std::pair<std::string, DistanceLawFit>> reverse;
  ExperimentResult result;
};

inline DistanceLawOutcome run_distance_law(const Benchmark& bench, const DistanceLawConfig& cfg,
                                           const RunSettings& run) {
  require(cfg.draws >= 1 && cfg.eps_draws >= 1, "distance law: need at least one draw");
  DistanceLawOutcome out;
  out.result.preset = "distance_law";
  const int D = bench.data.dim();
  const int stride = detail::default_stride(bench.sampling.steps(), 0);

  std::vector<std::vector<DistanceRecord>> forward(cfg.draws);
  detail::parallel_for(cfg.draws, run.threads, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i % static_cast<std::size_t>(bench.data.size()));
    const TrajectoryLog log = forward_trajectory(bench.data.points.row(row).transpose(), bench.sampling, run.seed, i,
                                                 stride);
    forward[i] = trace_manifold_distance(log, bench.data);
  });
  out.forward = distance_law_fit(forward);

  out.eps_mean_norm = mean_noise_norm(D, cfg.eps_draws, run.seed);

  PlotSpec plot{"Distance to the scaled data manifold", "1 - alpha_bar", "median distance", false, {}};
  auto add_fit = [&](const std::string& name, const DistanceLawFit& fit) {
    CsvTable t("distance_law", {"step", "t", "alpha_bar", "d_theory", "median_d_hat", "median_rel_error", "included"});
    PlotSeries series{name, {}, {}};
    for (const auto& r : fit.rows) {
      t.row({cell(r.step), cell(r.t), cell(r.alpha_bar), cell(r.d_theory), cell(r.median_d_hat),
             cell(r.median_rel_error), r.included ? "1" : "0"});
      series.x.push_back(1.0 - r.alpha_bar);
      series.y.push_back(r.median_d_hat);
    }
    out.result.files.push_back({"distance_law_" + name + ".csv", t.str()});
    plot.series.push_back(std::move(series));
  };
  add_fit("forward", out.forward);

  for (const auto& [name, rule] : {std::pair{std::string("adm_g"), GuidanceRule{GuidanceKind::adm_g, cfg.adm_g_scale}},
                                   std::pair{std::string("geoguide"),
                                             GuidanceRule{GuidanceKind::geoguide, cfg.geoguide_scale}}}) {
    if (cfg.reverse_chains == 0) break;
    const ArmResult arm = run_arm(bench, name, rule, bench.sampling, cfg.reverse_chains, run, LogLevel::thinned, false);
    std::vector<std::vector<DistanceRecord>> traces(arm.batch.logs.size());
    detail::parallel_for(traces.size(), run.threads,
                         [&](std::size_t c) { traces[c] = trace_manifold_distance(arm.batch.logs[c], bench.data); });
    out.reverse.emplace_back(name, distance_law_fit(traces));
    add_fit(name, out.reverse.back().second);
    out.result.files.push_back({"trajectory_" + name + ".csv", trajectory_table(arm.batch.logs, traces).str()});
  }
  {
    PlotSeries theory{"sqrt((1 - alpha_bar) D)", {}, {}};
    for (const auto& r : out.forward.rows) {
      theory.x.push_back(1.0 - r.alpha_bar);
      theory.y.push_back(r.d_theory);
    }
    plot.series.push_back(std::move(theory));
  }
  out.result.files.push_back({"distance_law.svg", render_svg(plot)});

  out.result.checks.push_back({"distance law (forward traces)", out.forward.aggregate <= 0.15,
                               "median rel error " + detail::fixed(out.forward.aggregate) + " over " +
                                   std::to_string(out.forward.included_points) + " points (threshold 0.15)"});
  const double root_d = std::sqrt(static_cast<double>(D));
  const double rel = std::abs(out.eps_mean_norm - root_d) / root_d;
  out.result.checks.push_back({"mean ||eps|| near sqrt(D)", rel <= 0.02,
                               "mean " + detail::fixed(out.eps_mean_norm) + " vs " + detail::fixed(root_d) +
                                   ", rel " + detail::fixed(rel) + " (threshold 0.02)"});
  for (const auto& [name, fit] : out.reverse) {
    out.result.checks.push_back({"distance law (" + name + " reverse chains)", true,
                                 "median rel error " + detail::fixed(fit.aggregate), false});
  }
  return out;
}

// ---------------------------------------------------------------------------

struct CutoffConfig {
  std::size_t chains = 512;
  double cutoff = 0.3;
  double adm_g_scale = 1.0;
  double geoguide_scale = 2.0;
};

struct CutoffOutcome {
  std::vector<ArmResult> arms;  // adm_g full, adm_g cut, geoguide full, geoguide cut
  double adm_g_drop = 0.0;
  double geoguide_drop = 0.0;
  ExperimentResult result;
};

inline CutoffOutcome run_cutoff(const Benchmark& bench, const CutoffConfig& cfg, const RunSettings& run) {
  CutoffOutcome out;
  out.result.preset = "cutoff";
  const std::vector<std::pair<std::string, GuidanceRule>> arms = {
      {"adm_g_full", {GuidanceKind::adm_g, cfg.adm_g_scale, 1.0}},
      {"adm_g_cut", {GuidanceKind::adm_g, cfg.adm_g_scale, cfg.cutoff}},
      {"geoguide_full", {GuidanceKind::geoguide, cfg.geoguide_scale, 1.0}},
      {"geoguide_cut", {GuidanceKind::geoguide, cfg.geoguide_scale, cfg.cutoff}},
  };
  PlotSpec plot{"Guidance cut-off: norm of s*A_t", "reverse step (from t = T)", "mean ||s A_t||", false, {}};
  for (const auto& [name, rule] : arms) {
    out.arms.push_back(run_arm(bench, name, rule, bench.sampling, cfg.chains, run, LogLevel::norms));
    const NormCurveSummary s = norm_curve_summary(out.arms.back().batch.logs);
    PlotSeries series{name, {}, {}};
    for (std::size_t i = 0; i < s.mean_norm.size(); ++i) {
      series.x.push_back(static_cast<double>(i));
      series.y.push_back(s.mean_norm[i]);
    }
    plot.series.push_back(std::move(series));
    out.result.files.push_back({"cutoff_" + name + ".csv", metrics_table("cutoff", {out.arms.back()}).str()});
  }
  out.result.files.push_back({"cutoff.svg", render_svg(plot)});
  out.adm_g_drop = out.arms[0].metrics.class_fidelity - out.arms[1].metrics.class_fidelity;
  out.geoguide_drop = out.arms[2].metrics.class_fidelity - out.arms[3].metrics.class_fidelity;
  out.result.checks.push_back(
      {"cut-off fidelity drop geoguide > adm_g", out.geoguide_drop > out.adm_g_drop,
       "geoguide " + detail::fixed(out.arms[2].metrics.class_fidelity) + " -> " +
           detail::fixed(out.arms[3].metrics.class_fidelity) + " (drop " + detail::fixed(out.geoguide_drop) +
           "), adm_g " + detail::fixed(out.arms[0].metrics.class_fidelity) + " -> " +
           detail::fixed(out.arms[1].metrics.class_fidelity) + " (drop " + detail::fixed(out.adm_g_drop) + ")"});
  return out;
}

// ---------------------------------------------------------------------------

struct ScaleSweepConfig {
  std::size_t chains = 2048;
  std::vector<double> scales = {0.0, 0.1, 0.2, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0};
  std::vector<GuidanceKind> rules = {GuidanceKind::adm_g, GuidanceKind::geoguide, GuidanceKind::geoguide_scaled};
  double geoguide_target = 0.90;
  double adm_g_target = 0.80;
};

struct SweepCurve {
  GuidanceKind rule = GuidanceKind::none;
  std::vector<double> scales;
  std::vector<MetricsReport> metrics;
  std::size_t tuned = 0;  // index into scales
  bool target_reached = false;

  double tuned_scale() const { return scales[tuned]; }
  const MetricsReport& at_tuned() const { return metrics[tuned]; }
};

/// Smallest Frechet distance among scales whose fidelity reaches the target; the
/// highest-fidelity scale when none does.
inline std::size_t tune_scale(const std::vector<MetricsReport>& metrics, double target, bool* reached = nullptr) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    if (metrics[i].class_fidelity >= target && (!best || metrics[i].frechet < metrics[*best].frechet)) best = i;
  }
  if (reached) *reached = best.has_value();
  if (best) return *best;
  std::size_t top = 0;
  for (std::size_t i = 1; i < metrics.size(); ++i) {
    if (metrics[i].class_fidelity > metrics[top].class_fidelity) top = i;
  }
  return top;
}

/// Recall falls with s (Spearman <= -0.8) and fidelity does not fall, within
/// `tolerance`, before it first comes within `tolerance` of its maximum.
struct TradeOff {
  double spearman_recall = 0.0;
  bool fidelity_monotone = false;
  std::size_t plateau_index = 0;
};

inline TradeOff trade_off(const SweepCurve& c, double tolerance = 0.02) {
  TradeOff t;
  std::vector<double> recall;
  double top = 0.0;
  for (const auto& m : c.metrics) {
    recall.push_back(m.recall);
    top = std::max(top, m.class_fidelity);
  }
  t.spearman_recall = spearman(c.scales, recall);
  t.plateau_index = c.metrics.size() - 1;
  for (std::size_t i = 0; i < c.metrics.size(); ++i) {
    if (c.metrics[i].class_fidelity >= top - tolerance) {
      t.plateau_index = i;
      break;
    }
  }
  t.fidelity_monotone = true;
  for (std::size_t i = 0; i < t.plateau_index; ++i) {
    if (c.metrics[i + 1].class_fidelity < c.metrics[i].class_fidelity - tolerance) t.fidelity_monotone = false;
  }
  return t;
}

struct ScaleSweepOutcome {
  std::vector<SweepCurve> curves;
  double baseline_fidelity = 0.0;
  ExperimentResult result;

  const SweepCurve* curve(GuidanceKind kind) const {
    for (const auto& c : curves) {
      if (c.rule == kind) return &c;
    }
    return nullptr;
  }
};

inline ScaleSweepOutcome run_scale_sweep(const Benchmark& bench, const ScaleSweepConfig& cfg, const RunSettings& run) {
  require(!cfg.scales.empty(), "scale sweep: no scales");
  ScaleSweepOutcome out;
  out.result.preset = "scale_sweep";
  PlotSpec plot{"Quality / diversity trade-off over s", "recall", "frechet", false, {}};
  PlotSpec fid_plot{"Class fidelity over s", "s", "class fidelity", false, {}};
  std::optional<MetricsReport> unguided;
  for (GuidanceKind kind : cfg.rules) {
    SweepCurve curve;
    curve.rule = kind;
    std::vector<ArmResult> rows;
    for (double s : cfg.scales) {
      ArmResult arm;
      if (s == 0.0 && unguided) {
        // s = 0 is the unguided sampler for every rule.
        arm.name = std::string(to_string(kind)) + "_s0";
        arm.rule = {kind, 0.0};
        arm.batch.steps = bench.sampling.steps();
        arm.metrics = *unguided;
      } else {
        arm = run_arm(bench, std::string(to_string(kind)) + "_s" + text::format(s), {kind, s}, bench.sampling,
                      cfg.chains, run);
        arm.batch = {};
        arm.batch.steps = bench.sampling.steps();
        if (s == 0.0) unguided = arm.metrics;
      }
      curve.scales.push_back(s);
      curve.metrics.push_back(arm.metrics);
      rows.push_back(std::move(arm));
    }
    const double target = kind == GuidanceKind::adm_g ? cfg.adm_g_target : cfg.geoguide_target;
    curve.tuned = tune_scale(curve.metrics, target, &curve.target_reached);
    CsvTable t("scale_sweep", {"s", "frechet", "precision", "recall", "class_fidelity", "tuned"});
    PlotSeries series{to_string(kind), {}, {}, true, true};
    PlotSeries fid{to_string(kind), {}, {}, true, true};
    for (std::size_t i = 0; i < curve.scales.size(); ++i) {
      const auto& m = curve.metrics[i];
      t.row({cell(curve.scales[i]), cell(m.frechet), cell(m.precision), cell(m.recall), cell(m.class_fidelity),
             i == curve.tuned ? "1" : "0"});
      series.x.push_back(m.recall);
      series.y.push_back(m.frechet);
      fid.x.push_back(curve.scales[i]);
      fid.y.push_back(m.class_fidelity);
    }
    out.result.files.push_back({std::string("scale_sweep_") + to_string(kind) + ".csv", t.str()});
    plot.series.push_back(std::move(series));
    fid_plot.series.push_back(std::move(fid));
    out.curves.push_back(std::move(curve));
  }
  out.result.files.push_back({"scale_sweep.svg", render_svg(plot)});
  out.result.files.push_back({"scale_sweep_fidelity.svg", render_svg(fid_plot)});
  if (unguided) out.baseline_fidelity = unguided->class_fidelity;

  const double chance = 1.0 / static_cast<double>(std::max(1, bench.oracle.num_classes()));
  if (unguided) {
    out.result.checks.push_back({"unguided baseline fidelity", std::abs(out.baseline_fidelity - chance) <= 0.02,
                                 detail::fixed(out.baseline_fidelity) + " vs chance " + detail::fixed(chance) +
                                     " (tolerance 0.02)"});
  }
  for (const auto& c : out.curves) {
    if (c.rule == GuidanceKind::geoguide_scaled) continue;
    const double target = c.rule == GuidanceKind::adm_g ? cfg.adm_g_target : cfg.geoguide_target;
    out.result.checks.push_back({std::string(to_string(c.rule)) + " efficacy at tuned s",
                                 c.at_tuned().class_fidelity >= target,
                                 "s = " + text::format(c.tuned_scale()) + ", fidelity " +
                                     detail::fixed(c.at_tuned().class_fidelity) + " (target " +
                                     detail::fixed(target, 2) + ")"});
  }
  for (const auto& c : out.curves) {
    if (c.rule == GuidanceKind::geoguide_scaled || c.scales.size() < 2) continue;
    const TradeOff t = trade_off(c);
    out.result.checks.push_back({std::string(to_string(c.rule)) + " trade-off monotonicity",
                                 t.spearman_recall <= -0.8 && t.fidelity_monotone,
                                 "spearman(recall, s) = " + detail::fixed(t.spearman_recall) +
                                     " (threshold -0.8), fidelity non-decreasing to plateau: " +
                                     (t.fidelity_monotone ? "yes" : "no")});
  }
  const SweepCurve* geo = out.curve(GuidanceKind::geoguide);
  const SweepCurve* scaled = out.curve(GuidanceKind::geoguide_scaled);
  if (geo && scaled) {
    const bool ok = std::isfinite(geo->at_tuned().frechet) && std::isfinite(scaled->at_tuned().frechet);
    out.result.checks.push_back({"geoguide vs geoguide_scaled report", ok,
                                 "frechet geoguide " + detail::fixed(geo->at_tuned().frechet) + " (s=" +
                                     text::format(geo->tuned_scale()) + ", fidelity " +
                                     detail::fixed(geo->at_tuned().class_fidelity) + "), geoguide_scaled " +
                                     detail::fixed(scaled->at_tuned().frechet) + " (s=" +
                                     text::format(scaled->tuned_scale()) + ", fidelity " +
                                     detail::fixed(scaled->at_tuned().class_fidelity) + "); lower is better: " +
                                     (geo->at_tuned().frechet <= scaled->at_tuned().frechet ? "geoguide"
                                                                                            : "geoguide_scaled")});
  }
  return out;
}

// ---------------------------------------------------------------------------

struct RespaceConfig {
  std::size_t chains = 2048;
  std::vector<int> steps = {50, 250, 1000};
  double adm_g_scale = 1.0;
  double geoguide_scale = 2.0;
};

struct RespaceOutcome {
  std::vector<ArmResult> geoguide;  // one per step count
  std::vector<ArmResult> adm_g;
  ExperimentResult result;
};

inline RespaceOutcome run_respace_study(const Benchmark& bench, const RespaceConfig& cfg, const RunSettings& run) {
  RespaceOutcome out;
  out.result.preset = "respace_study";
  PlotSpec plot{"Frechet distance vs sampling steps", "sampling steps", "frechet", false, {}};
  for (GuidanceKind kind : {GuidanceKind::adm_g, GuidanceKind::geoguide}) {
    auto& arms = kind == GuidanceKind::adm_g ? out.adm_g : out.geoguide;
    const double s = kind == GuidanceKind::adm_g ? cfg.adm_g_scale : cfg.geoguide_scale;
    PlotSeries series{std::string(to_string(kind)) + " (s=" + text::format(s) + ")", {}, {}, true, true};
    for (int n : cfg.steps) {
      const NoiseSchedule sched = bench.full.respace(n);
      arms.push_back(run_arm(bench, std::string(to_string(kind)) + "_" + std::to_string(n), {kind, s}, sched,
                             cfg.chains, run));
      series.x.push_back(n);
      series.y.push_back(arms.back().metrics.frechet);
    }
    out.result.files.push_back({std::string("respace_") + to_string(kind) + ".csv",
                                metrics_table("respace", arms).str()});
    plot.series.push_back(std::move(series));
  }
  out.result.files.push_back({"respace_study.svg", render_svg(plot)});

  auto find = [&](const std::vector<ArmResult>& arms, int n) -> const ArmResult* {
    for (std::size_t i = 0; i < cfg.steps.size(); ++i) {
      if (cfg.steps[i] == n) return &arms[i];
    }
    return nullptr;
  };
  for (GuidanceKind kind : {GuidanceKind::geoguide, GuidanceKind::adm_g}) {
    const auto& arms = kind == GuidanceKind::adm_g ? out.adm_g : out.geoguide;
    const ArmResult* a50 = find(arms, 50);
    const ArmResult* a250 = find(arms, 250);
    const ArmResult* a1000 = find(arms, 1000);
    if (!a50 || !a250 || !a1000) continue;
    const double f50 = a50->metrics.frechet, f250 = a250->metrics.frechet, f1000 = a1000->metrics.frechet;
    const double rel = std::abs(f1000 - f250) / f250;
    out.result.checks.push_back({std::string(to_string(kind)) + " respacing", f50 >= f250 && rel <= 0.25,
                                 "frechet 50/250/1000 = " + detail::fixed(f50) + " / " + detail::fixed(f250) + " / " +
                                     detail::fixed(f1000) + ", |f1000 - f250| / f250 = " + detail::fixed(rel) +
                                     " (threshold 0.25)",
                                 kind == GuidanceKind::geoguide});
  }
  return out;
}

}  // namespace guidelab
