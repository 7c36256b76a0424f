#pragma once

// Subcommands behind the guidelab executable. Each command reads a RunConfig,
// writes its artifacts plus manifest.txt into the output directory and returns a
// process exit code.

#include "guidelab/binary_io.hpp"
#include "guidelab/config.hpp"
#include "guidelab/data.hpp"
#include "guidelab/experiments.hpp"
#include "guidelab/metrics.hpp"
#include "guidelab/models.hpp"
#include "guidelab/report.hpp"
#include "guidelab/sampler.hpp"
#include "guidelab/schedule.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace guidelab {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitMismatch = 3,
  kExitFormat = 4,
  kExitNumeric = 5,
};

struct CommandLine {
  std::string command;  // gen-data, train-denoiser, train-classifier, sample, eval, experiment
  std::string preset;   // experiment only
  std::optional<std::string> config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

inline const std::vector<std::string>& experiment_presets() {
  static const std::vector<std::string> names = {"norm_curves", "distance_law", "cutoff", "scale_sweep",
                                                 "respace_study"};
  return names;
}

namespace cli {

inline ScheduleSpec schedule_spec(const RunConfig& cfg) {
  ScheduleSpec spec;
  const std::string type = cfg.get_string("schedule.type", "linear_beta");
  if (type == "linear_beta") {
    spec.kind = ScheduleKind::linear_beta;
  } else if (type == "linear_alphabar") {
    spec.kind = ScheduleKind::linear_alphabar;
  } else {
    cfg.reject("schedule.type", "expected linear_beta or linear_alphabar");
  }
  spec.T = static_cast<int>(cfg.get_int("schedule.T", 1000));
  spec.beta_start = cfg.get_double("schedule.beta_start", 1e-4);
  spec.beta_end = cfg.get_double("schedule.beta_end", 0.02);
  const std::string gamma = cfg.get_string("schedule.gamma_mode", "lower");
  if (gamma == "lower") {
    spec.gamma_mode = GammaMode::lower;
  } else if (gamma == "upper") {
    spec.gamma_mode = GammaMode::upper;
  } else {
    cfg.reject("schedule.gamma_mode", "expected lower or upper");
  }
  spec.respace = static_cast<int>(cfg.get_int("schedule.respace", 250));
  if (spec.respace < 0) cfg.reject("schedule.respace", "must be nonnegative");
  if (spec.respace > spec.T) spec.respace = spec.T;
  return spec;
}

inline ManifoldDescriptor descriptor(const RunConfig& cfg) {
  const std::string kind = cfg.get_string("data.kind", "gaussian_mixture");
  const int dim = static_cast<int>(cfg.get_int("data.dim", 64));
  const double ambient = cfg.get_double("data.ambient_sigma", 0.01);
  if (kind == "gaussian_mixture") {
    return gmm_circle(static_cast<int>(cfg.get_int("data.classes", 8)), cfg.get_double("data.radius", 10.0),
                      cfg.get_double("data.sigma", 0.5), dim, ambient);
  }
  if (kind == "rings") {
    return rings(cfg.get_doubles("data.radii", {3.0, 6.0, 9.0}), cfg.get_double("data.plane_sigma", 0.2), dim, ambient);
  }
  if (kind == "moons") {
    return moons(cfg.get_double("data.scale", 5.0), cfg.get_double("data.plane_sigma", 0.2), dim, ambient);
  }
  cfg.reject("data.kind", "expected gaussian_mixture, rings or moons");
}

inline LabeledDataset dataset(const RunConfig& cfg, std::uint64_t seed) {
  if (const auto path = cfg.find("data.path")) return load_dataset(*path);
  const long long n = cfg.get_int("data.n", 8000);
  if (n < 1) cfg.reject("data.n", "must be positive");
  const std::uint64_t data_seed = cfg.has("data.seed") ? cfg.get_u64("data.seed") : seed;
  return generate(descriptor(cfg), n, data_seed);
}

inline TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig t;
  t.epochs = static_cast<int>(cfg.get_int("train.epochs", t.epochs));
  t.batch = static_cast<int>(cfg.get_int("train.batch", t.batch));
  t.learning_rate = cfg.get_double("train.lr", t.learning_rate);
  t.clip_norm = cfg.get_double("train.clip", t.clip_norm);
  t.hidden_width = static_cast<int>(cfg.get_int("train.width", t.hidden_width));
  t.hidden_layers = static_cast<int>(cfg.get_int("train.layers", t.hidden_layers));
  t.time_embedding = static_cast<int>(cfg.get_int("train.embedding", t.time_embedding));
  return t;
}

inline bool learned_backend(const RunConfig& cfg, const std::string& section) {
  const std::string backend = cfg.get_string(section + ".backend", "analytic");
  if (backend == "analytic") return false;
  if (backend == "learned") {
    if (!cfg.has(section + ".checkpoint")) cfg.reject(section + ".backend", "learned backend needs a checkpoint path");
    return true;
  }
  cfg.reject(section + ".backend", "expected analytic or learned");
}

inline const ManifoldDescriptor& analytic_descriptor(const LabeledDataset& data) {
  if (!data.descriptor || data.descriptor->kind != ManifoldKind::gaussian_mixture) {
    throw ConfigError("analytic backends need a dataset with a gaussian_mixture descriptor");
  }
  return *data.descriptor;
}

inline DenoiserModel denoiser(const RunConfig& cfg, const LabeledDataset& data, const NoiseSchedule& full) {
  if (learned_backend(cfg, "denoiser")) return load_denoiser(cfg.get_string("denoiser.checkpoint", ""), full);
  return DenoiserModel::analytic(analytic_descriptor(data), full);
}

inline ClassifierModel classifier(const RunConfig& cfg, const LabeledDataset& data, const NoiseSchedule& full) {
  if (learned_backend(cfg, "classifier")) return load_classifier(cfg.get_string("classifier.checkpoint", ""), full);
  return ClassifierModel::analytic(analytic_descriptor(data), full);
}

/// Analytic Bayes classifier when the data has a mixture descriptor, else `fallback`.
inline ClassifierModel oracle(const LabeledDataset& data, const NoiseSchedule& full, const ClassifierModel& fallback) {
  if (data.descriptor && data.descriptor->kind == ManifoldKind::gaussian_mixture) {
    return ClassifierModel::analytic(*data.descriptor, full);
  }
  return fallback;
}

inline GuidanceRule guidance(const RunConfig& cfg) {
  GuidanceRule rule;
  const std::string kind = cfg.get_string("guidance.kind", "none");
  const auto parsed = parse_guidance_kind(kind);
  if (!parsed) cfg.reject("guidance.kind", "expected none, adm_g, geoguide or geoguide_scaled");
  rule.kind = *parsed;
  rule.scale = cfg.get_double("guidance.s", 0.0);
  if (!(rule.scale >= 0.0)) cfg.reject("guidance.s", "must be nonnegative");
  rule.cutoff_fraction = cfg.get_double("guidance.cutoff", 1.0);
  if (!(rule.cutoff_fraction >= 0.0 && rule.cutoff_fraction <= 1.0)) cfg.reject("guidance.cutoff", "must lie in [0, 1]");
  rule.geoguide_steps = static_cast<int>(cfg.get_int("guidance.geoguide_T", 0));
  if (rule.geoguide_steps < 0) cfg.reject("guidance.geoguide_T", "must be nonnegative");
  rule.eps_norm = cfg.get_double("guidance.eps_norm", 1e-12);
  if (!(rule.eps_norm > 0.0)) cfg.reject("guidance.eps_norm", "must be positive");
  return rule;
}

inline LogLevel trace_level(const RunConfig& cfg) {
  const std::string v = cfg.get_string("sampling.trace", "none");
  if (v == "none") return LogLevel::none;
  if (v == "norms") return LogLevel::norms;
  if (v == "thinned") return LogLevel::thinned;
  if (v == "full") return LogLevel::full;
  cfg.reject("sampling.trace", "expected none, norms, thinned or full");
}

/// Collects output files, then writes them with a manifest of content hashes.
class OutputSet {
 public:
  OutputSet(std::string command, const RunConfig& cfg) : command_(std::move(command)), config_(cfg.to_text()) {}

  void add(std::string name, std::string content) {
    files_.push_back({std::move(name), std::vector<unsigned char>(content.begin(), content.end())});
  }
  void add(std::string name, std::vector<unsigned char> bytes) { files_.push_back({std::move(name), std::move(bytes)}); }

  void write(const std::filesystem::path& dir, std::ostream& log) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw FormatError(FormatError::Kind::io, "cannot create output directory " + dir.string());
    std::string manifest = "# guidelab manifest 1\ncommand = " + command_ + "\n\n[config]\n" + config_ + "\n[files]\n";
    for (const auto& f : files_) {
      io::write_file((dir / f.name).string(), f.bytes);
      manifest += f.name + " " + text::hex(fnv1a(f.bytes.data(), f.bytes.size())) + " " +
                  std::to_string(f.bytes.size()) + '\n';
      log << "wrote " << (dir / f.name).string() << '\n';
    }
    io::write_file((dir / "manifest.txt").string(), std::vector<unsigned char>(manifest.begin(), manifest.end()));
  }

 private:
  struct File {
    std::string name;
    std::vector<unsigned char> bytes;
  };
  std::string command_;
  std::string config_;
  std::vector<File> files_;
};

inline std::string train_table(const TrainReport& r) {
  CsvTable t("train_loss", {"epoch", "loss"});
  for (std::size_t i = 0; i < r.epoch_loss.size(); ++i) t.row({cell(i + 1), cell(r.epoch_loss[i])});
  return t.str();
}

// --- commands ---------------------------------------------------------------

inline void gen_data(const RunConfig& cfg, std::uint64_t seed, OutputSet& out, std::ostream& log) {
  const LabeledDataset data = dataset(cfg, seed);
  out.add("dataset.glab", encode_dataset(data));
  log << "generated " << data.size() << " points in R^" << data.dim() << " with " << data.num_classes << " classes\n";
}

inline void train(const RunConfig& cfg, std::uint64_t seed, bool classifier_role, OutputSet& out, std::ostream& log) {
  const LabeledDataset data = dataset(cfg, seed);
  const NoiseSchedule full = schedule_spec(cfg).build();
  const TrainConfig tc = train_config(cfg);
  const std::string tmp_name = classifier_role ? "classifier.gmod" : "denoiser.gmod";
  TrainReport report;
  std::vector<unsigned char> bytes;
  if (classifier_role) {
    auto [model, r] = train_classifier(data, full, tc, seed);
    report = std::move(r);
    bytes = detail::encode_model(ModelRole::classifier, nullptr, model.learned_backend(), full);
  } else {
    auto [model, r] = train_denoiser(data, full, tc, seed);
    report = std::move(r);
    bytes = detail::encode_model(ModelRole::denoiser, nullptr, model.learned_backend(), full);
  }
  out.add(tmp_name, std::move(bytes));
  out.add(classifier_role ? "classifier_loss.csv" : "denoiser_loss.csv", train_table(report));
  log << "trained " << (classifier_role ? "classifier" : "denoiser") << ": loss " << text::format(report.initial_loss)
      << " -> " << text::format(report.final_loss) << " over " << tc.epochs << " epochs in "
      << detail::fixed(report.wall_seconds, 1) << " s\n";
}

inline void sample_cmd(const RunConfig& cfg, std::uint64_t seed, int threads, OutputSet& out, std::ostream& log) {
  const LabeledDataset data = dataset(cfg, seed);
  const ScheduleSpec spec = schedule_spec(cfg);
  const NoiseSchedule full = spec.build();
  const NoiseSchedule sampling = spec.respace > 0 ? full.respace(spec.respace) : full;
  const GuidanceRule rule = guidance(cfg);
  const DenoiserModel den = denoiser(cfg, data, full);
  std::optional<ClassifierModel> cls;
  if (rule.needs_classifier() || cfg.has("classifier.backend") || data.descriptor) {
    cls = classifier(cfg, data, full);
  }
  SampleOptions opt;
  opt.seed = seed;
  opt.threads = threads;
  opt.n_chains = static_cast<std::size_t>(cfg.get_int("sampling.n_chains", 1000));
  opt.target = static_cast<int>(cfg.get_int("sampling.target", -1));
  opt.log_level = trace_level(cfg);
  opt.trace_stride = static_cast<int>(cfg.get_int("sampling.trace_stride", 0));
  const SampleBatch batch = sample(den, cls ? &*cls : nullptr, rule, sampling, opt);

  LabeledDataset samples;
  samples.points = batch.samples;
  samples.labels = batch.targets;
  samples.num_classes = cls ? cls->num_classes() : 1;
  samples.seed = seed;
  out.add("samples.glab", encode_dataset(samples));
  if (opt.log_level != LogLevel::none) {
    std::vector<std::vector<DistanceRecord>> traces;
    if (opt.log_level != LogLevel::norms) {
      traces.resize(batch.logs.size());
      detail::parallel_for(traces.size(), threads,
                           [&](std::size_t c) { traces[c] = trace_manifold_distance(batch.logs[c], data); });
    }
    out.add("trajectory.csv", trajectory_table(batch.logs, traces).str());
  }
  log << "sampled " << opt.n_chains << " chains over " << sampling.steps() << " steps with rule "
      << to_string(rule.kind) << " (s=" << text::format(rule.scale) << ")\n";
}

inline void eval_cmd(const RunConfig& cfg, std::uint64_t seed, int threads, OutputSet& out, std::ostream& log) {
  const auto path = cfg.find("eval.samples");
  if (!path) throw ConfigError(cfg.source() + ": missing required key 'eval.samples'");
  const LabeledDataset samples = load_dataset(*path);
  const LabeledDataset data = dataset(cfg, seed);
  const NoiseSchedule full = schedule_spec(cfg).build();
  std::optional<ClassifierModel> oracle_model;
  if (data.descriptor && data.descriptor->kind == ManifoldKind::gaussian_mixture) {
    oracle_model = ClassifierModel::analytic(*data.descriptor, full);
  } else if (cfg.has("classifier.checkpoint")) {
    oracle_model = classifier(cfg, data, full);
  }
  const long long ref_n = cfg.get_int("eval.reference_n", data.size());
  if (ref_n < 1) cfg.reject("eval.reference_n", "must be positive");
  EvalOptions eo;
  eo.k = static_cast<int>(cfg.get_int("eval.k", 3));
  eo.threads = threads;
  eo.allow_rank_deficient = true;
  MetricsReport report = evaluate(samples.points, samples.labels, detail::reference_rows(data, ref_n),
                                  oracle_model ? &*oracle_model : nullptr, eo);
  report.config_fingerprint = fnv1a(cfg.to_text().data(), cfg.to_text().size());
  out.add("metrics.csv", "# guidelab metrics schema " + std::to_string(kCsvSchemaVersion) + "\n" +
                             MetricsReport::csv_header() + "\n" + report.csv_row() + "\n");
  out.add("metrics.txt", report.text_block());
  log << report.text_block();
}

inline Benchmark benchmark(const RunConfig& cfg, std::uint64_t seed) {
  LabeledDataset data = dataset(cfg, seed);
  const ScheduleSpec spec = schedule_spec(cfg);
  NoiseSchedule full = spec.build();
  NoiseSchedule sampling = spec.respace > 0 ? full.respace(spec.respace) : full;
  DenoiserModel den = denoiser(cfg, data, full);
  ClassifierModel cls = classifier(cfg, data, full);
  ClassifierModel orc = oracle(data, full, cls);
  return {std::move(data), std::move(full), std::move(sampling), std::move(den), std::move(cls), std::move(orc)};
}

inline ExperimentResult experiment(const std::string& preset, const RunConfig& cfg, std::uint64_t seed, int threads) {
  const Benchmark bench = benchmark(cfg, seed);
  const RunSettings run{seed, threads};
  const auto chains = [&](std::size_t fallback) {
    const long long n = cfg.get_int("experiment.chains", static_cast<long long>(fallback));
    if (n < 2) cfg.reject("experiment.chains", "need at least two chains");
    return static_cast<std::size_t>(n);
  };
  const double adm = cfg.get_double("experiment.adm_g_scale", 1.0);
  const double geo = cfg.get_double("experiment.geoguide_scale", 2.0);
  if (preset == "norm_curves") {
    return run_norm_curves(bench, {chains(64), adm, geo}, run).result;
  }
  if (preset == "distance_law") {
    DistanceLawConfig c;
    c.draws = static_cast<std::size_t>(cfg.get_int("experiment.draws", 200));
    c.eps_draws = static_cast<std::size_t>(cfg.get_int("experiment.eps_draws", 10000));
    c.reverse_chains = chains(32);
    c.adm_g_scale = adm;
    c.geoguide_scale = geo;
    return run_distance_law(bench, c, run).result;
  }
  if (preset == "cutoff") {
    return run_cutoff(bench, {chains(512), cfg.get_double("experiment.cutoff", 0.3), adm, geo}, run).result;
  }
  if (preset == "scale_sweep") {
    ScaleSweepConfig c;
    c.chains = chains(2048);
    c.scales = cfg.get_doubles("experiment.scales", c.scales);
    c.geoguide_target = cfg.get_double("experiment.geoguide_target", c.geoguide_target);
    c.adm_g_target = cfg.get_double("experiment.adm_g_target", c.adm_g_target);
    return run_scale_sweep(bench, c, run).result;
  }
  if (preset == "respace_study") {
    RespaceConfig c;
    c.chains = chains(2048);
    c.steps = cfg.get_ints("experiment.steps", c.steps);
    c.adm_g_scale = adm;
    c.geoguide_scale = geo;
    return run_respace_study(bench, c, run).result;
  }
  throw ConfigError("unknown experiment preset '" + preset + "'");
}

}  // namespace cli

/// Runs one subcommand; diagnostics go to `err`, progress to `log`.
inline int run_command(const CommandLine& cmd, std::ostream& log, std::ostream& err) {
  try {
    RunConfig cfg = cmd.config_path ? RunConfig::load(*cmd.config_path) : RunConfig{};
    if (cmd.seed) cfg.set("seed", std::to_string(*cmd.seed));
    const std::uint64_t seed = cfg.get_u64("seed");
    std::string dir;
    if (cmd.out_dir) {
      dir = *cmd.out_dir;
    } else if (const char* env = std::getenv("GUIDELAB_OUT"); env && *env) {
      dir = env;
    } else {
      throw ConfigError("no output directory: pass --out or set GUIDELAB_OUT");
    }
    if (cmd.threads < 1) throw ConfigError("--threads must be at least 1");

    cli::OutputSet out(cmd.command == "experiment" ? "experiment " + cmd.preset : cmd.command, cfg);
    if (cmd.command == "gen-data") {
      cli::gen_data(cfg, seed, out, log);
    } else if (cmd.command == "train-denoiser") {
      cli::train(cfg, seed, false, out, log);
    } else if (cmd.command == "train-classifier") {
      cli::train(cfg, seed, true, out, log);
    } else if (cmd.command == "sample") {
      cli::sample_cmd(cfg, seed, cmd.threads, out, log);
    } else if (cmd.command == "eval") {
      cli::eval_cmd(cfg, seed, cmd.threads, out, log);
    } else if (cmd.command == "experiment") {
      const ExperimentResult result = cli::experiment(cmd.preset, cfg, seed, cmd.threads);
      for (const auto& f : result.files) out.add(f.name, f.content);
      out.add(cmd.preset + "_summary.txt", result.summary());
      log << result.summary();
    } else {
      throw ConfigError("unknown command '" + cmd.command + "'");
    }
    out.write(dir, log);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const MismatchError& e) {
    err << "model/schedule mismatch: " << e.what() << '\n';
    return kExitMismatch;
  } catch (const FormatError& e) {
    err << "file error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return kExitFormat;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace guidelab
