#include "guidelab/commands.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace guidelab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("guidelab_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const fs::path& dir, const std::string& name, const std::string& body) {
  const fs::path p = dir / name;
  std::ofstream(p) << body;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::string& command, const std::string& config, const fs::path& out, int threads = 1,
        std::string* err_text = nullptr) {
  CommandLine cmd;
  cmd.command = command;
  cmd.config_path = config;
  cmd.out_dir = out.string();
  cmd.threads = threads;
  std::ostringstream log, err;
  const int code = run_command(cmd, log, err);
  if (err_text) *err_text = err.str();
  return code;
}

int run_binary(const std::string& args) {
  const std::string line = std::string(GUIDELAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(line.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::string kSmallSample =
    "seed = 4\n"
    "data.n = 500\n"
    "sampling.n_chains = 24\n"
    "schedule.respace = 50\n";

}  // namespace

TEST(Config, ParseErrorsNameLineAndKey) {
  try {
    RunConfig::parse_text("seed = 1\n# comment\nguidance.kind\n", "run.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:3"), std::string::npos) << e.what();
  }
  try {
    RunConfig::parse_text("seed = 1\nguidance.scale = 2\n", "run.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("guidance.scale"), std::string::npos);
  }
  EXPECT_THROW(RunConfig::parse_text("seed = 1\nseed = 2\n"), ConfigError);
  const auto cfg = RunConfig::parse_text("seed = 1\n\n\nguidance.s = big # comment\n", "x.cfg");
  try {
    cfg.get_double("guidance.s", 0.0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.cfg:4"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("guidance.s"), std::string::npos);
  }
}

TEST(Config, ValuesAndEcho) {
  const auto cfg = RunConfig::parse_text("seed = 7\nexperiment.scales = 0, 0.5 ,2\ndata.n=10\n");
  EXPECT_EQ(cfg.get_u64("seed"), 7u);
  EXPECT_EQ(cfg.get_doubles("experiment.scales", {}), (std::vector<double>{0.0, 0.5, 2.0}));
  EXPECT_EQ(cfg.get_int("data.n", 0), 10);
  EXPECT_EQ(cfg.get_int("data.dim", 64), 64);
  EXPECT_EQ(cfg.to_text(), "data.n = 10\nexperiment.scales = 0, 0.5 ,2\nseed = 7\n");
  EXPECT_THROW(RunConfig{}.get_u64("seed"), ConfigError);
}

TEST(Cli, MissingSeedIsConfigError) {
  const auto dir = scratch("noseed");
  std::string err;
  EXPECT_EQ(run("gen-data", write_config(dir, "a.cfg", "data.n = 10\n"), dir / "out", 1, &err), kExitConfig);
  EXPECT_NE(err.find("seed"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "out" / "manifest.txt"));
}

TEST(Cli, BinaryExitCodes) {
  const auto dir = scratch("binary");
  const std::string good = write_config(dir, "good.cfg", "seed = 1\ndata.n = 50\n");
  EXPECT_EQ(run_binary("gen-data --config " + good + " --out " + (dir / "o").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "o" / "dataset.glab"));
  EXPECT_EQ(run_binary("gen-data --config " + write_config(dir, "bad.cfg", "seed = 1\nbogus = 2\n") + " --out " +
                       (dir / "o2").string()),
            kExitConfig);
  EXPECT_EQ(run_binary("experiment nonsense --config " + good + " --out " + (dir / "o3").string()), kExitConfig);
  EXPECT_EQ(run_binary("frobnicate"), kExitConfig);
  EXPECT_EQ(run_binary("sample --config " + (dir / "missing.cfg").string()), kExitConfig);
  // --seed on the command line supplies the missing key.
  const std::string noseed = write_config(dir, "noseed.cfg", "data.n = 20\n");
  EXPECT_EQ(run_binary("gen-data --seed 3 --config " + noseed + " --out " + (dir / "o4").string()), 0);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const auto dir = scratch("env");
  const std::string cfg = write_config(dir, "a.cfg", "seed = 2\ndata.n = 30\n");
  CommandLine cmd;
  cmd.command = "gen-data";
  cmd.config_path = cfg;
  std::ostringstream log, err;
  unsetenv("GUIDELAB_OUT");
  EXPECT_EQ(run_command(cmd, log, err), kExitConfig);
  setenv("GUIDELAB_OUT", (dir / "envout").c_str(), 1);
  EXPECT_EQ(run_command(cmd, log, err), kExitOk);
  unsetenv("GUIDELAB_OUT");
  EXPECT_TRUE(fs::exists(dir / "envout" / "dataset.glab"));
}

TEST(Cli, ZeroScaleGeoGuideMatchesUnguidedBytes) {
  const auto dir = scratch("zero_scale");
  ASSERT_EQ(run("sample", write_config(dir, "none.cfg", kSmallSample + "guidance.kind = none\n"), dir / "none"), 0);
  ASSERT_EQ(run("sample", write_config(dir, "geo.cfg", kSmallSample + "guidance.kind = geoguide\nguidance.s = 0\n"),
                dir / "geo"),
            0);
  EXPECT_EQ(slurp(dir / "none" / "samples.glab"), slurp(dir / "geo" / "samples.glab"));
}

TEST(Cli, RerunIsByteIdentical) {
  const auto dir = scratch("rerun");
  const std::string cfg =
      write_config(dir, "a.cfg", kSmallSample + "guidance.kind = adm_g\nguidance.s = 1\nsampling.trace = thinned\n");
  ASSERT_EQ(run("sample", cfg, dir / "a"), 0);
  ASSERT_EQ(run("sample", cfg, dir / "b"), 0);
  for (const char* f : {"samples.glab", "trajectory.csv", "manifest.txt"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  const std::string manifest = slurp(dir / "a" / "manifest.txt");
  EXPECT_EQ(manifest.rfind("# guidelab manifest 1", 0), 0u);
  EXPECT_NE(manifest.find("guidance.kind = adm_g"), std::string::npos);
  EXPECT_NE(manifest.find("samples.glab "), std::string::npos);
  EXPECT_EQ(slurp(dir / "a" / "trajectory.csv").rfind("# guidelab trajectory schema 1\n", 0), 0u);
}

TEST(Cli, ThreadCountDoesNotChangeSamples) {
  const auto dir = scratch("threads");
  const std::string cfg = write_config(dir, "a.cfg", kSmallSample + "guidance.kind = geoguide\nguidance.s = 2\n");
  ASSERT_EQ(run("sample", cfg, dir / "one", 1), 0);
  ASSERT_EQ(run("sample", cfg, dir / "eight", 8), 0);
  EXPECT_EQ(slurp(dir / "one" / "samples.glab"), slurp(dir / "eight" / "samples.glab"));
}

TEST(Cli, EvalOnFreshDataHasSmallFrechet) {
  const auto dir = scratch("eval");
  ASSERT_EQ(run("gen-data", write_config(dir, "gen.cfg", "seed = 100\ndata.n = 10000\n"), dir / "gen"), 0);
  const std::string eval_cfg = write_config(
      dir, "eval.cfg", "seed = 200\ndata.n = 10000\neval.samples = " + (dir / "gen" / "dataset.glab").string() + "\n");
  ASSERT_EQ(run("eval", eval_cfg, dir / "eval", 2), 0);
  const std::string csv = slurp(dir / "eval" / "metrics.csv");
  std::istringstream lines(csv);
  std::string schema, header, row;
  std::getline(lines, schema);
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header, MetricsReport::csv_header());
  const double frechet = std::stod(row.substr(0, row.find(',')));
  EXPECT_LT(frechet, 0.05) << row;
}

TEST(Cli, CorruptFilesAndMismatchedCheckpoints) {
  const auto dir = scratch("errors");
  const std::string train = "seed = 5\ndata.n = 64\nschedule.T = 100\ntrain.epochs = 2\ntrain.batch = 32\n"
                            "train.width = 8\ntrain.layers = 1\ntrain.embedding = 4\n";
  ASSERT_EQ(run("train-denoiser", write_config(dir, "train.cfg", train), dir / "train"), 0);
  const std::string ckpt = (dir / "train" / "denoiser.gmod").string();

  std::string err;
  const std::string other_T = "seed = 5\ndata.n = 64\nschedule.T = 200\nsampling.n_chains = 2\n"
                              "denoiser.backend = learned\ndenoiser.checkpoint = " + ckpt + "\n";
  EXPECT_EQ(run("sample", write_config(dir, "mismatch.cfg", other_T), dir / "m", 1, &err), kExitMismatch) << err;

  std::string bytes = slurp(ckpt);
  bytes[bytes.size() / 2] ^= 0x40;
  std::ofstream(dir / "corrupt.gmod", std::ios::binary) << bytes;
  const std::string corrupt = "seed = 5\ndata.n = 64\nschedule.T = 100\nsampling.n_chains = 2\n"
                              "denoiser.backend = learned\ndenoiser.checkpoint = " + (dir / "corrupt.gmod").string() +
                              "\n";
  EXPECT_EQ(run("sample", write_config(dir, "corrupt.cfg", corrupt), dir / "c", 1, &err), kExitFormat);
  EXPECT_NE(err.find("checksum"), std::string::npos) << err;

  const std::string missing = "seed = 5\neval.samples = " + (dir / "nope.glab").string() + "\n";
  EXPECT_EQ(run("eval", write_config(dir, "missing.cfg", missing), dir / "e"), kExitFormat);
}

TEST(Cli, DivergentTrainingIsNumericError) {
  const auto dir = scratch("diverge");
  const std::string cfg = "seed = 6\ndata.n = 64\nschedule.T = 100\ntrain.epochs = 3\ntrain.batch = 32\n"
                          "train.width = 8\ntrain.layers = 1\ntrain.embedding = 4\ntrain.lr = 1e300\ntrain.clip = 0\n";
  std::string err;
  EXPECT_EQ(run("train-denoiser", write_config(dir, "a.cfg", cfg), dir / "o", 1, &err), kExitNumeric) << err;
}

TEST(Cli, ExperimentWritesSummaryAndPlots) {
  const auto dir = scratch("experiment");
  const std::string cfg = write_config(dir, "a.cfg", "seed = 9\ndata.n = 500\nexperiment.chains = 8\n");
  CommandLine cmd;
  cmd.command = "experiment";
  cmd.preset = "norm_curves";
  cmd.config_path = cfg;
  cmd.out_dir = (dir / "o").string();
  std::ostringstream log, err;
  ASSERT_EQ(run_command(cmd, log, err), 0) << err.str();
  EXPECT_TRUE(fs::exists(dir / "o" / "norm_curves_summary.txt"));
  bool has_svg = false;
  for (const auto& e : fs::directory_iterator(dir / "o")) has_svg |= e.path().extension() == ".svg";
  EXPECT_TRUE(has_svg);
}
