#pragma once

// Flat run configuration: one `section.key = value` per line, `#` starts a comment.

#include "guidelab/core.hpp"
#include "guidelab/text.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace guidelab {

class ConfigError : public Error {
 public:
  using Error::Error;
};

class RunConfig {
 public:
  struct Entry {
    std::string value;
    int line = 0;  // 0 for values set programmatically
  };

  static const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "seed",
        "data.path", "data.kind", "data.n", "data.seed", "data.dim", "data.classes", "data.radius", "data.sigma",
        "data.ambient_sigma", "data.plane_sigma", "data.scale", "data.radii",
        "schedule.type", "schedule.T", "schedule.beta_start", "schedule.beta_end", "schedule.gamma_mode",
        "schedule.respace",
        "denoiser.backend", "denoiser.checkpoint", "classifier.backend", "classifier.checkpoint",
        "train.epochs", "train.batch", "train.lr", "train.clip", "train.width", "train.layers", "train.embedding",
        "guidance.kind", "guidance.s", "guidance.cutoff", "guidance.geoguide_T", "guidance.eps_norm",
        "sampling.n_chains", "sampling.target", "sampling.trace", "sampling.trace_stride",
        "eval.samples", "eval.k", "eval.reference_n",
        "experiment.chains", "experiment.scales", "experiment.steps", "experiment.adm_g_scale",
        "experiment.geoguide_scale", "experiment.geoguide_scaled_scale", "experiment.cutoff", "experiment.draws",
        "experiment.eps_draws", "experiment.geoguide_target", "experiment.adm_g_target",
    };
    return keys;
  }

  static RunConfig parse(std::istream& in, const std::string& source = "config") {
    RunConfig cfg;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      std::string_view s = raw;
      if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
      s = text::trim(s);
      if (s.empty()) continue;
      const auto eq = s.find('=');
      const std::string where = source + ":" + std::to_string(line);
      if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
      const std::string key(text::trim(s.substr(0, eq)));
      const std::string value(text::trim(s.substr(eq + 1)));
      if (key.empty()) throw ConfigError(where + ": missing key");
      if (!known_keys().count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
      if (cfg.entries_.count(key)) throw ConfigError(where + ": key '" + key + "' set twice");
      cfg.entries_[key] = {value, line};
    }
    cfg.source_ = source;
    return cfg;
  }

  static RunConfig parse_text(const std::string& content, const std::string& source = "config") {
    std::istringstream in(content);
    return parse(in, source);
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse(in, path);
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  void set(const std::string& key, const std::string& value) {
    if (!known_keys().count(key)) throw ConfigError("unknown key '" + key + "'");
    entries_[key] = {value, 0};
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second.value;
  }

  std::optional<std::string> find(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second.value;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    double v = 0;
    if (!text::try_parse(it->second.value, v)) fail(it, "expected a number");
    return v;
  }

  long long get_int(const std::string& key, long long fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    long long v = 0;
    if (!text::try_parse_int(it->second.value, v)) fail(it, "expected an integer");
    return v;
  }

  std::uint64_t get_u64(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(source_ + ": missing required key '" + key + "'");
    std::uint64_t v = 0;
    if (!text::try_parse_int(it->second.value, v)) fail(it, "expected an unsigned integer");
    return v;
  }

  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<double> out;
    for (auto part : text::split(it->second.value, ',')) {
      double v = 0;
      if (!text::try_parse(part, v)) fail(it, "expected a comma-separated list of numbers");
      out.push_back(v);
    }
    return out;
  }

  std::vector<int> get_ints(const std::string& key, std::vector<int> fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<int> out;
    for (auto part : text::split(it->second.value, ',')) {
      int v = 0;
      if (!text::try_parse_int(part, v)) fail(it, "expected a comma-separated list of integers");
      out.push_back(v);
    }
    return out;
  }

  /// Raises a ConfigError naming the key and, when known, its line.
  [[noreturn]] void reject(const std::string& key, const std::string& message) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(source_ + ": key '" + key + "': " + message);
    fail(it, message);
  }

  /// Canonical echo, sorted by key.
  std::string to_text() const {
    std::string out;
    for (const auto& [key, entry] : entries_) out += key + " = " + entry.value + '\n';
    return out;
  }

  const std::string& source() const { return source_; }

 private:
  using Iterator = std::map<std::string, Entry>::const_iterator;

  [[noreturn]] void fail(Iterator it, const std::string& message) const {
    std::string where = source_;
    if (it->second.line > 0) where += ":" + std::to_string(it->second.line);
    throw ConfigError(where + ": key '" + it->first + "': " + message + " (got '" + it->second.value + "')");
  }

  std::map<std::string, Entry> entries_;
  std::string source_ = "config";
};

}  // namespace guidelab
