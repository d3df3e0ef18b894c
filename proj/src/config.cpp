// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#include "parrep/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "parrep/error.hpp"

namespace parrep {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::optional<double> to_double(const std::string& text) {
  if (text == "inf" || text == "+inf") return kInfiniteTau;
  if (text.empty()) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(text.c_str(), &end);
  if (errno != 0 || end != text.c_str() + text.size() || std::isnan(v)) return std::nullopt;
  return v;
}

const std::vector<std::string> kKnownKeys = {
    "seed", "output_dir",
    "potential.name", "potential.params", "potential.beta",
    "statemap.kind", "statemap.boundaries",
    "well.a", "well.b", "well.n", "well.K",
    "sde.dt", "sde.x0", "sde.max_time", "sde.exit_detection",
    "parrep.N", "parrep.tau_corr", "parrep.tau_dephase", "parrep.method", "parrep.relaxation_time",
    "parrep.max_events", "parrep.workers", "parrep.speeds", "parrep.dephasing_detection",
    "parrep.guard_time", "parrep.max_restarts",
    "sampling.count", "sampling.N", "sampling.t_end", "sampling.tau_dephase", "sampling.censor",
    "decay.x0",
};

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text, std::string source) {
  ConfigFile cfg;
  cfg.source_ = std::move(source);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    const std::string where = cfg.source_ + ":" + std::to_string(line_no);
    if (eq == std::string::npos) fail(ErrorCode::config, where + ": expected 'key = value'");
    std::string key = trim(std::string_view(content).substr(0, eq));
    std::string value = trim(std::string_view(content).substr(eq + 1));
    if (key.empty()) fail(ErrorCode::config, where + ": empty key");
    if (cfg.entries_.count(key))
      fail(ErrorCode::config, where + ": duplicate key '" + key + "' (first set on line " +
                                  std::to_string(cfg.entries_[key].line) + ")");
    cfg.entries_[key] = Entry{std::move(value), line_no};
    if (eol == text.size()) break;
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::config, "cannot read config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path);
}

void ConfigFile::set(const std::string& key, std::string value) { entries_[key] = Entry{std::move(value), 0}; }

const ConfigFile::Entry& ConfigFile::entry(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) fail(ErrorCode::config, source_ + ": missing required key '" + key + "'");
  return it->second;
}

std::string ConfigFile::where(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return source_;
  if (it->second.line == 0) return "override " + key;
  return source_ + ":" + std::to_string(it->second.line);
}

void ConfigFile::error_at(const std::string& key, const std::string& message) const {
  fail(ErrorCode::config, where(key) + ": " + key + ": " + message);
}

std::string ConfigFile::get_string(const std::string& key) const { return entry(key).value; }

double ConfigFile::get_double(const std::string& key) const {
  const auto v = to_double(entry(key).value);
  if (!v) error_at(key, "expected a number, got '" + entry(key).value + "'");
  return *v;
}

std::uint64_t ConfigFile::get_u64(const std::string& key) const {
  const std::string& text = entry(key).value;
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    error_at(key, "expected a nonnegative integer, got '" + text + "'");
  return v;
}

std::vector<double> ConfigFile::get_list(const std::string& key) const {
  const std::string& text = entry(key).value;
  std::vector<double> out;
  if (trim(text).empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const auto v = to_double(trim(std::string_view(text).substr(pos, comma - pos)));
    if (!v) error_at(key, "expected a comma-separated list of numbers, got '" + text + "'");
    out.push_back(*v);
    if (comma == text.size()) break;
    pos = comma + 1;
  }
  return out;
}

void ConfigFile::reject_unknown(const std::vector<std::string>& known) const {
  for (const auto& [key, e] : entries_)
    if (std::find(known.begin(), known.end(), key) == known.end()) error_at(key, "unknown key");
}

std::string ConfigFile::hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  const auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [key, e] : entries_) {
    mix(key);
    mix("=");
    mix(e.value);
    mix("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExitDetection parse_exit_detection(const std::string& name) {
  if (name == "grid") return ExitDetection::grid;
  if (name == "bridge") return ExitDetection::bridge;
  fail(ErrorCode::config, "unknown exit detection '" + name + "' (expected grid or bridge)");
}

namespace {

std::size_t get_count(const ConfigFile& f, const std::string& key, bool allow_zero = false) {
  const std::uint64_t v = f.get_u64(key);
  if (!allow_zero && v == 0) f.error_at(key, "must be positive");
  return static_cast<std::size_t>(v);
}

double get_positive(const ConfigFile& f, const std::string& key) {
  const double v = f.get_double(key);
  if (!(v > 0.0)) f.error_at(key, "must be positive");
  return v;
}

void require_multiple_of_dt(const ConfigFile& f, const std::string& key, double value, double dt) {
  if (!std::isfinite(value) || value == 0.0) return;
  const double ratio = value / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
    f.error_at(key, "must be an integer multiple of sde.dt");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(ConfigFile f) {
  f.reject_unknown(kKnownKeys);
  ExperimentConfig c;
  if (f.has("seed")) c.seed = f.get_u64("seed");
  if (f.has("output_dir")) c.output_dir = f.get_string("output_dir");

  c.potential_name = f.get_string("potential.name");
  if (f.has("potential.params")) c.potential_params = f.get_list("potential.params");
  if (f.has("potential.beta")) c.beta = get_positive(f, "potential.beta");
  try {
    builtin_potential(c.potential_name, c.potential_params, c.beta);
  } catch (const Error& e) {
    f.error_at("potential.name", e.what());
  }

  if (f.has("statemap.kind")) c.statemap_kind = f.get_string("statemap.kind");
  if (c.statemap_kind == "intervals") {
    c.boundaries = f.get_list("statemap.boundaries");
    if (c.boundaries.size() < 2) f.error_at("statemap.boundaries", "needs at least two boundaries");
    for (std::size_t i = 1; i < c.boundaries.size(); ++i)
      if (!(c.boundaries[i] > c.boundaries[i - 1])) f.error_at("statemap.boundaries", "must be strictly increasing");
  } else if (c.statemap_kind != "gradient_descent") {
    f.error_at("statemap.kind", "expected intervals or gradient_descent");
  }

  if (f.has("well.a") || f.has("well.b") || f.has("well.n") || f.has("well.K")) {
    WellBlock w;
    if (f.has("well.a")) w.a = f.get_double("well.a");
    if (f.has("well.b")) w.b = f.get_double("well.b");
    if (f.has("well.n")) w.n = get_count(f, "well.n");
    if (f.has("well.K")) w.k = get_count(f, "well.K");
    if (w.a.has_value() != w.b.has_value()) f.error_at(w.a ? "well.a" : "well.b", "well.a and well.b go together");
    if (w.a && !(*w.b > *w.a)) f.error_at("well.b", "must exceed well.a");
    if (w.n < 3) f.error_at("well.n", "needs at least 3 interior points");
    if (w.k < 2 || w.k > w.n) f.error_at("well.K", "must lie in [2, well.n]");
    c.well = w;
  }

  if (f.has("sde.dt")) c.dt = get_positive(f, "sde.dt");
  if (f.has("sde.x0")) c.x0 = f.get_list("sde.x0");
  if (f.has("sde.max_time")) c.max_time = get_positive(f, "sde.max_time");
  if (f.has("sde.exit_detection")) {
    try {
      c.detection = parse_exit_detection(f.get_string("sde.exit_detection"));
    } catch (const Error& e) {
      f.error_at("sde.exit_detection", e.what());
    }
  }

  ParRepConfig& p = c.parrep;
  p.dt = c.dt;
  if (f.has("parrep.N")) p.n_replicas = get_count(f, "parrep.N");
  if (f.has("parrep.tau_corr")) {
    const std::string text = f.get_string("parrep.tau_corr");
    if (text.rfind("gap:", 0) == 0) {
      ConfigFile tmp = ConfigFile::parse("v = " + text.substr(4));
      const double m = tmp.get_double("v");
      if (!(m >= 0.0) || !std::isfinite(m)) f.error_at("parrep.tau_corr", "gap multiple must be finite and nonnegative");
      c.tau_corr.gap_multiple = m;
    } else {
      c.tau_corr.value = f.get_double("parrep.tau_corr");
      if (!(c.tau_corr.value >= 0.0)) f.error_at("parrep.tau_corr", "must be nonnegative");
      require_multiple_of_dt(f, "parrep.tau_corr", c.tau_corr.value, c.dt);
    }
  }
  p.tau_corr = c.tau_corr.value;
  if (f.has("parrep.tau_dephase")) {
    p.tau_dephase = get_positive(f, "parrep.tau_dephase");
    require_multiple_of_dt(f, "parrep.tau_dephase", p.tau_dephase, c.dt);
  }
  if (f.has("parrep.method")) {
    try {
      p.dephasing = parse_dephasing_method(f.get_string("parrep.method"));
    } catch (const Error& e) {
      f.error_at("parrep.method", e.what());
    }
  }
  if (f.has("parrep.relaxation_time")) {
    p.relaxation_time = f.get_double("parrep.relaxation_time");
    if (!(p.relaxation_time >= 0.0)) f.error_at("parrep.relaxation_time", "must be nonnegative");
    require_multiple_of_dt(f, "parrep.relaxation_time", p.relaxation_time, c.dt);
  }
  if (f.has("parrep.max_events")) p.max_events = get_count(f, "parrep.max_events", true);
  if (f.has("parrep.workers")) p.workers = get_count(f, "parrep.workers", true);
  if (f.has("parrep.speeds")) {
    const auto speeds = f.get_list("parrep.speeds");
    if (speeds.size() != p.n_replicas) f.error_at("parrep.speeds", "must list one speed per replica");
    for (double s : speeds) {
      if (!(s > 0.0) || !std::isfinite(s)) f.error_at("parrep.speeds", "speeds must be positive");
      p.speeds.push_back(SpeedProfile::constant(s));
    }
  }
  if (f.has("parrep.dephasing_detection")) {
    try {
      p.dephasing_detection = parse_exit_detection(f.get_string("parrep.dephasing_detection"));
    } catch (const Error& e) {
      f.error_at("parrep.dephasing_detection", e.what());
    }
  }
  if (f.has("parrep.guard_time")) p.parallel_guard = get_positive(f, "parrep.guard_time");
  if (f.has("parrep.max_restarts")) p.max_restarts = get_count(f, "parrep.max_restarts", true);
  if (p.dephasing == DephasingMethod::fv && p.n_replicas < 2) f.error_at("parrep.N", "Fleming-Viot dephasing needs N >= 2");

  SamplingBlock& s = c.sampling;
  if (f.has("sampling.count")) s.count = get_count(f, "sampling.count");
  if (f.has("sampling.N")) s.n_replicas = get_count(f, "sampling.N");
  if (f.has("sampling.t_end")) {
    s.t_end = f.get_double("sampling.t_end");
    if (!(s.t_end >= 0.0)) f.error_at("sampling.t_end", "must be nonnegative");
  }
  if (f.has("sampling.tau_dephase")) {
    s.tau_dephase = get_positive(f, "sampling.tau_dephase");
    require_multiple_of_dt(f, "sampling.tau_dephase", s.tau_dephase, c.dt);
  }
  if (f.has("sampling.censor")) s.censor = get_positive(f, "sampling.censor");
  if (f.has("decay.x0")) c.decay_start = f.get_string("decay.x0");

  c.file = std::move(f);
  return c;
}

}  // namespace parrep
