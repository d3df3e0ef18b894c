// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "parrep/parrep.hpp"
#include "parrep/potential.hpp"
#include "parrep/sde.hpp"

namespace parrep {

/// Flat `section.key = value` file with `#` comments.
///
/// Values are kept as text; typed getters raise ErrorCode::config errors that
/// name the source and line of the offending entry.
class ConfigFile {
 public:
  static ConfigFile parse(std::string_view text, std::string source = "<config>");
  static ConfigFile load(const std::string& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  /// Overrides or adds a value (line 0 marks an override).
  void set(const std::string& key, std::string value);

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::vector<double> get_list(const std::string& key) const;

  std::string where(const std::string& key) const;
  [[noreturn]] void error_at(const std::string& key, const std::string& message) const;

  /// Entries whose key is not in `known`, so typos do not pass silently.
  void reject_unknown(const std::vector<std::string>& known) const;

  /// FNV-1a 64 of the sorted `key=value` lines, as 16 hex digits.
  std::string hash() const;
  const std::string& source() const noexcept { return source_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  const Entry& entry(const std::string& key) const;

  std::string source_;
  std::map<std::string, Entry> entries_;
};

struct WellBlock {
  std::optional<double> a;
  std::optional<double> b;
  std::size_t n = 2000;
  std::size_t k = 16;
};

struct SamplingBlock {
  std::size_t count = 10000;
  std::size_t n_replicas = 1000;
  double t_end = 2.0;
  double tau_dephase = 1.0;
  double censor = kInfiniteTau;
};

/// tau_corr may be given as a multiple of the largest 1/(lambda_2 - lambda_1)
/// over the wells ("gap:5"); it is resolved once the spectra are known.
struct TauSpec {
  double value = 1.0;
  std::optional<double> gap_multiple;
};

struct ExperimentConfig {
  ConfigFile file;
  std::uint64_t seed = 0;
  std::string output_dir = ".";

  std::string potential_name;
  std::vector<double> potential_params;
  double beta = 1.0;

  std::string statemap_kind = "intervals";
  std::vector<double> boundaries;

  std::optional<WellBlock> well;
  double dt = 1e-4;
  std::optional<Position> x0;
  double max_time = 1e4;
  ExitDetection detection = ExitDetection::bridge;

  ParRepConfig parrep;
  TauSpec tau_corr;
  SamplingBlock sampling;
  std::optional<std::string> decay_start;  // a number or "qsd"

  /// Re-reads every typed field from `file`.
  static ExperimentConfig from_file(ConfigFile file);
  std::string hash() const { return file.hash(); }
};

ExitDetection parse_exit_detection(const std::string& name);

}  // namespace parrep
