// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "parrep/parrep.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitAcceptance = 4;

int exit_code(prd_status status) {
  switch (status) {
    case PRD_OK: return kExitOk;
    case PRD_ERR_INVALID_ARGUMENT:
    case PRD_ERR_CONFIG:
    case PRD_ERR_IO: return kExitConfig;
    case PRD_ERR_NUMERICAL: return kExitNumerical;
    case PRD_ERR_ACCEPTANCE: return kExitAcceptance;
    case PRD_ERR_INTERNAL: break;
  }
  return 1;
}

int report(prd_status status) {
  if (status != PRD_OK) std::fprintf(stderr, "parrep: error: %s\n", prd_last_error());
  return exit_code(status);
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

void print_summary(const Common& common, char* summary) {
  if (summary && !common.quiet) std::fputs(summary, stdout);
  prd_string_free(summary);
}

/// Loads the experiment and applies --seed / --out overrides.
prd_status open_experiment(const Common& common, prd_experiment** exp) {
  prd_status s = prd_experiment_load(common.config.c_str(), exp);
  if (s != PRD_OK) return s;
  if (common.seed) s = prd_experiment_set(*exp, "seed", std::to_string(*common.seed).c_str());
  if (s == PRD_OK && !common.out.empty()) s = prd_experiment_set(*exp, "output_dir", common.out.c_str());
  return s;
}

template <typename Run>
int run_experiment(const Common& common, Run&& run) {
  prd_experiment* exp = nullptr;
  prd_status s = open_experiment(common, &exp);
  char* summary = nullptr;
  if (s == PRD_OK) s = run(exp, &summary);
  if (s == PRD_OK) print_summary(common, summary);
  prd_experiment_free(exp);
  return report(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel replica dynamics simulator and QSD verification toolkit"};
  app.set_version_flag("--version", std::string(prd_version()) + " (" + prd_build_id() + ")");
  app.require_subcommand(1);

  Common common;
  const auto add_common = [&common](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", common.config, "Experiment config file")->check(CLI::ExistingFile);
    if (needs_config) opt->required();
    sub->add_option("--seed", common.seed, "Master seed (overrides the config)");
    sub->add_option("--out", common.out, "Output directory (overrides output_dir)");
    sub->add_flag("--quiet", common.quiet, "Do not print the summary");
  };

  auto* spectrum = app.add_subcommand("spectrum", "Dirichlet spectrum, QSD and hitting law of one well");
  add_common(spectrum, true);

  std::string source = "qsd_exact";
  auto* exit_stats = app.add_subcommand("exit-stats", "Sample exits and test their exponential law");
  add_common(exit_stats, true);
  exit_stats->add_option("--source", source, "Start distribution")
      ->check(CLI::IsMember({"qsd_exact", "fv", "restart", "point"}));

  std::string method = "fv";
  auto* qsd_sample = app.add_subcommand("qsd-sample", "Monte Carlo QSD sampling");
  add_common(qsd_sample, true);
  qsd_sample->add_option("--method", method, "Sampler")->check(CLI::IsMember({"fv", "restart", "redistribution"}));

  auto* decay = app.add_subcommand("decay", "Oracle TV decay towards the QSD and its fitted rate");
  add_common(decay, true);

  auto* parrep_run = app.add_subcommand("parrep-run", "Parallel replica state-to-state trajectory");
  add_common(parrep_run, true);

  auto* direct_run = app.add_subcommand("direct-run", "Plain SDE state-to-state trajectory");
  add_common(direct_run, true);

  std::string events_a, events_b;
  bool assert_pass = false;
  auto* compare = app.add_subcommand("compare", "Two-sample tests between two events CSV files");
  add_common(compare, false);
  compare->add_option("A", events_a, "First events CSV")->required()->check(CLI::ExistingFile);
  compare->add_option("B", events_b, "Second events CSV")->required()->check(CLI::ExistingFile);
  compare->add_flag("--assert", assert_pass, "Exit with status 4 when any test fails at 0.01");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*spectrum) return run_experiment(common, [](auto* e, char** s) { return prd_cmd_spectrum(e, s); });
  if (*exit_stats)
    return run_experiment(common, [&](auto* e, char** s) { return prd_cmd_exit_stats(e, source.c_str(), s); });
  if (*qsd_sample)
    return run_experiment(common, [&](auto* e, char** s) { return prd_cmd_qsd_sample(e, method.c_str(), s); });
  if (*decay) return run_experiment(common, [](auto* e, char** s) { return prd_cmd_decay(e, s); });
  if (*parrep_run) return run_experiment(common, [](auto* e, char** s) { return prd_cmd_parrep(e, s); });
  if (*direct_run) return run_experiment(common, [](auto* e, char** s) { return prd_cmd_direct(e, s); });

  if (*compare) {
    const std::string out_path = common.out.empty() ? std::string() : common.out + "/compare.json";
    int passed = 0;
    char* summary = nullptr;
    const prd_status s =
        prd_cmd_compare(events_a.c_str(), events_b.c_str(), out_path.empty() ? nullptr : out_path.c_str(), &passed, &summary);
    if (s != PRD_OK) return report(s);
    print_summary(common, summary);
    if (assert_pass && !passed) {
      std::fprintf(stderr, "parrep: compare: at least one test rejected at the 0.01 level\n");
      return kExitAcceptance;
    }
    return kExitOk;
  }
  return kExitOk;
}
