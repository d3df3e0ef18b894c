// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#include "parrep/parrep.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "parrep/commands.hpp"
#include "parrep/config.hpp"
#include "parrep/potential.hpp"
#include "parrep/spectral.hpp"

struct prd_experiment {
  parrep::ExperimentConfig config;
};

struct prd_potential {
  parrep::Potential potential;
};

struct prd_spectrum {
  parrep::SpectralModel model;
};

namespace {

thread_local std::string g_last_error;

prd_status to_status(parrep::ErrorCode code) {
  switch (code) {
    case parrep::ErrorCode::invalid_argument: return PRD_ERR_INVALID_ARGUMENT;
    case parrep::ErrorCode::config: return PRD_ERR_CONFIG;
    case parrep::ErrorCode::numerical: return PRD_ERR_NUMERICAL;
    case parrep::ErrorCode::acceptance: return PRD_ERR_ACCEPTANCE;
    case parrep::ErrorCode::io: return PRD_ERR_IO;
  }
  return PRD_ERR_INTERNAL;
}

template <typename F>
prd_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return PRD_OK;
  } catch (const parrep::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return PRD_ERR_INTERNAL;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void hand_back(const std::string& s, char** out) {
  if (out) *out = dup_string(s);
}

void need(const void* p, const char* what) {
  if (!p) parrep::fail(parrep::ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

parrep::InitialMeasure start_measure(double x0) {
  return std::isnan(x0) ? parrep::InitialMeasure::qsd() : parrep::InitialMeasure::point_mass(x0);
}

}  // namespace

extern "C" {

const char* prd_version(void) { return "0.1.0"; }
const char* prd_build_id(void) { return parrep::build_id(); }
const char* prd_last_error(void) { return g_last_error.c_str(); }
void prd_string_free(char* s) { std::free(s); }

prd_status prd_experiment_load(const char* path, prd_experiment** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new prd_experiment{parrep::ExperimentConfig::from_file(parrep::ConfigFile::load(path))};
  });
}

prd_status prd_experiment_from_string(const char* text, const char* source_name, prd_experiment** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    auto file = parrep::ConfigFile::parse(text, source_name ? source_name : "<string>");
    *out = new prd_experiment{parrep::ExperimentConfig::from_file(std::move(file))};
  });
}

prd_status prd_experiment_set(prd_experiment* exp, const char* key, const char* value) {
  return guarded([&] {
    need(exp, "experiment");
    need(key, "key");
    need(value, "value");
    parrep::ConfigFile file = exp->config.file;
    file.set(key, value);
    exp->config = parrep::ExperimentConfig::from_file(std::move(file));
  });
}

prd_status prd_experiment_output_dir(const prd_experiment* exp, char** out) {
  return guarded([&] {
    need(exp, "experiment");
    need(out, "out");
    *out = dup_string(exp->config.output_dir);
  });
}

void prd_experiment_free(prd_experiment* exp) { delete exp; }

prd_status prd_cmd_spectrum(const prd_experiment* exp, char** summary) {
  return guarded([&] {
    need(exp, "experiment");
    hand_back(parrep::cmd_spectrum(exp->config), summary);
  });
}

prd_status prd_cmd_exit_stats(const prd_experiment* exp, const char* source, char** summary) {
  return guarded([&] {
    need(exp, "experiment");
    need(source, "source");
    hand_back(parrep::cmd_exit_stats(exp->config, parrep::parse_exit_source(source)), summary);
  });
}

prd_status prd_cmd_qsd_sample(const prd_experiment* exp, const char* method, char** summary) {
  return guarded([&] {
    need(exp, "experiment");
    need(method, "method");
    hand_back(parrep::cmd_qsd_sample(exp->config, parrep::parse_sample_method(method)), summary);
  });
}

prd_status prd_cmd_decay(const prd_experiment* exp, char** summary) {
  return guarded([&] {
    need(exp, "experiment");
    hand_back(parrep::cmd_decay(exp->config), summary);
  });
}

prd_status prd_cmd_parrep(const prd_experiment* exp, char** summary) {
  return guarded([&] {
    need(exp, "experiment");
    hand_back(parrep::cmd_parrep(exp->config), summary);
  });
}

prd_status prd_cmd_direct(const prd_experiment* exp, char** summary) {
  return guarded([&] {
    need(exp, "experiment");
    hand_back(parrep::cmd_direct(exp->config), summary);
  });
}

prd_status prd_cmd_compare(const char* events_a, const char* events_b, const char* out_path, int* passed,
                           char** summary) {
  return guarded([&] {
    need(events_a, "events_a");
    need(events_b, "events_b");
    const auto r = parrep::cmd_compare(events_a, events_b, out_path ? out_path : "");
    if (passed) *passed = r.passed ? 1 : 0;
    hand_back(r.summary, summary);
  });
}

prd_status prd_potential_create(const char* name, const double* params, size_t n_params, double beta,
                                prd_potential** out) {
  return guarded([&] {
    need(name, "name");
    need(out, "out");
    if (n_params > 0) need(params, "params");
    std::span<const double> p(params, n_params);
    *out = new prd_potential{parrep::builtin_potential(name, p, beta)};
  });
}

size_t prd_potential_dimension(const prd_potential* pot) { return pot ? pot->potential.dimension() : 0; }

prd_status prd_potential_value(const prd_potential* pot, const double* x, size_t dim, double* out) {
  return guarded([&] {
    need(pot, "potential");
    need(x, "x");
    need(out, "out");
    parrep::require(dim == pot->potential.dimension(), "position has the wrong dimension");
    *out = pot->potential.value(std::span<const double>(x, dim));
  });
}

prd_status prd_potential_gradient(const prd_potential* pot, const double* x, size_t dim, double* grad_out) {
  return guarded([&] {
    need(pot, "potential");
    need(x, "x");
    need(grad_out, "grad_out");
    parrep::require(dim == pot->potential.dimension(), "position has the wrong dimension");
    pot->potential.gradient(std::span<const double>(x, dim), std::span<double>(grad_out, dim));
  });
}

void prd_potential_free(prd_potential* pot) { delete pot; }

prd_status prd_spectrum_build(const prd_potential* pot, double a, double b, size_t n, size_t k, prd_spectrum** out) {
  return guarded([&] {
    need(pot, "potential");
    need(out, "out");
    *out = new prd_spectrum{parrep::SpectralModel::build(pot->potential, a, b, n, k)};
  });
}

size_t prd_spectrum_count(const prd_spectrum* s) { return s ? s->model.size() : 0; }

prd_status prd_spectrum_eigenvalue(const prd_spectrum* s, size_t index, double* out) {
  return guarded([&] {
    need(s, "spectrum");
    need(out, "out");
    parrep::require(index < s->model.size(), "eigenvalue index out of range");
    *out = s->model.eigenvalue(index);
  });
}

prd_status prd_spectrum_survival(const prd_spectrum* s, double x0, double t, double* out) {
  return guarded([&] {
    need(s, "spectrum");
    need(out, "out");
    *out = parrep::survival_probability(s->model, start_measure(x0), t).value;
  });
}

prd_status prd_spectrum_mean_exit(const prd_spectrum* s, double x0, double* out) {
  return guarded([&] {
    need(s, "spectrum");
    need(out, "out");
    *out = parrep::mean_exit_time(s->model, start_measure(x0)).value;
  });
}

prd_status prd_spectrum_hitting(const prd_spectrum* s, double* left, double* right) {
  return guarded([&] {
    need(s, "spectrum");
    const auto rho = parrep::hitting_measure(s->model);
    if (left) *left = rho.left;
    if (right) *right = rho.right;
  });
}

prd_status prd_spectrum_sample_qsd(const prd_spectrum* s, uint64_t seed, size_t count, double* out) {
  return guarded([&] {
    need(s, "spectrum");
    if (count > 0) need(out, "out");
    parrep::RngStream rng(seed, 0);
    const auto draws = parrep::sample_qsd(s->model, rng, count);
    std::copy(draws.begin(), draws.end(), out);
  });
}

void prd_spectrum_free(prd_spectrum* s) { delete s; }

}  // extern "C"
