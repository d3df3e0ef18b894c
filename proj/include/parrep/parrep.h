/* Copyright 2026 The parrep authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the parrep simulator. Every call returns a prd_status;
 * on failure prd_last_error() describes the problem for the calling thread.
 * Strings returned through char** are owned by the caller and released with
 * prd_string_free.
 */
#ifndef PARREP_PARREP_H
#define PARREP_PARREP_H

#include <stddef.h>
#include <stdint.h>

#if defined(PRD_BUILDING_LIBRARY)
#define PRD_API __attribute__((visibility("default")))
#else
#define PRD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum prd_status {
  PRD_OK = 0,
  PRD_ERR_INVALID_ARGUMENT = 1,
  PRD_ERR_CONFIG = 2,
  PRD_ERR_NUMERICAL = 3,
  PRD_ERR_ACCEPTANCE = 4,
  PRD_ERR_IO = 5,
  PRD_ERR_INTERNAL = 6
} prd_status;

typedef struct prd_experiment prd_experiment;
typedef struct prd_potential prd_potential;
typedef struct prd_spectrum prd_spectrum;

PRD_API const char* prd_version(void);
PRD_API const char* prd_build_id(void);
PRD_API const char* prd_last_error(void);
PRD_API void prd_string_free(char* s);

/* Experiments (parsed config files). */
PRD_API prd_status prd_experiment_load(const char* path, prd_experiment** out);
PRD_API prd_status prd_experiment_from_string(const char* text, const char* source_name,
                                              prd_experiment** out);
/* Overrides one key, e.g. ("seed", "7") or ("output_dir", "run1"). */
PRD_API prd_status prd_experiment_set(prd_experiment* exp, const char* key, const char* value);
PRD_API prd_status prd_experiment_output_dir(const prd_experiment* exp, char** out);
PRD_API void prd_experiment_free(prd_experiment* exp);

/* Subcommands. Each writes its artifacts and optionally returns the summary JSON. */
PRD_API prd_status prd_cmd_spectrum(const prd_experiment* exp, char** summary);
/* source: "qsd_exact", "fv", "restart" or "point". */
PRD_API prd_status prd_cmd_exit_stats(const prd_experiment* exp, const char* source, char** summary);
/* method: "fv", "restart" or "redistribution". */
PRD_API prd_status prd_cmd_qsd_sample(const prd_experiment* exp, const char* method, char** summary);
PRD_API prd_status prd_cmd_decay(const prd_experiment* exp, char** summary);
PRD_API prd_status prd_cmd_parrep(const prd_experiment* exp, char** summary);
PRD_API prd_status prd_cmd_direct(const prd_experiment* exp, char** summary);
/* out_path may be NULL to skip writing. passed receives 1 when every test has p > 0.01. */
PRD_API prd_status prd_cmd_compare(const char* events_a, const char* events_b, const char* out_path,
                                   int* passed, char** summary);

/* Potentials. */
PRD_API prd_status prd_potential_create(const char* name, const double* params, size_t n_params,
                                        double beta, prd_potential** out);
PRD_API size_t prd_potential_dimension(const prd_potential* pot);
PRD_API prd_status prd_potential_value(const prd_potential* pot, const double* x, size_t dim, double* out);
PRD_API prd_status prd_potential_gradient(const prd_potential* pot, const double* x, size_t dim,
                                          double* grad_out);
PRD_API void prd_potential_free(prd_potential* pot);

/* Dirichlet spectrum of a 1D well (a, b) on n interior nodes, k eigenpairs. */
PRD_API prd_status prd_spectrum_build(const prd_potential* pot, double a, double b, size_t n, size_t k,
                                      prd_spectrum** out);
PRD_API size_t prd_spectrum_count(const prd_spectrum* s);
PRD_API prd_status prd_spectrum_eigenvalue(const prd_spectrum* s, size_t index, double* out);
/* P(T >= t) and E(T) for a walker started at x0; NAN x0 selects the QSD start. */
PRD_API prd_status prd_spectrum_survival(const prd_spectrum* s, double x0, double t, double* out);
PRD_API prd_status prd_spectrum_mean_exit(const prd_spectrum* s, double x0, double* out);
PRD_API prd_status prd_spectrum_hitting(const prd_spectrum* s, double* left, double* right);
/* Draws count positions from the QSD into out. */
PRD_API prd_status prd_spectrum_sample_qsd(const prd_spectrum* s, uint64_t seed, size_t count, double* out);
PRD_API void prd_spectrum_free(prd_spectrum* s);

#ifdef __cplusplus
}
#endif

#endif /* PARREP_PARREP_H */
