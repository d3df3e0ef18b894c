/* Copyright 2026 The parrep authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Exercises the C interface from plain C. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "parrep/parrep.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static void potentials(void) {
  prd_potential* pot = NULL;
  const double h = 1.0;
  EXPECT(prd_potential_create("double_well_1d", &h, 1, 4.0, &pot) == PRD_OK);
  EXPECT(prd_potential_dimension(pot) == 1);
  double x = 0.0;
  double v = 0.0;
  double g = 0.0;
  EXPECT(prd_potential_value(pot, &x, 1, &v) == PRD_OK && v == 1.0);
  x = 2.0;
  EXPECT(prd_potential_gradient(pot, &x, 1, &g) == PRD_OK && g == 24.0);
  EXPECT(prd_potential_value(pot, &x, 2, &v) == PRD_ERR_INVALID_ARGUMENT);
  prd_potential_free(pot);

  pot = NULL;
  EXPECT(prd_potential_create("wobbly", NULL, 0, 1.0, &pot) != PRD_OK);
  EXPECT(pot == NULL);
  EXPECT(strlen(prd_last_error()) > 0);
  EXPECT(prd_potential_create("flat", NULL, 0, -1.0, &pot) != PRD_OK);
}

static void spectra(void) {
  prd_potential* flat = NULL;
  prd_spectrum* s = NULL;
  EXPECT(prd_potential_create("flat", NULL, 0, 1.0, &flat) == PRD_OK);
  EXPECT(prd_spectrum_build(flat, 0.0, 1.0, 2000, 8, &s) == PRD_OK);
  EXPECT(prd_spectrum_count(s) == 8);
  double l1 = 0.0;
  EXPECT(prd_spectrum_eigenvalue(s, 0, &l1) == PRD_OK);
  EXPECT(fabs(l1 / (M_PI * M_PI) - 1.0) < 0.005);
  double dummy = 0.0;
  EXPECT(prd_spectrum_eigenvalue(s, 8, &dummy) == PRD_ERR_INVALID_ARGUMENT);

  double surv = 0.0;
  EXPECT(prd_spectrum_survival(s, NAN, 0.1, &surv) == PRD_OK);
  EXPECT(fabs(surv - exp(-l1 * 0.1)) < 1e-10);
  double m = 0.0;
  EXPECT(prd_spectrum_mean_exit(s, 0.5, &m) == PRD_OK);
  EXPECT(fabs(m - 0.125) < 0.00125);
  double left = 0.0;
  double right = 0.0;
  EXPECT(prd_spectrum_hitting(s, &left, &right) == PRD_OK);
  EXPECT(fabs(left - 0.5) < 1e-9 && fabs(right - 0.5) < 1e-9);

  double draws[1000];
  double again[1000];
  EXPECT(prd_spectrum_sample_qsd(s, 7, 1000, draws) == PRD_OK);
  EXPECT(prd_spectrum_sample_qsd(s, 7, 1000, again) == PRD_OK);
  EXPECT(memcmp(draws, again, sizeof draws) == 0);
  for (int i = 0; i < 1000; ++i) EXPECT(draws[i] > 0.0 && draws[i] < 1.0);

  prd_spectrum_free(s);
  s = NULL;
  EXPECT(prd_spectrum_build(flat, 1.0, 0.0, 100, 4, &s) != PRD_OK);
  EXPECT(s == NULL);
  prd_potential_free(flat);
}

static void experiments(const char* out_dir) {
  const char* text =
      "potential.name = flat\n"
      "statemap.boundaries = 0, 1\n"
      "well.a = 0\n"
      "well.b = 1\n"
      "well.n = 400\n";
  prd_experiment* exp = NULL;
  EXPECT(prd_experiment_from_string(text, "capi.cfg", &exp) == PRD_OK);
  EXPECT(prd_experiment_set(exp, "output_dir", out_dir) == PRD_OK);
  char* dir = NULL;
  EXPECT(prd_experiment_output_dir(exp, &dir) == PRD_OK);
  EXPECT(dir != NULL && strcmp(dir, out_dir) == 0);
  prd_string_free(dir);

  char* summary = NULL;
  EXPECT(prd_cmd_spectrum(exp, &summary) == PRD_OK);
  EXPECT(summary != NULL && strstr(summary, "\"command\": \"spectrum\"") != NULL);
  prd_string_free(summary);
  EXPECT(prd_cmd_spectrum(exp, NULL) == PRD_OK);
  EXPECT(prd_cmd_exit_stats(exp, "sideways", NULL) == PRD_ERR_CONFIG);
  EXPECT(prd_experiment_set(exp, "sde.dt", "-1") == PRD_ERR_CONFIG);
  EXPECT(strstr(prd_last_error(), "sde.dt") != NULL);
  prd_experiment_free(exp);

  exp = NULL;
  EXPECT(prd_experiment_from_string("potential.name = flat\nbogus\n", "bad.cfg", &exp) == PRD_ERR_CONFIG);
  EXPECT(strstr(prd_last_error(), "bad.cfg:2") != NULL);
  EXPECT(prd_experiment_load("/nonexistent/parrep.cfg", &exp) == PRD_ERR_CONFIG);

  int passed = 0;
  EXPECT(prd_cmd_compare("/nonexistent/a.csv", "/nonexistent/b.csv", NULL, &passed, NULL) != PRD_OK);
}

int main(int argc, char** argv) {
  EXPECT(strlen(prd_version()) > 0);
  EXPECT(strlen(prd_build_id()) > 0);
  EXPECT(prd_potential_create(NULL, NULL, 0, 1.0, NULL) == PRD_ERR_INVALID_ARGUMENT);
  potentials();
  spectra();
  experiments(argc > 1 ? argv[1] : "capi_out");
  if (failures) fprintf(stderr, "%d check(s) failed\n", failures);
  return failures ? 1 : 0;
}
