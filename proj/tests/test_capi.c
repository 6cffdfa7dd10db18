/*
 * Copyright 2026 The bsel Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* Exercises the shared library through the C header only. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "bsel/bsel.h"

static int failures = 0;

#define EXPECT(cond)                                                        \
  do {                                                                      \
    if (!(cond)) {                                                          \
      fprintf(stderr, "%s:%d: expected %s (%s)\n", __FILE__, __LINE__, #cond, \
              bsel_last_error());                                           \
      ++failures;                                                           \
    }                                                                       \
  } while (0)

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : ".";
  char path[1024], run_dir[512], ckpt[1024];

  EXPECT(strcmp(bsel_version(), "1.0.0") == 0);

  bsel_dataset *train = NULL, *test = NULL;
  EXPECT(bsel_dataset_synthetic(3, 20, 5, 4, 3.0, 2, &train, &test) == BSEL_OK);
  size_t n = 0, dim = 0, k = 0;
  EXPECT(bsel_dataset_shape(train, &n, &dim, &k) == BSEL_OK);
  EXPECT(n == 60 && dim == 4 && k == 3);

  snprintf(path, sizeof path, "%s/capi_train.bin", dir);
  EXPECT(bsel_dataset_save(train, path) == BSEL_OK);
  bsel_dataset* loaded = NULL;
  EXPECT(bsel_dataset_load(path, 0, &loaded) == BSEL_OK);
  EXPECT(bsel_dataset_shape(loaded, &n, &dim, &k) == BSEL_OK && n == 60);
  EXPECT(bsel_dataset_load("/nonexistent/file.csv", 0, &loaded) == BSEL_DATA_ERROR);
  EXPECT(strlen(bsel_last_error()) > 0);

  bsel_reference* ref = NULL;
  EXPECT(bsel_reference_prototype(train, 0.5, 1.0, 7, &ref) == BSEL_OK);
  double acc = 0.0;
  EXPECT(bsel_reference_accuracy(ref, train, &acc) == BSEL_OK);
  EXPECT(acc > 0.8 && acc <= 1.0);
  snprintf(path, sizeof path, "%s/capi_ref.csv", dir);
  EXPECT(bsel_reference_save(ref, path) == BSEL_OK);
  bsel_reference* ref2 = NULL;
  EXPECT(bsel_reference_load(path, &ref2) == BSEL_OK);
  double acc2 = 0.0;
  EXPECT(bsel_reference_accuracy(ref2, train, &acc2) == BSEL_OK && acc2 == acc);
  EXPECT(bsel_reference_prototype(train, 1.5, 1.0, 7, &ref2) == BSEL_CONFIG_ERROR);

  const char* overrides[] = {"data.classes=3", "data.per_class=40", "data.input_dim=4",
                             "model.hidden=[8]", "model.feature_dim=4", "selection.n_B=30",
                             "selection.n_b=6", "selection.mc_samples=10", "train.steps=8"};
  snprintf(run_dir, sizeof run_dir, "%s/capi_run", dir);
  bsel_run* run = NULL;
  EXPECT(bsel_train(NULL, overrides, 9, run_dir, &run) == BSEL_OK);
  EXPECT(bsel_run_steps(run) == 8);
  EXPECT(bsel_run_record_count(run) == 2);
  bsel_eval_record rec;
  EXPECT(bsel_run_record(run, 1, &rec) == BSEL_OK && rec.step == 8 && rec.epoch == 2);
  EXPECT(bsel_run_record(run, 5, &rec) != BSEL_OK);

  snprintf(ckpt, sizeof ckpt, "%s/checkpoint.json", run_dir);
  snprintf(path, sizeof path, "%s/capi_resumed", dir);
  bsel_run* resumed = NULL;
  EXPECT(bsel_resume(ckpt, path, &resumed) == BSEL_OK);
  EXPECT(bsel_run_steps(resumed) == 8);

  const char* bad[] = {"selection.n_b=400"};
  bsel_run* none = NULL;
  EXPECT(bsel_train(NULL, bad, 1, NULL, &none) == BSEL_CONFIG_ERROR);
  EXPECT(strstr(bsel_last_error(), "exceeds") != NULL);

  const char* dirs[] = {run_dir};
  const double targets[] = {0.4, 0.9};
  char* report = NULL;
  EXPECT(bsel_eval(dirs, 1, targets, 2, dir, &report) == BSEL_OK);
  EXPECT(report != NULL && strstr(report, "bayesian") != NULL);
  bsel_string_free(report);

  report = NULL;
  EXPECT(bsel_check("ggn", &report) == BSEL_OK);
  EXPECT(report != NULL && strstr(report, "PASS") != NULL);
  bsel_string_free(report);
  EXPECT(bsel_check("nope", &report) == BSEL_CONFIG_ERROR);

  bsel_run_free(run);
  bsel_run_free(resumed);
  bsel_reference_free(ref);
  bsel_reference_free(ref2);
  bsel_dataset_free(loaded);
  bsel_dataset_free(train);
  bsel_dataset_free(test);

  if (failures) fprintf(stderr, "%d failures\n", failures);
  else printf("capi: all checks passed\n");
  return failures ? 1 : 0;
}
