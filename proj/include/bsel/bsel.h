// Copyright 2026 The bsel Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to the batch selection library. All objects are opaque and
 * owned by the caller once returned; release them with the matching *_free.
 * Every call returns a bsel_status; on failure bsel_last_error() holds a
 * message for the calling thread until its next failing call. */

#ifndef BSEL_BSEL_H_
#define BSEL_BSEL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BSEL_API __declspec(dllexport)
#else
#define BSEL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as process exit codes for the command-line tool. */
typedef enum bsel_status {
  BSEL_OK = 0,
  BSEL_INTERNAL = 1,
  BSEL_CONFIG_ERROR = 2,
  BSEL_DATA_ERROR = 3,
  BSEL_NUMERICAL_ERROR = 4,
  BSEL_ORACLE_FAILURE = 5
} bsel_status;

typedef struct bsel_dataset bsel_dataset;
typedef struct bsel_reference bsel_reference;
typedef struct bsel_run bsel_run;

typedef struct bsel_eval_record {
  size_t step;
  size_t epoch;
  double test_acc;
  double train_loss;
  double noisy_frac_selected;
  double redundant_frac_selected;
} bsel_eval_record;

BSEL_API const char* bsel_last_error(void);
BSEL_API const char* bsel_version(void);
BSEL_API void bsel_string_free(char* s);

/* ---- datasets ---- */

/* Gaussian class clusters; both outputs must be non-null. */
BSEL_API bsel_status bsel_dataset_synthetic(size_t classes, size_t per_class, size_t test_per_class,
                                            size_t input_dim, double separation, uint64_t seed,
                                            bsel_dataset** train, bsel_dataset** test);
/* CSV (label,features...) or, for a .bin suffix, the binary format.
 * num_classes = 0 infers the class count from the labels. */
BSEL_API bsel_status bsel_dataset_load(const char* path, size_t num_classes, bsel_dataset** out);
BSEL_API bsel_status bsel_dataset_save(const bsel_dataset* ds, const char* path);
BSEL_API bsel_status bsel_dataset_shape(const bsel_dataset* ds, size_t* size, size_t* input_dim,
                                        size_t* num_classes);
BSEL_API void bsel_dataset_free(bsel_dataset* ds);

/* ---- reference tables ---- */

BSEL_API bsel_status bsel_reference_prototype(const bsel_dataset* ds, double clean_fraction,
                                              double temperature, uint64_t seed,
                                              bsel_reference** out);
/* Rows of a CSV file: k logits per example, in example order. */
BSEL_API bsel_status bsel_reference_from_logits(const char* csv_path, double temperature,
                                                bsel_reference** out);
BSEL_API bsel_status bsel_reference_load(const char* path, bsel_reference** out);
BSEL_API bsel_status bsel_reference_save(const bsel_reference* ref, const char* path);
BSEL_API bsel_status bsel_reference_accuracy(const bsel_reference* ref, const bsel_dataset* ds,
                                             double* accuracy);
BSEL_API void bsel_reference_free(bsel_reference* ref);

/* ---- training ---- */

/* config_path may be NULL for the defaults; overrides are "a.b=value". The
 * run directory comes from output.dir, which out_dir replaces when non-null. */
BSEL_API bsel_status bsel_train(const char* config_path, const char* const* overrides,
                                size_t override_count, const char* out_dir, bsel_run** out);
/* Continues a checkpointed run to its configured length. */
BSEL_API bsel_status bsel_resume(const char* checkpoint_path, const char* out_dir, bsel_run** out);
BSEL_API size_t bsel_run_record_count(const bsel_run* run);
BSEL_API bsel_status bsel_run_record(const bsel_run* run, size_t index, bsel_eval_record* out);
BSEL_API size_t bsel_run_steps(const bsel_run* run);
BSEL_API void bsel_run_free(bsel_run* run);

/* ---- evaluation ---- */

/* Reads run directories, writes report.txt, report.csv and the per-epoch
 * series.csv into out_dir when non-null, and returns the table text in
 * *report (free with bsel_string_free). */
BSEL_API bsel_status bsel_eval(const char* const* run_dirs, size_t run_count, const double* targets,
                               size_t target_count, const char* out_dir, char** report);

/* ---- oracle checks ---- */

/* suite: "bounds", "ggn" or "all". Returns BSEL_ORACLE_FAILURE when any check
 * fails; *report is filled in either case. */
BSEL_API bsel_status bsel_check(const char* suite, char** report);

#ifdef __cplusplus
}
#endif

#endif /* BSEL_BSEL_H_ */
