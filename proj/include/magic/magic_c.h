// Copyright 2026 The MAGIC Authors
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

/* C interface to the MAGIC library.
 *
 * Every object is an opaque handle owned by the caller and released with the
 * matching *_free function (free functions accept NULL). Functions return a
 * magic_status; on failure magic_last_error() describes the problem for the
 * calling thread until its next failing call. Output handles are only
 * written on success. */
#ifndef MAGIC_MAGIC_C_H
#define MAGIC_MAGIC_C_H

#include <stddef.h>
#include <stdint.h>

#if defined(MAGIC_BUILDING_LIBRARY)
#define MAGIC_API __attribute__((visibility("default")))
#else
#define MAGIC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum magic_status {
  MAGIC_OK = 0,
  MAGIC_ERR_INVALID_ARGUMENT = 1,
  MAGIC_ERR_PARSE = 2,
  MAGIC_ERR_IO = 3,
  MAGIC_ERR_DIMENSION = 4,
  MAGIC_ERR_COMPUTATION = 5,
  MAGIC_ERR_INTERNAL = 6
} magic_status;

typedef struct magic_dataset magic_dataset;
typedef struct magic_truth magic_truth;
typedef struct magic_basis magic_basis;
typedef struct magic_stability magic_stability;
typedef struct magic_model magic_model;
typedef struct magic_stats magic_stats;
typedef struct magic_prediction magic_prediction;

MAGIC_API const char* magic_last_error(void);
MAGIC_API const char* magic_status_string(magic_status status);

/* ---- datasets ---------------------------------------------------------- */

enum {
  MAGIC_LOAD_UNLABELED = 1,    /* diagnosis column optional */
  MAGIC_LOAD_NON_NEGATIVE = 2  /* reject negative feature values */
};

MAGIC_API magic_status magic_dataset_load(const char* path, unsigned flags, magic_dataset** out);
MAGIC_API magic_status magic_dataset_save(const magic_dataset* ds, const char* path);
MAGIC_API size_t magic_dataset_num_subjects(const magic_dataset* ds);
MAGIC_API size_t magic_dataset_num_features(const magic_dataset* ds);
MAGIC_API int magic_dataset_has_labels(const magic_dataset* ds);
MAGIC_API size_t magic_dataset_num_patients(const magic_dataset* ds);
MAGIC_API void magic_dataset_free(magic_dataset* ds);

/* ---- simulation -------------------------------------------------------- */

typedef struct magic_sim_config {
  int n_cn;
  int n_pt;
  int rows;
  int cols;
  double noise_sd;
  double subject_sd;
  double atrophy_fraction;
  double age_slope;
  uint64_t seed;
} magic_sim_config;

MAGIC_API void magic_sim_config_init(magic_sim_config* cfg);
MAGIC_API magic_status magic_simulate(const magic_sim_config* cfg, magic_dataset** dataset, magic_truth** truth);
/* Writes truth (participant_id, subtype_name) and masks (row, col, mask_name). */
MAGIC_API magic_status magic_truth_save(const magic_truth* truth, const char* truth_csv, const char* masks_csv);
MAGIC_API void magic_truth_free(magic_truth* truth);

/* ---- multi-scale basis ------------------------------------------------- */

typedef struct magic_basis_options {
  double tol;
  int max_iter;
  int random_init; /* 0: NNDSVD, 1: seeded uniform */
  int residualize; /* regress out cov_* columns on controls first */
  uint64_t seed;
  int jobs;
} magic_basis_options;

MAGIC_API void magic_basis_options_init(magic_basis_options* opts);
MAGIC_API magic_status magic_basis_fit(const magic_dataset* ds, const int* k_values, size_t n_k,
                                       const magic_basis_options* opts, magic_basis** out);
MAGIC_API magic_status magic_basis_save(const magic_basis* basis, const char* dir);
MAGIC_API magic_status magic_basis_load(const char* dir, magic_basis** out);
MAGIC_API size_t magic_basis_num_scales(const magic_basis* basis);
MAGIC_API size_t magic_basis_total_components(const magic_basis* basis);
/* Copies the fitted scales in ascending order (n must equal the scale count). */
MAGIC_API magic_status magic_basis_scales(const magic_basis* basis, int* scales, size_t n);
MAGIC_API void magic_basis_free(magic_basis* basis);

/* ---- model-order selection --------------------------------------------- */

typedef struct magic_stability_options {
  int repetitions;
  double test_fraction;
  int restarts;
  double reg_c;
  int refit_basis;
  uint64_t seed;
  int jobs;
} magic_stability_options;

MAGIC_API void magic_stability_options_init(magic_stability_options* opts);
/* `ds` supplies the diagnosis of every basis subject (matched by id). */
MAGIC_API magic_status magic_stability_run(const magic_basis* basis, const magic_dataset* ds, const int* c_values,
                                           size_t n_c, const int* k_values, size_t n_k,
                                           const magic_stability_options* opts, magic_stability** out);
MAGIC_API magic_status magic_stability_save(const magic_stability* report, const char* json_path,
                                            const char* csv_path);
MAGIC_API magic_status magic_stability_select(const magic_stability* report, const int* k_subset, size_t n_k,
                                              int* c_out);
MAGIC_API void magic_stability_free(magic_stability* report);

/* ---- clustering -------------------------------------------------------- */

typedef struct magic_cluster_options {
  int c;
  int max_cycles;
  double consistency_threshold;
  int restarts;
  double reg_c;
  uint64_t seed;
  int jobs;
} magic_cluster_options;

MAGIC_API void magic_cluster_options_init(magic_cluster_options* opts);
MAGIC_API magic_status magic_model_fit(const magic_basis* basis, const magic_dataset* ds, const int* k_set,
                                       size_t n_k, const magic_cluster_options* opts, magic_model** out);
MAGIC_API magic_status magic_model_save(const magic_model* model, const char* dir);
MAGIC_API magic_status magic_model_load(const char* dir, magic_model** out);
MAGIC_API int magic_model_num_clusters(const magic_model* model);
MAGIC_API int magic_model_predict_scale(const magic_model* model);
MAGIC_API size_t magic_model_num_patients(const magic_model* model);
/* Copies the consensus subtype of each patient (n must equal the patient count). */
MAGIC_API magic_status magic_model_consensus(const magic_model* model, int* subtypes, size_t n);
MAGIC_API void magic_model_free(magic_model* model);

/* ---- subtype mapping --------------------------------------------------- */

/* Controls are the basis subjects that are not patients of `model`. */
MAGIC_API magic_status magic_stats_run(const magic_basis* basis, const magic_model* model, double alpha,
                                       int welch, magic_stats** out);
MAGIC_API magic_status magic_stats_save(const magic_stats* stats, const char* csv_path);
MAGIC_API size_t magic_stats_num_rows(const magic_stats* stats);
MAGIC_API int magic_stats_survivors(const magic_stats* stats, int subtype);
MAGIC_API void magic_stats_free(magic_stats* stats);

/* Classical MDS of all basis subjects at the model's prediction scale;
 * group is "CN" or "subtype_<s>". */
MAGIC_API magic_status magic_mds_save(const magic_basis* basis, const magic_model* model, int dims,
                                      const char* csv_path);

/* ---- prediction -------------------------------------------------------- */

MAGIC_API magic_status magic_predict(const magic_model* model, const magic_basis* basis, const magic_dataset* ds,
                                     magic_prediction** out);
/* Columns: participant_id, predicted_label, subtype, score_1..score_c. */
MAGIC_API magic_status magic_prediction_save(const magic_prediction* pred, const char* csv_path);
MAGIC_API size_t magic_prediction_num_subjects(const magic_prediction* pred);
/* Requires a labeled dataset with the same subjects as the prediction. */
MAGIC_API magic_status magic_prediction_balanced_accuracy(const magic_prediction* pred, const magic_dataset* ds,
                                                          double* out);
MAGIC_API void magic_prediction_free(magic_prediction* pred);

/* Baseline: patients of `model` randomly split into n1 + n2, one SVM per
 * face, fitted on the basis loadings at the model's prediction scale and
 * scored on the labeled dataset `ds`. */
MAGIC_API magic_status magic_random_split_balanced_accuracy(const magic_model* model, const magic_basis* basis,
                                                            const magic_dataset* ds, int n1, int n2, double reg_c,
                                                            uint64_t seed, double* out);

#ifdef __cplusplus
}
#endif

#endif /* MAGIC_MAGIC_C_H */
