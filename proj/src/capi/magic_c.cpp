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

#include "magic/magic_c.h"

#include <algorithm>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>

#include "magic/basis_io.hpp"
#include "magic/csv.hpp"
#include "magic/dataset.hpp"
#include "magic/error.hpp"
#include "magic/magic.hpp"
#include "magic/selection.hpp"
#include "magic/simulate.hpp"
#include "magic/stats.hpp"

struct magic_dataset {
  magic::Dataset data;
};
struct magic_truth {
  magic::GroundTruth truth;
};
struct magic_basis {
  magic::BasisArchive archive;
};
struct magic_stability {
  magic::StabilityReport report;
};
struct magic_model {
  magic::MagicModel model;
  std::vector<std::string> patient_ids;
};
struct magic_stats {
  magic::StatsTable table;
};
struct magic_prediction {
  std::vector<std::string> subject_ids;
  magic::MagicPrediction result;
};

namespace {

thread_local std::string g_last_error;

magic_status status_of(magic::ErrorKind kind) {
  switch (kind) {
    case magic::ErrorKind::InvalidArgument: return MAGIC_ERR_INVALID_ARGUMENT;
    case magic::ErrorKind::Parse: return MAGIC_ERR_PARSE;
    case magic::ErrorKind::Io: return MAGIC_ERR_IO;
    case magic::ErrorKind::Dimension: return MAGIC_ERR_DIMENSION;
    case magic::ErrorKind::Computation: return MAGIC_ERR_COMPUTATION;
  }
  return MAGIC_ERR_INTERNAL;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
magic_status guarded(F&& body) {
  try {
    body();
    return MAGIC_OK;
  } catch (const magic::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MAGIC_ERR_COMPUTATION;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return MAGIC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "internal error";
    return MAGIC_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  magic::require(p != nullptr, magic::ErrorKind::InvalidArgument, std::string(what) + " must not be NULL");
}

std::vector<int> int_list(const int* values, std::size_t n, const char* what) {
  magic::require(n == 0 || values != nullptr, magic::ErrorKind::InvalidArgument,
                 std::string(what) + " must not be NULL");
  return std::vector<int>(values, values + n);
}

// Diagnosis of each basis subject, taken from `ds` by subject id.
std::vector<int> basis_labels(const magic::BasisArchive& archive, const magic::Dataset& ds) {
  magic::require(ds.has_labels(), magic::ErrorKind::InvalidArgument, "dataset has no diagnosis labels");
  const std::vector<std::size_t> rows = archive.align(ds);
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (std::size_t r : rows) labels.push_back(ds.labels[r]);
  return labels;
}

// Diagnosis of each basis subject implied by the model's patient list.
std::vector<int> model_labels(const magic::BasisArchive& archive, const magic_model& m,
                              std::vector<int>* subtypes = nullptr) {
  std::unordered_map<std::string, int> subtype_of;
  for (std::size_t p = 0; p < m.patient_ids.size(); ++p) subtype_of[m.patient_ids[p]] = m.model.consensus_labels[p];
  std::vector<int> labels;
  std::size_t found = 0;
  for (const std::string& id : archive.subject_ids) {
    auto it = subtype_of.find(id);
    labels.push_back(it == subtype_of.end() ? magic::kControl : magic::kPatient);
    if (it != subtype_of.end()) {
      ++found;
      if (subtypes) subtypes->push_back(it->second);
    }
  }
  magic::require(found == m.patient_ids.size(), magic::ErrorKind::InvalidArgument,
                 "model patients are not all subjects of the basis");
  return labels;
}

magic::PolytopeOptions polytope_options(double reg_c) {
  magic::PolytopeOptions o;
  o.svm.reg_c = reg_c;
  return o;
}

}  // namespace

extern "C" {

const char* magic_last_error(void) { return g_last_error.c_str(); }

const char* magic_status_string(magic_status status) {
  switch (status) {
    case MAGIC_OK: return "ok";
    case MAGIC_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MAGIC_ERR_PARSE: return "parse error";
    case MAGIC_ERR_IO: return "i/o error";
    case MAGIC_ERR_DIMENSION: return "dimension mismatch";
    case MAGIC_ERR_COMPUTATION: return "computation error";
    case MAGIC_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

// ---- datasets --------------------------------------------------------------

magic_status magic_dataset_load(const char* path, unsigned flags, magic_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    magic::DatasetSchema schema;
    schema.labels_required = (flags & MAGIC_LOAD_UNLABELED) == 0;
    schema.require_both_classes = schema.labels_required;
    schema.require_non_negative = (flags & MAGIC_LOAD_NON_NEGATIVE) != 0;
    *out = new magic_dataset{magic::load_dataset(path, schema)};
  });
}

magic_status magic_dataset_save(const magic_dataset* ds, const char* path) {
  return guarded([&] {
    need(ds, "dataset");
    need(path, "path");
    magic::save_dataset(ds->data, path);
  });
}

size_t magic_dataset_num_subjects(const magic_dataset* ds) { return ds ? ds->data.num_subjects() : 0; }
size_t magic_dataset_num_features(const magic_dataset* ds) { return ds ? ds->data.num_features() : 0; }
int magic_dataset_has_labels(const magic_dataset* ds) { return ds && ds->data.has_labels() ? 1 : 0; }
size_t magic_dataset_num_patients(const magic_dataset* ds) { return ds ? ds->data.patient_indices().size() : 0; }
void magic_dataset_free(magic_dataset* ds) { delete ds; }

// ---- simulation ------------------------------------------------------------

void magic_sim_config_init(magic_sim_config* cfg) {
  if (!cfg) return;
  const magic::SimConfig d;
  *cfg = magic_sim_config{d.n_cn, d.n_pt, d.rows, d.cols, d.noise_sd, d.subject_sd, d.atrophy_fraction, d.age_slope, d.seed};
}

magic_status magic_simulate(const magic_sim_config* cfg, magic_dataset** dataset, magic_truth** truth) {
  return guarded([&] {
    need(cfg, "config");
    need(dataset, "dataset");
    magic::SimConfig sc;
    sc.n_cn = cfg->n_cn;
    sc.n_pt = cfg->n_pt;
    sc.rows = cfg->rows;
    sc.cols = cfg->cols;
    sc.noise_sd = cfg->noise_sd;
    sc.subject_sd = cfg->subject_sd;
    sc.atrophy_fraction = cfg->atrophy_fraction;
    sc.age_slope = cfg->age_slope;
    sc.seed = cfg->seed;
    auto [ds, gt] = magic::generate_cohort(sc);
    auto ds_handle = std::make_unique<magic_dataset>(magic_dataset{std::move(ds)});
    if (truth) *truth = new magic_truth{std::move(gt)};
    *dataset = ds_handle.release();
  });
}

magic_status magic_truth_save(const magic_truth* truth, const char* truth_csv, const char* masks_csv) {
  return guarded([&] {
    need(truth, "truth");
    if (truth_csv) magic::save_truth(truth->truth, truth_csv);
    if (masks_csv) magic::save_masks(truth->truth.masks, masks_csv);
  });
}

void magic_truth_free(magic_truth* truth) { delete truth; }

// ---- basis -----------------------------------------------------------------

void magic_basis_options_init(magic_basis_options* opts) {
  if (!opts) return;
  const magic::OpnmfOptions d;
  *opts = magic_basis_options{d.tol, d.max_iter, 0, 1, d.seed, 1};
}

magic_status magic_basis_fit(const magic_dataset* ds, const int* k_values, size_t n_k, const magic_basis_options* opts,
                             magic_basis** out) {
  return guarded([&] {
    need(ds, "dataset");
    need(opts, "options");
    need(out, "out");
    magic::OpnmfOptions o;
    o.tol = opts->tol;
    o.max_iter = opts->max_iter;
    o.init = opts->random_init ? magic::OpnmfInit::Random : magic::OpnmfInit::Nndsvd;
    o.seed = opts->seed;
    *out = new magic_basis{
        magic::build_basis(ds->data, int_list(k_values, n_k, "k_values"), o, opts->residualize != 0, opts->jobs)};
  });
}

magic_status magic_basis_save(const magic_basis* basis, const char* dir) {
  return guarded([&] {
    need(basis, "basis");
    need(dir, "dir");
    magic::save_basis(basis->archive, dir);
  });
}

magic_status magic_basis_load(const char* dir, magic_basis** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new magic_basis{magic::load_basis(dir)};
  });
}

size_t magic_basis_num_scales(const magic_basis* basis) { return basis ? basis->archive.basis.scales.size() : 0; }
size_t magic_basis_total_components(const magic_basis* basis) {
  return basis ? static_cast<size_t>(basis->archive.basis.total_psc_count()) : 0;
}
magic_status magic_basis_scales(const magic_basis* basis, int* scales, size_t n) {
  return guarded([&] {
    need(basis, "basis");
    need(scales, "scales");
    const std::vector<int>& ks = basis->archive.basis.scales;
    magic::require(n == ks.size(), magic::ErrorKind::Dimension,
                   "expected a buffer of " + std::to_string(ks.size()) + " entries");
    std::copy(ks.begin(), ks.end(), scales);
  });
}

void magic_basis_free(magic_basis* basis) { delete basis; }

// ---- stability -------------------------------------------------------------

void magic_stability_options_init(magic_stability_options* opts) {
  if (!opts) return;
  const magic::StabilityOptions d;
  *opts = magic_stability_options{d.repetitions, d.test_fraction, d.restarts, d.polytope.svm.reg_c, 0, d.seed, 1};
}

magic_status magic_stability_run(const magic_basis* basis, const magic_dataset* ds, const int* c_values, size_t n_c,
                                 const int* k_values, size_t n_k, const magic_stability_options* opts,
                                 magic_stability** out) {
  return guarded([&] {
    need(basis, "basis");
    need(ds, "dataset");
    need(opts, "options");
    need(out, "out");
    const magic::BasisArchive& archive = basis->archive;
    const std::vector<int> labels = basis_labels(archive, ds->data);
    magic::StabilityOptions o;
    o.c_values = int_list(c_values, n_c, "c_values");
    o.k_values = int_list(k_values, n_k, "k_values");
    o.repetitions = opts->repetitions;
    o.test_fraction = opts->test_fraction;
    o.restarts = opts->restarts;
    o.polytope = polytope_options(opts->reg_c);
    o.refit_basis = opts->refit_basis != 0;
    o.opnmf = archive.options;
    o.seed = opts->seed;
    o.jobs = opts->jobs;
    Eigen::MatrixXd raw;
    if (o.refit_basis) {
      const magic::Dataset aligned = ds->data.subset(archive.align(ds->data));
      raw = (archive.covariates ? archive.covariates->apply(aligned) : aligned).features;
    }
    *out = new magic_stability{magic::stability_analysis(archive.basis, labels, o, o.refit_basis ? &raw : nullptr)};
  });
}

magic_status magic_stability_save(const magic_stability* report, const char* json_path, const char* csv_path) {
  return guarded([&] {
    need(report, "report");
    need(json_path, "json_path");
    need(csv_path, "csv_path");
    magic::save_stability_report(report->report, json_path, csv_path);
  });
}

magic_status magic_stability_select(const magic_stability* report, const int* k_subset, size_t n_k, int* c_out) {
  return guarded([&] {
    need(report, "report");
    need(c_out, "c_out");
    *c_out = magic::select_num_clusters(report->report, int_list(k_subset, n_k, "k_subset"));
  });
}

void magic_stability_free(magic_stability* report) { delete report; }

// ---- clustering ------------------------------------------------------------

void magic_cluster_options_init(magic_cluster_options* opts) {
  if (!opts) return;
  const magic::ScaleSchedule s;
  const magic::MagicOptions m;
  *opts = magic_cluster_options{m.c, s.max_cycles, s.consistency_threshold, s.restarts_at_init,
                                m.polytope.svm.reg_c, m.seed, m.jobs};
}

magic_status magic_model_fit(const magic_basis* basis, const magic_dataset* ds, const int* k_set, size_t n_k,
                             const magic_cluster_options* opts, magic_model** out) {
  return guarded([&] {
    need(basis, "basis");
    need(ds, "dataset");
    need(opts, "options");
    need(out, "out");
    const magic::BasisArchive& archive = basis->archive;
    const std::vector<int> labels = basis_labels(archive, ds->data);
    magic::ScaleSchedule schedule;
    schedule.k_set = int_list(k_set, n_k, "k_set");
    schedule.max_cycles = opts->max_cycles;
    schedule.consistency_threshold = opts->consistency_threshold;
    schedule.restarts_at_init = opts->restarts;
    magic::MagicOptions o;
    o.c = opts->c;
    o.polytope = polytope_options(opts->reg_c);
    o.seed = opts->seed;
    o.jobs = opts->jobs;
    auto handle = std::make_unique<magic_model>();
    handle->model = magic::fit_magic(archive.basis, labels, schedule, o);
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == magic::kPatient) handle->patient_ids.push_back(archive.subject_ids[i]);
    *out = handle.release();
  });
}

magic_status magic_model_save(const magic_model* model, const char* dir) {
  return guarded([&] {
    need(model, "model");
    need(dir, "dir");
    magic::save_magic(model->model, model->patient_ids, dir);
  });
}

magic_status magic_model_load(const char* dir, magic_model** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    auto handle = std::make_unique<magic_model>();
    handle->model = magic::load_magic(dir, &handle->patient_ids);
    *out = handle.release();
  });
}

int magic_model_num_clusters(const magic_model* model) { return model ? model->model.c : 0; }
int magic_model_predict_scale(const magic_model* model) { return model ? model->model.selected_predict_scale : 0; }
size_t magic_model_num_patients(const magic_model* model) { return model ? model->patient_ids.size() : 0; }

magic_status magic_model_consensus(const magic_model* model, int* subtypes, size_t n) {
  return guarded([&] {
    need(model, "model");
    need(subtypes, "subtypes");
    const std::vector<int>& labels = model->model.consensus_labels;
    magic::require(n == labels.size(), magic::ErrorKind::Dimension,
                   "expected a buffer of " + std::to_string(labels.size()) + " entries");
    std::copy(labels.begin(), labels.end(), subtypes);
  });
}

void magic_model_free(magic_model* model) { delete model; }

// ---- subtype mapping -------------------------------------------------------

magic_status magic_stats_run(const magic_basis* basis, const magic_model* model, double alpha, int welch,
                             magic_stats** out) {
  return guarded([&] {
    need(basis, "basis");
    need(model, "model");
    need(out, "out");
    std::vector<int> subtypes;
    const std::vector<int> labels = model_labels(basis->archive, *model, &subtypes);
    *out = new magic_stats{magic::subtype_mapping(basis->archive.basis, labels, subtypes, alpha, welch == 0)};
  });
}

magic_status magic_stats_save(const magic_stats* stats, const char* csv_path) {
  return guarded([&] {
    need(stats, "stats");
    need(csv_path, "csv_path");
    magic::save_stats_table(stats->table, csv_path);
  });
}

size_t magic_stats_num_rows(const magic_stats* stats) { return stats ? stats->table.rows.size() : 0; }

int magic_stats_survivors(const magic_stats* stats, int subtype) {
  if (!stats || subtype < 0 || subtype >= static_cast<int>(stats->table.survivors_per_subtype.size())) return -1;
  return stats->table.survivors_per_subtype[static_cast<std::size_t>(subtype)];
}

void magic_stats_free(magic_stats* stats) { delete stats; }

magic_status magic_mds_save(const magic_basis* basis, const magic_model* model, int dims, const char* csv_path) {
  return guarded([&] {
    need(basis, "basis");
    need(model, "model");
    need(csv_path, "csv_path");
    std::vector<int> subtypes;
    const std::vector<int> labels = model_labels(basis->archive, *model, &subtypes);
    const Eigen::MatrixXd coords =
        magic::mds_embed(basis->archive.subject_loadings(model->model.selected_predict_scale), dims);
    std::vector<std::string> groups;
    std::size_t p = 0;
    for (int y : labels) groups.push_back(y == magic::kPatient ? "subtype_" + std::to_string(subtypes[p++]) : "CN");
    magic::save_mds(coords, basis->archive.subject_ids, groups, csv_path);
  });
}

// ---- prediction ------------------------------------------------------------

magic_status magic_predict(const magic_model* model, const magic_basis* basis, const magic_dataset* ds,
                           magic_prediction** out) {
  return guarded([&] {
    need(model, "model");
    need(basis, "basis");
    need(ds, "dataset");
    need(out, "out");
    *out = new magic_prediction{ds->data.subject_ids, magic::predict_magic(model->model, basis->archive, ds->data)};
  });
}

magic_status magic_prediction_save(const magic_prediction* pred, const char* csv_path) {
  return guarded([&] {
    need(pred, "prediction");
    need(csv_path, "csv_path");
    const Eigen::MatrixXd& scores = pred->result.scores;
    std::ostringstream out;
    std::vector<std::string> header{"participant_id", "predicted_label", "subtype"};
    for (Eigen::Index j = 1; j <= scores.cols(); ++j) header.push_back("score_" + std::to_string(j));
    magic::csv::write_row(out, header);
    for (std::size_t i = 0; i < pred->subject_ids.size(); ++i) {
      std::vector<std::string> row{pred->subject_ids[i], std::to_string(pred->result.labels[i]),
                                   std::to_string(pred->result.subtypes[i])};
      for (Eigen::Index j = 0; j < scores.cols(); ++j)
        row.push_back(magic::csv::format(scores(static_cast<Eigen::Index>(i), j)));
      magic::csv::write_row(out, row);
    }
    magic::csv::write_file(csv_path, out.str());
  });
}

size_t magic_prediction_num_subjects(const magic_prediction* pred) { return pred ? pred->subject_ids.size() : 0; }

magic_status magic_prediction_balanced_accuracy(const magic_prediction* pred, const magic_dataset* ds, double* out) {
  return guarded([&] {
    need(pred, "prediction");
    need(ds, "dataset");
    need(out, "out");
    magic::require(ds->data.has_labels(), magic::ErrorKind::InvalidArgument,
                   "balanced accuracy needs a labeled dataset");
    magic::require(ds->data.subject_ids == pred->subject_ids, magic::ErrorKind::InvalidArgument,
                   "dataset subjects differ from the predicted subjects");
    *out = magic::balanced_accuracy(ds->data.labels, pred->result.labels);
  });
}

void magic_prediction_free(magic_prediction* pred) { delete pred; }

magic_status magic_random_split_balanced_accuracy(const magic_model* model, const magic_basis* basis,
                                                  const magic_dataset* ds, int n1, int n2, double reg_c,
                                                  uint64_t seed, double* out) {
  return guarded([&] {
    need(model, "model");
    need(basis, "basis");
    need(ds, "dataset");
    need(out, "out");
    magic::require(ds->data.has_labels(), magic::ErrorKind::InvalidArgument,
                   "balanced accuracy needs a labeled dataset");
    const magic::BasisArchive& archive = basis->archive;
    const int k = model->model.selected_predict_scale;
    const std::vector<int> labels = model_labels(archive, *model);
    magic::SvmOptions svm;
    svm.reg_c = reg_c;
    const magic::PolytopeModel baseline =
        magic::fit_random_split_polytope(archive.subject_loadings(k), labels, n1, n2, svm, seed);
    const std::vector<int> predicted = magic::predict_label(baseline, archive.project_dataset(ds->data, k));
    *out = magic::balanced_accuracy(ds->data.labels, predicted);
  });
}

}  // extern "C"
