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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "magic/svm.hpp"

namespace magic {

/// Per-dimension standardization fitted on a training matrix. Dimensions
/// with zero spread are centered but not scaled.
struct Scaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Scaler fit(const Eigen::MatrixXd& features);
  Eigen::MatrixXd transform(const Eigen::MatrixXd& features) const;
};

/// Hard assignment of each patient to one face. Patients are indexed in the
/// order they appear in the label vector of the data the model was fit on.
struct Membership {
  int c = 1;
  std::vector<int> assignments;

  bool operator==(const Membership& other) const = default;
  std::vector<std::size_t> cluster_sizes() const;
};

struct PolytopeOptions {
  SvmOptions svm;
  int max_alternations = 50;
};

/// c faces over one feature scale. Hyperplanes live in the standardized
/// space described by `scaler`; every public function takes raw features.
struct PolytopeModel {
  std::vector<Hyperplane> hyperplanes;
  Scaler scaler;
  Membership membership;
  int scale_k = 0;
  double reg_c = 0.25;
  double joint_objective = 0.0;
  std::vector<double> objective_trace;  // after each face-fitting step
  int n_alternations = 0;
  int empty_cluster_repairs = 0;  // reassignments forced against the argmax
  bool converged = false;

  int c() const { return static_cast<int>(hyperplanes.size()); }
  Eigen::MatrixXd face_scores(const Eigen::MatrixXd& features) const;  // M x c
};

enum class InitStrategy { Random, KMeans };

/// Row indices of label == +1, in order.
std::vector<std::size_t> patient_rows(const std::vector<int>& labels);

Membership init_membership(const Eigen::MatrixXd& patient_features, int c, InitStrategy strategy, std::uint64_t seed);

/// Argmax face per patient; ties go to the lowest face index.
Membership update_membership(const PolytopeModel& model, const Eigen::MatrixXd& patient_features);

/// Alternates between c weighted SVMs (face j: its assigned patients with
/// weight 1, other patients 0, every control 1/c) and argmax reassignment
/// until memberships stop changing or max_alternations is reached.
///
/// A face whose re-solved hyperplane scores worse on the current weights
/// than the previous one keeps the previous hyperplane, so the recorded
/// objective never increases between alternations whose reassignment was a
/// pure argmax. Clusters left empty after reassignment are re-seeded with
/// the patient whose best face score is lowest; such a forced move can raise
/// the objective and is counted in empty_cluster_repairs.
PolytopeModel fit_polytope(const Eigen::MatrixXd& features, const std::vector<int>& labels, int c,
                           const PolytopeOptions& options, const Membership& init);

/// fit_polytope from `restarts` seeded initializations, then a final fit
/// started from their consensus. With c == 1 a single fit is returned.
PolytopeModel fit_polytope_restarts(const Eigen::MatrixXd& features, const std::vector<int>& labels, int c,
                                    const PolytopeOptions& options, int restarts, InitStrategy strategy,
                                    std::uint64_t seed, int jobs = 1);

/// Recomputes sum_j 1/2||w_j||^2 + C [sum_{patients in j} hinge + sum_controls hinge / c].
double joint_objective(const PolytopeModel& model, const Eigen::MatrixXd& features, const std::vector<int>& labels);

/// +1 iff some face scores strictly above 0 (outside the polytope).
std::vector<int> predict_label(const PolytopeModel& model, const Eigen::MatrixXd& features);

/// Co-occurrence consensus over R label sets of the same P patients,
/// grouped by average-linkage clustering of (1 - co-occurrence) cut at c.
/// Output clusters are numbered by their lowest patient index.
std::vector<int> consensus_from_runs(const std::vector<std::vector<int>>& label_sets, int c);

double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);

/// Two-face baseline: patients randomly split into groups of n1 and n2 and
/// one control-vs-group SVM per face (all weights 1).
PolytopeModel fit_random_split_polytope(const Eigen::MatrixXd& features, const std::vector<int>& labels, int n1,
                                        int n2, const SvmOptions& svm, std::uint64_t seed);

/// Relabels clusters in order of first appearance.
std::vector<int> canonical_labels(const std::vector<int>& labels);

// Persistence: polytope.json, hyperplanes.csv (c rows x K+1, bias last),
// assignments.csv (participant_id, cluster).
void save_polytope(const PolytopeModel& model, const std::vector<std::string>& patient_ids,
                   const std::filesystem::path& dir);
PolytopeModel load_polytope(const std::filesystem::path& dir, std::vector<std::string>* patient_ids = nullptr);

}  // namespace magic
