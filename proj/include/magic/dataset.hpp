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
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace magic {

inline constexpr int kControl = -1;
inline constexpr int kPatient = 1;

/// Subjects-by-features table with diagnosis labels and optional covariates.
/// Rows are subjects. Labels may be absent only for prediction inputs.
struct Dataset {
  std::vector<std::string> subject_ids;
  Eigen::MatrixXd features;  // N x D
  std::vector<int> labels;   // N values in {-1,+1}, or empty when unlabeled
  Eigen::MatrixXd covariates;  // N x Q
  std::vector<std::string> covariate_names;
  std::vector<std::string> feature_names;

  std::size_t num_subjects() const { return subject_ids.size(); }
  std::size_t num_features() const { return feature_names.size(); }
  bool has_labels() const { return !labels.empty(); }

  std::vector<std::size_t> indices_with_label(int label) const;
  std::vector<std::size_t> patient_indices() const { return indices_with_label(kPatient); }
  std::vector<std::size_t> control_indices() const { return indices_with_label(kControl); }

  /// Rows `rows` of this dataset, in the given order.
  Dataset subset(const std::vector<std::size_t>& rows) const;

  /// Throws InvalidArgument if any invariant is broken.
  void validate(bool require_both_classes = true) const;
};

struct DatasetSchema {
  std::string id_column = "participant_id";
  std::string label_column = "diagnosis";
  std::string covariate_prefix = "cov_";
  bool labels_required = true;
  bool require_both_classes = true;
  bool require_non_negative = false;
};

Dataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema = {});
Dataset parse_dataset(const std::string& text, const DatasetSchema& schema = {},
                      const std::string& source = "<memory>");
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
std::string format_dataset(const Dataset& ds);

/// Linear covariate effects estimated on controls only.
struct CovariateModel {
  std::vector<std::string> covariate_names;
  Eigen::VectorXd covariate_means_cn;  // Q
  Eigen::MatrixXd slopes;              // D x Q
  Eigen::VectorXd intercepts;          // D

  bool empty() const { return covariate_names.empty(); }

  /// Subtracts slopes * (cov - mean_cn) from every subject and clamps at 0.
  /// `ds` must carry the same covariate columns (matched by name).
  Dataset apply(const Dataset& ds) const;
};

std::pair<Dataset, CovariateModel> residualize_covariates(const Dataset& ds);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per-class stratified holdout. Each class contributes round(n_class *
/// test_fraction) subjects to the test side; both sides keep every class.
Split stratified_holdout_split(const std::vector<int>& labels, double test_fraction, std::uint64_t seed);

}  // namespace magic
