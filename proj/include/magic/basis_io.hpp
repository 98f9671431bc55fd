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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "magic/dataset.hpp"
#include "magic/opnmf.hpp"

namespace magic {

/// A fitted basis plus everything needed to reuse it on other files: the
/// feature and subject names it was fitted on and, when the input was
/// harmonized, the covariate model to apply to new subjects.
struct BasisArchive {
  MultiScaleBasis basis;
  std::vector<std::string> feature_names;
  std::vector<std::string> subject_ids;
  std::optional<CovariateModel> covariates;
  OpnmfOptions options;

  /// Subject-major loadings (N x K) at scale k.
  Eigen::MatrixXd subject_loadings(int k) const { return basis.at(k).loadings.transpose(); }

  /// Row indices into `ds` in the order of subject_ids; throws if `ds` does
  /// not contain exactly the basis subjects.
  std::vector<std::size_t> align(const Dataset& ds) const;

  /// Covariate correction (if any) followed by projection at scale k.
  /// Returns M x K loadings for the subjects of `ds`.
  Eigen::MatrixXd project_dataset(const Dataset& ds, int k) const;
};

/// Residualizes (optional), then fits every scale in `k_list`.
BasisArchive build_basis(const Dataset& ds, const std::vector<int>& k_list, const OpnmfOptions& options,
                         bool residualize, int jobs);

// Layout: manifest.json, components_k<K>.csv (D rows x K columns, first
// column feature name), loadings_k<K>.csv (K rows x N columns, header row
// of subject ids).
void save_basis(const BasisArchive& archive, const std::filesystem::path& dir);
BasisArchive load_basis(const std::filesystem::path& dir);

}  // namespace magic
