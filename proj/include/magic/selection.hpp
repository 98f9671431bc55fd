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
#include <vector>

#include <Eigen/Dense>

#include "magic/opnmf.hpp"
#include "magic/polytope.hpp"

namespace magic {

/// Hubert-Arabie adjusted Rand index. Degenerate tables (expected index
/// equal to its maximum) give 1 for identical partitions and 0 otherwise.
double adjusted_rand_index(const std::vector<int>& u, const std::vector<int>& v);

/// True when u and v induce the same partition (up to relabeling).
bool same_partition(const std::vector<int>& u, const std::vector<int>& v);

struct StabilityReport {
  std::vector<int> c_values;
  std::vector<int> k_values;
  Eigen::MatrixXd mean_ari;  // |c| x |K|
  Eigen::MatrixXd std_ari;   // population standard deviation
  int repetitions = 0;
  double test_fraction = 0.0;
};

struct StabilityOptions {
  std::vector<int> c_values;
  std::vector<int> k_values;
  int repetitions = 100;
  double test_fraction = 0.2;
  PolytopeOptions polytope;
  int restarts = 10;
  InitStrategy init = InitStrategy::KMeans;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool refit_basis = false;  // refit OPNMF on each training split
  OpnmfOptions opnmf;
};

/// Clustering stability over (c, K): every repetition draws a stratified
/// holdout split and clusters its training patients at each cell; ARIs are
/// taken over patients shared by each pair of repetitions.
///
/// `labels` index the basis subjects. `raw_features` (N x D) is required
/// only when options.refit_basis is set.
StabilityReport stability_analysis(const MultiScaleBasis& basis, const std::vector<int>& labels,
                                   const StabilityOptions& options, const Eigen::MatrixXd* raw_features = nullptr);

/// c with the highest mean ARI averaged over `k_subset`; ties go to the
/// smallest c.
int select_num_clusters(const StabilityReport& report, const std::vector<int>& k_subset);

void save_stability_report(const StabilityReport& report, const std::filesystem::path& json_path,
                           const std::filesystem::path& csv_path);

}  // namespace magic
