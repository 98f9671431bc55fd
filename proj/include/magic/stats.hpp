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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "magic/opnmf.hpp"

namespace magic {

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

/// Two-sided two-sample t-test. Pooled (Student) variance by default,
/// Welch-Satterthwaite otherwise. Two constant samples give t = 0, p = 1
/// when equal and t = +-inf, p = 0 when different.
TTestResult two_sample_ttest(const std::vector<double>& a, const std::vector<double>& b, bool pooled = true);

/// Benjamini-Hochberg step-up rejections at level alpha, in input order.
std::vector<bool> bh_adjust(const std::vector<double>& p_values, double alpha);

/// (mean(a) - mean(b)) / pooled sd. With a = controls and b = a subtype,
/// lower subtype values give positive d.
double cohens_d(const std::vector<double>& a, const std::vector<double>& b);

struct StatsRow {
  int scale_k = 0;
  int component_index = 0;  // 1-based, matches psc_<j> in the basis files
  int subtype = 0;
  int n_subtype = 0;
  int n_cn = 0;
  double t = 0.0;
  double p = 1.0;
  bool bh_reject = false;
  double cohens_d = 0.0;  // NaN when both groups have zero spread
  double mean_cn = 0.0;
  double mean_subtype = 0.0;
  double sd_cn = 0.0;
  double sd_subtype = 0.0;
};

struct StatsTable {
  std::vector<StatsRow> rows;           // grouped by subtype, each sorted by d descending
  std::vector<int> survivors_per_subtype;
  double alpha = 0.05;
};

/// Controls vs each subtype for every component at every scale, BH corrected
/// across all components within each subtype comparison.
///
/// `labels` follow the basis subjects; `subtype_of_patient` follows the
/// patients among them in order.
StatsTable subtype_mapping(const MultiScaleBasis& basis, const std::vector<int>& labels,
                           const std::vector<int>& subtype_of_patient, double alpha, bool pooled = true);

/// Classical (Torgerson) MDS of the rows of `features`. Columns follow
/// eigenvalues in descending order; each column's largest-magnitude entry is
/// made positive.
Eigen::MatrixXd mds_embed(const Eigen::MatrixXd& features, int dims);

/// Features whose weight exceeds the mean weight of the component.
std::vector<bool> component_support(const Eigen::Ref<const Eigen::VectorXd>& component);
double dice(const std::vector<bool>& a, const std::vector<bool>& b);

void save_stats_table(const StatsTable& table, const std::filesystem::path& csv_path);
void save_mds(const Eigen::MatrixXd& coords, const std::vector<std::string>& subject_ids,
              const std::vector<std::string>& groups, const std::filesystem::path& csv_path);

}  // namespace magic
