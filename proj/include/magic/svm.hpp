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

#include <vector>

#include <Eigen/Dense>

namespace magic {

struct Hyperplane {
  Eigen::VectorXd weights;
  double bias = 0.0;

  double score(const Eigen::Ref<const Eigen::VectorXd>& x) const { return weights.dot(x) + bias; }
};

struct SvmOptions {
  double reg_c = 0.25;
  double tol = 1e-6;
  int max_iter = 200000;
};

/// Soft-margin linear SVM with per-sample weights:
///
///   min_{w,b}  1/2 ||w||^2 + C * sum_i s_i * max(0, 1 - y_i (w.x_i + b))
///
/// solved in the dual by sequential minimal optimization (maximal-violating
/// pair with second-order working-set selection). The bias is not
/// regularized. Samples with s_i == 0 are dropped before solving, so the
/// result is identical to omitting them. Stops when the maximal KKT
/// violation falls below options.tol.
Hyperplane fit_weighted_linear_svm(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                                   const Eigen::VectorXd& sample_weights, const SvmOptions& options = {});

/// Primal objective of `plane` for the weighted problem above.
double svm_primal_objective(const Hyperplane& plane, const Eigen::MatrixXd& features, const std::vector<int>& labels,
                            const Eigen::VectorXd& sample_weights, double reg_c);

inline double hinge(double margin) { return margin < 1.0 ? 1.0 - margin : 0.0; }

}  // namespace magic
