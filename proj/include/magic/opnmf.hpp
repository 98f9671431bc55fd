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
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace magic {

enum class OpnmfInit {
  Nndsvd,  // deterministic SVD-based start; zero columns fall back to seeded uniform
  Random,  // seeded uniform in (0, 1]
};

struct OpnmfOptions {
  OpnmfInit init = OpnmfInit::Nndsvd;
  double tol = 1e-6;
  int max_iter = 2000;
  std::uint64_t seed = 0;
};

/// One factorization X ~ C C^T X at scale K. The component matrix is
/// non-negative with unit-norm columns; loadings are always C^T X.
struct Decomposition {
  int scale_k = 0;
  Eigen::MatrixXd components;  // D x K
  Eigen::MatrixXd loadings;    // K x N
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
  double orthogonality_init = 0.0;   // ||C^T C - I||_F at initialization
  double orthogonality_final = 0.0;  // ... after the last update
};

struct MultiScaleBasis {
  std::vector<int> scales;  // sorted, distinct
  std::map<int, Decomposition> decompositions;

  int total_psc_count() const;
  const Decomposition& at(int k) const;
  bool contains(int k) const { return decompositions.count(k) != 0; }
};

/// Orthonormal projective NMF by multiplicative updates on C only.
/// X is D x N and must be elementwise non-negative; 1 <= K <= min(D, N).
Decomposition fit_opnmf(const Eigen::MatrixXd& x, int k, const OpnmfOptions& options = {});

/// One fit_opnmf per scale. Fits are independent and run on up to `jobs`
/// threads; the result does not depend on `jobs`.
MultiScaleBasis fit_multiscale(const Eigen::MatrixXd& x, const std::vector<int>& k_list,
                               const OpnmfOptions& options = {}, int jobs = 1);

/// C^T X_new for a D x M matrix.
Eigen::MatrixXd project(const Decomposition& dec, const Eigen::MatrixXd& x_new);

/// ||X - C L||_F^2 with the stored loadings.
double reconstruction_error(const Decomposition& dec, const Eigen::MatrixXd& x);

/// ||C^T C - I||_F.
double orthogonality_residual(const Eigen::MatrixXd& components);

/// Inclusive arithmetic range helper ("a:b:step").
std::vector<int> scale_range(int first, int last, int step = 1);

}  // namespace magic
