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

#include "magic/svm.hpp"

#include <cmath>
#include <limits>

#include "magic/error.hpp"

namespace magic {

namespace {

constexpr double kTau = 1e-12;

struct ActiveSet {
  Eigen::MatrixXd xt;       // K x n, one column per retained sample
  Eigen::VectorXd y;        // +-1
  Eigen::VectorXd upper;    // C * s_i
  Eigen::VectorXd sq_norm;  // ||x_i||^2
};

ActiveSet collect(const Eigen::MatrixXd& features, const std::vector<int>& labels, const Eigen::VectorXd& weights,
                  double reg_c) {
  std::vector<Eigen::Index> keep;
  double pos_weight = 0.0, neg_weight = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const double s = weights(i);
    require(std::isfinite(s) && s >= 0.0, ErrorKind::InvalidArgument, "sample weights must be finite and >= 0");
    const int y = labels[static_cast<std::size_t>(i)];
    require(y == 1 || y == -1, ErrorKind::InvalidArgument, "SVM labels must be -1 or +1");
    if (s == 0.0) continue;
    keep.push_back(i);
    (y > 0 ? pos_weight : neg_weight) += s;
  }
  require(pos_weight > 0.0 && neg_weight > 0.0, ErrorKind::InvalidArgument,
          "weighted SVM needs positive total weight in both classes");

  ActiveSet a;
  const auto n = static_cast<Eigen::Index>(keep.size());
  a.xt.resize(features.cols(), n);
  a.y.resize(n);
  a.upper.resize(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::Index i = keep[static_cast<std::size_t>(t)];
    a.xt.col(t) = features.row(i).transpose();
    a.y(t) = labels[static_cast<std::size_t>(i)];
    a.upper(t) = reg_c * weights(i);
  }
  a.sq_norm = a.xt.colwise().squaredNorm().transpose();
  return a;
}

}  // namespace

Hyperplane fit_weighted_linear_svm(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                                   const Eigen::VectorXd& sample_weights, const SvmOptions& options) {
  require(features.rows() == static_cast<Eigen::Index>(labels.size()) && features.rows() == sample_weights.size(),
          ErrorKind::Dimension, "SVM features, labels and weights disagree in length");
  require(options.reg_c > 0.0, ErrorKind::InvalidArgument, "SVM penalty must be positive");
  require(features.allFinite(), ErrorKind::InvalidArgument, "SVM features contain non-finite values");

  const ActiveSet a = collect(features, labels, sample_weights, options.reg_c);
  const Eigen::Index n = a.y.size();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // Q alpha - 1
  Eigen::VectorXd w = Eigen::VectorXd::Zero(a.xt.rows());
  Eigen::VectorXd k_i(n);

  auto in_up = [&](Eigen::Index t) { return a.y(t) > 0 ? alpha(t) < a.upper(t) : alpha(t) > 0.0; };
  auto in_low = [&](Eigen::Index t) { return a.y(t) > 0 ? alpha(t) > 0.0 : alpha(t) < a.upper(t); };

  for (int iter = 0; iter < options.max_iter; ++iter) {
    double g_max = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_up(t)) continue;
      const double v = -a.y(t) * grad(t);
      if (v >= g_max) {
        g_max = v;
        i = t;
      }
    }
    if (i < 0) break;

    k_i.noalias() = a.xt.transpose() * a.xt.col(i);
    double g_max2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = a.y(t) * grad(t);
      g_max2 = std::max(g_max2, v);
      const double grad_diff = g_max + v;
      if (grad_diff > 0.0) {
        double quad = a.sq_norm(i) + a.sq_norm(t) - 2.0 * k_i(t);
        if (quad <= 0.0) quad = kTau;
        const double obj_diff = -(grad_diff * grad_diff) / quad;
        if (obj_diff <= best) {
          best = obj_diff;
          j = t;
        }
      }
    }
    if (g_max + g_max2 < options.tol || j < 0) break;

    const double old_i = alpha(i), old_j = alpha(j);
    const double ci = a.upper(i), cj = a.upper(j);
    double quad = a.sq_norm(i) + a.sq_norm(j) - 2.0 * k_i(j);
    if (quad <= 0.0) quad = kTau;
    if (a.y(i) != a.y(j)) {
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) {
          alpha(j) = 0.0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = -diff;
      }
      if (diff > ci - cj) {
        if (alpha(i) > ci) {
          alpha(i) = ci;
          alpha(j) = ci - diff;
        }
      } else if (alpha(j) > cj) {
        alpha(j) = cj;
        alpha(i) = cj + diff;
      }
    } else {
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > ci) {
        if (alpha(i) > ci) {
          alpha(i) = ci;
          alpha(j) = sum - ci;
        }
      } else if (alpha(j) < 0.0) {
        alpha(j) = 0.0;
        alpha(i) = sum;
      }
      if (sum > cj) {
        if (alpha(j) > cj) {
          alpha(j) = cj;
          alpha(i) = sum - cj;
        }
      } else if (alpha(i) < 0.0) {
        alpha(i) = 0.0;
        alpha(j) = sum;
      }
    }

    w += a.y(i) * (alpha(i) - old_i) * a.xt.col(i) + a.y(j) * (alpha(j) - old_j) * a.xt.col(j);
    grad.noalias() = a.xt.transpose() * w;
    grad = grad.cwiseProduct(a.y).array() - 1.0;
  }

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = a.y(t) * grad(t);
    if (alpha(t) >= a.upper(t)) {
      if (a.y(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha(t) <= 0.0) {
      if (a.y(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2.0;

  Hyperplane plane;
  plane.weights = std::move(w);
  plane.bias = -rho;
  require(plane.weights.allFinite() && std::isfinite(plane.bias), ErrorKind::Computation,
          "SVM solver produced a non-finite hyperplane");
  return plane;
}

double svm_primal_objective(const Hyperplane& plane, const Eigen::MatrixXd& features, const std::vector<int>& labels,
                            const Eigen::VectorXd& sample_weights, double reg_c) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const double s = sample_weights(i);
    if (s == 0.0) continue;
    loss += s * hinge(labels[static_cast<std::size_t>(i)] * plane.score(features.row(i).transpose()));
  }
  return 0.5 * plane.weights.squaredNorm() + reg_c * loss;
}

}  // namespace magic
