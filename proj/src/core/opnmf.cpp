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

#include "magic/opnmf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "magic/error.hpp"
#include "magic/parallel.hpp"
#include "magic/random.hpp"

namespace magic {

namespace {

constexpr double kDenominatorGuard = 1e-16;
constexpr int kMaxDampings = 4;

// Products with X X^T, formed either from the cached D x D Gram matrix or as
// X (X^T C) when D is large compared to N.
class GramOperator {
public:
  explicit GramOperator(const Eigen::MatrixXd& x) : x_(x) {
    if (x.rows() <= 2 * x.cols()) gram_ = x * x.transpose();
    trace_ = x.squaredNorm();
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& c) const {
    if (gram_) return (*gram_) * c;
    return x_ * (x_.transpose() * c);
  }

  double trace() const { return trace_; }

private:
  const Eigen::MatrixXd& x_;
  std::optional<Eigen::MatrixXd> gram_;
  double trace_ = 0.0;
};

struct Svd {
  Eigen::MatrixXd u;
  Eigen::VectorXd s;
  Eigen::MatrixXd v;
};

Svd thin_svd(const Eigen::MatrixXd& x) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

void fill_uniform(Eigen::Ref<Eigen::VectorXd> column, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Eigen::Index i = 0; i < column.size(); ++i) column(i) = 1.0 - unif(rng);  // (0, 1]
}

// Non-negative double SVD (Boutsidis & Gallopoulos), component half only.
Eigen::MatrixXd nndsvd_components(const Svd& svd, int k, Rng& rng) {
  const Eigen::Index d = svd.u.rows();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, k);
  const double scale_floor = svd.s.size() > 0 ? svd.s(0) * 1e-12 : 0.0;
  for (int j = 0; j < k; ++j) {
    const double sigma = svd.s(j);
    if (!(sigma > scale_floor)) continue;  // handled by the fallback below
    const Eigen::VectorXd u = svd.u.col(j);
    const Eigen::VectorXd v = svd.v.col(j);
    if (j == 0) {
      c.col(j) = std::sqrt(sigma) * u.cwiseAbs();
      continue;
    }
    const Eigen::VectorXd up = u.cwiseMax(0.0), un = (-u).cwiseMax(0.0);
    const Eigen::VectorXd vp = v.cwiseMax(0.0), vn = (-v).cwiseMax(0.0);
    const double nup = up.norm(), nun = un.norm(), nvp = vp.norm(), nvn = vn.norm();
    const double termp = nup * nvp, termn = nun * nvn;
    if (termp >= termn && nup > 0.0) {
      c.col(j) = std::sqrt(sigma * termp) * up / nup;
    } else if (nun > 0.0) {
      c.col(j) = std::sqrt(sigma * termn) * un / nun;
    }
  }
  for (int j = 0; j < k; ++j)
    if (!(c.col(j).norm() > 0.0)) fill_uniform(c.col(j), rng);
  return c;
}

void normalize_columns(Eigen::MatrixXd& c, Rng& rng) {
  for (Eigen::Index j = 0; j < c.cols(); ++j) {
    double norm = c.col(j).norm();
    if (!(norm > 0.0)) {
      fill_uniform(c.col(j), rng);
      norm = c.col(j).norm();
    }
    c.col(j) /= norm;
  }
}

// ||X - C C^T X||_F^2 = tr(XX^T) - 2 tr(C^T A C) + tr(C^T C C^T A C).
double projective_objective(double trace_a, const Eigen::MatrixXd& c, const Eigen::MatrixXd& ac) {
  const Eigen::MatrixXd ctac = c.transpose() * ac;
  const Eigen::MatrixXd ctc = c.transpose() * c;
  const double value = trace_a - 2.0 * ctac.trace() + (ctc.cwiseProduct(ctac)).sum();
  return std::max(value, 0.0);
}

void check_input(const Eigen::MatrixXd& x, int k) {
  require(x.rows() > 0 && x.cols() > 0, ErrorKind::InvalidArgument, "OPNMF input is empty");
  require(x.allFinite(), ErrorKind::InvalidArgument, "OPNMF input contains non-finite values");
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (x(i, j) < 0.0)
        fail(ErrorKind::InvalidArgument, "OPNMF input has a negative entry at feature " + std::to_string(i) +
                                             ", subject " + std::to_string(j));
  const auto limit = std::min(x.rows(), x.cols());
  require(k >= 1 && k <= limit, ErrorKind::InvalidArgument,
          "scale K=" + std::to_string(k) + " outside [1, " + std::to_string(limit) + "]");
}

Decomposition fit_prepared(const Eigen::MatrixXd& x, const GramOperator& gram, const Svd* svd, int k,
                           const OpnmfOptions& options) {
  Rng rng(derive_seed(options.seed, {stream::kOpnmf, static_cast<std::uint64_t>(k)}));
  Eigen::MatrixXd c;
  if (options.init == OpnmfInit::Nndsvd && svd != nullptr) {
    c = nndsvd_components(*svd, k, rng);
  } else {
    c.resize(x.rows(), k);
    for (int j = 0; j < k; ++j) fill_uniform(c.col(j), rng);
  }
  normalize_columns(c, rng);

  Decomposition dec;
  dec.scale_k = k;
  dec.orthogonality_init = orthogonality_residual(c);

  Eigen::MatrixXd ac = gram.apply(c);
  double objective = projective_objective(gram.trace(), c, ac);
  dec.objective_trace.push_back(objective);

  for (int it = 0; it < options.max_iter; ++it) {
    const Eigen::MatrixXd denom = c * (c.transpose() * ac);
    const Eigen::ArrayXXd ratio = ac.array() / (denom.array() + kDenominatorGuard);
    dec.iterations = it + 1;
    // The plain multiplicative step (exponent 1) is not guaranteed to
    // decrease the objective once columns are renormalized. A step that
    // does not decrease it is retried with the ratio raised to 1/2, 1/4, ...;
    // when every retry fails the previous iterate is kept and the fit ends,
    // so the trace stays monotone.
    bool accepted = false;
    double exponent = 1.0;
    for (int attempt = 0; attempt <= kMaxDampings && !accepted; ++attempt, exponent *= 0.5) {
      Eigen::MatrixXd next_c = c;
      if (attempt == 0)
        next_c.array() *= ratio;
      else
        next_c.array() *= ratio.pow(exponent);
      normalize_columns(next_c, rng);
      Eigen::MatrixXd next_ac = gram.apply(next_c);
      const double next = projective_objective(gram.trace(), next_c, next_ac);
      if (next > objective) continue;
      accepted = true;
      const double decrease = objective > 0.0 ? (objective - next) / objective : 0.0;
      c = std::move(next_c);
      ac = std::move(next_ac);
      objective = next;
      dec.objective_trace.push_back(next);
      if (decrease < options.tol) dec.converged = true;
    }
    if (!accepted) dec.converged = true;
    if (dec.converged) break;
  }

  dec.orthogonality_final = orthogonality_residual(c);
  dec.loadings = c.transpose() * x;
  dec.components = std::move(c);
  return dec;
}

}  // namespace

int MultiScaleBasis::total_psc_count() const {
  return std::accumulate(scales.begin(), scales.end(), 0);
}

const Decomposition& MultiScaleBasis::at(int k) const {
  auto it = decompositions.find(k);
  if (it == decompositions.end()) fail(ErrorKind::InvalidArgument, "scale K=" + std::to_string(k) + " not in basis");
  return it->second;
}

double orthogonality_residual(const Eigen::MatrixXd& components) {
  const Eigen::MatrixXd ctc = components.transpose() * components;
  return (ctc - Eigen::MatrixXd::Identity(ctc.rows(), ctc.cols())).norm();
}

Decomposition fit_opnmf(const Eigen::MatrixXd& x, int k, const OpnmfOptions& options) {
  check_input(x, k);
  const GramOperator gram(x);
  std::optional<Svd> svd;
  if (options.init == OpnmfInit::Nndsvd) svd = thin_svd(x);
  return fit_prepared(x, gram, svd ? &*svd : nullptr, k, options);
}

MultiScaleBasis fit_multiscale(const Eigen::MatrixXd& x, const std::vector<int>& k_list,
                               const OpnmfOptions& options, int jobs) {
  require(!k_list.empty(), ErrorKind::InvalidArgument, "scale list is empty");
  std::vector<int> scales = k_list;
  std::sort(scales.begin(), scales.end());
  scales.erase(std::unique(scales.begin(), scales.end()), scales.end());
  for (int k : scales) check_input(x, k);

  const GramOperator gram(x);
  std::optional<Svd> svd;
  if (options.init == OpnmfInit::Nndsvd) svd = thin_svd(x);

  // Largest scales first so the longest fits start early.
  std::vector<Decomposition> fitted(scales.size());
  parallel_for(scales.size(), jobs, [&](std::size_t i) {
    const std::size_t idx = scales.size() - 1 - i;
    fitted[idx] = fit_prepared(x, gram, svd ? &*svd : nullptr, scales[idx], options);
  });

  MultiScaleBasis basis;
  basis.scales = scales;
  for (std::size_t i = 0; i < scales.size(); ++i) basis.decompositions.emplace(scales[i], std::move(fitted[i]));
  return basis;
}

Eigen::MatrixXd project(const Decomposition& dec, const Eigen::MatrixXd& x_new) {
  require(x_new.rows() == dec.components.rows(), ErrorKind::Dimension,
          "projection expects " + std::to_string(dec.components.rows()) + " features, got " +
              std::to_string(x_new.rows()));
  return dec.components.transpose() * x_new;
}

double reconstruction_error(const Decomposition& dec, const Eigen::MatrixXd& x) {
  require(x.rows() == dec.components.rows() && x.cols() == dec.loadings.cols(), ErrorKind::Dimension,
          "reconstruction_error: data shape does not match the decomposition");
  return (x - dec.components * dec.loadings).squaredNorm();
}

std::vector<int> scale_range(int first, int last, int step) {
  require(step > 0, ErrorKind::InvalidArgument, "scale range step must be positive");
  require(first <= last, ErrorKind::InvalidArgument, "scale range is empty");
  std::vector<int> out;
  for (int k = first; k <= last; k += step) out.push_back(k);
  return out;
}

}  // namespace magic
