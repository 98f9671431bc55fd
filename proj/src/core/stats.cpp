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

#include "magic/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "magic/csv.hpp"
#include "magic/dataset.hpp"
#include "magic/error.hpp"

namespace magic {

namespace {

struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double var = 0.0;  // unbiased
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  m.n = static_cast<double>(x.size());
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / m.n;
  double ss = 0.0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  m.var = ss / (m.n - 1.0);
  return m;
}

double pooled_sd(const Moments& a, const Moments& b) {
  return std::sqrt(((a.n - 1.0) * a.var + (b.n - 1.0) * b.var) / (a.n + b.n - 2.0));
}

void check_samples(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() >= 2 && b.size() >= 2, ErrorKind::InvalidArgument, "each sample needs at least 2 values");
  for (double v : a) require(std::isfinite(v), ErrorKind::InvalidArgument, "sample contains non-finite values");
  for (double v : b) require(std::isfinite(v), ErrorKind::InvalidArgument, "sample contains non-finite values");
}

}  // namespace

TTestResult two_sample_ttest(const std::vector<double>& a, const std::vector<double>& b, bool pooled) {
  check_samples(a, b);
  const Moments ma = moments(a), mb = moments(b);
  TTestResult r;
  double se = 0.0;
  if (pooled) {
    r.df = ma.n + mb.n - 2.0;
    se = pooled_sd(ma, mb) * std::sqrt(1.0 / ma.n + 1.0 / mb.n);
  } else {
    const double va = ma.var / ma.n, vb = mb.var / mb.n;
    se = std::sqrt(va + vb);
    const double denom = va * va / (ma.n - 1.0) + vb * vb / (mb.n - 1.0);
    r.df = denom > 0.0 ? (va + vb) * (va + vb) / denom : ma.n + mb.n - 2.0;
  }
  const double diff = ma.mean - mb.mean;
  if (!(se > 0.0)) {
    if (diff == 0.0) return {0.0, 1.0, r.df};
    r.t = diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.t = diff / se;
  const boost::math::students_t dist(r.df);
  r.p = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

std::vector<bool> bh_adjust(const std::vector<double>& p_values, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::InvalidArgument, "alpha must be in (0,1)");
  for (double p : p_values)
    require(p >= 0.0 && p <= 1.0, ErrorKind::InvalidArgument, "p-values must lie in [0,1]");
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return p_values[x] < p_values[y]; });
  std::size_t cutoff = 0;  // number of rejections
  for (std::size_t rank = m; rank >= 1; --rank) {
    if (p_values[order[rank - 1]] <= static_cast<double>(rank) / static_cast<double>(m) * alpha) {
      cutoff = rank;
      break;
    }
  }
  std::vector<bool> reject(m, false);
  for (std::size_t r = 0; r < cutoff; ++r) reject[order[r]] = true;
  return reject;
}

double cohens_d(const std::vector<double>& a, const std::vector<double>& b) {
  check_samples(a, b);
  const Moments ma = moments(a), mb = moments(b);
  const double sd = pooled_sd(ma, mb);
  require(sd > 0.0, ErrorKind::InvalidArgument, "Cohen's d undefined: pooled standard deviation is zero");
  return (ma.mean - mb.mean) / sd;
}

StatsTable subtype_mapping(const MultiScaleBasis& basis, const std::vector<int>& labels,
                           const std::vector<int>& subtype_of_patient, double alpha, bool pooled) {
  require(!basis.scales.empty(), ErrorKind::InvalidArgument, "basis is empty");
  const std::size_t n = labels.size();
  std::vector<std::size_t> controls;
  std::vector<std::size_t> patients;
  for (std::size_t i = 0; i < n; ++i) (labels[i] == kPatient ? patients : controls).push_back(i);
  require(controls.size() >= 2, ErrorKind::InvalidArgument, "subtype mapping needs at least 2 controls");
  require(subtype_of_patient.size() == patients.size(), ErrorKind::InvalidArgument,
          "subtype labels must cover every patient");
  const int n_subtypes = *std::max_element(subtype_of_patient.begin(), subtype_of_patient.end()) + 1;
  for (int s : subtype_of_patient) require(s >= 0, ErrorKind::InvalidArgument, "subtype ids must be >= 0");
  for (int k : basis.scales)
    require(basis.at(k).loadings.cols() == static_cast<Eigen::Index>(n), ErrorKind::Dimension,
            "labels do not match the basis subjects");

  StatsTable table;
  table.alpha = alpha;
  for (int s = 0; s < n_subtypes; ++s) {
    std::vector<std::size_t> members;
    for (std::size_t p = 0; p < patients.size(); ++p)
      if (subtype_of_patient[p] == s) members.push_back(patients[p]);
    require(members.size() >= 2, ErrorKind::InvalidArgument,
            "subtype " + std::to_string(s) + " has fewer than 2 members");

    std::vector<StatsRow> rows;
    std::vector<double> p_values;
    for (int k : basis.scales) {
      const Eigen::MatrixXd& l = basis.at(k).loadings;
      for (Eigen::Index j = 0; j < l.rows(); ++j) {
        std::vector<double> a, b;
        for (std::size_t i : controls) a.push_back(l(j, static_cast<Eigen::Index>(i)));
        for (std::size_t i : members) b.push_back(l(j, static_cast<Eigen::Index>(i)));
        const TTestResult tt = two_sample_ttest(a, b, pooled);
        StatsRow row;
        row.scale_k = k;
        row.component_index = static_cast<int>(j) + 1;
        row.subtype = s;
        row.n_subtype = static_cast<int>(b.size());
        row.n_cn = static_cast<int>(a.size());
        row.t = tt.t;
        row.p = tt.p;
        const Moments ma = moments(a), mb = moments(b);
        const double sd = pooled_sd(ma, mb);
        row.cohens_d = sd > 0.0 ? (ma.mean - mb.mean) / sd : std::numeric_limits<double>::quiet_NaN();
        row.mean_cn = ma.mean;
        row.mean_subtype = mb.mean;
        row.sd_cn = std::sqrt(ma.var);
        row.sd_subtype = std::sqrt(mb.var);
        rows.push_back(row);
        p_values.push_back(tt.p);
      }
    }
    const std::vector<bool> reject = bh_adjust(p_values, alpha);
    int survivors = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      rows[r].bh_reject = reject[r];
      survivors += reject[r] ? 1 : 0;
    }
    std::stable_sort(rows.begin(), rows.end(), [](const StatsRow& x, const StatsRow& y) {
      if (std::isnan(x.cohens_d)) return false;
      if (std::isnan(y.cohens_d)) return true;
      return x.cohens_d > y.cohens_d;
    });
    table.rows.insert(table.rows.end(), rows.begin(), rows.end());
    table.survivors_per_subtype.push_back(survivors);
  }
  return table;
}

Eigen::MatrixXd mds_embed(const Eigen::MatrixXd& features, int dims) {
  require(dims >= 1, ErrorKind::InvalidArgument, "MDS needs dims >= 1");
  require(features.rows() >= dims + 1, ErrorKind::InvalidArgument, "MDS needs at least dims + 1 points");
  require(features.allFinite(), ErrorKind::InvalidArgument, "MDS input contains non-finite values");
  const Eigen::Index n = features.rows();
  Eigen::MatrixXd d2(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d2(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) d2(i, j) = d2(j, i) = (features.row(i) - features.row(j)).squaredNorm();
  }
  // B = -1/2 J D2 J with J = I - 11^T/n.
  const Eigen::VectorXd row_mean = d2.rowwise().mean();
  const double grand = row_mean.mean();
  Eigen::MatrixXd b = d2;
  b.rowwise() -= row_mean.transpose();
  b.colwise() -= row_mean;
  b.array() += grand;
  b *= -0.5;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  require(eig.info() == Eigen::Success, ErrorKind::Computation, "MDS eigendecomposition failed");
  Eigen::MatrixXd coords(n, dims);
  for (int d = 0; d < dims; ++d) {
    const Eigen::Index idx = n - 1 - d;  // eigenvalues ascend
    const double lambda = std::max(eig.eigenvalues()(idx), 0.0);
    Eigen::VectorXd v = eig.eigenvectors().col(idx) * std::sqrt(lambda);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    coords.col(d) = v;
  }
  return coords;
}

std::vector<bool> component_support(const Eigen::Ref<const Eigen::VectorXd>& component) {
  const double mean = component.mean();
  std::vector<bool> out(static_cast<std::size_t>(component.size()));
  for (Eigen::Index i = 0; i < component.size(); ++i) out[static_cast<std::size_t>(i)] = component(i) > mean;
  return out;
}

double dice(const std::vector<bool>& a, const std::vector<bool>& b) {
  require(a.size() == b.size(), ErrorKind::Dimension, "dice: masks differ in size");
  double both = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    both += (a[i] && b[i]) ? 1 : 0;
    na += a[i] ? 1 : 0;
    nb += b[i] ? 1 : 0;
  }
  return na + nb > 0 ? 2.0 * both / (na + nb) : 1.0;
}

void save_stats_table(const StatsTable& table, const std::filesystem::path& csv_path) {
  std::ostringstream out;
  csv::write_row(out, {"scale_k", "component_index", "subtype", "n_subtype", "n_cn", "t", "p", "bh_reject", "cohens_d"});
  for (const StatsRow& r : table.rows)
    csv::write_row(out, {std::to_string(r.scale_k), std::to_string(r.component_index), std::to_string(r.subtype),
                         std::to_string(r.n_subtype), std::to_string(r.n_cn), csv::format(r.t), csv::format(r.p),
                         r.bh_reject ? "1" : "0", csv::format(r.cohens_d)});
  csv::write_file(csv_path, out.str());
}

void save_mds(const Eigen::MatrixXd& coords, const std::vector<std::string>& subject_ids,
              const std::vector<std::string>& groups, const std::filesystem::path& csv_path) {
  require(coords.rows() == static_cast<Eigen::Index>(subject_ids.size()) && groups.size() == subject_ids.size(),
          ErrorKind::Dimension, "MDS output rows do not match subjects");
  std::ostringstream out;
  std::vector<std::string> header{"participant_id", "group"};
  for (Eigen::Index d = 1; d <= coords.cols(); ++d) header.push_back("dim" + std::to_string(d));
  csv::write_row(out, header);
  for (std::size_t i = 0; i < subject_ids.size(); ++i) {
    std::vector<std::string> row{subject_ids[i], groups[i]};
    for (Eigen::Index d = 0; d < coords.cols(); ++d) row.push_back(csv::format(coords(static_cast<Eigen::Index>(i), d)));
    csv::write_row(out, row);
  }
  csv::write_file(csv_path, out.str());
}

}  // namespace magic
