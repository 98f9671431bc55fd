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

#include "magic/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "magic/csv.hpp"
#include "magic/dataset.hpp"
#include "magic/error.hpp"
#include "magic/parallel.hpp"
#include "magic/random.hpp"

namespace magic {

namespace {

std::int64_t choose2(std::int64_t n) { return n * (n - 1) / 2; }

}  // namespace

bool same_partition(const std::vector<int>& u, const std::vector<int>& v) {
  return u.size() == v.size() && canonical_labels(u) == canonical_labels(v);
}

double adjusted_rand_index(const std::vector<int>& u, const std::vector<int>& v) {
  require(u.size() == v.size(), ErrorKind::Dimension, "ARI: partitions have different lengths");
  require(!u.empty(), ErrorKind::InvalidArgument, "ARI: empty partitions");
  std::map<std::pair<int, int>, std::int64_t> table;
  std::map<int, std::int64_t> rows, cols;
  for (std::size_t i = 0; i < u.size(); ++i) {
    ++table[{u[i], v[i]}];
    ++rows[u[i]];
    ++cols[v[i]];
  }
  std::int64_t index = 0, sum_rows = 0, sum_cols = 0;
  for (const auto& [cell, count] : table) index += choose2(count);
  for (const auto& [label, count] : rows) sum_rows += choose2(count);
  for (const auto& [label, count] : cols) sum_cols += choose2(count);
  const double total = static_cast<double>(choose2(static_cast<std::int64_t>(u.size())));
  const double expected = total > 0 ? static_cast<double>(sum_rows) * static_cast<double>(sum_cols) / total : 0.0;
  const double max_index = 0.5 * static_cast<double>(sum_rows + sum_cols);
  if (max_index == expected) return same_partition(u, v) ? 1.0 : 0.0;
  return (static_cast<double>(index) - expected) / (max_index - expected);
}

StabilityReport stability_analysis(const MultiScaleBasis& basis, const std::vector<int>& labels,
                                   const StabilityOptions& options, const Eigen::MatrixXd* raw_features) {
  require(options.repetitions >= 2, ErrorKind::InvalidArgument, "stability analysis needs at least 2 repetitions");
  require(!options.c_values.empty() && !options.k_values.empty(), ErrorKind::InvalidArgument,
          "stability analysis needs non-empty c and K ranges");
  for (int c : options.c_values) require(c >= 1, ErrorKind::InvalidArgument, "c values must be >= 1");
  if (options.refit_basis) {
    require(raw_features != nullptr, ErrorKind::InvalidArgument, "refitting the basis requires the raw features");
    require(raw_features->rows() == static_cast<Eigen::Index>(labels.size()), ErrorKind::Dimension,
            "raw features and labels disagree in length");
  } else {
    for (int k : options.k_values)
      require(basis.contains(k), ErrorKind::InvalidArgument, "scale K=" + std::to_string(k) + " not in basis");
  }
  const auto n = labels.size();
  for (int k : options.k_values)
    if (basis.contains(k))
      require(basis.at(k).loadings.cols() == static_cast<Eigen::Index>(n), ErrorKind::Dimension,
              "labels do not match the basis subjects");

  const auto reps = static_cast<std::size_t>(options.repetitions);
  std::vector<Split> splits(reps);
  for (std::size_t r = 0; r < reps; ++r)
    splits[r] = stratified_holdout_split(labels, options.test_fraction, derive_seed(options.seed, {stream::kSplit, r}));

  const std::size_t nc = options.c_values.size(), nk = options.k_values.size();

  // Training-split loadings per (repetition, K): subjects x K.
  std::vector<std::vector<Eigen::MatrixXd>> train_features(reps, std::vector<Eigen::MatrixXd>(nk));
  parallel_for(reps, options.refit_basis ? options.jobs : 1, [&](std::size_t r) {
    const auto& train = splits[r].train;
    if (options.refit_basis) {
      Eigen::MatrixXd x(raw_features->cols(), static_cast<Eigen::Index>(train.size()));
      for (std::size_t i = 0; i < train.size(); ++i)
        x.col(static_cast<Eigen::Index>(i)) = raw_features->row(static_cast<Eigen::Index>(train[i])).transpose();
      const MultiScaleBasis refit = fit_multiscale(x, options.k_values, options.opnmf, 1);
      for (std::size_t ki = 0; ki < nk; ++ki)
        train_features[r][ki] = refit.at(options.k_values[ki]).loadings.transpose();
    } else {
      for (std::size_t ki = 0; ki < nk; ++ki) {
        const Eigen::MatrixXd& l = basis.at(options.k_values[ki]).loadings;
        Eigen::MatrixXd f(static_cast<Eigen::Index>(train.size()), l.rows());
        for (std::size_t i = 0; i < train.size(); ++i)
          f.row(static_cast<Eigen::Index>(i)) = l.col(static_cast<Eigen::Index>(train[i])).transpose();
        train_features[r][ki] = std::move(f);
      }
    }
  });

  // Cluster id per subject (-1 when not a training patient) for each cell.
  std::vector<std::vector<int>> assignment(reps * nc * nk);
  auto cell = [&](std::size_t r, std::size_t ci, std::size_t ki) { return (r * nc + ci) * nk + ki; };
  parallel_for(assignment.size(), options.jobs, [&](std::size_t task) {
    const std::size_t ki = task % nk;
    const std::size_t ci = (task / nk) % nc;
    const std::size_t r = task / (nk * nc);
    const auto& train = splits[r].train;
    std::vector<int> train_labels(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) train_labels[i] = labels[train[i]];
    const int c = options.c_values[ci];
    const std::uint64_t seed = derive_seed(options.seed, {stream::kRestart, r, static_cast<std::uint64_t>(c),
                                                          static_cast<std::uint64_t>(options.k_values[ki])});
    const PolytopeModel model = fit_polytope_restarts(train_features[r][ki], train_labels, c, options.polytope,
                                                      options.restarts, options.init, seed, 1);
    std::vector<int> full(n, -1);
    std::size_t p = 0;
    for (std::size_t i = 0; i < train.size(); ++i)
      if (train_labels[i] == kPatient) full[train[i]] = model.membership.assignments[p++];
    assignment[task] = std::move(full);
  });

  StabilityReport report;
  report.c_values = options.c_values;
  report.k_values = options.k_values;
  report.repetitions = options.repetitions;
  report.test_fraction = options.test_fraction;
  report.mean_ari.resize(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(nk));
  report.std_ari.resize(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(nk));
  for (std::size_t ci = 0; ci < nc; ++ci) {
    for (std::size_t ki = 0; ki < nk; ++ki) {
      std::vector<double> aris;
      for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t s = r + 1; s < reps; ++s) {
          const auto& a = assignment[cell(r, ci, ki)];
          const auto& b = assignment[cell(s, ci, ki)];
          std::vector<int> ua, ub;
          for (std::size_t i = 0; i < n; ++i)
            if (a[i] >= 0 && b[i] >= 0) {
              ua.push_back(a[i]);
              ub.push_back(b[i]);
            }
          require(ua.size() >= 2, ErrorKind::InvalidArgument,
                  "repetitions share fewer than 2 training patients; test_fraction too large");
          aris.push_back(adjusted_rand_index(ua, ub));
        }
      }
      double mean = 0.0;
      for (double v : aris) mean += v;
      mean /= static_cast<double>(aris.size());
      double var = 0.0;
      for (double v : aris) var += (v - mean) * (v - mean);
      var /= static_cast<double>(aris.size());
      report.mean_ari(static_cast<Eigen::Index>(ci), static_cast<Eigen::Index>(ki)) = mean;
      report.std_ari(static_cast<Eigen::Index>(ci), static_cast<Eigen::Index>(ki)) = std::sqrt(var);
    }
  }
  return report;
}

int select_num_clusters(const StabilityReport& report, const std::vector<int>& k_subset) {
  require(!k_subset.empty(), ErrorKind::InvalidArgument, "K subset is empty");
  std::vector<Eigen::Index> cols;
  for (int k : k_subset) {
    auto it = std::find(report.k_values.begin(), report.k_values.end(), k);
    require(it != report.k_values.end(), ErrorKind::InvalidArgument,
            "K=" + std::to_string(k) + " is not part of the stability report");
    cols.push_back(static_cast<Eigen::Index>(it - report.k_values.begin()));
  }
  int best_c = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t ci = 0; ci < report.c_values.size(); ++ci) {
    double mean = 0.0;
    for (Eigen::Index col : cols) mean += report.mean_ari(static_cast<Eigen::Index>(ci), col);
    mean /= static_cast<double>(cols.size());
    const int c = report.c_values[ci];
    if (mean > best || (mean == best && c < best_c)) {
      best = mean;
      best_c = c;
    }
  }
  return best_c;
}

void save_stability_report(const StabilityReport& report, const std::filesystem::path& json_path,
                           const std::filesystem::path& csv_path) {
  using nlohmann::json;
  json j;
  j["c_values"] = report.c_values;
  j["k_values"] = report.k_values;
  j["repetitions"] = report.repetitions;
  j["test_fraction"] = report.test_fraction;
  json mean = json::array(), sd = json::array();
  for (Eigen::Index ci = 0; ci < report.mean_ari.rows(); ++ci) {
    json mr = json::array(), sr = json::array();
    for (Eigen::Index ki = 0; ki < report.mean_ari.cols(); ++ki) {
      mr.push_back(report.mean_ari(ci, ki));
      sr.push_back(report.std_ari(ci, ki));
    }
    mean.push_back(mr);
    sd.push_back(sr);
  }
  j["mean_ari"] = mean;
  j["std_ari"] = sd;
  csv::write_file(json_path, j.dump(2) + "\n");

  std::ostringstream out;
  csv::write_row(out, {"c", "k", "mean_ari", "std_ari"});
  for (std::size_t ci = 0; ci < report.c_values.size(); ++ci)
    for (std::size_t ki = 0; ki < report.k_values.size(); ++ki)
      csv::write_row(out, {std::to_string(report.c_values[ci]), std::to_string(report.k_values[ki]),
                           csv::format(report.mean_ari(static_cast<Eigen::Index>(ci), static_cast<Eigen::Index>(ki))),
                           csv::format(report.std_ari(static_cast<Eigen::Index>(ci), static_cast<Eigen::Index>(ki)))});
  csv::write_file(csv_path, out.str());
}

}  // namespace magic
