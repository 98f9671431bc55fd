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

#include "magic/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "magic/csv.hpp"
#include "magic/error.hpp"
#include "magic/random.hpp"

namespace magic {

std::vector<std::size_t> Dataset::indices_with_label(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) out.push_back(i);
  return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.feature_names = feature_names;
  out.covariate_names = covariate_names;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.covariates.resize(static_cast<Eigen::Index>(rows.size()), covariates.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = static_cast<Eigen::Index>(rows[r]);
    const auto dst = static_cast<Eigen::Index>(r);
    out.subject_ids.push_back(subject_ids.at(rows[r]));
    out.features.row(dst) = features.row(src);
    if (covariates.cols() > 0) out.covariates.row(dst) = covariates.row(src);
    if (has_labels()) out.labels.push_back(labels[rows[r]]);
  }
  return out;
}

void Dataset::validate(bool require_both_classes) const {
  const auto n = static_cast<Eigen::Index>(subject_ids.size());
  require(features.rows() == n, ErrorKind::Dimension, "feature matrix row count does not match subject count");
  require(features.cols() == static_cast<Eigen::Index>(feature_names.size()), ErrorKind::Dimension,
          "feature matrix column count does not match feature names");
  require(!feature_names.empty(), ErrorKind::InvalidArgument, "dataset has zero features");
  require(covariates.cols() == static_cast<Eigen::Index>(covariate_names.size()), ErrorKind::Dimension,
          "covariate matrix column count does not match covariate names");
  require(covariates.cols() == 0 || covariates.rows() == n, ErrorKind::Dimension,
          "covariate matrix row count does not match subject count");
  std::unordered_set<std::string> seen;
  for (const auto& id : subject_ids)
    require(seen.insert(id).second, ErrorKind::InvalidArgument, "duplicate subject id '" + id + "'");
  seen.clear();
  for (const auto& name : feature_names)
    require(seen.insert(name).second, ErrorKind::InvalidArgument, "duplicate feature name '" + name + "'");
  require(features.allFinite(), ErrorKind::InvalidArgument, "features contain non-finite values");
  if (has_labels()) {
    require(labels.size() == subject_ids.size(), ErrorKind::Dimension, "label count does not match subject count");
    for (int y : labels)
      require(y == kControl || y == kPatient, ErrorKind::InvalidArgument, "invalid label " + std::to_string(y));
    if (require_both_classes) {
      const bool any_cn = std::find(labels.begin(), labels.end(), kControl) != labels.end();
      const bool any_pt = std::find(labels.begin(), labels.end(), kPatient) != labels.end();
      require(any_cn && any_pt, ErrorKind::InvalidArgument, "dataset needs at least one control and one patient");
    }
  }
}

Dataset parse_dataset(const std::string& text, const DatasetSchema& schema, const std::string& source) {
  const csv::Table table = csv::parse(text, source);
  const std::ptrdiff_t id_col = table.column(schema.id_column);
  const std::ptrdiff_t label_col = table.column(schema.label_column);
  if (id_col < 0) fail(ErrorKind::Parse, source + ": missing column '" + schema.id_column + "'");
  if (label_col < 0 && schema.labels_required)
    fail(ErrorKind::Parse, source + ": missing column '" + schema.label_column + "'");

  std::vector<std::size_t> feature_cols;
  std::vector<std::size_t> covariate_cols;
  Dataset ds;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (static_cast<std::ptrdiff_t>(c) == id_col || static_cast<std::ptrdiff_t>(c) == label_col) continue;
    const std::string& name = table.header[c];
    if (name.rfind(schema.covariate_prefix, 0) == 0) {
      covariate_cols.push_back(c);
      ds.covariate_names.push_back(name);
    } else {
      feature_cols.push_back(c);
      ds.feature_names.push_back(name);
    }
  }
  if (feature_cols.empty()) fail(ErrorKind::Parse, source + ": no feature columns (zero features)");
  {
    std::unordered_set<std::string> seen;
    for (const auto& name : ds.feature_names)
      if (!seen.insert(name).second) fail(ErrorKind::Parse, source + ": duplicate feature column '" + name + "'");
  }

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  ds.features.resize(n, static_cast<Eigen::Index>(feature_cols.size()));
  ds.covariates.resize(n, static_cast<Eigen::Index>(covariate_cols.size()));
  std::unordered_map<std::string, std::size_t> id_line;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where_row = source + ":" + std::to_string(table.line_numbers[r]);
    const std::string& id = row[static_cast<std::size_t>(id_col)];
    if (id.empty()) fail(ErrorKind::Parse, where_row + ": missing subject id");
    if (auto [it, inserted] = id_line.emplace(id, table.line_numbers[r]); !inserted)
      fail(ErrorKind::Parse, where_row + ": duplicate subject id '" + id + "' (first seen on line " +
                                 std::to_string(it->second) + ")");
    ds.subject_ids.push_back(id);
    if (label_col >= 0) {
      const std::string& cell = row[static_cast<std::size_t>(label_col)];
      const std::string where = where_row + ", column '" + schema.label_column + "'";
      long y = 0;
      try {
        y = csv::to_long(cell, where);
      } catch (const Error&) {
        fail(ErrorKind::Parse, where + ": invalid label '" + cell + "' (expected -1 or 1)");
      }
      if (y != kControl && y != kPatient)
        fail(ErrorKind::Parse, where + ": invalid label '" + cell + "' (expected -1 or 1)");
      ds.labels.push_back(static_cast<int>(y));
    }
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const std::size_t c = feature_cols[f];
      const std::string where = where_row + ", column '" + table.header[c] + "'";
      if (row[c].empty()) fail(ErrorKind::Parse, where + ": missing value");
      const double v = csv::to_double(row[c], where);
      if (!std::isfinite(v)) fail(ErrorKind::Parse, where + ": non-finite value");
      if (schema.require_non_negative && v < 0.0) fail(ErrorKind::Parse, where + ": negative feature value");
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) = v;
    }
    for (std::size_t q = 0; q < covariate_cols.size(); ++q) {
      const std::size_t c = covariate_cols[q];
      const std::string where = where_row + ", column '" + table.header[c] + "'";
      if (row[c].empty()) fail(ErrorKind::Parse, where + ": missing value");
      const double v = csv::to_double(row[c], where);
      if (!std::isfinite(v)) fail(ErrorKind::Parse, where + ": non-finite value");
      ds.covariates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(q)) = v;
    }
  }
  if (ds.has_labels() && schema.require_both_classes) {
    const bool any_cn = std::find(ds.labels.begin(), ds.labels.end(), kControl) != ds.labels.end();
    const bool any_pt = std::find(ds.labels.begin(), ds.labels.end(), kPatient) != ds.labels.end();
    if (!any_cn || !any_pt) fail(ErrorKind::Parse, source + ": need at least one control (-1) and one patient (1)");
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema) {
  return parse_dataset(csv::read_file(path), schema, path.string());
}

std::string format_dataset(const Dataset& ds) {
  std::ostringstream out;
  std::vector<std::string> fields{"participant_id"};
  if (ds.has_labels()) fields.emplace_back("diagnosis");
  fields.insert(fields.end(), ds.covariate_names.begin(), ds.covariate_names.end());
  fields.insert(fields.end(), ds.feature_names.begin(), ds.feature_names.end());
  csv::write_row(out, fields);
  for (std::size_t i = 0; i < ds.num_subjects(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    fields.clear();
    fields.push_back(ds.subject_ids[i]);
    if (ds.has_labels()) fields.push_back(std::to_string(ds.labels[i]));
    for (Eigen::Index q = 0; q < ds.covariates.cols(); ++q) fields.push_back(csv::format(ds.covariates(r, q)));
    for (Eigen::Index f = 0; f < ds.features.cols(); ++f) fields.push_back(csv::format(ds.features(r, f)));
    csv::write_row(out, fields);
  }
  return out.str();
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) { csv::write_file(path, format_dataset(ds)); }

Dataset CovariateModel::apply(const Dataset& ds) const {
  Dataset out = ds;
  if (empty()) return out;
  require(ds.features.cols() == slopes.rows(), ErrorKind::Dimension,
          "covariate model expects " + std::to_string(slopes.rows()) + " features, got " +
              std::to_string(ds.features.cols()));
  Eigen::MatrixXd centered(ds.features.rows(), static_cast<Eigen::Index>(covariate_names.size()));
  for (std::size_t q = 0; q < covariate_names.size(); ++q) {
    auto it = std::find(ds.covariate_names.begin(), ds.covariate_names.end(), covariate_names[q]);
    require(it != ds.covariate_names.end(), ErrorKind::InvalidArgument,
            "dataset lacks covariate column '" + covariate_names[q] + "'");
    const auto src = static_cast<Eigen::Index>(it - ds.covariate_names.begin());
    centered.col(static_cast<Eigen::Index>(q)) =
        ds.covariates.col(src).array() - covariate_means_cn(static_cast<Eigen::Index>(q));
  }
  out.features = (ds.features - centered * slopes.transpose()).cwiseMax(0.0);
  return out;
}

std::pair<Dataset, CovariateModel> residualize_covariates(const Dataset& ds) {
  ds.validate();
  CovariateModel model;
  const Eigen::Index d = ds.features.cols();
  const Eigen::Index q = ds.covariates.cols();
  if (q == 0) {
    model.slopes.resize(d, 0);
    model.intercepts = ds.features.colwise().mean().transpose();
    return {ds, model};
  }
  const std::vector<std::size_t> cn = ds.control_indices();
  require(cn.size() >= 2, ErrorKind::InvalidArgument, "residualization needs at least 2 control subjects");

  const auto n_cn = static_cast<Eigen::Index>(cn.size());
  Eigen::MatrixXd cov_cn(n_cn, q);
  Eigen::MatrixXd y_cn(n_cn, d);
  for (Eigen::Index r = 0; r < n_cn; ++r) {
    cov_cn.row(r) = ds.covariates.row(static_cast<Eigen::Index>(cn[static_cast<std::size_t>(r)]));
    y_cn.row(r) = ds.features.row(static_cast<Eigen::Index>(cn[static_cast<std::size_t>(r)]));
  }
  model.covariate_names = ds.covariate_names;
  model.covariate_means_cn = cov_cn.colwise().mean().transpose();
  const Eigen::MatrixXd centered = cov_cn.rowwise() - model.covariate_means_cn.transpose();

  // Columns are added one at a time so a rank failure can name the culprit:
  // intercept first, then each covariate in file order.
  Eigen::MatrixXd design(n_cn, q + 1);
  design.col(0).setOnes();
  design.rightCols(q) = cov_cn;
  std::vector<std::string> collinear;
  Eigen::Index rank = 1;
  for (Eigen::Index c = 1; c <= q; ++c) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.leftCols(c + 1));
    qr.setThreshold(1e-10);
    if (qr.rank() <= rank) {
      collinear.push_back(ds.covariate_names[static_cast<std::size_t>(c - 1)]);
    } else {
      rank = qr.rank();
    }
  }
  if (!collinear.empty()) {
    std::string names;
    for (const auto& name : collinear) names += (names.empty() ? "" : ", ") + name;
    fail(ErrorKind::Computation,
         "covariate design on controls is rank deficient; collinear columns: " + names);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(centered);
  const Eigen::MatrixXd y_centered = y_cn.rowwise() - y_cn.colwise().mean();
  model.slopes = qr.solve(y_centered).transpose();  // D x Q
  model.intercepts = y_cn.colwise().mean().transpose() - model.slopes * model.covariate_means_cn;
  require(model.slopes.allFinite() && model.intercepts.allFinite(), ErrorKind::Computation,
          "covariate regression produced non-finite coefficients");
  return {model.apply(ds), model};
}

Split stratified_holdout_split(const std::vector<int>& labels, double test_fraction, std::uint64_t seed) {
  require(test_fraction > 0.0 && test_fraction < 1.0, ErrorKind::InvalidArgument,
          "test_fraction must be in (0,1)");
  Split split;
  Rng rng(derive_seed(seed, {stream::kSplit}));
  for (int cls : {kControl, kPatient}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) members.push_back(i);
    const std::string name = cls == kControl ? "control" : "patient";
    require(members.size() >= 2, ErrorKind::InvalidArgument, "stratified split needs at least 2 " + name + "s");
    const auto n_test = static_cast<std::size_t>(std::lround(static_cast<double>(members.size()) * test_fraction));
    require(n_test >= 1 && n_test < members.size(), ErrorKind::InvalidArgument,
            "test_fraction leaves the " + name + " class empty on one side of the split");
    std::shuffle(members.begin(), members.end(), rng);
    split.test.insert(split.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.insert(split.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace magic
