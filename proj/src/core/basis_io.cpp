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

#include "magic/basis_io.hpp"

#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "magic/csv.hpp"
#include "magic/error.hpp"

namespace magic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string components_file(int k) { return "components_k" + std::to_string(k) + ".csv"; }
std::string loadings_file(int k) { return "loadings_k" + std::to_string(k) + ".csv"; }

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd json_vector(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Eigen::MatrixXd read_numeric_block(const csv::Table& table, std::size_t first_col) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(table.rows.size()),
                    static_cast<Eigen::Index>(table.header.size() - first_col));
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    for (std::size_t c = first_col; c < table.header.size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - first_col)) =
          csv::to_double(table.rows[r][c], table.source + ":" + std::to_string(table.line_numbers[r]));
  return m;
}

}  // namespace

std::vector<std::size_t> BasisArchive::align(const Dataset& ds) const {
  require(ds.num_subjects() == subject_ids.size(), ErrorKind::InvalidArgument,
          "dataset has " + std::to_string(ds.num_subjects()) + " subjects but the basis was fitted on " +
              std::to_string(subject_ids.size()));
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < ds.num_subjects(); ++i) row_of.emplace(ds.subject_ids[i], i);
  std::vector<std::size_t> order;
  order.reserve(subject_ids.size());
  for (const auto& id : subject_ids) {
    auto it = row_of.find(id);
    require(it != row_of.end(), ErrorKind::InvalidArgument, "basis subject '" + id + "' missing from dataset");
    order.push_back(it->second);
  }
  return order;
}

Eigen::MatrixXd BasisArchive::project_dataset(const Dataset& ds, int k) const {
  require(ds.features.cols() == static_cast<Eigen::Index>(feature_names.size()), ErrorKind::Dimension,
          "dataset has " + std::to_string(ds.features.cols()) + " features, basis expects " +
              std::to_string(feature_names.size()));
  const Dataset corrected = covariates ? covariates->apply(ds) : ds;
  return project(basis.at(k), corrected.features.transpose()).transpose();
}

BasisArchive build_basis(const Dataset& ds, const std::vector<int>& k_list, const OpnmfOptions& options,
                         bool residualize, int jobs) {
  ds.validate();
  BasisArchive archive;
  archive.feature_names = ds.feature_names;
  archive.subject_ids = ds.subject_ids;
  archive.options = options;
  Dataset input = ds;
  if (residualize && !ds.covariate_names.empty()) {
    auto [corrected, model] = residualize_covariates(ds);
    input = std::move(corrected);
    archive.covariates = std::move(model);
  }
  archive.basis = fit_multiscale(input.features.transpose(), k_list, options, jobs);
  return archive;
}

void save_basis(const BasisArchive& archive, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory '" + dir.string() + "': " + ec.message());

  json manifest;
  manifest["format"] = "magic-basis";
  manifest["version"] = 1;
  manifest["scales"] = archive.basis.scales;
  manifest["D"] = archive.feature_names.size();
  manifest["N"] = archive.subject_ids.size();
  manifest["seed"] = archive.options.seed;
  manifest["tol"] = archive.options.tol;
  manifest["max_iter"] = archive.options.max_iter;
  manifest["init"] = archive.options.init == OpnmfInit::Nndsvd ? "nndsvd" : "random";
  manifest["total_psc_count"] = archive.basis.total_psc_count();
  json fits = json::array();
  for (int k : archive.basis.scales) {
    const Decomposition& dec = archive.basis.at(k);
    fits.push_back({{"K", k},
                    {"iterations", dec.iterations},
                    {"converged", dec.converged},
                    {"objective_initial", dec.objective_trace.empty() ? 0.0 : dec.objective_trace.front()},
                    {"objective_final", dec.objective_trace.empty() ? 0.0 : dec.objective_trace.back()},
                    {"orthogonality_init", dec.orthogonality_init},
                    {"orthogonality_final", dec.orthogonality_final}});
  }
  manifest["fits"] = fits;
  if (archive.covariates) {
    const CovariateModel& cm = *archive.covariates;
    json slopes = json::array();
    for (Eigen::Index d = 0; d < cm.slopes.rows(); ++d) slopes.push_back(vector_json(cm.slopes.row(d).transpose()));
    manifest["covariates"] = {{"names", cm.covariate_names},
                              {"means_cn", vector_json(cm.covariate_means_cn)},
                              {"intercepts", vector_json(cm.intercepts)},
                              {"slopes", slopes}};
  } else {
    manifest["covariates"] = nullptr;
  }
  csv::write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  for (int k : archive.basis.scales) {
    const Decomposition& dec = archive.basis.at(k);
    std::vector<std::string> psc_names;
    for (int j = 1; j <= k; ++j) psc_names.push_back("psc_" + std::to_string(j));
    std::ostringstream comp;
    csv::write_matrix(comp, dec.components, psc_names, "feature", archive.feature_names);
    csv::write_file(dir / components_file(k), comp.str());
    std::ostringstream load;
    csv::write_matrix(load, dec.loadings, archive.subject_ids, "psc", psc_names);
    csv::write_file(dir / loadings_file(k), load.str());
  }
}

BasisArchive load_basis(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(csv::read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, (dir / "manifest.json").string() + ": " + e.what());
  }
  try {
    require(manifest.at("format") == "magic-basis", ErrorKind::Parse, "not a basis manifest");
    BasisArchive archive;
    archive.options.seed = manifest.at("seed").get<std::uint64_t>();
    archive.options.tol = manifest.at("tol").get<double>();
    archive.options.max_iter = manifest.at("max_iter").get<int>();
    archive.options.init = manifest.at("init") == "random" ? OpnmfInit::Random : OpnmfInit::Nndsvd;
    archive.basis.scales = manifest.at("scales").get<std::vector<int>>();
    const auto d = manifest.at("D").get<std::size_t>();
    const auto n = manifest.at("N").get<std::size_t>();

    std::unordered_map<int, json> fit_info;
    for (const auto& f : manifest.at("fits")) fit_info[f.at("K").get<int>()] = f;

    for (int k : archive.basis.scales) {
      const csv::Table comp = csv::read(dir / components_file(k));
      const csv::Table load = csv::read(dir / loadings_file(k));
      Decomposition dec;
      dec.scale_k = k;
      dec.components = read_numeric_block(comp, 1);
      dec.loadings = read_numeric_block(load, 1);
      require(dec.components.rows() == static_cast<Eigen::Index>(d) && dec.components.cols() == k,
              ErrorKind::Parse, comp.source + ": expected " + std::to_string(d) + " x " + std::to_string(k));
      require(dec.loadings.rows() == k && dec.loadings.cols() == static_cast<Eigen::Index>(n), ErrorKind::Parse,
              load.source + ": expected " + std::to_string(k) + " x " + std::to_string(n));
      if (archive.feature_names.empty()) {
        for (const auto& row : comp.rows) archive.feature_names.push_back(row[0]);
        archive.subject_ids.assign(load.header.begin() + 1, load.header.end());
      }
      if (auto it = fit_info.find(k); it != fit_info.end()) {
        const json& f = it->second;
        dec.iterations = f.at("iterations").get<int>();
        dec.converged = f.at("converged").get<bool>();
        dec.objective_trace = {f.at("objective_initial").get<double>(), f.at("objective_final").get<double>()};
        dec.orthogonality_init = f.at("orthogonality_init").get<double>();
        dec.orthogonality_final = f.at("orthogonality_final").get<double>();
      }
      archive.basis.decompositions.emplace(k, std::move(dec));
    }
    if (!manifest.at("covariates").is_null()) {
      const json& c = manifest.at("covariates");
      CovariateModel cm;
      cm.covariate_names = c.at("names").get<std::vector<std::string>>();
      cm.covariate_means_cn = json_vector(c.at("means_cn"));
      cm.intercepts = json_vector(c.at("intercepts"));
      const json& slopes = c.at("slopes");
      cm.slopes.resize(static_cast<Eigen::Index>(slopes.size()), static_cast<Eigen::Index>(cm.covariate_names.size()));
      for (std::size_t r = 0; r < slopes.size(); ++r) cm.slopes.row(static_cast<Eigen::Index>(r)) = json_vector(slopes[r]);
      archive.covariates = std::move(cm);
    }
    return archive;
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, (dir / "manifest.json").string() + ": " + e.what());
  }
}

}  // namespace magic
