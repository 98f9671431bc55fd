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

#include <sstream>

#include <json.hpp>

#include "magic/csv.hpp"
#include "magic/error.hpp"
#include "magic/polytope.hpp"

namespace magic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

}  // namespace

void save_polytope(const PolytopeModel& model, const std::vector<std::string>& patient_ids, const fs::path& dir) {
  require(patient_ids.size() == model.membership.assignments.size(), ErrorKind::InvalidArgument,
          "patient id count does not match the model membership");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory '" + dir.string() + "': " + ec.message());

  json manifest;
  manifest["format"] = "magic-polytope";
  manifest["version"] = 1;
  manifest["c"] = model.c();
  manifest["scale_k"] = model.scale_k;
  manifest["reg_c"] = model.reg_c;
  manifest["scaler"] = {{"mean", to_json(model.scaler.mean)}, {"scale", to_json(model.scaler.scale)}};
  manifest["objective"] = model.joint_objective;
  manifest["objective_trace"] = model.objective_trace;
  manifest["n_alternations"] = model.n_alternations;
  manifest["converged"] = model.converged;
  csv::write_file(dir / "polytope.json", manifest.dump(2) + "\n");

  std::ostringstream planes;
  std::vector<std::string> header;
  for (int k = 1; k <= model.scale_k; ++k) header.push_back("w_" + std::to_string(k));
  header.emplace_back("bias");
  csv::write_row(planes, header);
  for (const Hyperplane& h : model.hyperplanes) {
    std::vector<std::string> row;
    for (Eigen::Index k = 0; k < h.weights.size(); ++k) row.push_back(csv::format(h.weights(k)));
    row.push_back(csv::format(h.bias));
    csv::write_row(planes, row);
  }
  csv::write_file(dir / "hyperplanes.csv", planes.str());

  std::ostringstream assign;
  csv::write_row(assign, {"participant_id", "cluster"});
  for (std::size_t p = 0; p < patient_ids.size(); ++p)
    csv::write_row(assign, {patient_ids[p], std::to_string(model.membership.assignments[p])});
  csv::write_file(dir / "assignments.csv", assign.str());
}

PolytopeModel load_polytope(const fs::path& dir, std::vector<std::string>* patient_ids) {
  PolytopeModel model;
  try {
    const json manifest = json::parse(csv::read_file(dir / "polytope.json"));
    require(manifest.at("format") == "magic-polytope", ErrorKind::Parse, "not a polytope manifest");
    const int c = manifest.at("c").get<int>();
    model.scale_k = manifest.at("scale_k").get<int>();
    model.reg_c = manifest.at("reg_c").get<double>();
    model.scaler.mean = from_json(manifest.at("scaler").at("mean"));
    model.scaler.scale = from_json(manifest.at("scaler").at("scale"));
    model.joint_objective = manifest.at("objective").get<double>();
    model.objective_trace = manifest.at("objective_trace").get<std::vector<double>>();
    model.n_alternations = manifest.at("n_alternations").get<int>();
    model.converged = manifest.at("converged").get<bool>();
    model.membership.c = c;

    const csv::Table planes = csv::read(dir / "hyperplanes.csv");
    require(planes.rows.size() == static_cast<std::size_t>(c) &&
                planes.header.size() == static_cast<std::size_t>(model.scale_k) + 1,
            ErrorKind::Parse, planes.source + ": expected " + std::to_string(c) + " rows of " +
                                  std::to_string(model.scale_k + 1) + " values");
    for (std::size_t r = 0; r < planes.rows.size(); ++r) {
      Hyperplane h;
      h.weights.resize(model.scale_k);
      const std::string where = planes.source + ":" + std::to_string(planes.line_numbers[r]);
      for (int k = 0; k < model.scale_k; ++k) h.weights(k) = csv::to_double(planes.rows[r][static_cast<std::size_t>(k)], where);
      h.bias = csv::to_double(planes.rows[r].back(), where);
      model.hyperplanes.push_back(std::move(h));
    }

    const csv::Table assign = csv::read(dir / "assignments.csv");
    for (std::size_t r = 0; r < assign.rows.size(); ++r) {
      const std::string where = assign.source + ":" + std::to_string(assign.line_numbers[r]);
      const long a = csv::to_long(assign.rows[r][1], where);
      require(a >= 0 && a < c, ErrorKind::Parse, where + ": cluster id out of range");
      model.membership.assignments.push_back(static_cast<int>(a));
      if (patient_ids) patient_ids->push_back(assign.rows[r][0]);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, (dir / "polytope.json").string() + ": " + e.what());
  }
  return model;
}

}  // namespace magic
