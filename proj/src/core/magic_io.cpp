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
#include "magic/magic.hpp"

namespace magic {

namespace fs = std::filesystem;
using nlohmann::json;

void save_magic(const MagicModel& model, const std::vector<std::string>& patient_ids, const fs::path& dir) {
  require(patient_ids.size() == model.consensus_labels.size(), ErrorKind::InvalidArgument,
          "patient id count does not match the model");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory '" + dir.string() + "': " + ec.message());

  json trace = json::object();
  for (const auto& [k, aris] : model.cycle_ari_trace) trace[std::to_string(k)] = aris;

  json manifest;
  manifest["format"] = "magic-model";
  manifest["version"] = 1;
  manifest["c"] = model.c;
  manifest["k_set"] = model.k_set;
  manifest["best_init_scale"] = model.best_init_scale;
  manifest["selected_predict_scale"] = model.selected_predict_scale;
  manifest["n_patients"] = patient_ids.size();
  csv::write_file(dir / "model.json", manifest.dump(2) + "\n");
  csv::write_file(dir / "trace.json", json{{"cycle_ari", trace}}.dump(2) + "\n");

  std::ostringstream consensus;
  csv::write_row(consensus, {"participant_id", "subtype"});
  for (std::size_t p = 0; p < patient_ids.size(); ++p)
    csv::write_row(consensus, {patient_ids[p], std::to_string(model.consensus_labels[p])});
  csv::write_file(dir / "consensus.csv", consensus.str());

  std::ostringstream per_init;
  std::vector<std::string> header{"participant_id"};
  for (const auto& [k, labels] : model.per_init_labels) header.push_back("init_k" + std::to_string(k));
  csv::write_row(per_init, header);
  for (std::size_t p = 0; p < patient_ids.size(); ++p) {
    std::vector<std::string> row{patient_ids[p]};
    for (const auto& [k, labels] : model.per_init_labels) row.push_back(std::to_string(labels[p]));
    csv::write_row(per_init, row);
  }
  csv::write_file(dir / "per_init.csv", per_init.str());

  save_polytope(model.predict_polytope(), patient_ids, dir / "polytope");
}

MagicModel load_magic(const fs::path& dir, std::vector<std::string>* patient_ids) {
  MagicModel model;
  try {
    const json manifest = json::parse(csv::read_file(dir / "model.json"));
    require(manifest.at("format") == "magic-model", ErrorKind::Parse, "not a model manifest");
    model.c = manifest.at("c").get<int>();
    model.k_set = manifest.at("k_set").get<std::vector<int>>();
    model.best_init_scale = manifest.at("best_init_scale").get<int>();
    model.selected_predict_scale = manifest.at("selected_predict_scale").get<int>();

    const json trace = json::parse(csv::read_file(dir / "trace.json"));
    for (const auto& [key, aris] : trace.at("cycle_ari").items())
      model.cycle_ari_trace[std::stoi(key)] = aris.get<std::vector<double>>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, dir.string() + ": " + e.what());
  }

  const csv::Table consensus = csv::read(dir / "consensus.csv");
  std::vector<std::string> ids;
  for (std::size_t r = 0; r < consensus.rows.size(); ++r) {
    ids.push_back(consensus.rows[r][0]);
    const long s = csv::to_long(consensus.rows[r][1], consensus.source + ":" + std::to_string(consensus.line_numbers[r]));
    require(s >= 0 && s < model.c, ErrorKind::Parse, consensus.source + ": subtype out of range");
    model.consensus_labels.push_back(static_cast<int>(s));
  }
  const csv::Table per_init = csv::read(dir / "per_init.csv");
  for (std::size_t col = 1; col < per_init.header.size(); ++col) {
    const int k = std::stoi(per_init.header[col].substr(std::string("init_k").size()));
    std::vector<int> labels;
    for (std::size_t r = 0; r < per_init.rows.size(); ++r)
      labels.push_back(static_cast<int>(csv::to_long(per_init.rows[r][col], per_init.source)));
    model.per_init_labels[k] = std::move(labels);
  }
  model.per_scale_polytopes.emplace(model.selected_predict_scale, load_polytope(dir / "polytope"));
  if (patient_ids) *patient_ids = std::move(ids);
  return model;
}

}  // namespace magic
