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

// Exercises the shared library through its C header only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "magic/magic_c.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("magic_capi_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

magic_sim_config small_config() {
  magic_sim_config cfg;
  magic_sim_config_init(&cfg);
  cfg.n_cn = 40;
  cfg.n_pt = 40;
  cfg.atrophy_fraction = 0.2;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("capi: status strings and option defaults") {
  CHECK(std::string(magic_status_string(MAGIC_OK)) == "ok");
  CHECK(std::string(magic_status_string(MAGIC_ERR_PARSE)) == "parse error");
  magic_cluster_options co;
  magic_cluster_options_init(&co);
  CHECK(co.c == 2);
  CHECK(co.reg_c == 0.25);
  CHECK(co.max_cycles == 10);
  magic_stability_options so;
  magic_stability_options_init(&so);
  CHECK(so.test_fraction == 0.2);
  magic_sim_config sc;
  magic_sim_config_init(&sc);
  CHECK(sc.atrophy_fraction == 0.10);
}

TEST_CASE("capi: errors come back as codes with a message") {
  magic_dataset* ds = nullptr;
  CHECK(magic_dataset_load("/nonexistent/file.csv", 0, &ds) == MAGIC_ERR_IO);
  CHECK(ds == nullptr);
  CHECK(std::string(magic_last_error()).find("file.csv") != std::string::npos);

  const fs::path dir = scratch("errors");
  std::ofstream(dir / "bad.csv") << "participant_id,diagnosis,f1\na,0,1.0\n";
  CHECK(magic_dataset_load((dir / "bad.csv").c_str(), 0, &ds) == MAGIC_ERR_PARSE);
  CHECK(std::string(magic_last_error()).find("invalid label") != std::string::npos);

  std::ofstream(dir / "neg.csv") << "participant_id,diagnosis,f1\na,-1,1.0\nb,1,-2.0\n";
  CHECK(magic_dataset_load((dir / "neg.csv").c_str(), MAGIC_LOAD_NON_NEGATIVE, &ds) != MAGIC_OK);
  CHECK(magic_dataset_load((dir / "neg.csv").c_str(), 0, &ds) == MAGIC_OK);
  magic_dataset_free(ds);

  magic_sim_config cfg = small_config();
  cfg.atrophy_fraction = 1.5;
  magic_truth* truth = nullptr;
  ds = nullptr;
  CHECK(magic_simulate(&cfg, &ds, &truth) == MAGIC_ERR_INVALID_ARGUMENT);
  CHECK(ds == nullptr);
  CHECK(magic_simulate(nullptr, &ds, &truth) == MAGIC_ERR_INVALID_ARGUMENT);
  CHECK(std::string(magic_last_error()).find("NULL") != std::string::npos);

  magic_dataset_free(nullptr);
  magic_basis_free(nullptr);
  magic_model_free(nullptr);
  fs::remove_all(dir);
}

TEST_CASE("capi: simulate, decompose, cluster, map and predict") {
  const fs::path dir = scratch("pipeline");
  magic_sim_config cfg = small_config();
  magic_dataset* ds = nullptr;
  magic_truth* truth = nullptr;
  REQUIRE(magic_simulate(&cfg, &ds, &truth) == MAGIC_OK);
  CHECK(magic_dataset_num_subjects(ds) == 80);
  CHECK(magic_dataset_num_features(ds) == 400);
  CHECK(magic_dataset_num_patients(ds) == 40);
  CHECK(magic_dataset_has_labels(ds) == 1);
  REQUIRE(magic_dataset_save(ds, (dir / "data.csv").c_str()) == MAGIC_OK);
  REQUIRE(magic_truth_save(truth, (dir / "truth.csv").c_str(), (dir / "masks.csv").c_str()) == MAGIC_OK);
  CHECK(count_lines(dir / "truth.csv") == 41);

  magic_dataset* reloaded = nullptr;
  REQUIRE(magic_dataset_load((dir / "data.csv").c_str(), MAGIC_LOAD_NON_NEGATIVE, &reloaded) == MAGIC_OK);
  CHECK(magic_dataset_num_subjects(reloaded) == 80);

  const int ks[] = {12, 16, 20};
  magic_basis_options bo;
  magic_basis_options_init(&bo);
  bo.max_iter = 300;
  magic_basis* basis = nullptr;
  REQUIRE(magic_basis_fit(reloaded, ks, 3, &bo, &basis) == MAGIC_OK);
  CHECK(magic_basis_num_scales(basis) == 3);
  CHECK(magic_basis_total_components(basis) == 48);
  int scales[3] = {0, 0, 0};
  REQUIRE(magic_basis_scales(basis, scales, 3) == MAGIC_OK);
  CHECK(scales[2] == 20);
  CHECK(magic_basis_scales(basis, scales, 2) != MAGIC_OK);
  REQUIRE(magic_basis_save(basis, (dir / "basis").c_str()) == MAGIC_OK);
  magic_basis* basis2 = nullptr;
  REQUIRE(magic_basis_load((dir / "basis").c_str(), &basis2) == MAGIC_OK);
  CHECK(magic_basis_total_components(basis2) == 48);

  magic_cluster_options co;
  magic_cluster_options_init(&co);
  co.restarts = 3;
  co.seed = 5;
  magic_model* model = nullptr;
  REQUIRE(magic_model_fit(basis2, reloaded, ks, 3, &co, &model) == MAGIC_OK);
  CHECK(magic_model_num_clusters(model) == 2);
  CHECK(magic_model_num_patients(model) == 40);
  const int predict_k = magic_model_predict_scale(model);
  CHECK((predict_k == 12 || predict_k == 16 || predict_k == 20));
  std::vector<int> subtypes(40);
  REQUIRE(magic_model_consensus(model, subtypes.data(), subtypes.size()) == MAGIC_OK);
  for (int s : subtypes) CHECK((s == 0 || s == 1));
  REQUIRE(magic_model_save(model, (dir / "model").c_str()) == MAGIC_OK);
  magic_model* model2 = nullptr;
  REQUIRE(magic_model_load((dir / "model").c_str(), &model2) == MAGIC_OK);
  std::vector<int> subtypes2(40);
  REQUIRE(magic_model_consensus(model2, subtypes2.data(), subtypes2.size()) == MAGIC_OK);
  CHECK(subtypes2 == subtypes);

  magic_stats* stats = nullptr;
  REQUIRE(magic_stats_run(basis2, model2, 0.05, 0, &stats) == MAGIC_OK);
  CHECK(magic_stats_num_rows(stats) == 96);
  CHECK(magic_stats_survivors(stats, 0) >= 0);
  CHECK(magic_stats_survivors(stats, 7) < 0);
  REQUIRE(magic_stats_save(stats, (dir / "stats.csv").c_str()) == MAGIC_OK);
  CHECK(count_lines(dir / "stats.csv") == 97);
  REQUIRE(magic_mds_save(basis2, model2, 2, (dir / "mds.csv").c_str()) == MAGIC_OK);
  CHECK(count_lines(dir / "mds.csv") == 81);

  magic_prediction* pred = nullptr;
  REQUIRE(magic_predict(model2, basis2, reloaded, &pred) == MAGIC_OK);
  CHECK(magic_prediction_num_subjects(pred) == 80);
  double ba = 0.0;
  REQUIRE(magic_prediction_balanced_accuracy(pred, reloaded, &ba) == MAGIC_OK);
  CHECK(ba >= 0.8);
  REQUIRE(magic_prediction_save(pred, (dir / "pred.csv").c_str()) == MAGIC_OK);
  {
    std::ifstream in(dir / "pred.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "participant_id,predicted_label,subtype,score_1,score_2");
  }
  CHECK(count_lines(dir / "pred.csv") == 81);

  double split_ba = 0.0;
  CHECK(magic_random_split_balanced_accuracy(model2, basis2, reloaded, 30, 10, 0.25, 1, &split_ba) == MAGIC_OK);
  CHECK((split_ba >= 0.0 && split_ba <= 1.0));
  CHECK(magic_random_split_balanced_accuracy(model2, basis2, reloaded, 30, 5, 0.25, 1, &split_ba) ==
        MAGIC_ERR_INVALID_ARGUMENT);

  const int cs[] = {1, 2};
  magic_stability_options so;
  magic_stability_options_init(&so);
  so.repetitions = 3;
  so.restarts = 2;
  magic_stability* report = nullptr;
  REQUIRE(magic_stability_run(basis2, reloaded, cs, 2, ks, 3, &so, &report) == MAGIC_OK);
  int chosen = 0;
  REQUIRE(magic_stability_select(report, ks, 3, &chosen) == MAGIC_OK);
  CHECK((chosen == 1 || chosen == 2));
  REQUIRE(magic_stability_save(report, (dir / "s.json").c_str(), (dir / "s.csv").c_str()) == MAGIC_OK);
  CHECK(count_lines(dir / "s.csv") == 7);

  magic_stability_free(report);
  magic_prediction_free(pred);
  magic_stats_free(stats);
  magic_model_free(model2);
  magic_model_free(model);
  magic_basis_free(basis2);
  magic_basis_free(basis);
  magic_dataset_free(reloaded);
  magic_truth_free(truth);
  magic_dataset_free(ds);
  fs::remove_all(dir);
}
