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

#include <filesystem>
#include <fstream>
#include <random>

#include <doctest.h>
#include <json.hpp>

#include "magic/error.hpp"
#include "magic/selection.hpp"
#include "oracles.hpp"

using namespace magic;

namespace {

// A basis whose loadings at every scale are the given subject features.
MultiScaleBasis basis_from_features(const Eigen::MatrixXd& features, const std::vector<int>& scales) {
  MultiScaleBasis b;
  for (int k : scales) {
    Decomposition d;
    d.scale_k = k;
    d.loadings = features.transpose();
    d.components = Eigen::MatrixXd::Identity(features.cols(), features.cols());
    b.decompositions[k] = d;
    b.scales.push_back(k);
  }
  return b;
}

}  // namespace

TEST_CASE("ari: hand cases") {
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5));
  CHECK(adjusted_rand_index({0, 0, 1, 1, 2}, {0, 0, 1, 1, 2}) == 1.0);
  CHECK(adjusted_rand_index({0, 0, 1, 1, 2}, {7, 7, 3, 3, 5}) == 1.0);
  CHECK(adjusted_rand_index({0, 0, 0}, {0, 0, 0}) == 1.0);
  CHECK(adjusted_rand_index({0, 0, 0}, {0, 1, 2}) == 0.0);
  CHECK(same_partition({1, 1, 0}, {0, 0, 5}));
  CHECK_FALSE(same_partition({1, 1, 0}, {0, 1, 1}));
  CHECK_THROWS_AS(adjusted_rand_index({0, 1}, {0}), Error);
  CHECK_THROWS_AS(adjusted_rand_index({}, {}), Error);
}

TEST_CASE("ari: matches pair counting on random partitions") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 40)(rng);
    const int ku = std::uniform_int_distribution<int>(1, 5)(rng);
    const int kv = std::uniform_int_distribution<int>(1, 5)(rng);
    std::vector<int> u(static_cast<std::size_t>(n)), v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      u[static_cast<std::size_t>(i)] = std::uniform_int_distribution<int>(0, ku - 1)(rng);
      v[static_cast<std::size_t>(i)] = std::uniform_int_distribution<int>(0, kv - 1)(rng);
    }
    CHECK(adjusted_rand_index(u, v) == doctest::Approx(oracle::ari_pair_counting(u, v)).epsilon(1e-12));
  }
}

TEST_CASE("stability: two point masses are perfectly stable") {
  const int n_cn = 20, n_per = 15;
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n_cn + 2 * n_per, 2);
  std::vector<int> labels(static_cast<std::size_t>(n_cn), -1);
  for (int i = 0; i < 2 * n_per; ++i) {
    f(n_cn + i, i < n_per ? 0 : 1) = 10.0;
    labels.push_back(1);
  }
  const MultiScaleBasis basis = basis_from_features(f, {2, 3});
  StabilityOptions o;
  o.c_values = {2};
  o.k_values = {2, 3};
  o.repetitions = 6;
  o.restarts = 3;
  const StabilityReport r = stability_analysis(basis, labels, o);
  CHECK(r.mean_ari.rows() == 1);
  CHECK(r.mean_ari.cols() == 2);
  CHECK(r.mean_ari(0, 0) == doctest::Approx(1.0));
  CHECK(r.mean_ari(0, 1) == doctest::Approx(1.0));
  CHECK(r.std_ari.isZero(1e-12));
}

TEST_CASE("stability: report shape, determinism and thread invariance") {
  const oracle::Blobs b = oracle::planted_blobs(30, 15, 2, 3, 3.0, 12);
  const MultiScaleBasis basis = basis_from_features(b.features, {4, 5});
  StabilityOptions o;
  o.c_values = {1, 2, 3};
  o.k_values = {4, 5};
  o.repetitions = 2;
  o.restarts = 2;
  o.seed = 3;
  const StabilityReport r = stability_analysis(basis, b.labels, o);
  CHECK(r.mean_ari.rows() == 3);
  CHECK(r.std_ari.isZero(0.0));  // one pair of repetitions
  CHECK(r.mean_ari(0, 0) == 1.0);  // c=1 is trivially stable
  o.jobs = 3;
  const StabilityReport again = stability_analysis(basis, b.labels, o);
  CHECK(again.mean_ari == r.mean_ari);
}

TEST_CASE("stability: validation") {
  const oracle::Blobs b = oracle::planted_blobs(10, 5, 2, 2, 3.0, 1);
  const MultiScaleBasis basis = basis_from_features(b.features, {2});
  StabilityOptions o;
  o.c_values = {2};
  o.k_values = {2};
  o.repetitions = 1;
  CHECK_THROWS_AS(stability_analysis(basis, b.labels, o), Error);
  o.repetitions = 3;
  o.k_values = {7};
  CHECK_THROWS_AS(stability_analysis(basis, b.labels, o), Error);
  o.k_values = {2};
  o.refit_basis = true;
  CHECK_THROWS_AS(stability_analysis(basis, b.labels, o), Error);
}

TEST_CASE("select: best mean ARI over the K subset, ties to the smallest c") {
  StabilityReport r;
  r.c_values = {2, 3, 4};
  r.k_values = {25, 30};
  r.mean_ari.resize(3, 2);
  r.mean_ari << 0.9, 0.7,  //
      0.6, 0.9,            //
      0.8, 0.8;
  r.std_ari = Eigen::MatrixXd::Zero(3, 2);
  CHECK(select_num_clusters(r, {25}) == 2);
  CHECK(select_num_clusters(r, {30}) == 3);
  CHECK(select_num_clusters(r, {25, 30}) == 2);  // 0.8 ties with c=4
  r.c_values = {4, 3, 2};
  CHECK(select_num_clusters(r, {25, 30}) == 2);
  CHECK_THROWS_AS(select_num_clusters(r, {}), Error);
  CHECK_THROWS_AS(select_num_clusters(r, {35}), Error);
}

TEST_CASE("select: report files") {
  StabilityReport r;
  r.c_values = {2, 3};
  r.k_values = {10};
  r.mean_ari = Eigen::Vector2d(0.5, 0.25);
  r.std_ari = Eigen::Vector2d(0.1, 0.0);
  r.repetitions = 4;
  r.test_fraction = 0.2;
  const auto dir = std::filesystem::temp_directory_path() / "magic_stability_files";
  std::filesystem::create_directories(dir);
  save_stability_report(r, dir / "s.json", dir / "s.csv");
  std::ifstream js(dir / "s.json");
  const nlohmann::json j = nlohmann::json::parse(js);
  CHECK(j["c_values"] == nlohmann::json({2, 3}));
  CHECK(j["repetitions"] == 4);
  std::ifstream csv(dir / "s.csv");
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == 3);
  std::filesystem::remove_all(dir);
}
