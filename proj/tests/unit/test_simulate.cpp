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

#include <doctest.h>

#include "magic/error.hpp"
#include "magic/simulate.hpp"

using namespace magic;

TEST_CASE("simulate: noiseless cohort has exact 10% loss inside each mask") {
  SimConfig cfg;
  cfg.n_cn = 10;
  cfg.n_pt = 10;
  cfg.noise_sd = 0.0;
  cfg.subject_sd = 0.0;
  cfg.bump_amplitude = 0.0;
  cfg.age_slope = 0.0;
  const auto [ds, truth] = generate_cohort(cfg);
  REQUIRE(ds.features.rows() == 20);
  REQUIRE(ds.features.cols() == 400);
  for (Eigen::Index i = 0; i < 10; ++i) CHECK((ds.features.row(i).array() == 1.0).all());
  for (std::size_t p = 0; p < 10; ++p) {
    const Mask& m = truth.masks[static_cast<std::size_t>(truth.mask_of_patient[p])];
    for (int f = 0; f < 400; ++f)
      CHECK(ds.features(10 + static_cast<Eigen::Index>(p), f) == (m.cells[static_cast<std::size_t>(f)] ? 0.9 : 1.0));
  }
}

TEST_CASE("simulate: patients are split evenly between the masks") {
  const auto [ds, truth] = generate_cohort(SimConfig{});
  std::vector<int> counts(truth.masks.size(), 0);
  for (int m : truth.mask_of_patient) ++counts[static_cast<std::size_t>(m)];
  CHECK(counts == std::vector<int>{50, 50});
  CHECK(ds.num_subjects() == 200);
  CHECK(ds.patient_indices().size() == 100);
  CHECK(ds.covariate_names == std::vector<std::string>{"cov_age"});
  CHECK(ds.features.minCoeff() >= 0.0);
  CHECK(truth.patient_ids.front() == "PT001");
  CHECK(ds.subject_ids.front() == "CN001");
}

TEST_CASE("simulate: deterministic per seed") {
  SimConfig cfg;
  cfg.n_cn = 20;
  cfg.n_pt = 20;
  cfg.seed = 4;
  const auto a = generate_cohort(cfg);
  const auto b = generate_cohort(cfg);
  CHECK(a.first.features == b.first.features);
  CHECK(a.first.covariates == b.first.covariates);
  CHECK(a.second.mask_of_patient == b.second.mask_of_patient);
  cfg.seed = 5;
  CHECK(generate_cohort(cfg).first.features != a.first.features);
}

TEST_CASE("simulate: default masks") {
  const std::vector<Mask> m = default_masks(20, 20);
  REQUIRE(m.size() == 2);
  CHECK(m[0].name == "global");
  CHECK(m[1].name == "focal");
  CHECK(m[0].count() >= 160);
  CHECK(m[0].count() <= 200);
  CHECK(m[1].count() <= 20);
  CHECK(m[1].count() >= 1);
  for (std::size_t i = 0; i < m[0].cells.size(); ++i) CHECK_FALSE((m[0].cells[i] && m[1].cells[i]));
  CHECK(default_masks(8, 8)[1].count() >= 1);
  CHECK_THROWS_AS(default_masks(7, 20), Error);
}

TEST_CASE("simulate: configuration checks") {
  SimConfig cfg;
  cfg.atrophy_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.atrophy_fraction = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK_NOTHROW(cfg.validate(true));
  cfg.atrophy_fraction = 0.1;
  cfg.n_pt = 3;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.n_pt = 10;
  cfg.noise_sd = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
