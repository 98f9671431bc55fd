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

#include <cstring>
#include <random>
#include <set>

#include <doctest.h>

#include "magic/csv.hpp"
#include "magic/dataset.hpp"
#include "magic/error.hpp"

using namespace magic;

namespace {

std::string error_of(const std::string& text, const DatasetSchema& schema = {}) {
  try {
    parse_dataset(text, schema, "in.csv");
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("csv: quoted fields, embedded separators and BOM") {
  const auto t = csv::parse("\xEF\xBB\xBF" "a,b\n\"x,1\",\"say \"\"hi\"\"\"\n", "t.csv");
  REQUIRE(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][0] == "x,1");
  CHECK(t.rows[0][1] == "say \"hi\"");
  CHECK(t.line_numbers[0] == 2);
}

TEST_CASE("csv: ragged row is a parse error with its line") {
  try {
    csv::parse("a,b\n1,2\n3\n", "r.csv");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("r.csv:3") != std::string::npos);
  }
}

TEST_CASE("csv: number formatting round-trips bit for bit") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double v = unif(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    const double back = csv::to_double(csv::format(v), "x");
    CHECK(std::memcmp(&v, &back, sizeof v) == 0);
  }
  CHECK(csv::to_double(csv::format(0.1), "x") == 0.1);
  CHECK_THROWS_AS(csv::to_double("1.5x", "x"), Error);
  CHECK(csv::escape("a,b") == "\"a,b\"");
}

TEST_CASE("load_dataset: three subjects, two features") {
  const Dataset ds = parse_dataset("participant_id,diagnosis,f1,f2\na,-1,1,2\nb,-1,3,4\nc,1,5,6\n");
  CHECK(ds.num_subjects() == 3);
  CHECK(ds.num_features() == 2);
  CHECK(ds.labels == std::vector<int>{-1, -1, 1});
  CHECK(ds.features(2, 1) == 6.0);
  CHECK(ds.covariates.cols() == 0);
}

TEST_CASE("load_dataset: covariate columns are separated from features") {
  const Dataset ds = parse_dataset("participant_id,diagnosis,cov_age,f1,cov_sex\na,-1,60,1,0\nb,1,70,2,1\n");
  CHECK(ds.covariate_names == std::vector<std::string>{"cov_age", "cov_sex"});
  CHECK(ds.feature_names == std::vector<std::string>{"f1"});
  CHECK(ds.covariates(1, 0) == 70.0);
  CHECK(ds.covariates(1, 1) == 1.0);
}

TEST_CASE("load_dataset: contract violations are descriptive parse errors") {
  CHECK(error_of("participant_id,diagnosis,f1\na,0,1\nb,1,2\n").find("invalid label") != std::string::npos);
  CHECK(error_of("participant_id,diagnosis,f1\na,-1,1\na,1,2\n").find("duplicate subject id") != std::string::npos);
  CHECK(error_of("participant_id,diagnosis,cov_age\na,-1,1\nb,1,2\n").find("zero features") != std::string::npos);
  CHECK(error_of("participant_id,diagnosis,f1\na,-1,1\nb,1,oops\n").find("in.csv:3") != std::string::npos);
  CHECK(error_of("participant_id,diagnosis,f1\na,-1,1\nb,-1,2\n").find("patient") != std::string::npos);

  DatasetSchema strict;
  strict.require_non_negative = true;
  const std::string msg = error_of("participant_id,diagnosis,f1,f2\na,-1,1,2\nb,1,3,-0.5\n", strict);
  CHECK(msg.find("negative feature value") != std::string::npos);
  CHECK(msg.find("f2") != std::string::npos);
  CHECK(msg.find(":3") != std::string::npos);
}

TEST_CASE("load_dataset: unlabeled input when labels are optional") {
  DatasetSchema schema;
  schema.labels_required = false;
  schema.require_both_classes = false;
  const Dataset ds = parse_dataset("participant_id,f1\nx,1\ny,2\n", schema);
  CHECK_FALSE(ds.has_labels());
  CHECK(ds.num_subjects() == 2);
}

TEST_CASE("save -> load round-trips identical values") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Dataset ds;
  for (int i = 0; i < 12; ++i) {
    ds.subject_ids.push_back("s" + std::to_string(i));
    ds.labels.push_back(i % 3 == 0 ? kPatient : kControl);
  }
  ds.feature_names = {"a", "b,quoted", "c"};
  ds.covariate_names = {"cov_age"};
  ds.features.resize(12, 3);
  ds.covariates.resize(12, 1);
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 3; ++j) ds.features(i, j) = unif(rng) / 3.0;
    ds.covariates(i, 0) = 50 + 30 * unif(rng);
  }
  const Dataset back = parse_dataset(format_dataset(ds));
  CHECK(back.subject_ids == ds.subject_ids);
  CHECK(back.labels == ds.labels);
  CHECK(back.feature_names == ds.feature_names);
  CHECK(back.features == ds.features);
  CHECK(back.covariates == ds.covariates);
}

TEST_CASE("residualize: exact linear age effect is removed, patient offset kept") {
  std::string text = "participant_id,diagnosis,cov_age,f\n";
  const std::vector<double> ages{55, 60, 66, 71, 80, 62, 75};
  for (std::size_t i = 0; i < ages.size(); ++i) {
    const bool patient = i >= 5;
    const double value = 2.0 * ages[i] + (patient ? 5.0 : 0.0);
    text += "s" + std::to_string(i) + "," + (patient ? "1" : "-1") + "," + csv::format(ages[i]) + "," +
            csv::format(value) + "\n";
  }
  const Dataset ds = parse_dataset(text);
  const auto [out, model] = residualize_covariates(ds);
  const double mean_cn = 2.0 * (55 + 60 + 66 + 71 + 80) / 5.0;
  CHECK(model.slopes(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  for (int i = 0; i < 5; ++i) CHECK(out.features(i, 0) == doctest::Approx(mean_cn).epsilon(1e-12));
  for (int i = 5; i < 7; ++i) CHECK(out.features(i, 0) == doctest::Approx(mean_cn + 5.0).epsilon(1e-12));
}

TEST_CASE("residualize: two-point hand regression") {
  const Dataset ds = parse_dataset("participant_id,diagnosis,cov_age,f\nc1,-1,60,1.0\nc2,-1,80,3.0\np,1,70,10\n");
  const auto [out, model] = residualize_covariates(ds);
  CHECK(model.slopes(0, 0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(model.covariate_means_cn(0) == doctest::Approx(70.0));
  CHECK(out.features(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(out.features(1, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(out.features(2, 0) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("residualize: no covariates is the identity") {
  const Dataset ds = parse_dataset("participant_id,diagnosis,f\na,-1,1\nb,-1,2\nc,1,3\n");
  const auto [out, model] = residualize_covariates(ds);
  CHECK(out.features == ds.features);
  CHECK(model.slopes.cols() == 0);
  CHECK(model.empty());
}

TEST_CASE("residualize: collinear covariates are named") {
  const Dataset ds = parse_dataset(
      "participant_id,diagnosis,cov_a,cov_b,f\nc1,-1,1,2,1\nc2,-1,2,4,2\nc3,-1,3,6,2\np,1,1,1,1\n");
  try {
    residualize_covariates(ds);
    FAIL("expected a rank error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("cov_b") != std::string::npos);
  }
}

TEST_CASE("residualize: refitting on corrected controls finds no slope") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::uniform_real_distribution<double> age(55, 85), sex(0, 1);
  Dataset ds;
  ds.feature_names = {"f1", "f2", "f3"};
  ds.covariate_names = {"cov_age", "cov_sex"};
  ds.features.resize(60, 3);
  ds.covariates.resize(60, 2);
  for (int i = 0; i < 60; ++i) {
    ds.subject_ids.push_back("s" + std::to_string(i));
    ds.labels.push_back(i < 40 ? kControl : kPatient);
    ds.covariates(i, 0) = age(rng);
    ds.covariates(i, 1) = sex(rng) < 0.5 ? 0 : 1;
    for (int j = 0; j < 3; ++j)
      ds.features(i, j) = 10 + 0.05 * (j + 1) * ds.covariates(i, 0) - 0.3 * ds.covariates(i, 1) + noise(rng);
  }
  const auto [out, model] = residualize_covariates(ds);
  // Independent normal-equation fit on the corrected controls.
  Eigen::MatrixXd design(40, 3);
  Eigen::MatrixXd y(40, 3);
  for (int i = 0; i < 40; ++i) {
    design.row(i) << 1.0, ds.covariates(i, 0), ds.covariates(i, 1);
    y.row(i) = out.features.row(i);
  }
  const Eigen::MatrixXd beta = (design.transpose() * design).ldlt().solve(design.transpose() * y);
  CHECK(beta.bottomRows(2).cwiseAbs().maxCoeff() < 1e-8 * 10);
  // Residual correlation with each covariate on controls.
  for (int j = 0; j < 3; ++j)
    for (int q = 0; q < 2; ++q) {
      const Eigen::VectorXd a = y.col(j).array() - y.col(j).mean();
      const Eigen::VectorXd b = design.col(q + 1).array() - design.col(q + 1).mean();
      CHECK(std::abs(a.dot(b) / (a.norm() * b.norm())) < 1e-6);
    }
  // Control means are preserved.
  for (int j = 0; j < 3; ++j)
    CHECK(out.features.col(j).head(40).mean() == doctest::Approx(ds.features.col(j).head(40).mean()).epsilon(1e-12));
}

TEST_CASE("stratified split: exact proportions, determinism, partition") {
  std::vector<int> labels(20, kControl);
  for (int i = 10; i < 20; ++i) labels[static_cast<std::size_t>(i)] = kPatient;
  const Split s = stratified_holdout_split(labels, 0.2, 5);
  int cn = 0, pt = 0;
  for (auto i : s.test) (labels[i] == kControl ? cn : pt)++;
  CHECK(cn == 2);
  CHECK(pt == 2);
  const Split again = stratified_holdout_split(labels, 0.2, 5);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 20);
  CHECK(s.train.size() + s.test.size() == 20);
}

TEST_CASE("stratified split: cohort of 228 controls and 191 patients") {
  std::vector<int> labels(228, kControl);
  labels.insert(labels.end(), 191, kPatient);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Split s = stratified_holdout_split(labels, 0.2, seed);
    int cn = 0, pt = 0;
    for (auto i : s.test) (labels[i] == kControl ? cn : pt)++;
    CHECK((cn == 45 || cn == 46));
    CHECK((pt == 38 || pt == 39));
  }
}

TEST_CASE("stratified split: a fraction that empties a side is rejected") {
  std::vector<int> labels{kControl, kControl, kControl, kPatient, kPatient, kPatient};
  CHECK_THROWS_AS(stratified_holdout_split(labels, 0.05, 1), Error);
  CHECK_THROWS_AS(stratified_holdout_split(labels, 0.95, 1), Error);
  CHECK_THROWS_AS(stratified_holdout_split(labels, 0.0, 1), Error);
}
