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

#include <cmath>
#include <filesystem>
#include <random>

#include <doctest.h>

#include "magic/dataset.hpp"
#include "magic/error.hpp"
#include "magic/polytope.hpp"
#include "magic/selection.hpp"
#include "oracles.hpp"

using namespace magic;

namespace {

struct Problem {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

Problem random_problem(int n, int d, double shift, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Problem p;
  p.x.resize(n, d);
  for (int i = 0; i < n; ++i) {
    const int y = i % 2 ? kPatient : kControl;
    p.y.push_back(y);
    for (int j = 0; j < d; ++j) p.x(i, j) = normal(rng) + (j == 0 ? shift * y : 0.0);
  }
  return p;
}

PolytopeModel identity_model(const std::vector<Hyperplane>& planes) {
  PolytopeModel m;
  m.hyperplanes = planes;
  const auto d = planes.front().weights.size();
  m.scaler.mean = Eigen::VectorXd::Zero(d);
  m.scaler.scale = Eigen::VectorXd::Ones(d);
  m.membership.c = static_cast<int>(planes.size());
  return m;
}

Hyperplane plane(double w0, double w1, double b) {
  Hyperplane h;
  h.weights = Eigen::Vector2d(w0, w1);
  h.bias = b;
  return h;
}

}  // namespace

TEST_CASE("svm: separable 1-D pair is classified with a full margin") {
  Eigen::MatrixXd x(2, 1);
  x << -2, 2;
  SvmOptions o;
  o.reg_c = 100.0;
  const Hyperplane h = fit_weighted_linear_svm(x, {-1, 1}, Eigen::VectorXd::Ones(2), o);
  CHECK(h.score(x.row(0).transpose()) <= -1.0 + 1e-3);
  CHECK(h.score(x.row(1).transpose()) >= 1.0 - 1e-3);
  CHECK(h.weights(0) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(std::abs(h.bias) < 1e-4);
}

TEST_CASE("svm: zero-weight samples are the same as omitted samples") {
  const Problem p = random_problem(40, 3, 1.0, 3);
  Eigen::VectorXd s = Eigen::VectorXd::Ones(40);
  s(5) = s(12) = s(31) = 0.0;
  const Hyperplane with_zero = fit_weighted_linear_svm(p.x, p.y, s);

  Eigen::MatrixXd kept(37, 3);
  std::vector<int> y;
  for (int i = 0, r = 0; i < 40; ++i)
    if (s(i) > 0) {
      kept.row(r++) = p.x.row(i);
      y.push_back(p.y[static_cast<std::size_t>(i)]);
    }
  const Hyperplane omitted = fit_weighted_linear_svm(kept, y, Eigen::VectorXd::Ones(37));
  CHECK(with_zero.weights == omitted.weights);
  CHECK(with_zero.bias == omitted.bias);
}

TEST_CASE("svm: XOR cannot be separated by a line") {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 1, 1, 0, 1, 1, 0;
  const std::vector<int> y{-1, -1, 1, 1};
  SvmOptions o;
  o.reg_c = 10.0;
  const Hyperplane h = fit_weighted_linear_svm(x, y, Eigen::VectorXd::Ones(4), o);
  int correct = 0;
  for (int i = 0; i < 4; ++i) correct += (h.score(x.row(i).transpose()) > 0) == (y[static_cast<std::size_t>(i)] > 0);
  CHECK(correct <= 3);

  // No line on a coarse grid gets all four right either.
  bool any_perfect = false;
  for (double a = -3; a <= 3; a += 0.25)
    for (double b = -3; b <= 3; b += 0.25)
      for (double c = -3; c <= 3; c += 0.25) {
        int ok = 0;
        for (int i = 0; i < 4; ++i) ok += (a * x(i, 0) + b * x(i, 1) + c > 0) == (y[static_cast<std::size_t>(i)] > 0);
        any_perfect = any_perfect || ok == 4;
      }
  CHECK_FALSE(any_perfect);
}

TEST_CASE("svm: solution is a minimum of the weighted primal") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Problem p = random_problem(60, 4, 0.7, 40 + seed);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 2.0);
    Eigen::VectorXd s(60);
    for (Eigen::Index i = 0; i < 60; ++i) s(i) = unif(rng);
    SvmOptions o;
    o.reg_c = 0.5;
    o.tol = 1e-8;
    const Hyperplane h = fit_weighted_linear_svm(p.x, p.y, s, o);
    const double best = svm_primal_objective(h, p.x, p.y, s, o.reg_c);

    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      Hyperplane q = h;
      const double step = trial < 100 ? 1e-2 : 1e-4;
      for (Eigen::Index j = 0; j < 4; ++j) q.weights(j) += step * normal(rng);
      q.bias += step * normal(rng);
      CHECK(svm_primal_objective(q, p.x, p.y, s, o.reg_c) >= best - 1e-6 * best);
    }
  }
}

TEST_CASE("svm: primal objective by hand") {
  Eigen::MatrixXd x(3, 1);
  x << 1, -1, 0;
  const Hyperplane h = [] {
    Hyperplane q;
    q.weights = Eigen::VectorXd::Constant(1, 2.0);
    q.bias = 0.0;
    return q;
  }();
  // margins 2, 2, 0 -> hinge 0, 0, 1; 0.5*4 + 0.25*(3*1) = 2.75
  CHECK(svm_primal_objective(h, x, {1, -1, 1}, Eigen::Vector3d(1, 1, 3), 0.25) == doctest::Approx(2.75));
}

TEST_CASE("svm: input validation") {
  const Problem p = random_problem(10, 2, 1.0, 1);
  Eigen::VectorXd s = Eigen::VectorXd::Ones(10);
  for (int i = 0; i < 10; ++i)
    if (p.y[static_cast<std::size_t>(i)] == kPatient) s(i) = 0.0;
  CHECK_THROWS_AS(fit_weighted_linear_svm(p.x, p.y, s), Error);
  Eigen::MatrixXd bad = p.x;
  bad(3, 1) = std::nan("");
  CHECK_THROWS_AS(fit_weighted_linear_svm(bad, p.y, Eigen::VectorXd::Ones(10)), Error);
  CHECK_THROWS_AS(fit_weighted_linear_svm(p.x, p.y, Eigen::VectorXd::Ones(9)), Error);
}

TEST_CASE("polytope: scaler standardizes with population spread") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5;
  const Scaler s = Scaler::fit(x);
  CHECK(s.mean(0) == doctest::Approx(2.5));
  CHECK(s.scale(0) == doctest::Approx(std::sqrt(1.25)));
  CHECK(s.scale(1) == 1.0);
  const Eigen::MatrixXd z = s.transform(x);
  CHECK(z.col(1).isZero(0.0));
  CHECK(z.col(0).mean() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("polytope: initial membership") {
  const oracle::Blobs blobs = oracle::planted_blobs(0, 30, 2, 3, 10.0, 5);
  const Membership one = init_membership(blobs.features, 1, InitStrategy::KMeans, 1);
  CHECK(one.assignments == std::vector<int>(60, 0));

  const Membership r1 = init_membership(blobs.features, 3, InitStrategy::Random, 9);
  const Membership r2 = init_membership(blobs.features, 3, InitStrategy::Random, 9);
  CHECK(r1 == r2);
  for (std::size_t size : r1.cluster_sizes()) CHECK(size >= 1);

  const Membership km = init_membership(blobs.features, 2, InitStrategy::KMeans, 2);
  CHECK(adjusted_rand_index(km.assignments, blobs.truth) == doctest::Approx(1.0));
  CHECK_THROWS_AS(init_membership(blobs.features.topRows(2), 3, InitStrategy::KMeans, 0), Error);
}

TEST_CASE("polytope: membership is the argmax face, ties to the lowest index") {
  const PolytopeModel m = identity_model({plane(1, 0, 0), plane(0, 1, 0)});
  Eigen::MatrixXd pts(3, 2);
  pts << 0.5, -0.2, 0.3, 0.3, -1, 2;
  CHECK(update_membership(m, pts).assignments == std::vector<int>{0, 0, 1});
}

TEST_CASE("polytope: a subject is a patient iff some face scores above zero") {
  PolytopeModel m = identity_model({plane(1, 0, 0), plane(0, 1, 0)});
  Eigen::MatrixXd pts(3, 2);
  pts << -1, -2, 0.5, -3, 0, 0;
  CHECK(predict_label(m, pts) == std::vector<int>{-1, 1, -1});

  // A face that never wins the max cannot change predictions.
  m.hyperplanes.push_back(plane(-1, -1, -100));
  m.membership.c = 3;
  CHECK(predict_label(m, pts) == std::vector<int>{-1, 1, -1});
}

TEST_CASE("polytope: one face is the plain linear SVM on standardized features") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Problem p = random_problem(30, 3, 1.0, 200 + seed);
    const PolytopeModel m = fit_polytope(p.x, p.y, 1, {}, init_membership(p.x.topRows(15), 1, InitStrategy::KMeans, 0));
    const Hyperplane ref =
        fit_weighted_linear_svm(Scaler::fit(p.x).transform(p.x), p.y, Eigen::VectorXd::Ones(30), SvmOptions{});
    CHECK(m.hyperplanes.size() == 1);
    CHECK(m.hyperplanes[0].weights.isApprox(ref.weights, 1e-12));
    CHECK(m.hyperplanes[0].bias == doctest::Approx(ref.bias).epsilon(1e-12));
    CHECK(m.converged);
  }
}

TEST_CASE("polytope: alternation never raises the objective and ends at an argmax") {
  int without_repairs = 0;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const oracle::Blobs b = oracle::planted_blobs(40, 20, 3, 4, seed < 4 ? 2.0 : 6.0, 300 + seed);
    const Membership init = init_membership(b.features.bottomRows(60), 3, InitStrategy::Random, seed);
    const PolytopeModel m = fit_polytope(b.features, b.labels, 3, {}, init);
    CHECK(joint_objective(m, b.features, b.labels) == doctest::Approx(m.joint_objective).epsilon(1e-10));
    if (m.empty_cluster_repairs > 0) continue;
    ++without_repairs;
    for (std::size_t t = 1; t < m.objective_trace.size(); ++t)
      CHECK(m.objective_trace[t] <= m.objective_trace[t - 1] + 1e-12);
    if (m.converged) CHECK(update_membership(m, b.features.bottomRows(60)) == m.membership);
  }
  CHECK(without_repairs >= 2);
}

TEST_CASE("polytope: an emptied cluster is re-seeded with its worst-fitting patient") {
  // Patients only on face 0's side leave face 1 empty after the first pass.
  const oracle::Blobs b = oracle::planted_blobs(30, 20, 1, 2, 5.0, 4);
  Membership init;
  init.c = 2;
  init.assignments.assign(20, 0);
  init.assignments[0] = 1;
  const PolytopeModel m = fit_polytope(b.features, b.labels, 2, {}, init);
  for (std::size_t size : m.membership.cluster_sizes()) CHECK(size >= 1);
}

TEST_CASE("polytope: two planted subtypes are recovered") {
  const oracle::Blobs b = oracle::planted_blobs(60, 30, 2, 4, 4.0, 11);
  const PolytopeModel m = fit_polytope_restarts(b.features, b.labels, 2, {}, 10, InitStrategy::KMeans, 7);
  CHECK(oracle::ari_pair_counting(m.membership.assignments, b.truth) >= 0.9);
  CHECK(balanced_accuracy(b.labels, predict_label(m, b.features)) >= 0.9);

  const PolytopeModel again = fit_polytope_restarts(b.features, b.labels, 2, {}, 10, InitStrategy::KMeans, 7, 3);
  CHECK(again.membership == m.membership);
}

TEST_CASE("polytope: consensus over label sets") {
  const std::vector<int> a{0, 0, 1, 1};
  CHECK(consensus_from_runs({a, a, a}, 2) == a);
  CHECK(consensus_from_runs({{1, 1, 0, 0}}, 2) == std::vector<int>{1, 1, 0, 0});
  CHECK(consensus_from_runs({{0, 0, 1, 1}, {1, 1, 0, 0}, {0, 1, 0, 1}}, 2) == std::vector<int>{0, 0, 1, 1});
  CHECK_THROWS_AS(consensus_from_runs({}, 2), Error);
  CHECK_THROWS_AS(consensus_from_runs({{0, 1}, {0, 1, 1}}, 2), Error);
}

TEST_CASE("polytope: balanced accuracy") {
  CHECK(balanced_accuracy({1, 1, -1, -1}, {1, -1, -1, -1}) == doctest::Approx(0.75));
  CHECK(balanced_accuracy({1, -1, 1}, {1, -1, 1}) == 1.0);
  CHECK(balanced_accuracy({1, -1, 1, -1}, {1, 1, 1, 1}) == 0.5);
  const std::vector<int> t{1, 1, 1, -1, -1}, p{1, -1, 1, 1, -1};
  std::vector<int> nt, np;
  for (std::size_t i = 0; i < t.size(); ++i) {
    nt.push_back(-t[i]);
    np.push_back(-p[i]);
  }
  CHECK(balanced_accuracy(t, p) == doctest::Approx(balanced_accuracy(nt, np)));
  CHECK_THROWS_AS(balanced_accuracy({1, 1}, {1, -1}), Error);
  CHECK_THROWS_AS(balanced_accuracy({1, -1}, {1}), Error);
}

TEST_CASE("polytope: random split baseline") {
  const oracle::Blobs b = oracle::planted_blobs(50, 191, 1, 3, 2.0, 8);
  const PolytopeModel m = fit_random_split_polytope(b.features, b.labels, 134, 57, {}, 4);
  const std::vector<std::size_t> sizes = m.membership.cluster_sizes();
  CHECK(sizes == std::vector<std::size_t>{134, 57});
  CHECK(m.c() == 2);
  CHECK(fit_random_split_polytope(b.features, b.labels, 134, 57, {}, 4).membership == m.membership);
  CHECK_THROWS_AS(fit_random_split_polytope(b.features, b.labels, 191, 0, {}, 4), Error);
  CHECK_THROWS_AS(fit_random_split_polytope(b.features, b.labels, 100, 57, {}, 4), Error);
}

TEST_CASE("polytope: canonical labels follow first appearance") {
  CHECK(canonical_labels({2, 2, 0, 1, 0}) == std::vector<int>{0, 0, 1, 2, 1});
  CHECK(canonical_labels({}).empty());
}

TEST_CASE("polytope: save and load round-trip") {
  const oracle::Blobs b = oracle::planted_blobs(20, 10, 2, 3, 3.0, 2);
  const PolytopeModel m = fit_polytope_restarts(b.features, b.labels, 2, {}, 3, InitStrategy::KMeans, 1);
  std::vector<std::string> ids;
  for (int i = 0; i < 20; ++i) ids.push_back("P" + std::to_string(i));
  const auto dir = std::filesystem::temp_directory_path() / "magic_polytope_roundtrip";
  std::filesystem::remove_all(dir);
  save_polytope(m, ids, dir);
  std::vector<std::string> loaded_ids;
  const PolytopeModel back = load_polytope(dir, &loaded_ids);
  CHECK(loaded_ids == ids);
  CHECK(back.membership == m.membership);
  CHECK(back.face_scores(b.features).isApprox(m.face_scores(b.features), 1e-14));
  CHECK(predict_label(back, b.features) == predict_label(m, b.features));
  std::filesystem::remove_all(dir);
}
