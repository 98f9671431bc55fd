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

#include "magic/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "magic/dataset.hpp"
#include "magic/error.hpp"
#include "magic/parallel.hpp"
#include "magic/random.hpp"

namespace magic {

Scaler Scaler::fit(const Eigen::MatrixXd& features) {
  require(features.rows() > 0, ErrorKind::InvalidArgument, "cannot fit a scaler on zero rows");
  Scaler s;
  s.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
  s.scale = (centered.colwise().squaredNorm() / static_cast<double>(features.rows())).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j)
    if (!(s.scale(j) > 1e-12 * std::max(1.0, std::abs(s.mean(j))))) s.scale(j) = 1.0;
  return s;
}

Eigen::MatrixXd Scaler::transform(const Eigen::MatrixXd& features) const {
  require(features.cols() == mean.size(), ErrorKind::Dimension,
          "expected " + std::to_string(mean.size()) + " features, got " + std::to_string(features.cols()));
  return (features.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

std::vector<std::size_t> Membership::cluster_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(c), 0);
  for (int a : assignments) ++sizes.at(static_cast<std::size_t>(a));
  return sizes;
}

Eigen::MatrixXd PolytopeModel::face_scores(const Eigen::MatrixXd& features) const {
  const Eigen::MatrixXd z = scaler.transform(features);
  Eigen::MatrixXd scores(z.rows(), c());
  for (int j = 0; j < c(); ++j)
    scores.col(j) = (z * hyperplanes[static_cast<std::size_t>(j)].weights).array() +
                    hyperplanes[static_cast<std::size_t>(j)].bias;
  return scores;
}

std::vector<std::size_t> patient_rows(const std::vector<int>& labels) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == kPatient) rows.push_back(i);
  return rows;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

std::vector<int> argmax_faces(const Eigen::MatrixXd& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < scores.cols(); ++j)
      if (scores(i, j) > scores(i, best)) best = static_cast<int>(j);
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

// Gives every empty cluster the patient (from a cluster with > 1 member)
// whose best face score is lowest.
int repair_empty_clusters(Membership& m, const Eigen::MatrixXd* patient_scores) {
  std::vector<std::size_t> sizes = m.cluster_sizes();
  int moved = 0;
  for (int j = 0; j < m.c; ++j) {
    if (sizes[static_cast<std::size_t>(j)] > 0) continue;
    std::ptrdiff_t chosen = -1;
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < m.assignments.size(); ++p) {
      if (sizes[static_cast<std::size_t>(m.assignments[p])] <= 1) continue;
      const double best = patient_scores ? patient_scores->row(static_cast<Eigen::Index>(p)).maxCoeff()
                                         : -static_cast<double>(p);
      if (best < lowest) {
        lowest = best;
        chosen = static_cast<std::ptrdiff_t>(p);
      }
    }
    require(chosen >= 0, ErrorKind::InvalidArgument, "not enough patients to populate every cluster");
    --sizes[static_cast<std::size_t>(m.assignments[static_cast<std::size_t>(chosen)])];
    m.assignments[static_cast<std::size_t>(chosen)] = j;
    ++sizes[static_cast<std::size_t>(j)];
    ++moved;
  }
  return moved;
}

void check_problem(const Eigen::MatrixXd& features, const std::vector<int>& labels, int c) {
  require(features.rows() == static_cast<Eigen::Index>(labels.size()), ErrorKind::Dimension,
          "features and labels disagree in length");
  require(c >= 1, ErrorKind::InvalidArgument, "number of clusters must be >= 1");
  std::size_t n_pt = 0, n_cn = 0;
  for (int y : labels) {
    require(y == kPatient || y == kControl, ErrorKind::InvalidArgument, "labels must be -1 or +1");
    (y == kPatient ? n_pt : n_cn) += 1;
  }
  require(n_pt > 0 && n_cn > 0, ErrorKind::InvalidArgument, "polytope fitting needs both controls and patients");
  require(static_cast<std::size_t>(c) <= n_pt, ErrorKind::InvalidArgument,
          "c=" + std::to_string(c) + " exceeds the number of patients (" + std::to_string(n_pt) + ")");
  require(features.allFinite(), ErrorKind::InvalidArgument, "features contain non-finite values");
}

Eigen::VectorXd face_weights(const std::vector<int>& labels, const Membership& m, int face) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(labels.size()));
  std::size_t p = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kPatient) {
      s(static_cast<Eigen::Index>(i)) = m.assignments[p++] == face ? 1.0 : 0.0;
    } else {
      s(static_cast<Eigen::Index>(i)) = 1.0 / m.c;
    }
  }
  return s;
}

// Lloyd iterations from a k-means++ start.
std::vector<int> kmeans(const Eigen::MatrixXd& x, int c, Rng& rng) {
  const Eigen::Index n = x.rows();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd centers(c, x.cols());
  std::vector<bool> taken(static_cast<std::size_t>(n), false);
  auto first = static_cast<Eigen::Index>(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
  centers.row(0) = x.row(first);
  taken[static_cast<std::size_t>(first)] = true;
  Eigen::VectorXd d2 = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int k = 1; k < c; ++k) {
    const double total = d2.sum();
    Eigen::Index pick = -1;
    if (total > 0.0) {
      double target = unif(rng) * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= d2(i);
        if (target < 0.0 && d2(i) > 0.0) {
          pick = i;
          break;
        }
      }
      if (pick < 0)
        for (Eigen::Index i = n - 1; i >= 0; --i)
          if (d2(i) > 0.0) {
            pick = i;
            break;
          }
    } else {
      for (Eigen::Index i = 0; i < n; ++i)
        if (!taken[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
    }
    taken[static_cast<std::size_t>(pick)] = true;
    centers.row(k) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centers.row(k)).rowwise().squaredNorm());
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (x.row(i) - centers.row(0)).squaredNorm();
      for (int k = 1; k < c; ++k) {
        const double d = (x.row(i) - centers.row(k)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(c, x.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(c);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += x.row(i);
      counts(assign[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (int k = 0; k < c; ++k)
      if (counts(k) > 0) centers.row(k) = sums.row(k) / counts(k);
  }
  return assign;
}

}  // namespace

Membership init_membership(const Eigen::MatrixXd& patient_features, int c, InitStrategy strategy, std::uint64_t seed) {
  const auto p = static_cast<std::size_t>(patient_features.rows());
  require(c >= 1, ErrorKind::InvalidArgument, "number of clusters must be >= 1");
  require(static_cast<std::size_t>(c) <= p, ErrorKind::InvalidArgument,
          "c=" + std::to_string(c) + " exceeds the number of patients (" + std::to_string(p) + ")");
  Membership m;
  m.c = c;
  if (c == 1) {
    m.assignments.assign(p, 0);
    return m;
  }
  Rng rng(seed);
  if (strategy == InitStrategy::Random) {
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    m.assignments.assign(p, 0);
    std::uniform_int_distribution<int> pick(0, c - 1);
    for (std::size_t r = 0; r < p; ++r) m.assignments[order[r]] = r < static_cast<std::size_t>(c) ? static_cast<int>(r) : pick(rng);
  } else {
    m.assignments = kmeans(patient_features, c, rng);
    repair_empty_clusters(m, nullptr);
  }
  return m;
}

Membership update_membership(const PolytopeModel& model, const Eigen::MatrixXd& patient_features) {
  Membership m;
  m.c = model.c();
  m.assignments = argmax_faces(model.face_scores(patient_features));
  return m;
}

PolytopeModel fit_polytope(const Eigen::MatrixXd& features, const std::vector<int>& labels, int c,
                           const PolytopeOptions& options, const Membership& init) {
  check_problem(features, labels, c);
  const std::vector<std::size_t> pt = patient_rows(labels);
  require(init.c == c && init.assignments.size() == pt.size(), ErrorKind::InvalidArgument,
          "initial membership does not match the patients or c");
  for (int a : init.assignments)
    require(a >= 0 && a < c, ErrorKind::InvalidArgument, "initial membership has an out-of-range cluster id");
  require(options.max_alternations >= 1, ErrorKind::InvalidArgument, "max_alternations must be >= 1");

  PolytopeModel model;
  model.scaler = Scaler::fit(features);
  model.scale_k = static_cast<int>(features.cols());
  model.reg_c = options.svm.reg_c;
  model.hyperplanes.resize(static_cast<std::size_t>(c));
  const Eigen::MatrixXd z = model.scaler.transform(features);
  const Eigen::MatrixXd z_pt = take_rows(z, pt);

  Membership current = init;
  repair_empty_clusters(current, nullptr);

  for (int t = 0; t < options.max_alternations; ++t) {
    double objective = 0.0;
    for (int j = 0; j < c; ++j) {
      const Eigen::VectorXd s = face_weights(labels, current, j);
      Hyperplane plane = fit_weighted_linear_svm(z, labels, s, options.svm);
      double face_obj = svm_primal_objective(plane, z, labels, s, options.svm.reg_c);
      if (t > 0) {
        const Hyperplane& previous = model.hyperplanes[static_cast<std::size_t>(j)];
        const double prev_obj = svm_primal_objective(previous, z, labels, s, options.svm.reg_c);
        if (prev_obj < face_obj) {
          plane = previous;
          face_obj = prev_obj;
        }
      }
      model.hyperplanes[static_cast<std::size_t>(j)] = std::move(plane);
      objective += face_obj;
    }
    model.objective_trace.push_back(objective);
    model.joint_objective = objective;
    model.n_alternations = t + 1;

    Eigen::MatrixXd scores(z_pt.rows(), c);
    for (int j = 0; j < c; ++j)
      scores.col(j) = (z_pt * model.hyperplanes[static_cast<std::size_t>(j)].weights).array() +
                      model.hyperplanes[static_cast<std::size_t>(j)].bias;
    Membership next;
    next.c = c;
    next.assignments = argmax_faces(scores);
    model.empty_cluster_repairs += repair_empty_clusters(next, &scores);
    if (next == current) {
      model.converged = true;
      break;
    }
    current = std::move(next);
  }
  model.membership = std::move(current);
  return model;
}

PolytopeModel fit_polytope_restarts(const Eigen::MatrixXd& features, const std::vector<int>& labels, int c,
                                    const PolytopeOptions& options, int restarts, InitStrategy strategy,
                                    std::uint64_t seed, int jobs) {
  check_problem(features, labels, c);
  require(restarts >= 1, ErrorKind::InvalidArgument, "restarts must be >= 1");
  const std::vector<std::size_t> pt = patient_rows(labels);
  const Eigen::MatrixXd z_pt = take_rows(Scaler::fit(features).transform(features), pt);
  if (c == 1) return fit_polytope(features, labels, c, options, init_membership(z_pt, 1, strategy, seed));

  std::vector<std::vector<int>> runs(static_cast<std::size_t>(restarts));
  parallel_for(runs.size(), jobs, [&](std::size_t r) {
    const Membership init = init_membership(z_pt, c, strategy, derive_seed(seed, {stream::kRestart, r}));
    runs[r] = fit_polytope(features, labels, c, options, init).membership.assignments;
  });
  Membership start;
  start.c = c;
  start.assignments = consensus_from_runs(runs, c);
  return fit_polytope(features, labels, c, options, start);
}

double joint_objective(const PolytopeModel& model, const Eigen::MatrixXd& features, const std::vector<int>& labels) {
  require(features.rows() == static_cast<Eigen::Index>(labels.size()), ErrorKind::Dimension,
          "features and labels disagree in length");
  const Eigen::MatrixXd z = model.scaler.transform(features);
  double total = 0.0;
  for (int j = 0; j < model.c(); ++j)
    total += svm_primal_objective(model.hyperplanes[static_cast<std::size_t>(j)], z, labels,
                                  face_weights(labels, model.membership, j), model.reg_c);
  return total;
}

std::vector<int> predict_label(const PolytopeModel& model, const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd scores = model.face_scores(features);
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) out[static_cast<std::size_t>(i)] = scores.row(i).maxCoeff() > 0.0 ? kPatient : kControl;
  return out;
}

std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::vector<std::pair<int, int>> mapping;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto it = std::find_if(mapping.begin(), mapping.end(), [&](const auto& m) { return m.first == l; });
    if (it == mapping.end()) {
      mapping.emplace_back(l, static_cast<int>(mapping.size()));
      out.push_back(mapping.back().second);
    } else {
      out.push_back(it->second);
    }
  }
  return out;
}

std::vector<int> consensus_from_runs(const std::vector<std::vector<int>>& label_sets, int c) {
  require(!label_sets.empty(), ErrorKind::InvalidArgument, "consensus needs at least one label set");
  const std::size_t p = label_sets.front().size();
  for (const auto& set : label_sets)
    require(set.size() == p, ErrorKind::InvalidArgument, "label sets cover different numbers of patients");
  require(c >= 1 && static_cast<std::size_t>(c) <= p, ErrorKind::InvalidArgument, "consensus c out of range");
  if (label_sets.size() == 1) return label_sets.front();

  const auto n = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(n, n);
  for (const auto& set : label_sets)
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = a + 1; b < n; ++b)
        if (set[static_cast<std::size_t>(a)] == set[static_cast<std::size_t>(b)]) dist(a, b) += 1.0;
  const double runs = static_cast<double>(label_sets.size());
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      dist(a, b) = 1.0 - dist(a, b) / runs;
      dist(b, a) = dist(a, b);
    }

  // Average linkage with Lance-Williams updates. A merged cluster keeps the
  // lower slot index, so slots are always the cluster's lowest member.
  std::vector<std::size_t> size(p, 1);
  std::vector<bool> active(p, true);
  std::vector<std::size_t> owner(p);
  std::iota(owner.begin(), owner.end(), 0);
  std::size_t clusters = p;
  while (clusters > static_cast<std::size_t>(c)) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index ba = -1, bb = -1;
    for (Eigen::Index a = 0; a < n; ++a) {
      if (!active[static_cast<std::size_t>(a)]) continue;
      for (Eigen::Index b = a + 1; b < n; ++b) {
        if (!active[static_cast<std::size_t>(b)]) continue;
        if (dist(a, b) < best) {
          best = dist(a, b);
          ba = a;
          bb = b;
        }
      }
    }
    const double sa = static_cast<double>(size[static_cast<std::size_t>(ba)]);
    const double sb = static_cast<double>(size[static_cast<std::size_t>(bb)]);
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!active[static_cast<std::size_t>(k)] || k == ba || k == bb) continue;
      dist(ba, k) = dist(k, ba) = (sa * dist(ba, k) + sb * dist(bb, k)) / (sa + sb);
    }
    active[static_cast<std::size_t>(bb)] = false;
    size[static_cast<std::size_t>(ba)] += size[static_cast<std::size_t>(bb)];
    for (auto& o : owner)
      if (o == static_cast<std::size_t>(bb)) o = static_cast<std::size_t>(ba);
    --clusters;
  }
  std::vector<int> raw(p);
  for (std::size_t i = 0; i < p; ++i) raw[i] = static_cast<int>(owner[i]);
  return canonical_labels(raw);
}

double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
  require(y_true.size() == y_pred.size(), ErrorKind::Dimension, "balanced_accuracy: length mismatch");
  double tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    require((y_true[i] == 1 || y_true[i] == -1) && (y_pred[i] == 1 || y_pred[i] == -1), ErrorKind::InvalidArgument,
            "balanced_accuracy: labels must be -1 or +1");
    if (y_true[i] == 1) (y_pred[i] == 1 ? tp : fn) += 1;
    else (y_pred[i] == -1 ? tn : fp) += 1;
  }
  require(tp + fn > 0 && tn + fp > 0, ErrorKind::InvalidArgument, "balanced_accuracy: y_true lacks a class");
  return 0.5 * (tp / (tp + fn) + tn / (tn + fp));
}

PolytopeModel fit_random_split_polytope(const Eigen::MatrixXd& features, const std::vector<int>& labels, int n1,
                                        int n2, const SvmOptions& svm, std::uint64_t seed) {
  check_problem(features, labels, 1);
  const std::vector<std::size_t> pt = patient_rows(labels);
  require(n1 >= 1 && n2 >= 1, ErrorKind::InvalidArgument, "both split sizes must be >= 1");
  require(static_cast<std::size_t>(n1) + static_cast<std::size_t>(n2) == pt.size(), ErrorKind::InvalidArgument,
          "split sizes " + std::to_string(n1) + "+" + std::to_string(n2) + " do not sum to the " +
              std::to_string(pt.size()) + " patients");

  std::vector<std::size_t> order(pt.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, {stream::kRandomSplit}));
  std::shuffle(order.begin(), order.end(), rng);

  PolytopeModel model;
  model.scaler = Scaler::fit(features);
  model.scale_k = static_cast<int>(features.cols());
  model.reg_c = svm.reg_c;
  model.membership.c = 2;
  model.membership.assignments.assign(pt.size(), 0);
  for (std::size_t r = static_cast<std::size_t>(n1); r < order.size(); ++r) model.membership.assignments[order[r]] = 1;

  const Eigen::MatrixXd z = model.scaler.transform(features);
  double objective = 0.0;
  for (int j = 0; j < 2; ++j) {
    Eigen::VectorXd s(static_cast<Eigen::Index>(labels.size()));
    std::size_t p = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      s(static_cast<Eigen::Index>(i)) = labels[i] == kPatient ? (model.membership.assignments[p++] == j ? 1.0 : 0.0) : 1.0;
    model.hyperplanes.push_back(fit_weighted_linear_svm(z, labels, s, svm));
    objective += svm_primal_objective(model.hyperplanes.back(), z, labels, s, svm.reg_c);
  }
  model.joint_objective = objective;
  model.objective_trace = {objective};
  return model;
}

}  // namespace magic
