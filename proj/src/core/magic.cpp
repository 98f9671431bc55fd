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

#include "magic/magic.hpp"

#include <algorithm>
#include <limits>

#include "magic/error.hpp"
#include "magic/parallel.hpp"
#include "magic/selection.hpp"

namespace magic {

void ScaleSchedule::validate() const {
  require(!k_set.empty(), ErrorKind::InvalidArgument, "scale schedule is empty");
  for (std::size_t i = 1; i < k_set.size(); ++i)
    require(k_set[i] > k_set[i - 1], ErrorKind::InvalidArgument, "scale schedule must be strictly increasing");
  require(max_cycles >= 1, ErrorKind::InvalidArgument, "max_cycles must be >= 1");
  require(consistency_threshold > 0.0 && consistency_threshold <= 1.0, ErrorKind::InvalidArgument,
          "consistency_threshold must be in (0,1]");
  require(restarts_at_init >= 1, ErrorKind::InvalidArgument, "restarts_at_init must be >= 1");
}

const PolytopeModel& MagicModel::predict_polytope() const {
  auto it = per_scale_polytopes.find(selected_predict_scale);
  if (it == per_scale_polytopes.end())
    fail(ErrorKind::InvalidArgument, "model has no polytope at its prediction scale");
  return it->second;
}

namespace {

struct InitRun {
  std::vector<int> labels;
  std::map<int, PolytopeModel> polytopes;
  std::vector<double> trace;
};

}  // namespace

MagicModel fit_magic(const MultiScaleBasis& basis, const std::vector<int>& labels, const ScaleSchedule& schedule,
                     const MagicOptions& options) {
  schedule.validate();
  require(options.c >= 1, ErrorKind::InvalidArgument, "number of clusters must be >= 1");
  std::map<int, Eigen::MatrixXd> features;
  for (int k : schedule.k_set) {
    require(basis.contains(k), ErrorKind::InvalidArgument, "scale K=" + std::to_string(k) + " not in basis");
    features.emplace(k, basis.at(k).loadings.transpose());
    require(features.at(k).rows() == static_cast<Eigen::Index>(labels.size()), ErrorKind::Dimension,
            "labels do not match the basis subjects");
  }

  const std::size_t m = schedule.k_set.size();
  std::vector<InitRun> runs(m);
  parallel_for(m, options.jobs, [&](std::size_t a) {
    const int k_init = schedule.k_set[a];
    const PolytopeModel initial =
        fit_polytope_restarts(features.at(k_init), labels, options.c, options.polytope, schedule.restarts_at_init,
                              options.init, options.seed, 1);
    Membership current = initial.membership;
    InitRun& run = runs[a];
    for (int cycle = 0; cycle < schedule.max_cycles; ++cycle) {
      const Membership start = current;
      for (std::size_t step = 1; step <= m; ++step) {
        const int k = schedule.k_set[(a + step) % m];
        PolytopeModel model = fit_polytope(features.at(k), labels, options.c, options.polytope, current);
        current = model.membership;
        run.polytopes.insert_or_assign(k, std::move(model));
      }
      const double ari = adjusted_rand_index(start.assignments, current.assignments);
      run.trace.push_back(ari);
      if (ari >= schedule.consistency_threshold) break;
    }
    run.labels = current.assignments;
  });

  MagicModel model;
  model.c = options.c;
  model.k_set = schedule.k_set;
  std::vector<std::vector<int>> label_sets;
  for (std::size_t a = 0; a < m; ++a) {
    model.per_init_labels[schedule.k_set[a]] = runs[a].labels;
    model.cycle_ari_trace[schedule.k_set[a]] = runs[a].trace;
    label_sets.push_back(runs[a].labels);
  }
  model.consensus_labels = consensus_from_runs(label_sets, options.c);

  std::size_t best = 0;
  double best_ari = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < m; ++a) {
    const double ari = adjusted_rand_index(runs[a].labels, model.consensus_labels);
    if (ari > best_ari) {
      best_ari = ari;
      best = a;
    }
  }
  model.best_init_scale = schedule.k_set[best];
  model.per_scale_polytopes = std::move(runs[best].polytopes);

  double best_ba = -1.0;
  for (int k : schedule.k_set) {  // ascending, so ties keep the smallest K
    const double ba = balanced_accuracy(labels, predict_label(model.per_scale_polytopes.at(k), features.at(k)));
    if (ba > best_ba) {
      best_ba = ba;
      model.selected_predict_scale = k;
    }
  }
  return model;
}

std::pair<double, double> cross_scale_consistency(const std::vector<std::vector<int>>& label_sets) {
  require(label_sets.size() >= 2, ErrorKind::InvalidArgument, "cross-scale consistency needs at least 2 label sets");
  for (const auto& set : label_sets)
    require(set.size() == label_sets.front().size(), ErrorKind::InvalidArgument,
            "label sets cover different numbers of patients");
  double min_ari = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < label_sets.size(); ++a)
    for (std::size_t b = a + 1; b < label_sets.size(); ++b) {
      const double ari = adjusted_rand_index(label_sets[a], label_sets[b]);
      min_ari = std::min(min_ari, ari);
      sum += ari;
      ++pairs;
    }
  return {min_ari, sum / static_cast<double>(pairs)};
}

MagicPrediction predict_magic(const MagicModel& model, const Decomposition& components,
                              const Eigen::MatrixXd& raw_features) {
  const PolytopeModel& polytope = model.predict_polytope();
  require(components.scale_k == model.selected_predict_scale, ErrorKind::InvalidArgument,
          "components are at K=" + std::to_string(components.scale_k) + " but the model predicts at K=" +
              std::to_string(model.selected_predict_scale));
  require(raw_features.cols() == components.components.rows(), ErrorKind::Dimension,
          "expected " + std::to_string(components.components.rows()) + " raw features, got " +
              std::to_string(raw_features.cols()));
  const Eigen::MatrixXd loadings = project(components, raw_features.transpose()).transpose();
  MagicPrediction out;
  out.scores = polytope.face_scores(loadings);
  out.labels = predict_label(polytope, loadings);
  out.subtypes = update_membership(polytope, loadings).assignments;
  return out;
}

MagicPrediction predict_magic(const MagicModel& model, const BasisArchive& archive, const Dataset& data) {
  require(data.features.cols() == static_cast<Eigen::Index>(archive.feature_names.size()), ErrorKind::Dimension,
          "dataset has " + std::to_string(data.features.cols()) + " features, basis expects " +
              std::to_string(archive.feature_names.size()));
  const Dataset corrected = archive.covariates ? archive.covariates->apply(data) : data;
  return predict_magic(model, archive.basis.at(model.selected_predict_scale), corrected.features);
}

}  // namespace magic
