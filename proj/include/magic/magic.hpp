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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "magic/basis_io.hpp"
#include "magic/opnmf.hpp"
#include "magic/polytope.hpp"

namespace magic {

struct ScaleSchedule {
  std::vector<int> k_set = scale_range(25, 60, 5);
  int max_cycles = 10;
  double consistency_threshold = 0.98;
  int restarts_at_init = 10;

  void validate() const;
};

struct MagicOptions {
  int c = 2;
  PolytopeOptions polytope;
  InitStrategy init = InitStrategy::KMeans;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Result of the double cyclic optimization. Patient label vectors follow
/// the order of patients in the label vector given to fit_magic.
struct MagicModel {
  int c = 0;
  std::vector<int> k_set;
  std::map<int, std::vector<int>> per_init_labels;
  std::vector<int> consensus_labels;
  std::map<int, PolytopeModel> per_scale_polytopes;  // final cycle of best_init_scale
  std::map<int, std::vector<double>> cycle_ari_trace;
  int best_init_scale = 0;
  int selected_predict_scale = 0;

  const PolytopeModel& predict_polytope() const;
};

/// Outer loop: one initialization per scale in schedule.k_set (restarts +
/// consensus at that scale). Inner loop: polytopes are refit scale by scale
/// in cyclic order, each warm-started from the membership left by the
/// previous scale, until a full cycle reproduces its starting membership
/// to within the consistency threshold (ARI) or max_cycles is reached. The
/// per-initialization results are then combined by consensus.
MagicModel fit_magic(const MultiScaleBasis& basis, const std::vector<int>& labels, const ScaleSchedule& schedule,
                     const MagicOptions& options);

/// (min, mean) pairwise ARI over at least two label sets.
std::pair<double, double> cross_scale_consistency(const std::vector<std::vector<int>>& label_sets);

struct MagicPrediction {
  std::vector<int> labels;    // -1 inside the polytope, +1 outside
  std::vector<int> subtypes;  // argmax face, for every subject
  Eigen::MatrixXd scores;     // M x c face scores
};

/// Projects raw subjects (M x D, rows are subjects) through `components`
/// (the decomposition at the model's prediction scale) and classifies them.
MagicPrediction predict_magic(const MagicModel& model, const Decomposition& components,
                              const Eigen::MatrixXd& raw_features);

/// Same, applying the archive's covariate correction first.
MagicPrediction predict_magic(const MagicModel& model, const BasisArchive& archive, const Dataset& data);

// Layout: model.json, consensus.csv (participant_id, subtype),
// per_init.csv (participant_id, one column per initialization scale),
// trace.json (cycle ARIs per initialization), polytope/ (prediction scale).
void save_magic(const MagicModel& model, const std::vector<std::string>& patient_ids,
                const std::filesystem::path& dir);
MagicModel load_magic(const std::filesystem::path& dir, std::vector<std::string>* patient_ids = nullptr);

}  // namespace magic
