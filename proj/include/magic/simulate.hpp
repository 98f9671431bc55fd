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
#include <string>
#include <utility>
#include <vector>

#include "magic/dataset.hpp"

namespace magic {

/// Boolean grid in row-major order.
struct Mask {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::vector<bool> cells;

  bool at(int r, int c) const { return cells[static_cast<std::size_t>(r * cols + c)]; }
  int count() const;
};

/// "global": the upper half of the grid (border to center) minus the focal
/// block; "focal": a centered square block covering at most 5% of the grid.
std::vector<Mask> default_masks(int rows, int cols);

struct SimConfig {
  int n_cn = 100;
  int n_pt = 100;
  int rows = 20;
  int cols = 20;
  double base_level = 1.0;
  double bump_amplitude = 0.5;  // two smooth bumps on top of base_level
  double noise_sd = 0.05;
  double subject_sd = 0.05;     // log-normal between-subject scale
  double atrophy_fraction = 0.10;
  double age_slope = 0.002;     // additive effect per year from age 70
  std::vector<Mask> masks;      // empty -> default_masks(rows, cols)
  std::uint64_t seed = 0;

  /// `allow_null` admits atrophy_fraction = 0 (null simulations).
  void validate(bool allow_null = false) const;
};

struct GroundTruth {
  std::vector<std::string> patient_ids;
  std::vector<int> mask_of_patient;  // index into masks
  std::vector<Mask> masks;

  std::string subtype_name(std::size_t p) const { return masks[static_cast<std::size_t>(mask_of_patient[p])].name; }
};

/// Base pattern per feature (row-major), before subject scaling.
std::vector<double> base_pattern(const SimConfig& cfg);

/// Controls come first, then patients. Patients are dealt to masks in equal
/// shares by a seeded permutation.
std::pair<Dataset, GroundTruth> generate_cohort(const SimConfig& cfg, bool allow_null = false);

void save_truth(const GroundTruth& truth, const std::filesystem::path& csv_path);
void save_masks(const std::vector<Mask>& masks, const std::filesystem::path& csv_path);

}  // namespace magic
