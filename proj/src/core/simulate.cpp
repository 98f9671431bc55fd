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

#include "magic/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "magic/csv.hpp"
#include "magic/error.hpp"
#include "magic/random.hpp"

namespace magic {

int Mask::count() const { return static_cast<int>(std::count(cells.begin(), cells.end(), true)); }

std::vector<Mask> default_masks(int rows, int cols) {
  require(rows >= 8 && cols >= 8, ErrorKind::InvalidArgument, "grid must be at least 8x8");
  const int side = std::max(1, static_cast<int>(std::floor(std::sqrt(0.05 * rows * cols))));
  const int r0 = (rows - side) / 2, c0 = (cols - side) / 2;
  const int top = (rows + 1) / 2;

  Mask focal{"focal", rows, cols, std::vector<bool>(static_cast<std::size_t>(rows * cols), false)};
  Mask global{"global", rows, cols, std::vector<bool>(static_cast<std::size_t>(rows * cols), false)};
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r * cols + c);
      focal.cells[i] = r >= r0 && r < r0 + side && c >= c0 && c < c0 + side;
      global.cells[i] = r < top && !focal.cells[i];
    }
  return {global, focal};
}

void SimConfig::validate(bool allow_null) const {
  require(rows >= 1 && cols >= 1, ErrorKind::InvalidArgument, "grid dimensions must be positive");
  require(n_cn >= 2, ErrorKind::InvalidArgument, "n_cn must be >= 2");
  if (allow_null)
    require(atrophy_fraction >= 0.0 && atrophy_fraction < 1.0, ErrorKind::InvalidArgument,
            "atrophy_fraction must be in [0,1)");
  else
    require(atrophy_fraction > 0.0 && atrophy_fraction < 1.0, ErrorKind::InvalidArgument,
            "atrophy_fraction must be in (0,1)");
  require(noise_sd >= 0.0 && subject_sd >= 0.0, ErrorKind::InvalidArgument, "noise_sd and subject_sd must be >= 0");
  require(base_level > 0.0 && bump_amplitude >= 0.0, ErrorKind::InvalidArgument,
          "base pattern must be positive");
  require(std::isfinite(age_slope), ErrorKind::InvalidArgument, "age_slope must be finite");
  for (const Mask& m : masks)
    require(m.rows == rows && m.cols == cols && m.cells.size() == static_cast<std::size_t>(rows * cols),
            ErrorKind::InvalidArgument, "mask '" + m.name + "' does not match the grid");
  const std::size_t n_masks = masks.empty() ? 2 : masks.size();
  require(n_pt >= static_cast<int>(2 * n_masks), ErrorKind::InvalidArgument,
          "n_pt must be at least twice the number of masks");
}

std::vector<double> base_pattern(const SimConfig& cfg) {
  std::vector<double> out(static_cast<std::size_t>(cfg.rows * cfg.cols));
  const double width = 0.2 * std::max(cfg.rows, cfg.cols);
  const double centers[2][2] = {{0.3 * (cfg.rows - 1), 0.3 * (cfg.cols - 1)}, {0.7 * (cfg.rows - 1), 0.7 * (cfg.cols - 1)}};
  for (int r = 0; r < cfg.rows; ++r)
    for (int c = 0; c < cfg.cols; ++c) {
      double v = cfg.base_level;
      for (const auto& ctr : centers) {
        const double d2 = (r - ctr[0]) * (r - ctr[0]) + (c - ctr[1]) * (c - ctr[1]);
        v += cfg.bump_amplitude * std::exp(-d2 / (2.0 * width * width));
      }
      out[static_cast<std::size_t>(r * cfg.cols + c)] = v;
    }
  return out;
}

std::pair<Dataset, GroundTruth> generate_cohort(const SimConfig& cfg, bool allow_null) {
  cfg.validate(allow_null);
  GroundTruth truth;
  truth.masks = cfg.masks.empty() ? default_masks(cfg.rows, cfg.cols) : cfg.masks;
  const std::size_t n_masks = truth.masks.size();
  const int n = cfg.n_cn + cfg.n_pt;
  const int d = cfg.rows * cfg.cols;

  // Deal patients to masks: the first n_pt / M of a seeded permutation get
  // mask 0, and so on (remainders go to the leading masks).
  std::vector<int> order(static_cast<std::size_t>(cfg.n_pt));
  std::iota(order.begin(), order.end(), 0);
  Rng perm_rng(derive_seed(cfg.seed, {stream::kSimulate, 0}));
  std::shuffle(order.begin(), order.end(), perm_rng);
  std::vector<int> mask_of_patient(static_cast<std::size_t>(cfg.n_pt));
  const int share = cfg.n_pt / static_cast<int>(n_masks), extra = cfg.n_pt % static_cast<int>(n_masks);
  int pos = 0;
  for (int m = 0; m < static_cast<int>(n_masks); ++m) {
    const int size = share + (m < extra ? 1 : 0);
    for (int j = 0; j < size; ++j) mask_of_patient[static_cast<std::size_t>(order[static_cast<std::size_t>(pos++)])] = m;
  }

  Dataset ds;
  ds.features.resize(n, d);
  ds.covariates.resize(n, 1);
  ds.covariate_names = {"cov_age"};
  for (int r = 0; r < cfg.rows; ++r)
    for (int c = 0; c < cfg.cols; ++c) ds.feature_names.push_back("r" + std::to_string(r) + "_c" + std::to_string(c));

  const std::vector<double> base = base_pattern(cfg);
  const int width = std::max(3, static_cast<int>(std::to_string(std::max(cfg.n_cn, cfg.n_pt)).size()));
  auto pad = [width](int v) {
    std::string s = std::to_string(v);
    return std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(s.size()))), '0') + s;
  };

  for (int i = 0; i < n; ++i) {
    const bool patient = i >= cfg.n_cn;
    const int p = i - cfg.n_cn;
    ds.subject_ids.push_back(patient ? "PT" + pad(p + 1) : "CN" + pad(i + 1));
    ds.labels.push_back(patient ? kPatient : kControl);

    Rng rng(derive_seed(cfg.seed, {stream::kSimulate, 1, static_cast<std::uint64_t>(i)}));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> age_dist(55.0, 85.0);
    const double scale = std::exp(cfg.subject_sd * normal(rng));
    const double age = age_dist(rng);
    ds.covariates(i, 0) = age;
    const Mask* mask = patient ? &truth.masks[static_cast<std::size_t>(mask_of_patient[static_cast<std::size_t>(p)])] : nullptr;
    for (int f = 0; f < d; ++f) {
      double v = scale * base[static_cast<std::size_t>(f)];
      if (mask && mask->cells[static_cast<std::size_t>(f)]) v *= 1.0 - cfg.atrophy_fraction;
      v += cfg.age_slope * (age - 70.0);
      if (cfg.noise_sd > 0.0) v += cfg.noise_sd * normal(rng);
      ds.features(i, f) = std::max(v, 0.0);
    }
    if (patient) truth.patient_ids.push_back(ds.subject_ids.back());
  }
  truth.mask_of_patient = std::move(mask_of_patient);
  return {std::move(ds), std::move(truth)};
}

void save_truth(const GroundTruth& truth, const std::filesystem::path& csv_path) {
  std::ostringstream out;
  csv::write_row(out, {"participant_id", "subtype_name"});
  for (std::size_t p = 0; p < truth.patient_ids.size(); ++p) csv::write_row(out, {truth.patient_ids[p], truth.subtype_name(p)});
  csv::write_file(csv_path, out.str());
}

void save_masks(const std::vector<Mask>& masks, const std::filesystem::path& csv_path) {
  std::ostringstream out;
  csv::write_row(out, {"row", "col", "mask_name"});
  for (const Mask& m : masks)
    for (int r = 0; r < m.rows; ++r)
      for (int c = 0; c < m.cols; ++c)
        if (m.at(r, c)) csv::write_row(out, {std::to_string(r), std::to_string(c), m.name});
  csv::write_file(csv_path, out.str());
}

}  // namespace magic
