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

// magic: command-line driver for the multi-scale clustering pipeline.
//
//   simulate  -> dataset.csv, truth.csv, masks.csv
//   decompose -> basis directory
//   select    -> stability.json, stability.csv (+ selected c on stdout)
//   cluster   -> model directory
//   stats     -> stats.csv, mds.csv
//   predict   -> predictions.csv (+ metrics.json for labeled input)
//
// Exit codes: 0 success, 1 data or computation error, 2 usage error.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "magic/magic_c.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct UsageError {
  std::string message;
};
struct DataError {
  std::string message;
};

void check(magic_status status) {
  if (status != MAGIC_OK) throw DataError{magic_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<magic_dataset, Deleter<magic_dataset, magic_dataset_free>>;
using Truth = std::unique_ptr<magic_truth, Deleter<magic_truth, magic_truth_free>>;
using Basis = std::unique_ptr<magic_basis, Deleter<magic_basis, magic_basis_free>>;
using Stability = std::unique_ptr<magic_stability, Deleter<magic_stability, magic_stability_free>>;
using Model = std::unique_ptr<magic_model, Deleter<magic_model, magic_model_free>>;
using Stats = std::unique_ptr<magic_stats, Deleter<magic_stats, magic_stats_free>>;
using Prediction = std::unique_ptr<magic_prediction, Deleter<magic_prediction, magic_prediction_free>>;

int parse_int(const std::string& text, const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw UsageError{what + ": '" + text + "' is not an integer"};
  return v;
}

// "a:b:step" (or "a:b", step 1) -> a, a+step, ..., <= b; a lone "a" is {a}.
std::vector<int> parse_range(const std::string& text, const std::string& what) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.empty() || parts.size() > 3) throw UsageError{what + " must look like a, a:b or a:b:step"};
  const int first = parse_int(parts[0], what);
  const int last = parts.size() >= 2 ? parse_int(parts[1], what) : first;
  const int step = parts.size() == 3 ? parse_int(parts[2], what) : 1;
  if (first < 1 || last < first || step < 1) throw UsageError{what + " needs 1 <= a <= b and step >= 1"};
  std::vector<int> out;
  for (int k = first; k <= last; k += step) out.push_back(k);
  return out;
}

std::vector<int> int_span(int first, int last, const std::string& what) {
  if (first < 1 || last < first) throw UsageError{what + ": need 1 <= min <= max"};
  std::vector<int> out;
  for (int v = first; v <= last; ++v) out.push_back(v);
  return out;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError{"cannot create directory '" + dir.string() + "': " + ec.message()};
}

Dataset load_dataset(const std::string& path, unsigned flags) {
  magic_dataset* raw = nullptr;
  check(magic_dataset_load(path.c_str(), flags, &raw));
  return Dataset(raw);
}

Basis load_basis(const std::string& dir) {
  magic_basis* raw = nullptr;
  check(magic_basis_load(dir.c_str(), &raw));
  return Basis(raw);
}

Model load_model(const std::string& dir) {
  magic_model* raw = nullptr;
  check(magic_model_load(dir.c_str(), &raw));
  return Model(raw);
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Common {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--seed", common.seed, "Base random seed")->capture_default_str();
  cmd->add_option("--jobs", common.jobs, "Worker threads")->check(CLI::Range(1, 1024))->capture_default_str();
  cmd->add_option("--out", common.out, "Output location")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-scale semi-supervised clustering of patient cohorts"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  Common common;

  // simulate
  magic_sim_config sim;
  magic_sim_config_init(&sim);
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic two-subtype cohort");
  add_common(simulate, common);
  simulate->add_option("--n-cn", sim.n_cn, "Number of controls")->capture_default_str();
  simulate->add_option("--n-pt", sim.n_pt, "Number of patients")->capture_default_str();
  simulate->add_option("--rows", sim.rows, "Feature grid rows")->capture_default_str();
  simulate->add_option("--cols", sim.cols, "Feature grid columns")->capture_default_str();
  simulate->add_option("--noise-sd", sim.noise_sd, "Gaussian noise sd")->capture_default_str();
  simulate->add_option("--subject-sd", sim.subject_sd, "Between-subject log-scale sd")->capture_default_str();
  simulate->add_option("--atrophy", sim.atrophy_fraction, "Intensity reduction inside masks")->capture_default_str();
  simulate->add_option("--age-slope", sim.age_slope, "Additive age effect per year")->capture_default_str();

  // decompose
  std::string data_path;
  int k_min = 2, k_max = 60;
  std::string k_set_text;
  magic_basis_options basis_opts;
  magic_basis_options_init(&basis_opts);
  bool no_residualize = false;
  auto* decompose = app.add_subcommand("decompose", "Fit the multi-scale OPNMF basis");
  add_common(decompose, common);
  decompose->add_option("--data", data_path, "Dataset CSV")->required();
  decompose->add_option("--k-min", k_min, "Smallest scale")->capture_default_str();
  decompose->add_option("--k-max", k_max, "Largest scale")->capture_default_str();
  decompose->add_option("--k-set", k_set_text, "Scales as a, a:b or a:b:step (overrides --k-min/--k-max)");
  decompose->add_option("--tol", basis_opts.tol, "Relative change tolerance")->capture_default_str();
  decompose->add_option("--max-iter", basis_opts.max_iter, "Iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  decompose->add_flag("--random-init", basis_opts.random_init, "Seeded uniform initialization instead of NNDSVD");
  decompose->add_flag("--no-residualize", no_residualize, "Skip covariate residualization");

  // select
  std::string basis_dir;
  int c_min = 2, c_max = 4;
  std::string k_plateau_text;
  magic_stability_options stab_opts;
  magic_stability_options_init(&stab_opts);
  bool refit_basis = false;
  auto* select = app.add_subcommand("select", "Clustering stability over c and K");
  add_common(select, common);
  select->add_option("--basis", basis_dir, "Basis directory")->required();
  select->add_option("--data", data_path, "Dataset CSV with diagnoses")->required();
  select->add_option("--c-min", c_min, "Smallest number of clusters")->capture_default_str();
  select->add_option("--c-max", c_max, "Largest number of clusters")->capture_default_str();
  select->add_option("--k-set", k_set_text, "Scales to evaluate as a, a:b or a:b:step (default: every basis scale)");
  select->add_option("--k-plateau", k_plateau_text, "Scales averaged for the selection (default: --k-set)");
  select->add_option("--repetitions", stab_opts.repetitions, "Holdout repetitions")
      ->check(CLI::Range(2, 100000))
      ->capture_default_str();
  select->add_option("--test-size", stab_opts.test_fraction, "Held-out fraction per class")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  select->add_option("--restarts", stab_opts.restarts, "Clustering restarts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  select->add_option("--reg-c", stab_opts.reg_c, "SVM penalty")->check(CLI::PositiveNumber)->capture_default_str();
  select->add_flag("--refit-basis", refit_basis, "Refit OPNMF on every training split");

  // cluster
  magic_cluster_options cl_opts;
  magic_cluster_options_init(&cl_opts);
  std::string cluster_k_set = "25:60:5";
  auto* cluster = app.add_subcommand("cluster", "Fit the multi-scale clustering model");
  add_common(cluster, common);
  cluster->add_option("--basis", basis_dir, "Basis directory")->required();
  cluster->add_option("--data", data_path, "Dataset CSV with diagnoses")->required();
  cluster->add_option("--c", cl_opts.c, "Number of clusters")->check(CLI::Range(1, 1000))->capture_default_str();
  cluster->add_option("--k-set", cluster_k_set, "Scales as a, a:b or a:b:step")->capture_default_str();
  cluster->add_option("--max-cycles", cl_opts.max_cycles, "Inner cycle cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cluster->add_option("--threshold", cl_opts.consistency_threshold, "Cycle ARI stopping threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cluster->add_option("--restarts", cl_opts.restarts, "Restarts per initialization scale")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cluster->add_option("--reg-c", cl_opts.reg_c, "SVM penalty")->check(CLI::PositiveNumber)->capture_default_str();

  // stats
  std::string model_dir;
  double alpha = 0.05;
  bool welch = false;
  int mds_dims = 2;
  auto* stats = app.add_subcommand("stats", "Map subtypes onto components");
  add_common(stats, common);
  stats->add_option("--basis", basis_dir, "Basis directory")->required();
  stats->add_option("--model", model_dir, "Model directory")->required();
  stats->add_option("--alpha", alpha, "FDR level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  stats->add_flag("--welch", welch, "Welch t-test instead of pooled variance");
  stats->add_option("--mds-dims", mds_dims, "MDS dimensions")->check(CLI::PositiveNumber)->capture_default_str();

  // predict
  bool want_ba = false;
  std::string compare_split;
  double split_reg_c = 0.25;
  auto* predict = app.add_subcommand("predict", "Classify new subjects");
  add_common(predict, common);
  predict->add_option("--basis", basis_dir, "Basis directory")->required();
  predict->add_option("--model", model_dir, "Model directory")->required();
  predict->add_option("--data", data_path, "Dataset CSV (diagnosis optional)")->required();
  predict->add_flag("--balanced-accuracy", want_ba, "Require labels and report balanced accuracy");
  predict->add_option("--compare-split", compare_split, "Random-split baseline sizes n1,n2");
  predict->add_option("--reg-c", split_reg_c, "SVM penalty of the baseline")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    const CLI::App* failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << failing->help();
    return kExitUsage;
  }

  try {
    const fs::path out = common.out;
    if (simulate->parsed()) {
      if (!(sim.atrophy_fraction > 0.0 && sim.atrophy_fraction < 1.0))
        throw UsageError{"atrophy_fraction must be in (0,1)"};
      sim.seed = common.seed;
      magic_dataset* ds_raw = nullptr;
      magic_truth* truth_raw = nullptr;
      const magic_status st = magic_simulate(&sim, &ds_raw, &truth_raw);
      if (st == MAGIC_ERR_INVALID_ARGUMENT) throw UsageError{magic_last_error()};
      check(st);
      Dataset ds(ds_raw);
      Truth truth(truth_raw);
      make_dir(out);
      check(magic_dataset_save(ds.get(), (out / "dataset.csv").c_str()));
      check(magic_truth_save(truth.get(), (out / "truth.csv").c_str(), (out / "masks.csv").c_str()));
      std::cout << "wrote " << magic_dataset_num_subjects(ds.get()) << " subjects x "
                << magic_dataset_num_features(ds.get()) << " features to " << out.string() << "\n";
    } else if (decompose->parsed()) {
      const std::vector<int> ks = k_set_text.empty() ? int_span(k_min, k_max, "--k-min/--k-max")
                                                     : parse_range(k_set_text, "--k-set");
      basis_opts.residualize = no_residualize ? 0 : 1;
      basis_opts.seed = common.seed;
      basis_opts.jobs = common.jobs;
      Dataset ds = load_dataset(data_path, MAGIC_LOAD_NON_NEGATIVE);
      magic_basis* raw = nullptr;
      check(magic_basis_fit(ds.get(), ks.data(), ks.size(), &basis_opts, &raw));
      Basis basis(raw);
      check(magic_basis_save(basis.get(), out.c_str()));
      std::cout << "fitted " << magic_basis_num_scales(basis.get()) << " scales ("
                << magic_basis_total_components(basis.get()) << " components) into " << out.string() << "\n";
    } else if (select->parsed()) {
      const std::vector<int> cs = int_span(c_min, c_max, "--c-min/--c-max");
      Basis basis = load_basis(basis_dir);
      std::vector<int> ks;
      if (k_set_text.empty()) {
        ks.resize(magic_basis_num_scales(basis.get()));
        check(magic_basis_scales(basis.get(), ks.data(), ks.size()));
      } else {
        ks = parse_range(k_set_text, "--k-set");
      }
      const std::vector<int> plateau = k_plateau_text.empty() ? ks : parse_range(k_plateau_text, "--k-plateau");
      for (int k : plateau)
        if (std::find(ks.begin(), ks.end(), k) == ks.end())
          throw UsageError{"--k-plateau scale " + std::to_string(k) + " is not among the evaluated scales"};
      stab_opts.refit_basis = refit_basis ? 1 : 0;
      stab_opts.seed = common.seed;
      stab_opts.jobs = common.jobs;
      Dataset ds = load_dataset(data_path, 0);
      magic_stability* raw = nullptr;
      check(magic_stability_run(basis.get(), ds.get(), cs.data(), cs.size(), ks.data(), ks.size(), &stab_opts, &raw));
      Stability report(raw);
      make_dir(out);
      check(magic_stability_save(report.get(), (out / "stability.json").c_str(), (out / "stability.csv").c_str()));
      int c = 0;
      check(magic_stability_select(report.get(), plateau.data(), plateau.size(), &c));
      std::cout << "selected_c=" << c << " (plateau K=" << join(plateau) << ")\n";
    } else if (cluster->parsed()) {
      const std::vector<int> ks = parse_range(cluster_k_set, "--k-set");
      cl_opts.seed = common.seed;
      cl_opts.jobs = common.jobs;
      Basis basis = load_basis(basis_dir);
      Dataset ds = load_dataset(data_path, 0);
      magic_model* raw = nullptr;
      check(magic_model_fit(basis.get(), ds.get(), ks.data(), ks.size(), &cl_opts, &raw));
      Model model(raw);
      check(magic_model_save(model.get(), out.c_str()));
      std::cout << "clustered " << magic_model_num_patients(model.get()) << " patients into "
                << magic_model_num_clusters(model.get()) << " subtypes; prediction scale K="
                << magic_model_predict_scale(model.get()) << "\n";
    } else if (stats->parsed()) {
      if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError{"--alpha must be in (0,1)"};
      Basis basis = load_basis(basis_dir);
      Model model = load_model(model_dir);
      magic_stats* raw = nullptr;
      check(magic_stats_run(basis.get(), model.get(), alpha, welch ? 1 : 0, &raw));
      Stats table(raw);
      make_dir(out);
      check(magic_stats_save(table.get(), (out / "stats.csv").c_str()));
      check(magic_mds_save(basis.get(), model.get(), mds_dims, (out / "mds.csv").c_str()));
      for (int s = 0; s < magic_model_num_clusters(model.get()); ++s)
        std::cout << "subtype " << s << ": " << magic_stats_survivors(table.get(), s) << " of "
                  << magic_basis_total_components(basis.get()) << " components survive FDR " << alpha << "\n";
    } else if (predict->parsed()) {
      std::optional<std::pair<int, int>> split;
      if (!compare_split.empty()) {
        const auto comma = compare_split.find(',');
        if (comma == std::string::npos) throw UsageError{"--compare-split must look like n1,n2"};
        split = std::make_pair(parse_int(compare_split.substr(0, comma), "--compare-split"),
                               parse_int(compare_split.substr(comma + 1), "--compare-split"));
        if (split->first < 1 || split->second < 1) throw UsageError{"--compare-split sizes must be >= 1"};
      }
      Basis basis = load_basis(basis_dir);
      Model model = load_model(model_dir);
      Dataset ds = load_dataset(data_path, MAGIC_LOAD_UNLABELED);
      const bool labeled = magic_dataset_has_labels(ds.get()) != 0;
      if ((want_ba || split) && !labeled)
        throw UsageError{"balanced accuracy requested but '" + data_path + "' has no diagnosis column"};
      if (split) {
        const std::size_t patients = magic_model_num_patients(model.get());
        if (static_cast<std::size_t>(split->first) + static_cast<std::size_t>(split->second) != patients)
          throw UsageError{"--compare-split sizes must sum to the " + std::to_string(patients) +
                           " training patients of the model"};
      }
      magic_prediction* raw = nullptr;
      check(magic_predict(model.get(), basis.get(), ds.get(), &raw));
      Prediction pred(raw);
      make_dir(out);
      check(magic_prediction_save(pred.get(), (out / "predictions.csv").c_str()));
      std::cout << "predicted " << magic_prediction_num_subjects(pred.get()) << " subjects\n";
      if (labeled) {
        nlohmann::ordered_json metrics;
        double ba = 0.0;
        check(magic_prediction_balanced_accuracy(pred.get(), ds.get(), &ba));
        metrics["balanced_accuracy"] = ba;
        std::cout << "balanced_accuracy=" << ba << "\n";
        if (split) {
          double split_ba = 0.0;
          check(magic_random_split_balanced_accuracy(model.get(), basis.get(), ds.get(), split->first, split->second,
                                                     split_reg_c, common.seed, &split_ba));
          metrics["random_split"] = {split->first, split->second};
          metrics["random_split_balanced_accuracy"] = split_ba;
          std::cout << "random_split_balanced_accuracy=" << split_ba << "\n";
        }
        std::ofstream(out / "metrics.json") << metrics.dump(2) << "\n";
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.message << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.message << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
