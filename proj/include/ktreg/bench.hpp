#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ktreg/data.hpp"
#include "ktreg/kernels.hpp"

namespace ktreg {

enum class Method { kFullNW, kStNW, kKtNW, kFullKRR, kStKRR, kKtKRR };

std::string method_name(Method method);
Method parse_method(const std::string& name);
bool is_krr_method(Method method);
bool is_thinned_method(Method method);  // st-* or kt-*
bool is_kt_method(Method method);

struct TrialConfig {
  Method method = Method::kFullNW;
  Index n = 0;  // requested train size (informational; run_trial uses the data)
  KernelSpec base;
  std::optional<double> lambda;  // present iff method is a KRR variant
  double delta = 0.5;
  uint64_t seed = 0;
  std::optional<MetaKernelSpec> meta_override;  // kt-* ablations only
  std::optional<Index> n_out_override;          // thinned methods; default sqrt(n)
  bool binary_labels = false;  // report thresholded classification error as mse
};

struct TrialResult {
  TrialConfig config;
  Index n_used = 0;  // train size after any power-of-4 truncation
  Index n_out = 0;
  double mse = 0.0;
  double train_seconds = 0.0;
  double predict_seconds_per_1k = 0.0;
  Index defaulted_predictions = 0;
};

struct GridSpec {
  std::vector<double> h_values;
  std::vector<double> lambda_values;  // required for KRR methods, ignored otherwise
  int trials_per_cell = 1;            // convention: 100 for randomized, 1 for full
  Index validation_size = 10000;
};

std::vector<double> default_h_grid();
std::vector<double> default_lambda_grid();
int default_trials_per_cell(Method method);

// Fits per the configured method (thinning included in the train timing),
// then times predictions over the test set point by point.
TrialResult run_trial(const TrialConfig& config, const LabeledDataset& train,
                      const LabeledDataset& test);

struct GridCell {
  double h = 0.0;
  std::optional<double> lambda;
  double mean_mse = 0.0;
};

struct GridSearchResult {
  double best_h = 0.0;
  std::optional<double> best_lambda;
  std::vector<GridCell> table;
};

// Mean validation MSE per cell over trials_per_cell seeded runs; the argmin
// cell wins, ties resolved toward smaller h then smaller lambda. The
// prototype supplies method, kernel family, delta, seed and any meta
// override (whose base kernel is re-bound to each cell's bandwidth).
GridSearchResult grid_search(const TrialConfig& prototype, const GridSpec& grid,
                             const LabeledDataset& train,
                             const LabeledDataset& validation);

// Simulated-data variant: every trial draws a fresh seeded train set (shared
// across cells), so the argmin prices data randomness as well as thinning
// randomness.
GridSearchResult grid_search_sim(const TrialConfig& prototype, const GridSpec& grid,
                                 Index train_n, uint64_t data_seed,
                                 const LabeledDataset& validation);

struct AblationRow {
  Method method = Method::kKtNW;
  Index n = 0;
  MetaMode mode = MetaMode::kBaseOnly;
  double h = 0.0;
  std::optional<double> lambda;
  int seeds = 0;
  double mean_mse = 0.0;
  double std_mse = 0.0;
};

// For each n and meta-kernel mode: per-mode grid search on held-out
// validation data, then fresh simulated train/test draws per seed (shared
// across modes) and the thinned fit under that mode. Each seed's MSE is the
// average of reps_per_seed thinning repetitions on that seed's data.
std::vector<AblationRow> run_ablation(Method kt_method, const std::vector<Index>& n_list,
                                      const std::vector<MetaMode>& modes,
                                      const GridSpec& grid, int n_seeds,
                                      KernelFamily family, double delta,
                                      uint64_t master_seed, Index test_size,
                                      int reps_per_seed = 1);

enum class OutputFormat { kCsv, kJson };

void write_results_csv(std::ostream& out, const std::vector<TrialResult>& results);
std::string results_to_json(const std::vector<TrialResult>& results);
void emit_results(const std::vector<TrialResult>& results, OutputFormat format,
                  const std::string& path);

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);
void write_grid_csv(std::ostream& out, const GridSearchResult& result);

}  // namespace ktreg
