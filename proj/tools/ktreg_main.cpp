// Command-line driver for the supervised thinning benchmark harness.
//
// Exit codes: 0 success, 2 input error, 3 numerical error, 4 I/O error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ktreg/bench.hpp"
#include "ktreg/data.hpp"
#include "ktreg/errors.hpp"
#include "ktreg/regression.hpp"
#include "ktreg/rng.hpp"
#include "ktreg/thinning.hpp"

namespace {

using namespace ktreg;

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InputError("cannot parse number '" + item + "' in list '" + text + "'");
    }
  }
  if (out.empty()) throw InputError("empty list: '" + text + "'");
  return out;
}

std::vector<Index> parse_index_list(const std::string& text) {
  std::vector<Index> out;
  for (const double v : parse_double_list(text)) out.push_back(static_cast<Index>(v));
  return out;
}

OutputFormat parse_format(const std::string& text) {
  if (text == "csv") return OutputFormat::kCsv;
  if (text == "json") return OutputFormat::kJson;
  throw InputError("unknown format '" + text + "' (expected csv|json)");
}

// Default target column: the last column of the file.
std::string last_column_target(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open CSV file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty file");
  size_t columns = 1;
  for (const char ch : line) {
    if (ch == ',') ++columns;
  }
  if (has_header) {
    std::string name = line;
    size_t pos = name.rfind(',');
    if (pos != std::string::npos) name = name.substr(pos + 1);
    if (!name.empty() && name.back() == '\r') name.pop_back();
    if (!name.empty()) return name;
  }
  return std::to_string(columns - 1);
}

struct SimulateArgs {
  std::string method, kernel, out, format = "csv";
  Index n = 0;
  int trials = 1;
  double h = 0.0;
  double lambda = -1.0;
  double delta = 0.5;
  uint64_t seed = 0;
  Index test_size = 10000;
};

void run_simulate(const SimulateArgs& a) {
  TrialConfig cfg;
  cfg.method = parse_method(a.method);
  cfg.n = a.n;
  cfg.base = KernelSpec(parse_kernel_family(a.kernel), a.h);
  if (a.lambda > 0) cfg.lambda = a.lambda;
  cfg.delta = a.delta;

  std::vector<TrialResult> results;
  for (int t = 0; t < a.trials; ++t) {
    const auto tt = static_cast<uint64_t>(t);
    const LabeledDataset train = gen_sim(a.n, derive_seed(a.seed, 1, tt));
    const LabeledDataset test = gen_sim(a.test_size, derive_seed(a.seed, 2, tt));
    cfg.seed = derive_seed(a.seed, 3, tt);
    results.push_back(run_trial(cfg, train, test));
  }
  emit_results(results, parse_format(a.format), a.out);
  std::cerr << "wrote " << results.size() << " trial(s) to " << a.out << "\n";
}

struct ThinArgs {
  std::string input, kernel, meta, out, target, summary_out;
  bool no_header = false;
  double h = 0.0;
  double delta = 0.5;
  uint64_t seed = 0;
  int g = -1;
};

void run_thin(const ThinArgs& a) {
  const bool has_header = !a.no_header;
  const std::string target =
      a.target.empty() ? last_column_target(a.input, has_header) : a.target;
  const LabeledDataset data = load_csv(a.input, target, has_header);
  if (!a.summary_out.empty()) {
    std::ofstream s(a.summary_out);
    if (!s) throw IoError("cannot open for writing: " + a.summary_out);
    s << dataset_summary_json(data) << '\n';
  }

  ThinningConfig config;
  config.meta = MetaKernelSpec(parse_meta_mode(a.meta),
                               KernelSpec(parse_kernel_family(a.kernel), a.h));
  config.delta = a.delta;
  config.seed = derive_seed(a.seed, 12);
  if (a.g >= 0) config.g_override = a.g;

  const LabeledDataset* thin_data = &data;
  TruncateResult truncated;
  if (!is_pow4(data.n())) {
    truncated = truncate_pow4(data, derive_seed(a.seed, 11));
    std::cerr << "note: truncated " << data.n() << " rows to " << truncated.data.n()
              << " (largest power of 4) before thinning\n";
    thin_data = &truncated.data;
  }

  Coreset coreset = kt_compress_pp(*thin_data, config);
  if (thin_data == &truncated.data) {
    coreset = remap_to_source_rows(coreset, truncated.source_rows, data.n());
  }
  write_coreset_csv(a.out, coreset);
  std::cerr << "wrote coreset of size " << coreset.indices.size() << " to " << a.out
            << "\n";
}

struct AblationArgs {
  std::string estimator, out, kernel, h_grid, lambda_grid;
  std::string n_list = "256,1024,4096";
  int trials = 20;
  int reps_per_seed = 1;
  int trials_per_cell = -1;
  uint64_t seed = 0;
  double delta = 0.5;
  Index test_size = 10000;
  Index validation_size = 10000;
};

void run_ablation_cmd(const AblationArgs& a) {
  Method method;
  std::vector<MetaMode> modes;
  KernelFamily family;
  if (a.estimator == "nw") {
    method = Method::kKtNW;
    modes = {MetaMode::kBaseOnly, MetaMode::kConcatenated, MetaMode::kNW};
    family = KernelFamily::kWendland0;
  } else if (a.estimator == "krr") {
    method = Method::kKtKRR;
    modes = {MetaMode::kBaseOnly, MetaMode::kConcatenated, MetaMode::kRR};
    family = KernelFamily::kGaussian;
  } else {
    throw InputError("unknown estimator '" + a.estimator + "' (expected nw|krr)");
  }
  if (!a.kernel.empty()) family = parse_kernel_family(a.kernel);

  GridSpec grid;
  grid.h_values = a.h_grid.empty() ? default_h_grid() : parse_double_list(a.h_grid);
  grid.lambda_values =
      a.lambda_grid.empty() ? default_lambda_grid() : parse_double_list(a.lambda_grid);
  grid.trials_per_cell =
      a.trials_per_cell > 0 ? a.trials_per_cell : default_trials_per_cell(method);
  grid.validation_size = a.validation_size;

  const auto rows = run_ablation(method, parse_index_list(a.n_list), modes, grid,
                                 a.trials, family, a.delta, a.seed, a.test_size,
                                 a.reps_per_seed);
  std::ofstream out(a.out);
  if (!out) throw IoError("cannot open for writing: " + a.out);
  write_ablation_csv(out, rows);
  if (!out.good()) throw IoError("write failed: " + a.out);
  std::cerr << "wrote " << rows.size() << " ablation row(s) to " << a.out << "\n";
}

struct BenchArgs {
  std::string train, test, target, method, kernel, out, format = "csv", summary_out;
  double split_fraction = 0.8;
  double h = 0.0;
  double lambda = -1.0;
  double delta = 0.5;
  uint64_t seed = 0;
  int trials = 1;
  bool standardize_features = false;
  bool binary_labels = false;
  bool no_header = false;
};

void run_bench(const BenchArgs& a) {
  const bool has_header = !a.no_header;
  LabeledDataset train = load_csv(a.train, a.target, has_header);
  if (!a.summary_out.empty()) {
    std::ofstream s(a.summary_out);
    if (!s) throw IoError("cannot open for writing: " + a.summary_out);
    s << dataset_summary_json(train) << '\n';
  }

  LabeledDataset test;
  if (!a.test.empty()) {
    test = load_csv(a.test, a.target, has_header);
    if (a.standardize_features) {
      auto [std_train, stats] = standardize(train);
      train = std::move(std_train);
      test = apply_standardization(test, stats);
    }
  } else {
    if (a.standardize_features) {
      train = standardize(train).first;
    }
    auto [tr, te] = split(train, a.split_fraction, 1.0 - a.split_fraction,
                          derive_seed(a.seed, 21));
    train = std::move(tr);
    test = std::move(te);
  }

  TrialConfig cfg;
  cfg.method = parse_method(a.method);
  cfg.n = train.n();
  cfg.base = KernelSpec(parse_kernel_family(a.kernel), a.h);
  if (a.lambda > 0) cfg.lambda = a.lambda;
  cfg.delta = a.delta;
  cfg.binary_labels = a.binary_labels;

  std::vector<TrialResult> results;
  for (int t = 0; t < a.trials; ++t) {
    cfg.seed = derive_seed(a.seed, 22, static_cast<uint64_t>(t));
    results.push_back(run_trial(cfg, train, test));
  }
  emit_results(results, parse_format(a.format), a.out);
  std::cerr << "wrote " << results.size() << " trial(s) to " << a.out << "\n";
}

struct GridArgs {
  std::string method, kernel, out, h_grid, lambda_grid, train, target;
  Index n = 0;
  int trials_per_cell = -1;
  Index validation_size = 10000;
  uint64_t seed = 0;
  double delta = 0.5;
  bool no_header = false;
};

void run_gridsearch(const GridArgs& a) {
  TrialConfig prototype;
  prototype.method = parse_method(a.method);
  prototype.base = KernelSpec(parse_kernel_family(a.kernel), 1.0);
  if (is_krr_method(prototype.method)) prototype.lambda = 1e-3;  // placeholder
  prototype.delta = a.delta;
  prototype.seed = derive_seed(a.seed, 31);

  GridSpec grid;
  grid.h_values = a.h_grid.empty() ? default_h_grid() : parse_double_list(a.h_grid);
  grid.lambda_values =
      a.lambda_grid.empty() ? default_lambda_grid() : parse_double_list(a.lambda_grid);
  grid.trials_per_cell = a.trials_per_cell > 0
                             ? a.trials_per_cell
                             : default_trials_per_cell(prototype.method);
  grid.validation_size = a.validation_size;

  LabeledDataset train, validation;
  if (!a.train.empty()) {
    if (a.target.empty()) throw InputError("gridsearch on a CSV needs --target");
    const LabeledDataset full = load_csv(a.train, a.target, !a.no_header);
    auto [tr, va] = split(full, 0.8, 0.2, derive_seed(a.seed, 32));
    train = std::move(tr);
    validation = std::move(va);
  } else {
    if (a.n < 1) throw InputError("gridsearch needs --n (simulated) or --train CSV");
    prototype.n = a.n;
    train = gen_sim(a.n, derive_seed(a.seed, 33));
    validation = gen_sim(grid.validation_size, derive_seed(a.seed, 34));
  }

  const GridSearchResult result = grid_search(prototype, grid, train, validation);
  std::ofstream out(a.out);
  if (!out) throw IoError("cannot open for writing: " + a.out);
  write_grid_csv(out, result);
  if (!out.good()) throw IoError("write failed: " + a.out);

  std::cout << "best h = " << result.best_h;
  if (result.best_lambda) std::cout << ", lambda = " << *result.best_lambda;
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel-thinned nonparametric regression harness"};
  app.require_subcommand(1);
  // "--h" is a real option (bandwidth), so help must not claim "-h".
  app.set_help_flag("--help", "Print help");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Seeded trials on simulated data");
  simulate->set_help_flag("--help", "Print help");
  simulate->add_option("--method", sim.method)->required();
  simulate->add_option("--n", sim.n)->required();
  simulate->add_option("--trials", sim.trials)->default_val(1);
  simulate->add_option("--kernel", sim.kernel)->required();
  simulate->add_option("--h", sim.h)->required();
  simulate->add_option("--lambda", sim.lambda);
  simulate->add_option("--delta", sim.delta)->default_val(0.5);
  simulate->add_option("--seed", sim.seed)->required();
  simulate->add_option("--out", sim.out)->required();
  simulate->add_option("--format", sim.format)->default_val("csv");
  simulate->add_option("--test-size", sim.test_size)->default_val(10000);
  simulate->callback([&] { run_simulate(sim); });

  ThinArgs thin;
  auto* thin_cmd = app.add_subcommand("thin", "Compress a labeled CSV to a coreset");
  thin_cmd->set_help_flag("--help", "Print help");
  thin_cmd->add_option("--input", thin.input)->required();
  thin_cmd->add_option("--target", thin.target,
                       "target column (default: last column)");
  thin_cmd->add_option("--kernel", thin.kernel)->required();
  thin_cmd->add_option("--h", thin.h)->required();
  thin_cmd->add_option("--meta", thin.meta, "base|concat|nw|rr")->required();
  thin_cmd->add_option("--delta", thin.delta)->default_val(0.5);
  thin_cmd->add_option("--seed", thin.seed)->required();
  thin_cmd->add_option("--out", thin.out)->required();
  thin_cmd->add_option("--g", thin.g, "compression level override");
  thin_cmd->add_flag("--no-header", thin.no_header);
  thin_cmd->add_option("--summary-out", thin.summary_out,
                       "write a JSON dataset summary here");
  thin_cmd->callback([&] { run_thin(thin); });

  AblationArgs abl;
  auto* ablation = app.add_subcommand("ablation", "Meta-kernel ablation sweep");
  ablation->set_help_flag("--help", "Print help");
  ablation->add_option("--estimator", abl.estimator, "nw|krr")->required();
  ablation->add_option("--n-list", abl.n_list)->default_val("256,1024,4096");
  ablation->add_option("--trials", abl.trials)->default_val(20);
  ablation->add_option("--reps-per-seed", abl.reps_per_seed)->default_val(1);
  ablation->add_option("--seed", abl.seed)->required();
  ablation->add_option("--out", abl.out)->required();
  ablation->add_option("--kernel", abl.kernel, "override the per-estimator default");
  ablation->add_option("--h-grid", abl.h_grid);
  ablation->add_option("--lambda-grid", abl.lambda_grid);
  ablation->add_option("--trials-per-cell", abl.trials_per_cell);
  ablation->add_option("--test-size", abl.test_size)->default_val(10000);
  ablation->add_option("--validation-size", abl.validation_size)->default_val(10000);
  ablation->add_option("--delta", abl.delta)->default_val(0.5);
  ablation->callback([&] { run_ablation_cmd(abl); });

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark a method on CSV data");
  bench_cmd->set_help_flag("--help", "Print help");
  bench_cmd->add_option("--train", bench.train)->required();
  bench_cmd->add_option("--target", bench.target)->required();
  bench_cmd->add_option("--test", bench.test, "separate test CSV");
  bench_cmd->add_option("--split", bench.split_fraction,
                        "train fraction when no --test is given")
      ->default_val(0.8);
  bench_cmd->add_option("--method", bench.method)->required();
  bench_cmd->add_option("--kernel", bench.kernel)->required();
  bench_cmd->add_option("--h", bench.h)->required();
  bench_cmd->add_option("--lambda", bench.lambda);
  bench_cmd->add_option("--delta", bench.delta)->default_val(0.5);
  bench_cmd->add_option("--seed", bench.seed)->required();
  bench_cmd->add_option("--out", bench.out)->required();
  bench_cmd->add_option("--trials", bench.trials)->default_val(1);
  bench_cmd->add_option("--format", bench.format)->default_val("csv");
  bench_cmd->add_flag("--standardize", bench.standardize_features);
  bench_cmd->add_flag("--binary-labels", bench.binary_labels);
  bench_cmd->add_flag("--no-header", bench.no_header);
  bench_cmd->add_option("--summary-out", bench.summary_out);
  bench_cmd->callback([&] { run_bench(bench); });

  GridArgs gridargs;
  auto* grid_cmd = app.add_subcommand("gridsearch", "Hyperparameter grid search");
  grid_cmd->set_help_flag("--help", "Print help");
  grid_cmd->add_option("--method", gridargs.method)->required();
  grid_cmd->add_option("--kernel", gridargs.kernel)->required();
  grid_cmd->add_option("--n", gridargs.n, "simulated train size");
  grid_cmd->add_option("--train", gridargs.train, "CSV alternative to --n");
  grid_cmd->add_option("--target", gridargs.target);
  grid_cmd->add_option("--h-grid", gridargs.h_grid);
  grid_cmd->add_option("--lambda-grid", gridargs.lambda_grid);
  grid_cmd->add_option("--trials-per-cell", gridargs.trials_per_cell);
  grid_cmd->add_option("--validation-size", gridargs.validation_size)->default_val(10000);
  grid_cmd->add_option("--seed", gridargs.seed)->required();
  grid_cmd->add_option("--out", gridargs.out)->required();
  grid_cmd->add_option("--delta", gridargs.delta)->default_val(0.5);
  grid_cmd->add_flag("--no-header", gridargs.no_header);
  grid_cmd->callback([&] { run_gridsearch(gridargs); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ktreg::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const ktreg::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const ktreg::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
