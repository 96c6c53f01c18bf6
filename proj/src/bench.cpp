#include "ktreg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>

#include <nlohmann/json.hpp>

#include "ktreg/errors.hpp"
#include "ktreg/regression.hpp"
#include "ktreg/rng.hpp"
#include "ktreg/thinning.hpp"

namespace ktreg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

Index isqrt_exact(Index n) {
  Index r = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

void validate_config(const TrialConfig& cfg) {
  if (is_krr_method(cfg.method) != cfg.lambda.has_value()) {
    throw InputError(cfg.lambda ? "lambda given for a non-KRR method"
                                : "KRR method needs lambda");
  }
  if (cfg.meta_override && !is_kt_method(cfg.method)) {
    throw InputError("meta_override is only valid for kt-* methods");
  }
  if (cfg.lambda && !(*cfg.lambda > 0.0)) {
    throw InputError("lambda must be positive");
  }
}

MetaKernelSpec default_meta(Method method, const KernelSpec& base) {
  return MetaKernelSpec(
      method == Method::kKtNW ? MetaMode::kNW : MetaMode::kRR, base);
}

}  // namespace

std::string method_name(Method method) {
  switch (method) {
    case Method::kFullNW: return "full-nw";
    case Method::kStNW: return "st-nw";
    case Method::kKtNW: return "kt-nw";
    case Method::kFullKRR: return "full-krr";
    case Method::kStKRR: return "st-krr";
    case Method::kKtKRR: return "kt-krr";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "full-nw") return Method::kFullNW;
  if (name == "st-nw") return Method::kStNW;
  if (name == "kt-nw") return Method::kKtNW;
  if (name == "full-krr") return Method::kFullKRR;
  if (name == "st-krr") return Method::kStKRR;
  if (name == "kt-krr") return Method::kKtKRR;
  throw InputError("unknown method: '" + name +
                   "' (expected full-nw|st-nw|kt-nw|full-krr|st-krr|kt-krr)");
}

bool is_krr_method(Method m) {
  return m == Method::kFullKRR || m == Method::kStKRR || m == Method::kKtKRR;
}

bool is_thinned_method(Method m) {
  return m == Method::kStNW || m == Method::kKtNW || m == Method::kStKRR ||
         m == Method::kKtKRR;
}

bool is_kt_method(Method m) { return m == Method::kKtNW || m == Method::kKtKRR; }

std::vector<double> default_h_grid() {
  return {0.01, 0.0316, 0.1, 0.316, 1.0, 3.16, 10.0};
}

std::vector<double> default_lambda_grid() {
  return {1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
}

int default_trials_per_cell(Method method) {
  return is_thinned_method(method) ? 100 : 1;
}

TrialResult run_trial(const TrialConfig& cfg, const LabeledDataset& train,
                      const LabeledDataset& test) {
  validate_config(cfg);
  if (train.n() < 1 || test.n() < 1) throw InputError("run_trial: empty dataset");
  if (train.dim() != test.dim()) {
    throw InputError("run_trial: train/test dimension mismatch");
  }

  TrialResult result;
  result.config = cfg;

  LabeledDataset truncated;
  const LabeledDataset* fit_data = &train;

  // Thinned methods need a power-of-4 train size, capped at desk scale 4^8.
  constexpr Index kDeskCap = 65536;
  const auto t_train0 = Clock::now();
  if (is_thinned_method(cfg.method)) {
    const Index target = std::min(pow4_floor(train.n()), kDeskCap);
    if (target != train.n()) {
      const Coreset keep = standard_thin(train.n(), target, derive_seed(cfg.seed, 101));
      truncated = take_rows(train, keep.indices);
      std::cerr << "note: " << method_name(cfg.method) << " truncated train set from "
                << train.n() << " to " << truncated.n() << " rows (power of 4)\n";
      fit_data = &truncated;
    }
  }
  result.n_used = fit_data->n();

  std::optional<NWModel> nw;
  std::optional<KRRModel> krr;
  switch (cfg.method) {
    case Method::kFullNW:
      nw = fit_nw(*fit_data, cfg.base);
      break;
    case Method::kFullKRR:
      krr = fit_krr(*fit_data, cfg.base, *cfg.lambda);
      break;
    case Method::kStNW:
    case Method::kStKRR: {
      const Index n_out = cfg.n_out_override.value_or(isqrt_exact(fit_data->n()));
      const Coreset coreset =
          standard_thin(fit_data->n(), n_out, derive_seed(cfg.seed, 102));
      if (cfg.method == Method::kStNW) {
        nw = fit_nw(*fit_data, coreset, cfg.base);
      } else {
        krr = fit_krr(*fit_data, coreset, cfg.base, *cfg.lambda);
      }
      break;
    }
    case Method::kKtNW:
    case Method::kKtKRR: {
      ThinningConfig thin;
      thin.meta = cfg.meta_override.value_or(default_meta(cfg.method, cfg.base));
      thin.delta = cfg.delta;
      thin.seed = derive_seed(cfg.seed, 102);
      Coreset coreset = kt_compress_pp(*fit_data, thin);
      if (cfg.n_out_override && *cfg.n_out_override != static_cast<Index>(coreset.indices.size())) {
        throw InputError("kt methods produce exactly sqrt(n) points; n_out_override not supported");
      }
      if (cfg.method == Method::kKtNW) {
        nw = fit_nw(*fit_data, coreset, cfg.base);
      } else {
        krr = fit_krr(*fit_data, coreset, cfg.base, *cfg.lambda);
      }
      break;
    }
  }
  result.train_seconds = seconds_since(t_train0);
  result.n_out = nw ? nw->support_x.rows() : krr->support_x.rows();

  const auto t_pred0 = Clock::now();
  double acc = 0.0;
  Index defaulted = 0;
  Index misclassified = 0;
  for (Index i = 0; i < test.n(); ++i) {
    double pred;
    if (nw) {
      const auto p = predict_nw_checked(*nw, test.x.row(i).transpose());
      pred = p.value;
      if (p.defaulted) ++defaulted;
    } else {
      pred = predict_krr(*krr, test.x.row(i).transpose());
    }
    if (cfg.binary_labels) {
      const bool predicted = pred > 0.5;
      const bool actual = test.y(i) > 0.5;
      if (predicted != actual) ++misclassified;
    } else {
      const double err = pred - test.y(i);
      acc += err * err;
    }
  }
  const double predict_seconds = seconds_since(t_pred0);

  result.mse = cfg.binary_labels
                   ? static_cast<double>(misclassified) / static_cast<double>(test.n())
                   : acc / static_cast<double>(test.n());
  result.predict_seconds_per_1k =
      predict_seconds / static_cast<double>(test.n()) * 1000.0;
  result.defaulted_predictions = defaulted;
  return result;
}

namespace {

GridSearchResult grid_search_impl(
    const TrialConfig& prototype, const GridSpec& grid,
    const std::function<const LabeledDataset&(int)>& train_for_trial,
    const LabeledDataset& validation) {
  if (grid.h_values.empty()) throw InputError("grid_search: empty bandwidth grid");
  if (grid.trials_per_cell < 1) throw InputError("grid_search: trials_per_cell must be >= 1");
  const bool krr = is_krr_method(prototype.method);
  if (krr && grid.lambda_values.empty()) {
    throw InputError("grid_search: KRR methods need a lambda grid");
  }
  for (const double h : grid.h_values) {
    if (!(h > 0.0)) throw InputError("grid_search: bandwidths must be positive");
  }

  std::vector<double> hs = grid.h_values;
  std::sort(hs.begin(), hs.end());
  std::vector<std::optional<double>> lambdas;
  if (krr) {
    std::vector<double> ls = grid.lambda_values;
    std::sort(ls.begin(), ls.end());
    for (const double l : ls) lambdas.emplace_back(l);
  } else {
    lambdas.emplace_back(std::nullopt);
  }

  GridSearchResult result;
  bool first = true;
  double best = 0.0;
  for (const double h : hs) {
    for (const auto& lambda : lambdas) {
      TrialConfig cfg = prototype;
      cfg.base = KernelSpec(prototype.base.family(), h);
      cfg.lambda = lambda;
      if (prototype.meta_override) {
        cfg.meta_override = MetaKernelSpec(prototype.meta_override->mode(), cfg.base);
      }
      double mean = 0.0;
      for (int t = 0; t < grid.trials_per_cell; ++t) {
        cfg.seed = derive_seed(prototype.seed, 7000, static_cast<uint64_t>(t));
        mean += run_trial(cfg, train_for_trial(t), validation).mse;
      }
      mean /= static_cast<double>(grid.trials_per_cell);
      result.table.push_back({h, lambda, mean});
      if (first || mean < best) {
        first = false;
        best = mean;
        result.best_h = h;
        result.best_lambda = lambda;
      }
    }
  }
  return result;
}

}  // namespace

GridSearchResult grid_search(const TrialConfig& prototype, const GridSpec& grid,
                             const LabeledDataset& train,
                             const LabeledDataset& validation) {
  return grid_search_impl(
      prototype, grid, [&](int) -> const LabeledDataset& { return train; },
      validation);
}

GridSearchResult grid_search_sim(const TrialConfig& prototype, const GridSpec& grid,
                                 Index train_n, uint64_t data_seed,
                                 const LabeledDataset& validation) {
  if (grid.trials_per_cell < 1) throw InputError("grid_search: trials_per_cell must be >= 1");
  std::vector<LabeledDataset> trains;
  trains.reserve(static_cast<size_t>(grid.trials_per_cell));
  for (int t = 0; t < grid.trials_per_cell; ++t) {
    trains.push_back(gen_sim(train_n, derive_seed(data_seed, 7100, static_cast<uint64_t>(t))));
  }
  return grid_search_impl(
      prototype, grid,
      [&](int t) -> const LabeledDataset& { return trains[static_cast<size_t>(t)]; },
      validation);
}

std::vector<AblationRow> run_ablation(Method kt_method, const std::vector<Index>& n_list,
                                      const std::vector<MetaMode>& modes,
                                      const GridSpec& grid, int n_seeds,
                                      KernelFamily family, double delta,
                                      uint64_t master_seed, Index test_size,
                                      int reps_per_seed) {
  if (!is_kt_method(kt_method)) {
    throw InputError("run_ablation: estimator must be a kt-* method");
  }
  if (n_list.empty() || modes.empty() || n_seeds < 1 || reps_per_seed < 1) {
    throw InputError("run_ablation: need non-empty n_list, modes, seeds >= 1, reps >= 1");
  }

  std::vector<AblationRow> rows;
  for (const Index n : n_list) {
    const auto tag = static_cast<uint64_t>(n);
    const LabeledDataset validation =
        gen_sim(grid.validation_size, derive_seed(master_seed, tag, 1));

    for (const MetaMode mode : modes) {
      TrialConfig prototype;
      prototype.method = kt_method;
      prototype.n = n;
      prototype.base = KernelSpec(family, 1.0);
      prototype.lambda = is_krr_method(kt_method) ? std::optional<double>(1e-3)
                                                  : std::nullopt;
      prototype.delta = delta;
      prototype.seed = derive_seed(master_seed, tag, 3, static_cast<uint64_t>(mode));
      prototype.meta_override = MetaKernelSpec(mode, prototype.base);

      // Grid data seeds exclude the mode, so every mode tunes on the same
      // fresh train draws.
      const GridSearchResult gs = grid_search_sim(
          prototype, grid, n, derive_seed(master_seed, tag, 2), validation);

      double mean = 0.0, m2 = 0.0;
      std::vector<double> mses;
      mses.reserve(static_cast<size_t>(n_seeds));
      for (int t = 0; t < n_seeds; ++t) {
        const auto tt = static_cast<uint64_t>(t);
        const LabeledDataset train = gen_sim(n, derive_seed(master_seed, tag, 4, tt));
        const LabeledDataset test =
            gen_sim(test_size, derive_seed(master_seed, tag, 5, tt));
        TrialConfig cfg = prototype;
        cfg.base = KernelSpec(family, gs.best_h);
        cfg.lambda = gs.best_lambda;
        cfg.meta_override = MetaKernelSpec(mode, cfg.base);
        double seed_mse = 0.0;
        for (int r = 0; r < reps_per_seed; ++r) {
          cfg.seed = derive_seed(derive_seed(master_seed, tag, 6, tt),
                                 static_cast<uint64_t>(mode), static_cast<uint64_t>(r));
          seed_mse += run_trial(cfg, train, test).mse;
        }
        mses.push_back(seed_mse / static_cast<double>(reps_per_seed));
      }
      for (const double v : mses) mean += v;
      mean /= static_cast<double>(n_seeds);
      for (const double v : mses) m2 += (v - mean) * (v - mean);
      const double sd = n_seeds > 1 ? std::sqrt(m2 / static_cast<double>(n_seeds - 1)) : 0.0;

      rows.push_back({kt_method, n, mode, gs.best_h, gs.best_lambda, n_seeds, mean, sd});
    }
  }
  return rows;
}

void write_results_csv(std::ostream& out, const std::vector<TrialResult>& results) {
  out << "method,n,n_out,h,lambda,seed,mse,train_seconds,predict_seconds_per_1k,"
         "defaulted_predictions\n";
  for (const auto& r : results) {
    out << method_name(r.config.method) << ',' << r.n_used << ',' << r.n_out << ','
        << format_g9(r.config.base.bandwidth()) << ','
        << (r.config.lambda ? format_g9(*r.config.lambda) : std::string()) << ','
        << r.config.seed << ',' << format_g9(r.mse) << ','
        << format_g9(r.train_seconds) << ',' << format_g9(r.predict_seconds_per_1k)
        << ',' << r.defaulted_predictions << '\n';
  }
}

std::string results_to_json(const std::vector<TrialResult>& results) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json j;
    j["method"] = method_name(r.config.method);
    j["n"] = r.n_used;
    j["n_out"] = r.n_out;
    j["h"] = r.config.base.bandwidth();
    if (r.config.lambda) {
      j["lambda"] = *r.config.lambda;
    } else {
      j["lambda"] = nullptr;
    }
    j["seed"] = r.config.seed;
    j["mse"] = r.mse;
    j["train_seconds"] = r.train_seconds;
    j["predict_seconds_per_1k"] = r.predict_seconds_per_1k;
    j["defaulted_predictions"] = r.defaulted_predictions;
    arr.push_back(j);
  }
  return arr.dump(2);
}

void emit_results(const std::vector<TrialResult>& results, OutputFormat format,
                  const std::string& path) {
  if (results.empty()) throw InputError("emit_results: no results to write");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  if (format == OutputFormat::kCsv) {
    write_results_csv(out, results);
  } else {
    out << results_to_json(results) << '\n';
  }
  if (!out.good()) throw IoError("write failed: " + path);
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "estimator,n,meta,h,lambda,seeds,mean_mse,std_mse\n";
  for (const auto& r : rows) {
    out << method_name(r.method) << ',' << r.n << ',' << meta_mode_name(r.mode) << ','
        << format_g9(r.h) << ',' << (r.lambda ? format_g9(*r.lambda) : std::string())
        << ',' << r.seeds << ',' << format_g9(r.mean_mse) << ','
        << format_g9(r.std_mse) << '\n';
  }
}

void write_grid_csv(std::ostream& out, const GridSearchResult& result) {
  out << "h,lambda,mean_mse,best\n";
  for (const auto& cell : result.table) {
    const bool best = cell.h == result.best_h && cell.lambda == result.best_lambda;
    out << format_g9(cell.h) << ','
        << (cell.lambda ? format_g9(*cell.lambda) : std::string()) << ','
        << format_g9(cell.mean_mse) << ',' << (best ? 1 : 0) << '\n';
  }
}

}  // namespace ktreg
