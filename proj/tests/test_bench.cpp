#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ktreg/bench.hpp"
#include "ktreg/errors.hpp"
#include "ktreg/rng.hpp"

using namespace ktreg;

namespace {

TrialConfig make_config(Method method, Index n, double h, uint64_t seed,
                        std::optional<double> lambda = std::nullopt) {
  TrialConfig cfg;
  cfg.method = method;
  cfg.n = n;
  cfg.base = KernelSpec(KernelFamily::kGaussian, h);
  cfg.lambda = lambda;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("run_trial basic dispatch and size laws") {
  SUBCASE("full-nw on a single point, test = train, has zero error") {
    LabeledDataset train;
    train.x.resize(1, 1);
    train.x << 0.5;
    train.y.resize(1);
    train.y << 2.0;
    const auto r = run_trial(make_config(Method::kFullNW, 1, 1.0, 0), train, train);
    CHECK(r.mse == doctest::Approx(0.0));
    CHECK(r.n_out == 1);
    CHECK(r.train_seconds >= 0.0);
    CHECK(r.predict_seconds_per_1k >= 0.0);
  }

  SUBCASE("kt-krr at n = 256 yields n_out = 16") {
    const auto train = gen_sim(256, 5);
    const auto test = gen_sim(100, 6);
    const auto r = run_trial(make_config(Method::kKtKRR, 256, 0.5, 1, 1e-3), train, test);
    CHECK(r.n_out == 16);
    CHECK(r.n_used == 256);
    CHECK(r.defaulted_predictions == 0);
  }

  SUBCASE("st methods auto-truncate to a power of 4") {
    const auto train = gen_sim(300, 7);
    const auto test = gen_sim(50, 8);
    const auto r = run_trial(make_config(Method::kStNW, 300, 0.5, 2), train, test);
    CHECK(r.n_used == 256);
    CHECK(r.n_out == 16);
  }

  SUBCASE("st-krr with n_out forced to n matches full-krr") {
    const auto train = gen_sim(64, 9);
    const auto test = gen_sim(64, 10);
    auto st = make_config(Method::kStKRR, 64, 0.7, 3, 1e-3);
    st.n_out_override = 64;
    const auto full = make_config(Method::kFullKRR, 64, 0.7, 3, 1e-3);
    const auto r_st = run_trial(st, train, test);
    const auto r_full = run_trial(full, train, test);
    CHECK(std::abs(r_st.mse - r_full.mse) <= 1e-10);
  }

  SUBCASE("config validation") {
    const auto train = gen_sim(16, 11);
    CHECK_THROWS_AS(run_trial(make_config(Method::kFullKRR, 16, 1.0, 0), train, train),
                    InputError);  // missing lambda
    CHECK_THROWS_AS(
        run_trial(make_config(Method::kFullNW, 16, 1.0, 0, 1e-3), train, train),
        InputError);  // lambda on an NW method
    auto bad = make_config(Method::kStNW, 16, 1.0, 0);
    bad.meta_override = MetaKernelSpec(MetaMode::kNW, bad.base);
    CHECK_THROWS_AS(run_trial(bad, train, train), InputError);  // override on st-*
  }

  SUBCASE("results are bit-identical across runs except timing") {
    const auto train = gen_sim(64, 12);
    const auto test = gen_sim(64, 13);
    const auto cfg = make_config(Method::kKtNW, 64, 0.3, 4);
    const auto a = run_trial(cfg, train, test);
    const auto b = run_trial(cfg, train, test);
    CHECK(a.mse == b.mse);
    CHECK(a.n_out == b.n_out);
    CHECK(a.defaulted_predictions == b.defaulted_predictions);
  }

  SUBCASE("binary labels report the thresholded error rate") {
    LabeledDataset train;
    train.x.resize(4, 1);
    train.x << 0.0, 0.1, 5.0, 5.1;
    train.y.resize(4);
    train.y << 0.0, 0.0, 1.0, 1.0;
    auto cfg = make_config(Method::kFullNW, 4, 0.5, 0);
    cfg.binary_labels = true;
    const auto r = run_trial(cfg, train, train);
    CHECK(r.mse == doctest::Approx(0.0));  // separable clusters classify cleanly
  }
}

TEST_CASE("grid_search selection rules") {
  SUBCASE("a one-cell grid returns that cell") {
    const auto train = gen_sim(64, 20);
    const auto val = gen_sim(200, 21);
    GridSpec grid;
    grid.h_values = {0.25};
    grid.trials_per_cell = 2;
    const auto res = grid_search(make_config(Method::kStNW, 64, 1.0, 5), grid, train, val);
    CHECK(res.best_h == 0.25);
    CHECK_FALSE(res.best_lambda.has_value());
    CHECK(res.table.size() == 1);
  }

  SUBCASE("extreme ridge loses to a sane one on simulated data") {
    const auto train = gen_sim(1024, 22);
    const auto val = gen_sim(2000, 23);
    GridSpec grid;
    grid.h_values = {0.1};
    grid.lambda_values = {1e9, 1e-3};  // order deliberately unsorted
    grid.trials_per_cell = 1;
    const auto res =
        grid_search(make_config(Method::kFullKRR, 1024, 1.0, 6, 1e-3), grid, train, val);
    CHECK(res.best_lambda.has_value());
    CHECK(*res.best_lambda == 1e-3);
    // the 1e9 model predicts ~0, so its MSE approaches mean(y^2)
    const double mean_y2 = val.y.array().square().mean();
    bool found = false;
    for (const auto& cell : res.table) {
      if (cell.lambda && *cell.lambda == 1e9) {
        CHECK(cell.mean_mse == doctest::Approx(mean_y2).epsilon(0.01));
        found = true;
      }
    }
    CHECK(found);
  }

  SUBCASE("same seed gives an identical table") {
    const auto train = gen_sim(64, 24);
    const auto val = gen_sim(100, 25);
    GridSpec grid;
    grid.h_values = {0.1, 0.5};
    grid.trials_per_cell = 3;
    const auto proto = make_config(Method::kKtNW, 64, 1.0, 7);
    const auto a = grid_search(proto, grid, train, val);
    const auto b = grid_search(proto, grid, train, val);
    REQUIRE(a.table.size() == b.table.size());
    for (size_t i = 0; i < a.table.size(); ++i) {
      CHECK(a.table[i].mean_mse == b.table[i].mean_mse);
    }
    CHECK(a.best_h == b.best_h);
  }

  SUBCASE("validation errors") {
    const auto train = gen_sim(16, 26);
    GridSpec empty_grid;
    CHECK_THROWS_AS(grid_search(make_config(Method::kStNW, 16, 1.0, 0), empty_grid,
                                train, train),
                    InputError);
    GridSpec no_lambda;
    no_lambda.h_values = {0.5};
    CHECK_THROWS_AS(grid_search(make_config(Method::kStKRR, 16, 1.0, 0, 1e-3),
                                no_lambda, train, train),
                    InputError);
  }
}

TEST_CASE("grid_search_sim draws fresh train data per trial") {
  const auto val = gen_sim(300, 50);
  GridSpec grid;
  grid.h_values = {0.1, 0.316};
  grid.trials_per_cell = 3;
  const auto proto = make_config(Method::kStNW, 64, 1.0, 8);

  const auto a = grid_search_sim(proto, grid, 64, 1234, val);
  const auto b = grid_search_sim(proto, grid, 64, 1234, val);
  REQUIRE(a.table.size() == 2);
  for (size_t i = 0; i < a.table.size(); ++i) {
    CHECK(a.table[i].mean_mse == b.table[i].mean_mse);  // deterministic
  }

  // a different data seed changes the cell estimates
  const auto c = grid_search_sim(proto, grid, 64, 99, val);
  bool any_diff = false;
  for (size_t i = 0; i < a.table.size(); ++i) {
    any_diff |= (a.table[i].mean_mse != c.table[i].mean_mse);
  }
  CHECK(any_diff);

  // and differs from the fixed-train variant on the same seed
  const auto train = gen_sim(64, derive_seed(1234, 7100, 0));
  const auto d = grid_search(proto, grid, train, val);
  bool differs_from_fixed = false;
  for (size_t i = 0; i < a.table.size(); ++i) {
    differs_from_fixed |= (a.table[i].mean_mse != d.table[i].mean_mse);
  }
  CHECK(differs_from_fixed);
}

TEST_CASE("run_ablation emits one row per (n, mode)") {
  GridSpec grid;
  grid.h_values = {0.1, 0.316};
  grid.trials_per_cell = 1;
  grid.validation_size = 200;
  const auto rows = run_ablation(Method::kKtNW, {64}, {MetaMode::kNW}, grid, 3,
                                 KernelFamily::kWendland0, 0.5, 99, 200);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].n == 64);
  CHECK(rows[0].mode == MetaMode::kNW);
  CHECK(rows[0].seeds == 3);
  CHECK(rows[0].mean_mse > 0.0);
  CHECK(rows[0].std_mse >= 0.0);

  // averaging repetitions per seed keeps the row shape and stays deterministic
  const auto rep_rows = run_ablation(Method::kKtNW, {64}, {MetaMode::kNW}, grid, 3,
                                     KernelFamily::kWendland0, 0.5, 99, 200, 2);
  REQUIRE(rep_rows.size() == 1);
  const auto rep_rows2 = run_ablation(Method::kKtNW, {64}, {MetaMode::kNW}, grid, 3,
                                      KernelFamily::kWendland0, 0.5, 99, 200, 2);
  CHECK(rep_rows[0].mean_mse == rep_rows2[0].mean_mse);

  // estimator must be a kt method
  CHECK_THROWS_AS(run_ablation(Method::kStNW, {64}, {MetaMode::kNW}, grid, 1,
                               KernelFamily::kWendland0, 0.5, 0, 100),
                  InputError);
}

TEST_CASE("emit_results CSV and JSON forms") {
  const auto train = gen_sim(16, 30);
  const auto test = gen_sim(16, 31);
  std::vector<TrialResult> results;
  results.push_back(run_trial(make_config(Method::kFullNW, 16, 0.5, 1), train, test));

  SUBCASE("one result gives header plus one row") {
    std::ostringstream out;
    write_results_csv(out, results);
    const std::string text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(text.rfind("method,n,n_out,h,lambda,seed,mse,train_seconds,"
                     "predict_seconds_per_1k,defaulted_predictions\n", 0) == 0);
    CHECK(text.back() == '\n');
  }

  SUBCASE("100 trials give 101 lines") {
    std::vector<TrialResult> many;
    for (int i = 0; i < 100; ++i) many.push_back(results[0]);
    std::ostringstream out;
    write_results_csv(out, many);
    const std::string text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 101);
  }

  SUBCASE("JSON round-trips to a parse-equal structure") {
    const std::string text = results_to_json(results);
    const auto parsed = nlohmann::json::parse(text);
    REQUIRE(parsed.is_array());
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0]["method"] == "full-nw");
    CHECK(parsed[0]["n"] == 16);
    CHECK(parsed[0]["lambda"].is_null());
    CHECK(nlohmann::json::parse(parsed.dump()) == parsed);
  }

  SUBCASE("emit_results writes files and rejects unwritable paths") {
    const auto path = (std::filesystem::temp_directory_path() / "ktreg_res.csv").string();
    emit_results(results, OutputFormat::kCsv, path);
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    CHECK(first.rfind("method,", 0) == 0);
    CHECK_THROWS_AS(
        emit_results(results, OutputFormat::kCsv, "/nonexistent/dir/out.csv"), IoError);
    CHECK_THROWS_AS(emit_results({}, OutputFormat::kCsv, path), InputError);
  }
}

TEST_CASE("ablation CSV shape") {
  std::vector<AblationRow> rows;
  rows.push_back({Method::kKtNW, 256, MetaMode::kNW, 0.1, std::nullopt, 20, 1.5, 0.2});
  std::ostringstream out;
  write_ablation_csv(out, rows);
  const std::string text = out.str();
  CHECK(text.rfind("estimator,n,meta,h,lambda,seeds,mean_mse,std_mse\n", 0) == 0);
  CHECK(text.find("kt-nw,256,nw,0.1,,20,1.5,0.2\n") != std::string::npos);
}

TEST_CASE("method names round-trip") {
  for (const auto m : {Method::kFullNW, Method::kStNW, Method::kKtNW, Method::kFullKRR,
                       Method::kStKRR, Method::kKtKRR}) {
    CHECK(parse_method(method_name(m)) == m);
  }
  CHECK_THROWS_AS(parse_method("nope"), InputError);
  CHECK(default_trials_per_cell(Method::kKtNW) == 100);
  CHECK(default_trials_per_cell(Method::kFullNW) == 1);
}
