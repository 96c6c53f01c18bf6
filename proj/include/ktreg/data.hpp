#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ktreg {

using Index = Eigen::Index;

struct LabeledDataset {
  Eigen::MatrixXd x;  // n x d, one point per row
  Eigen::VectorXd y;  // n
  std::vector<std::string> feature_names;  // empty, or one name per column

  Index n() const { return x.rows(); }
  Index dim() const { return x.cols(); }
};

struct StandardizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std_dev;  // set to 1.0 for constant columns
};

// Throws InputError on NaN/Inf entries or inconsistent sizes.
void validate(const LabeledDataset& data);

// f*(x) = 8 sin(8 pi x) exp(x), the regression target of the synthetic task.
double sim_regression_fn(double x);

// Synthetic 1-d draw: x ~ Unif[-sqrt(3), sqrt(3)] (unit variance),
// y = f*(x) + N(0, 1).
LabeledDataset gen_sim(Index n, uint64_t seed);

// target_column is a header name or, failing that, a 0-based column index
// written in digits. Remaining numeric columns become features in file order.
LabeledDataset load_csv(const std::string& path, const std::string& target_column,
                        bool has_header);

// Per-feature mean 0 / std 1; constant columns become all-zero with std
// stat 1. Labels are untouched.
std::pair<LabeledDataset, StandardizationStats> standardize(const LabeledDataset& data);

LabeledDataset apply_standardization(const LabeledDataset& data,
                                     const StandardizationStats& stats);
LabeledDataset invert_standardization(const LabeledDataset& data,
                                      const StandardizationStats& stats);

// Seeded uniform permutation with a contiguous cut. Fractions must be
// positive and sum to 1; both sides must be non-empty.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& data,
                                                double train_fraction,
                                                double test_fraction,
                                                uint64_t seed);

Index pow4_floor(Index n);
bool is_pow4(Index n);

struct TruncateResult {
  LabeledDataset data;
  std::vector<Index> source_rows;  // row in the input for each kept row
};

// Uniform subsample without replacement down to the largest power of 4 <= n,
// kept in draw order. Identity when n is already a power of 4.
TruncateResult truncate_pow4(const LabeledDataset& data, uint64_t seed);

LabeledDataset take_rows(const LabeledDataset& data, const std::vector<Index>& rows);

// {"n": ..., "d": ..., "columns": [{name, mean, std, min, max}...], "label": {...}}
std::string dataset_summary_json(const LabeledDataset& data);

}  // namespace ktreg
