#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ktreg/data.hpp"
#include "ktreg/kernels.hpp"
#include "ktreg/rng.hpp"

namespace ktreg {

// Ordered, duplicate-free row positions into a parent dataset.
struct Coreset {
  std::vector<Index> indices;
  Index parent_size = 0;
};

struct MmdValue {
  double mmd_squared = 0.0;  // clamped at 0
  double raw = 0.0;          // unclamped, kept for comparisons
  Index n_a = 0;
  Index n_b = 0;
};

struct ThinningConfig {
  MetaKernelSpec meta;
  double delta = 0.5;  // overall failure probability
  uint64_t seed = 0;
  // Compression level g; defaults to ceil(log2 log2 n + 3.1), capped so that
  // 4^g never exceeds n.
  std::optional<int> g_override;
  // Full meta-kernel Gram precomputed per thinning call when n <= cap.
  Index gram_cache_cap = 4096;
};

// Meta-kernel evaluations over one dataset, optionally backed by a dense
// Gram matrix. Immutable after construction; safe for concurrent reads.
class KernelCache {
 public:
  KernelCache(const MetaKernelSpec& spec, const LabeledDataset& data,
              Index cache_cap);

  double operator()(Index i, Index j) const {
    if (cached_) return gram_(i, j);
    return eval_meta(spec_, xt_.col(i), y_(i), xt_.col(j), y_(j));
  }

  Index parent_size() const { return y_.size(); }
  const MetaKernelSpec& spec() const { return spec_; }
  bool cached() const { return cached_; }

 private:
  MetaKernelSpec spec_;
  Eigen::MatrixXd xt_;  // d x n, points as columns
  Eigen::VectorXd y_;
  Eigen::MatrixXd gram_;
  bool cached_ = false;
};

// Squared maximum mean discrepancy between the equal-weight empirical
// measures on index sets a and b:
//   mean_{i,j in a} k(z_i, z_j) - 2 mean_{i in a, j in b} k(z_i, z_j)
//     + mean_{i,j in b} k(z_i, z_j).
MmdValue mmd_sq(const MetaKernelSpec& spec, const LabeledDataset& data,
                std::span<const Index> a, std::span<const Index> b);
MmdValue mmd_sq(const KernelCache& kernel, std::span<const Index> a,
                std::span<const Index> b);

// Swap threshold c and updated sub-Gaussian parameter:
//   c       = max(vmax * sigma * sqrt(2 ln(2/delta)), vmax^2)
//   sigma'^2 = sigma^2 + vmax^2 * (1 + (vmax^2 - 2c) sigma^2 / c^2)_+  (c > 0)
std::pair<double, double> get_swap_params(double sigma, double vmax, double delta);

// Probabilistic pairwise split into two balanced candidate coresets of size
// floor(n/2) each. An odd trailing element is dropped. Consumes exactly one
// uniform draw per pair.
std::pair<Coreset, Coreset> kt_split(const KernelCache& kernel,
                                     std::span<const Index> indices, double delta,
                                     RngStream& rng);

// Every-other-element baseline used by kt_swap (positions 0, 2, 4, ...).
std::vector<Index> baseline_every_other(std::span<const Index> indices);

// Picks the best of {baseline, S1, S2} by MMD against the input sequence,
// then greedily swaps each position for the non-coreset point that most
// reduces MMD. Ties keep the earlier candidate. When mmd_trace is non-null
// it receives the raw MMD^2 after selection and after each sweep position.
Coreset kt_swap(const KernelCache& kernel, std::span<const Index> indices,
                const std::pair<Coreset, Coreset>& candidates,
                std::vector<double>* mmd_trace = nullptr);

// kt_split + kt_swap, then symmetrization: the refined coreset with
// probability 1/2, otherwise its complement within the processed prefix
// (complement in input order).
Coreset kt_halve(const KernelCache& kernel, std::span<const Index> indices,
                 double delta, RngStream& rng);

// Four-way recursive compression to size 2^g sqrt(n). Requires
// |indices| = 4^(a+g) for some a >= 0; identity when |indices| = 4^g.
// Inner halvings run with per-call budget |S|^2 * delta.
Coreset compress(const KernelCache& kernel, std::span<const Index> indices,
                 int g, double delta, RngStream& rng);

// Full pipeline: compress to 2^g sqrt(n), then g further halvings down to
// sqrt(n). Requires n to be a power of 4; errors otherwise, naming the
// largest admissible truncation. Deterministic per (data, config).
Coreset kt_compress_pp(const LabeledDataset& data, const ThinningConfig& config);

// Uniform subsample without replacement, in draw order.
Coreset standard_thin(Index parent_size, Index n_out, RngStream& rng);
Coreset standard_thin(Index parent_size, Index n_out, uint64_t seed);

int default_compression_level(Index n);

// Express a coreset over a subsampled dataset in terms of the original rows
// (source_rows[i] = original row of subsample row i).
Coreset remap_to_source_rows(const Coreset& coreset,
                             const std::vector<Index>& source_rows,
                             Index original_n);

// CSV serialization: header line, then one "position,dataset_index" row per
// element, in coreset order.
void write_coreset_csv(std::ostream& out, const Coreset& coreset);
void write_coreset_csv(const std::string& path, const Coreset& coreset);

}  // namespace ktreg
