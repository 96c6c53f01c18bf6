#include "ktreg/thinning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ktreg/errors.hpp"

namespace ktreg {

namespace {

// Positions of `indices` inside the parent dataset, -1 elsewhere.
std::vector<Index> position_lookup(Index parent_size, std::span<const Index> indices) {
  std::vector<Index> pos(static_cast<size_t>(parent_size), Index{-1});
  for (size_t p = 0; p < indices.size(); ++p) {
    const Index g = indices[p];
    if (g < 0 || g >= parent_size) {
      throw InputError("index " + std::to_string(g) + " out of range [0, " +
                       std::to_string(parent_size) + ")");
    }
    if (pos[static_cast<size_t>(g)] != -1) {
      throw InputError("duplicate index " + std::to_string(g) + " in input sequence");
    }
    pos[static_cast<size_t>(g)] = static_cast<Index>(p);
  }
  return pos;
}

Index exact_log4(Index n) {
  Index g = 0;
  Index p = 1;
  while (p < n) {
    p *= 4;
    ++g;
  }
  return p == n ? g : -1;
}

}  // namespace

KernelCache::KernelCache(const MetaKernelSpec& spec, const LabeledDataset& data,
                         Index cache_cap)
    : spec_(spec), xt_(data.x.transpose()), y_(data.y) {
  const Index n = y_.size();
  if (n < 1) throw InputError("KernelCache: empty dataset");
  if (n <= cache_cap) {
    gram_.resize(n, n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = i; j < n; ++j) {
        const double v = eval_meta(spec_, xt_.col(i), y_(i), xt_.col(j), y_(j));
        gram_(i, j) = v;
        gram_(j, i) = v;
      }
    }
    cached_ = true;
  }
}

MmdValue mmd_sq(const KernelCache& kernel, std::span<const Index> a,
                std::span<const Index> b) {
  if (a.empty() || b.empty()) throw InputError("mmd_sq: empty index set");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double saa = 0.0, sab = 0.0, sbb = 0.0;
  for (const Index i : a)
    for (const Index j : a) saa += kernel(i, j);
  for (const Index i : a)
    for (const Index j : b) sab += kernel(i, j);
  for (const Index i : b)
    for (const Index j : b) sbb += kernel(i, j);
  MmdValue out;
  out.raw = saa / (na * na) - 2.0 * sab / (na * nb) + sbb / (nb * nb);
  out.mmd_squared = std::max(0.0, out.raw);
  out.n_a = static_cast<Index>(a.size());
  out.n_b = static_cast<Index>(b.size());
  return out;
}

MmdValue mmd_sq(const MetaKernelSpec& spec, const LabeledDataset& data,
                std::span<const Index> a, std::span<const Index> b) {
  const KernelCache kernel(spec, data, 0);  // evaluate on the fly
  for (const Index i : a)
    if (i < 0 || i >= data.n()) throw InputError("mmd_sq: index out of range");
  for (const Index i : b)
    if (i < 0 || i >= data.n()) throw InputError("mmd_sq: index out of range");
  return mmd_sq(kernel, a, b);
}

std::pair<double, double> get_swap_params(double sigma, double vmax, double delta) {
  const double log_term = std::max(0.0, 2.0 * std::log(2.0 / delta));
  const double c = std::max(vmax * sigma * std::sqrt(log_term), vmax * vmax);
  double new_sigma = sigma;
  if (c > 0.0) {
    const double v2 = vmax * vmax;
    const double grow = std::max(0.0, 1.0 + (v2 - 2.0 * c) * sigma * sigma / (c * c));
    new_sigma = std::sqrt(sigma * sigma + v2 * grow);
  }
  return {c, new_sigma};
}

std::pair<Coreset, Coreset> kt_split(const KernelCache& kernel,
                                     std::span<const Index> indices, double delta,
                                     RngStream& rng) {
  const Index n = static_cast<Index>(indices.size());
  if (n < 2) throw InputError("kt_split: need at least two points");
  const Index pairs = n / 2;
  const double per_round_delta = delta / static_cast<double>(n);

  std::vector<Index> s1, s2;
  s1.reserve(static_cast<size_t>(pairs));
  s2.reserve(static_cast<size_t>(pairs));
  double sigma = 0.0;

  for (Index i = 0; i < pairs; ++i) {
    Index a = indices[static_cast<size_t>(2 * i)];
    Index b = indices[static_cast<size_t>(2 * i + 1)];
    const double vmax2 = kernel(a, a) + kernel(b, b) - 2.0 * kernel(a, b);
    const double vmax = std::sqrt(std::max(0.0, vmax2));
    const auto [c, new_sigma] = get_swap_params(sigma, vmax, per_round_delta);
    sigma = new_sigma;

    double theta = 0.0;
    for (Index j = 0; j < 2 * i; ++j) {
      const Index p = indices[static_cast<size_t>(j)];
      theta += kernel(p, a) - kernel(p, b);
    }
    for (const Index w : s1) theta -= 2.0 * (kernel(w, a) - kernel(w, b));

    const double ratio = c > 0.0 ? theta / c : 0.0;
    const double p_swap = std::min(1.0, 0.5 * std::max(0.0, 1.0 - ratio));
    if (rng.uniform() < p_swap) std::swap(a, b);
    s1.push_back(a);
    s2.push_back(b);
  }
  return {Coreset{std::move(s1), kernel.parent_size()},
          Coreset{std::move(s2), kernel.parent_size()}};
}

std::vector<Index> baseline_every_other(std::span<const Index> indices) {
  const size_t m = indices.size() / 2;
  std::vector<Index> out;
  out.reserve(m);
  for (size_t i = 0; i < m; ++i) out.push_back(indices[2 * i]);
  return out;
}

Coreset kt_swap(const KernelCache& kernel, std::span<const Index> indices,
                const std::pair<Coreset, Coreset>& candidates,
                std::vector<double>* mmd_trace) {
  const Index n = static_cast<Index>(indices.size());
  if (n < 2) throw InputError("kt_swap: need at least two points");
  const Index m = n / 2;
  if (static_cast<Index>(candidates.first.indices.size()) != m ||
      static_cast<Index>(candidates.second.indices.size()) != m) {
    throw InputError("kt_swap: candidate size does not match floor(n/2)");
  }

  const auto pos_of = position_lookup(kernel.parent_size(), indices);
  auto to_positions = [&](std::span<const Index> globals) {
    std::vector<Index> out;
    out.reserve(globals.size());
    for (const Index g : globals) {
      const Index p = (g >= 0 && g < kernel.parent_size())
                          ? pos_of[static_cast<size_t>(g)]
                          : Index{-1};
      if (p < 0) throw InputError("kt_swap: candidate index not in input sequence");
      out.push_back(p);
    }
    return out;
  };

  auto kl = [&](Index p, Index q) {
    return kernel(indices[static_cast<size_t>(p)], indices[static_cast<size_t>(q)]);
  };

  // b[p] = sum over the input sequence; diag[p] = k(z_p, z_p).
  std::vector<double> b(static_cast<size_t>(n), 0.0);
  std::vector<double> diag(static_cast<size_t>(n), 0.0);
  for (Index p = 0; p < n; ++p) diag[static_cast<size_t>(p)] = kl(p, p);
  for (Index p = 0; p < n; ++p) {
    b[static_cast<size_t>(p)] += diag[static_cast<size_t>(p)];
    for (Index q = p + 1; q < n; ++q) {
      const double v = kl(p, q);
      b[static_cast<size_t>(p)] += v;
      b[static_cast<size_t>(q)] += v;
    }
  }
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  const double input_term =
      std::accumulate(b.begin(), b.end(), 0.0) / (nn * nn);

  // Objective without the constant input term:
  //   -2/(n m) sum_{w in C} b[w] + 1/m^2 sum_{w,w' in C} k(w, w')
  auto objective_of = [&](const std::vector<Index>& coreset, double& t1, double& t2) {
    t1 = 0.0;
    t2 = 0.0;
    for (const Index w : coreset) t1 += b[static_cast<size_t>(w)];
    for (const Index w : coreset)
      for (const Index w2 : coreset) t2 += kl(w, w2);
    return -2.0 * t1 / (nn * mm) + t2 / (mm * mm);
  };

  // Ties keep the earlier candidate. The tolerance matters: for an even
  // input length the two split halves satisfy Q1 + Q2 = 2P, so
  // MMD(P, S1) = MMD(P, S2) exactly and a raw < would break the tie on
  // floating-point noise.
  auto improves = [](double candidate, double best) {
    return candidate < best - 1e-12 * (1.0 + std::abs(best));
  };

  // Best of {baseline, S1, S2}, earliest wins ties.
  const std::vector<Index> baseline = to_positions(baseline_every_other(indices));
  const std::vector<Index> cand1 = to_positions(candidates.first.indices);
  const std::vector<Index> cand2 = to_positions(candidates.second.indices);

  std::vector<Index> coreset;
  double t1 = 0.0, t2 = 0.0, obj = 0.0;
  bool first = true;
  for (const auto* cand : {&baseline, &cand1, &cand2}) {
    double ct1 = 0.0, ct2 = 0.0;
    const double cobj = objective_of(*cand, ct1, ct2);
    if (first || improves(cobj, obj)) {
      coreset = *cand;
      t1 = ct1;
      t2 = ct2;
      obj = cobj;
      first = false;
    }
  }
  if (mmd_trace) mmd_trace->push_back(obj + input_term);

  std::vector<char> in_coreset(static_cast<size_t>(n), 0);
  for (const Index w : coreset) in_coreset[static_cast<size_t>(w)] = 1;

  // s[p] = sum over the current coreset.
  std::vector<double> s(static_cast<size_t>(n), 0.0);
  for (Index p = 0; p < n; ++p) {
    double acc = 0.0;
    for (const Index w : coreset) acc += kl(p, w);
    s[static_cast<size_t>(p)] = acc;
  }

  for (Index i = 0; i < m; ++i) {
    const Index u = coreset[static_cast<size_t>(i)];
    double best_obj = obj;
    Index best = u;
    double best_t1 = t1, best_t2 = t2;
    for (Index p = 0; p < n; ++p) {
      if (in_coreset[static_cast<size_t>(p)]) continue;
      const double nt1 = t1 - b[static_cast<size_t>(u)] + b[static_cast<size_t>(p)];
      const double nt2 = t2 - 2.0 * s[static_cast<size_t>(u)] +
                         diag[static_cast<size_t>(u)] +
                         2.0 * (s[static_cast<size_t>(p)] - kl(p, u)) +
                         diag[static_cast<size_t>(p)];
      const double nobj = -2.0 * nt1 / (nn * mm) + nt2 / (mm * mm);
      if (improves(nobj, best_obj)) {
        best_obj = nobj;
        best = p;
        best_t1 = nt1;
        best_t2 = nt2;
      }
    }
    if (best != u) {
      in_coreset[static_cast<size_t>(u)] = 0;
      in_coreset[static_cast<size_t>(best)] = 1;
      coreset[static_cast<size_t>(i)] = best;
      t1 = best_t1;
      t2 = best_t2;
      obj = best_obj;
      for (Index p = 0; p < n; ++p) {
        s[static_cast<size_t>(p)] += kl(p, best) - kl(p, u);
      }
    }
    if (mmd_trace) mmd_trace->push_back(obj + input_term);
  }

  Coreset out;
  out.parent_size = kernel.parent_size();
  out.indices.reserve(static_cast<size_t>(m));
  for (const Index p : coreset) out.indices.push_back(indices[static_cast<size_t>(p)]);
  return out;
}

Coreset kt_halve(const KernelCache& kernel, std::span<const Index> indices,
                 double delta, RngStream& rng) {
  const auto candidates = kt_split(kernel, indices, delta, rng);
  Coreset refined = kt_swap(kernel, indices, candidates);
  if (rng.uniform() < 0.5) return refined;

  // Complement within the processed prefix, in input order.
  const size_t processed = 2 * (indices.size() / 2);
  std::vector<char> member(static_cast<size_t>(kernel.parent_size()), 0);
  for (const Index g : refined.indices) member[static_cast<size_t>(g)] = 1;
  Coreset complement;
  complement.parent_size = kernel.parent_size();
  complement.indices.reserve(refined.indices.size());
  for (size_t i = 0; i < processed; ++i) {
    const Index g = indices[i];
    if (!member[static_cast<size_t>(g)]) complement.indices.push_back(g);
  }
  return complement;
}

Coreset compress(const KernelCache& kernel, std::span<const Index> indices,
                 int g, double delta, RngStream& rng) {
  if (g < 0) throw InputError("compress: compression level must be >= 0");
  const Index n = static_cast<Index>(indices.size());
  Index base = 1;
  for (int i = 0; i < g; ++i) base *= 4;
  const Index log4 = exact_log4(n);
  if (log4 < 0 || n < base) {
    const Index admissible = n >= base ? pow4_floor(n) : Index{0};
    throw InputError(
        "compress: size " + std::to_string(n) + " is not 4^(a+g) with g = " +
        std::to_string(g) +
        (admissible > 0
             ? "; largest admissible truncation is " + std::to_string(admissible)
             : "; need at least " + std::to_string(base) + " points"));
  }
  if (n == base) {
    return Coreset{std::vector<Index>(indices.begin(), indices.end()),
                   kernel.parent_size()};
  }

  const Index quarter = n / 4;
  std::vector<Index> merged;
  for (int block = 0; block < 4; ++block) {
    RngStream branch = rng.child(static_cast<uint64_t>(block));
    const Coreset sub = compress(
        kernel, indices.subspan(static_cast<size_t>(block * quarter),
                                static_cast<size_t>(quarter)),
        g, delta, branch);
    merged.insert(merged.end(), sub.indices.begin(), sub.indices.end());
  }
  const double merged_size = static_cast<double>(merged.size());
  RngStream halver = rng.child(4);
  return kt_halve(kernel, merged, merged_size * merged_size * delta, halver);
}

int default_compression_level(Index n) {
  if (n < 4) return 0;
  const double v = std::log2(std::log2(static_cast<double>(n))) + 3.1;
  return static_cast<int>(std::ceil(v));
}

Coreset kt_compress_pp(const LabeledDataset& data, const ThinningConfig& config) {
  const Index n = data.n();
  const Index log4 = exact_log4(n);
  if (log4 < 0) {
    throw InputError("kt_compress_pp: n = " + std::to_string(n) +
                     " is not a power of 4; largest admissible truncation is " +
                     std::to_string(pow4_floor(n)));
  }
  if (!(config.delta > 0.0) || config.delta > 1.0) {
    throw InputError("kt_compress_pp: delta must lie in (0, 1]");
  }
  int g = config.g_override.value_or(default_compression_level(n));
  if (g < 0) throw InputError("kt_compress_pp: compression level must be >= 0");
  g = std::min<int>(g, static_cast<int>(log4));

  const KernelCache kernel(config.meta, data, config.gram_cache_cap);
  std::vector<Index> all(static_cast<size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});

  RngStream master(config.seed);

  // Half the budget to the recursive compression, half to the final halvings.
  const double compress_budget = config.delta / 2.0;
  double per_node = compress_budget;
  if (log4 > g) {
    double pow4g1 = 4.0;
    for (int i = 0; i < g; ++i) pow4g1 *= 4.0;
    per_node = compress_budget /
               (static_cast<double>(n) * pow4g1 * static_cast<double>(log4 - g));
  }
  RngStream croot = master.child(0);
  Coreset current = compress(kernel, all, g, per_node, croot);

  const double halve_budget = g > 0 ? (config.delta / 2.0) / static_cast<double>(g) : 0.0;
  for (int stage = 0; stage < g; ++stage) {
    RngStream hstream = master.child(static_cast<uint64_t>(stage + 1));
    current = kt_halve(kernel, current.indices, halve_budget, hstream);
  }

  Index expect = 1;
  for (Index i = 0; i < log4; ++i) expect *= 2;
  if (static_cast<Index>(current.indices.size()) != expect) {
    throw NumericalError("kt_compress_pp: internal size law violation");
  }
  return current;
}

Coreset standard_thin(Index parent_size, Index n_out, RngStream& rng) {
  if (n_out < 1 || n_out > parent_size) {
    throw InputError("standard_thin: n_out must lie in [1, n]");
  }
  std::vector<Index> pool(static_cast<size_t>(parent_size));
  std::iota(pool.begin(), pool.end(), Index{0});
  Coreset out;
  out.parent_size = parent_size;
  out.indices.reserve(static_cast<size_t>(n_out));
  for (Index i = 0; i < n_out; ++i) {
    const Index j =
        i + static_cast<Index>(rng.below(static_cast<uint64_t>(parent_size - i)));
    std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
    out.indices.push_back(pool[static_cast<size_t>(i)]);
  }
  return out;
}

Coreset standard_thin(Index parent_size, Index n_out, uint64_t seed) {
  RngStream rng(seed);
  return standard_thin(parent_size, n_out, rng);
}

Coreset remap_to_source_rows(const Coreset& coreset,
                             const std::vector<Index>& source_rows,
                             Index original_n) {
  Coreset out;
  out.parent_size = original_n;
  out.indices.reserve(coreset.indices.size());
  for (const Index i : coreset.indices) {
    if (i < 0 || i >= static_cast<Index>(source_rows.size())) {
      throw InputError("remap_to_source_rows: coreset index out of range");
    }
    const Index original = source_rows[static_cast<size_t>(i)];
    if (original < 0 || original >= original_n) {
      throw InputError("remap_to_source_rows: source row out of range");
    }
    out.indices.push_back(original);
  }
  return out;
}

void write_coreset_csv(std::ostream& out, const Coreset& coreset) {
  out << "position,dataset_index\n";
  for (size_t i = 0; i < coreset.indices.size(); ++i) {
    out << i << ',' << coreset.indices[i] << '\n';
  }
}

void write_coreset_csv(const std::string& path, const Coreset& coreset) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_coreset_csv(out, coreset);
  if (!out.good()) throw IoError("write failed: " + path);
}

}  // namespace ktreg
