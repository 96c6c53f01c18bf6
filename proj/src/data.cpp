#include "ktreg/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ktreg/errors.hpp"
#include "ktreg/rng.hpp"

namespace ktreg {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935274463415059;

std::vector<Index> seeded_permutation(Index n, RngStream& rng) {
  std::vector<Index> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = 0; i + 1 < n; ++i) {
    const Index j = i + static_cast<Index>(rng.below(static_cast<uint64_t>(n - i)));
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
  }
  return perm;
}

bool parse_double(const std::string& token, double& out) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(end[-1]))) --end;
  if (begin == end) return false;
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc{} && result.ptr == end;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

void validate(const LabeledDataset& data) {
  if (data.n() < 1) throw InputError("dataset must contain at least one row");
  if (data.dim() < 1) throw InputError("dataset must contain at least one feature");
  if (data.y.size() != data.n()) {
    throw InputError("dataset label count does not match row count");
  }
  if (!data.x.allFinite() || !data.y.allFinite()) {
    throw InputError("dataset contains NaN or infinite entries");
  }
  if (!data.feature_names.empty() &&
      static_cast<Index>(data.feature_names.size()) != data.dim()) {
    throw InputError("feature_names length does not match dimension");
  }
}

double sim_regression_fn(double x) {
  return 8.0 * std::sin(8.0 * M_PI * x) * std::exp(x);
}

LabeledDataset gen_sim(Index n, uint64_t seed) {
  if (n < 1) throw InputError("gen_sim: n must be >= 1");
  LabeledDataset data;
  data.x.resize(n, 1);
  data.y.resize(n);
  RngStream rng(seed);
  for (Index i = 0; i < n; ++i) {
    const double xi = -kSqrt3 + 2.0 * kSqrt3 * rng.uniform();
    data.x(i, 0) = xi;
    data.y(i) = sim_regression_fn(xi) + rng.normal();
  }
  return data;
}

LabeledDataset load_csv(const std::string& path, const std::string& target_column,
                        bool has_header) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open CSV file: " + path);

  std::string line;
  std::vector<std::string> header;
  size_t line_no = 0;
  if (has_header) {
    if (!std::getline(in, line)) throw InputError(path + ": empty file");
    ++line_no;
    header = split_csv_line(line);
  }

  std::vector<std::vector<double>> rows;
  size_t width = header.size();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw InputError(path + ": line " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(width));
    }
    std::vector<double> row(fields.size());
    for (size_t c = 0; c < fields.size(); ++c) {
      if (!parse_double(fields[c], row[c])) {
        throw InputError(path + ": non-numeric value '" + fields[c] + "' at line " +
                         std::to_string(line_no) + ", column " + std::to_string(c));
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(path + ": no data rows");

  // Resolve the target column: header name first, then a numeric index.
  Index target = -1;
  if (has_header) {
    for (size_t c = 0; c < header.size(); ++c) {
      if (header[c] == target_column) {
        target = static_cast<Index>(c);
        break;
      }
    }
  }
  if (target < 0) {
    size_t parsed = 0;
    try {
      parsed = static_cast<size_t>(std::stoul(target_column));
    } catch (const std::exception&) {
      throw InputError(path + ": target column '" + target_column + "' not found");
    }
    if (parsed >= width) {
      throw InputError(path + ": target column index " + target_column +
                       " out of range (file has " + std::to_string(width) +
                       " columns)");
    }
    target = static_cast<Index>(parsed);
  }

  const Index n = static_cast<Index>(rows.size());
  const Index d = static_cast<Index>(width) - 1;
  if (d < 1) throw InputError(path + ": need at least one feature column besides the target");

  LabeledDataset data;
  data.x.resize(n, d);
  data.y.resize(n);
  for (Index i = 0; i < n; ++i) {
    Index k = 0;
    for (Index c = 0; c < static_cast<Index>(width); ++c) {
      const double v = rows[static_cast<size_t>(i)][static_cast<size_t>(c)];
      if (c == target) {
        data.y(i) = v;
      } else {
        data.x(i, k++) = v;
      }
    }
  }
  if (has_header) {
    for (Index c = 0; c < static_cast<Index>(width); ++c) {
      if (c != target) data.feature_names.push_back(header[static_cast<size_t>(c)]);
    }
  }
  validate(data);
  return data;
}

std::pair<LabeledDataset, StandardizationStats> standardize(const LabeledDataset& data) {
  if (data.n() < 2) throw InputError("standardize: need at least two rows");
  StandardizationStats stats;
  stats.mean = data.x.colwise().mean();
  Eigen::VectorXd var(data.dim());
  for (Index c = 0; c < data.dim(); ++c) {
    var(c) = (data.x.col(c).array() - stats.mean(c)).square().mean();
  }
  stats.std_dev = var.array().sqrt();

  LabeledDataset out = data;
  for (Index c = 0; c < data.dim(); ++c) {
    // columns that are constant up to floating round-off count as degenerate
    const double tiny = 1e-12 * (1.0 + std::abs(stats.mean(c)));
    if (stats.std_dev(c) > tiny) {
      out.x.col(c) = (data.x.col(c).array() - stats.mean(c)) / stats.std_dev(c);
    } else {
      out.x.col(c).setZero();
      stats.std_dev(c) = 1.0;
    }
  }
  return {std::move(out), std::move(stats)};
}

LabeledDataset apply_standardization(const LabeledDataset& data,
                                     const StandardizationStats& stats) {
  if (stats.mean.size() != data.dim() || stats.std_dev.size() != data.dim()) {
    throw InputError("standardization stats dimension does not match dataset");
  }
  LabeledDataset out = data;
  for (Index c = 0; c < data.dim(); ++c) {
    out.x.col(c) = (data.x.col(c).array() - stats.mean(c)) / stats.std_dev(c);
  }
  return out;
}

LabeledDataset invert_standardization(const LabeledDataset& data,
                                      const StandardizationStats& stats) {
  if (stats.mean.size() != data.dim() || stats.std_dev.size() != data.dim()) {
    throw InputError("standardization stats dimension does not match dataset");
  }
  LabeledDataset out = data;
  for (Index c = 0; c < data.dim(); ++c) {
    out.x.col(c) = data.x.col(c).array() * stats.std_dev(c) + stats.mean(c);
  }
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& data,
                                                double train_fraction,
                                                double test_fraction,
                                                uint64_t seed) {
  if (!(train_fraction > 0.0) || !(test_fraction > 0.0) ||
      std::abs(train_fraction + test_fraction - 1.0) > 1e-9) {
    throw InputError("split fractions must be positive and sum to 1");
  }
  const Index n = data.n();
  const Index n_train = static_cast<Index>(std::llround(train_fraction * static_cast<double>(n)));
  const Index n_test = n - n_train;
  if (n_train < 1 || n_test < 1) {
    throw InputError("split would produce an empty side (n = " + std::to_string(n) + ")");
  }
  RngStream rng(seed);
  const auto perm = seeded_permutation(n, rng);
  std::vector<Index> train_rows(perm.begin(), perm.begin() + n_train);
  std::vector<Index> test_rows(perm.begin() + n_train, perm.end());
  return {take_rows(data, train_rows), take_rows(data, test_rows)};
}

Index pow4_floor(Index n) {
  if (n < 1) throw InputError("pow4_floor: n must be >= 1");
  Index p = 1;
  while (p <= n / 4) p *= 4;
  return p;
}

bool is_pow4(Index n) { return n >= 1 && pow4_floor(n) == n; }

TruncateResult truncate_pow4(const LabeledDataset& data, uint64_t seed) {
  if (data.n() < 4) throw InputError("truncate_pow4: need at least 4 rows");
  const Index target = pow4_floor(data.n());
  TruncateResult result;
  if (target == data.n()) {
    result.data = data;
    result.source_rows.resize(static_cast<size_t>(data.n()));
    std::iota(result.source_rows.begin(), result.source_rows.end(), Index{0});
    return result;
  }
  RngStream rng(seed);
  std::vector<Index> pool(static_cast<size_t>(data.n()));
  std::iota(pool.begin(), pool.end(), Index{0});
  result.source_rows.reserve(static_cast<size_t>(target));
  for (Index i = 0; i < target; ++i) {
    const Index j =
        i + static_cast<Index>(rng.below(static_cast<uint64_t>(data.n() - i)));
    std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
    result.source_rows.push_back(pool[static_cast<size_t>(i)]);
  }
  result.data = take_rows(data, result.source_rows);
  return result;
}

LabeledDataset take_rows(const LabeledDataset& data, const std::vector<Index>& rows) {
  LabeledDataset out;
  out.x.resize(static_cast<Index>(rows.size()), data.dim());
  out.y.resize(static_cast<Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    const Index r = rows[i];
    if (r < 0 || r >= data.n()) {
      throw InputError("take_rows: row index " + std::to_string(r) + " out of range");
    }
    out.x.row(static_cast<Index>(i)) = data.x.row(r);
    out.y(static_cast<Index>(i)) = data.y(r);
  }
  out.feature_names = data.feature_names;
  return out;
}

std::string dataset_summary_json(const LabeledDataset& data) {
  nlohmann::json j;
  j["n"] = data.n();
  j["d"] = data.dim();
  nlohmann::json cols = nlohmann::json::array();
  for (Index c = 0; c < data.dim(); ++c) {
    const auto col = data.x.col(c);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().mean());
    nlohmann::json jc;
    jc["name"] = data.feature_names.empty()
                     ? ("x" + std::to_string(c))
                     : data.feature_names[static_cast<size_t>(c)];
    jc["mean"] = mean;
    jc["std"] = sd;
    jc["min"] = col.minCoeff();
    jc["max"] = col.maxCoeff();
    cols.push_back(jc);
  }
  j["columns"] = cols;
  const double ymean = data.y.mean();
  j["label"] = {{"mean", ymean},
                {"std", std::sqrt((data.y.array() - ymean).square().mean())},
                {"min", data.y.minCoeff()},
                {"max", data.y.maxCoeff()}};
  return j.dump(2);
}

}  // namespace ktreg
