#include "ktreg/regression.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ktreg/errors.hpp"

namespace ktreg {

namespace {

void check_support(const LabeledDataset& data) {
  if (data.n() < 1) throw InputError("fit: empty support");
}

void check_dim(Index model_dim, Index query_dim) {
  if (model_dim != query_dim) {
    throw InputError("predict: query dimension " + std::to_string(query_dim) +
                     " does not match support dimension " + std::to_string(model_dim));
  }
}

nlohmann::json kernel_to_json(const KernelSpec& k) {
  return {{"family", kernel_family_name(k.family())}, {"bandwidth", k.bandwidth()}};
}

KernelSpec kernel_from_json(const nlohmann::json& j) {
  return {parse_kernel_family(j.at("family").get<std::string>()),
          j.at("bandwidth").get<double>()};
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) throw InputError("model JSON: empty support");
  const Index cols = static_cast<Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) m(i, c) = j.at(static_cast<size_t>(i)).at(static_cast<size_t>(c)).get<double>();
  return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<size_t>(i)).get<double>();
  return v;
}

}  // namespace

NWModel fit_nw(const LabeledDataset& data, const KernelSpec& base) {
  check_support(data);
  return NWModel{data.x, data.y, base};
}

NWModel fit_nw(const LabeledDataset& data, const Coreset& coreset,
               const KernelSpec& base) {
  if (coreset.indices.empty()) throw InputError("fit_nw: empty coreset");
  return fit_nw(take_rows(data, coreset.indices), base);
}

NWPrediction predict_nw_checked(const NWModel& model,
                                const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_dim(model.support_x.cols(), x.size());
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < model.support_x.rows(); ++i) {
    const double w = eval_base(model.base, model.support_x.row(i).transpose(), x);
    num += w * model.support_y(i);
    den += w;
  }
  if (den == 0.0) return {0.0, true};
  return {num / den, false};
}

double predict_nw(const NWModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return predict_nw_checked(model, x).value;
}

KRRModel fit_krr(const LabeledDataset& data, const KernelSpec& base, double lambda) {
  check_support(data);
  if (!(lambda > 0.0)) throw InputError("fit_krr: lambda must be positive");
  const Index m = data.n();
  const Eigen::MatrixXd k = gram_base(base, data.x);
  const double ridge = static_cast<double>(m) * lambda;
  const double base_jitter = 1e-10 * k.trace() / static_cast<double>(m);
  const double y_scale = 1.0 + data.y.lpNorm<Eigen::Infinity>();

  Eigen::MatrixXd a;
  double jitter = 0.0;
  for (int attempt = 0; attempt <= 6; ++attempt) {
    jitter = attempt == 0 ? 0.0 : base_jitter * std::pow(10.0, attempt - 1);
    a = k;
    a.diagonal().array() += ridge + jitter;
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(a);
    if (llt.info() != Eigen::Success) continue;
    Eigen::VectorXd alpha = llt.solve(data.y);
    const double residual =
        ((k * alpha + ridge * alpha) - data.y).lpNorm<Eigen::Infinity>();
    if (residual <= 1e-6 * y_scale) {
      return KRRModel{data.x, std::move(alpha), base, lambda};
    }
  }
  throw NumericalError("fit_krr: factorization failed after jitter escalation (final jitter " +
                       std::to_string(jitter) + ")");
}

KRRModel fit_krr(const LabeledDataset& data, const Coreset& coreset,
                 const KernelSpec& base, double lambda) {
  if (coreset.indices.empty()) throw InputError("fit_krr: empty coreset");
  return fit_krr(take_rows(data, coreset.indices), base, lambda);
}

double predict_krr(const KRRModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_dim(model.support_x.cols(), x.size());
  double acc = 0.0;
  for (Index i = 0; i < model.support_x.rows(); ++i) {
    acc += model.alpha(i) * eval_base(model.base, model.support_x.row(i).transpose(), x);
  }
  return acc;
}

NWModel fit_kt_nw(const LabeledDataset& data, const KernelSpec& base, double delta,
                  uint64_t seed) {
  ThinningConfig config;
  config.meta = MetaKernelSpec(MetaMode::kNW, base);
  config.delta = delta;
  config.seed = seed;
  const Coreset coreset = kt_compress_pp(data, config);
  return fit_nw(data, coreset, base);
}

KRRModel fit_kt_krr(const LabeledDataset& data, const KernelSpec& base, double delta,
                    double lambda_prime, uint64_t seed) {
  ThinningConfig config;
  config.meta = MetaKernelSpec(MetaMode::kRR, base);
  config.delta = delta;
  config.seed = seed;
  const Coreset coreset = kt_compress_pp(data, config);
  return fit_krr(data, coreset, base, lambda_prime);
}

namespace {

template <typename Model, typename Predict>
EvalStats evaluate_impl(const Model& model, const LabeledDataset& test,
                        Predict&& predict) {
  if (test.n() < 1) throw InputError("mse: empty test set");
  EvalStats stats;
  double acc = 0.0;
  for (Index i = 0; i < test.n(); ++i) {
    const auto p = predict(model, test.x.row(i).transpose());
    const double err = p.value - test.y(i);
    acc += err * err;
    if (p.defaulted) ++stats.defaulted_predictions;
  }
  stats.mse = acc / static_cast<double>(test.n());
  return stats;
}

}  // namespace

EvalStats evaluate(const NWModel& model, const LabeledDataset& test) {
  return evaluate_impl(model, test, [](const NWModel& m, const auto& x) {
    return predict_nw_checked(m, x);
  });
}

EvalStats evaluate(const KRRModel& model, const LabeledDataset& test) {
  return evaluate_impl(model, test, [](const KRRModel& m, const auto& x) {
    return NWPrediction{predict_krr(m, x), false};
  });
}

double mse(const NWModel& model, const LabeledDataset& test) {
  return evaluate(model, test).mse;
}

double mse(const KRRModel& model, const LabeledDataset& test) {
  return evaluate(model, test).mse;
}

std::string to_json(const NWModel& model) {
  nlohmann::json j;
  j["model"] = "nw";
  j["kernel"] = kernel_to_json(model.base);
  j["support_x"] = matrix_to_json(model.support_x);
  j["support_y"] = nlohmann::json::array();
  for (Index i = 0; i < model.support_y.size(); ++i) j["support_y"].push_back(model.support_y(i));
  return j.dump(2);
}

std::string to_json(const KRRModel& model) {
  nlohmann::json j;
  j["model"] = "krr";
  j["kernel"] = kernel_to_json(model.base);
  j["lambda"] = model.lambda;
  j["support_x"] = matrix_to_json(model.support_x);
  j["alpha"] = nlohmann::json::array();
  for (Index i = 0; i < model.alpha.size(); ++i) j["alpha"].push_back(model.alpha(i));
  return j.dump(2);
}

NWModel nw_model_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.at("model") != "nw") throw InputError("model JSON: expected model type 'nw'");
  NWModel model;
  model.base = kernel_from_json(j.at("kernel"));
  model.support_x = matrix_from_json(j.at("support_x"));
  model.support_y = vector_from_json(j.at("support_y"));
  if (model.support_y.size() != model.support_x.rows()) {
    throw InputError("model JSON: support_y length does not match support_x rows");
  }
  return model;
}

KRRModel krr_model_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (j.at("model") != "krr") throw InputError("model JSON: expected model type 'krr'");
  KRRModel model;
  model.base = kernel_from_json(j.at("kernel"));
  model.lambda = j.at("lambda").get<double>();
  model.support_x = matrix_from_json(j.at("support_x"));
  model.alpha = vector_from_json(j.at("alpha"));
  if (model.alpha.size() != model.support_x.rows()) {
    throw InputError("model JSON: alpha length does not match support_x rows");
  }
  return model;
}

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text << '\n';
  if (!out.good()) throw IoError("write failed: " + path);
}

}  // namespace

void save_model(const std::string& path, const NWModel& model) {
  write_text_file(path, to_json(model));
}

void save_model(const std::string& path, const KRRModel& model) {
  write_text_file(path, to_json(model));
}

}  // namespace ktreg
