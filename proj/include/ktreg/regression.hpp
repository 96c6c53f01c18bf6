#pragma once

#include <cstdint>
#include <string>

#include "ktreg/data.hpp"
#include "ktreg/kernels.hpp"
#include "ktreg/thinning.hpp"

namespace ktreg {

// Nadaraya-Watson estimator: prediction is the kernel-weighted average of
// support labels, 0 when the weight mass is exactly zero.
struct NWModel {
  Eigen::MatrixXd support_x;  // m x d
  Eigen::VectorXd support_y;  // m
  KernelSpec base;
};

// Kernel ridge regression dual solution of (K + m*lambda*I) alpha = y.
struct KRRModel {
  Eigen::MatrixXd support_x;  // m x d
  Eigen::VectorXd alpha;      // m
  KernelSpec base;
  double lambda = 0.0;
};

struct NWPrediction {
  double value = 0.0;
  bool defaulted = false;  // true when the denominator was exactly zero
};

struct EvalStats {
  double mse = 0.0;
  Index defaulted_predictions = 0;
};

NWModel fit_nw(const LabeledDataset& data, const KernelSpec& base);
NWModel fit_nw(const LabeledDataset& data, const Coreset& coreset,
               const KernelSpec& base);

NWPrediction predict_nw_checked(const NWModel& model,
                                const Eigen::Ref<const Eigen::VectorXd>& x);
double predict_nw(const NWModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

// Solves (K + m*lambda*I) alpha = y by Cholesky, escalating a diagonal
// jitter from 1e-10 * trace(K)/m by factors of 10 (six retries) if the
// factorization or the residual check fails.
KRRModel fit_krr(const LabeledDataset& data, const KernelSpec& base, double lambda);
KRRModel fit_krr(const LabeledDataset& data, const Coreset& coreset,
                 const KernelSpec& base, double lambda);

double predict_krr(const KRRModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

// Thin with the matching meta-kernel via kt_compress_pp, then fit on the
// coreset. Requires n to be a power of 4.
NWModel fit_kt_nw(const LabeledDataset& data, const KernelSpec& base, double delta,
                  uint64_t seed);
KRRModel fit_kt_krr(const LabeledDataset& data, const KernelSpec& base, double delta,
                    double lambda_prime, uint64_t seed);

double mse(const NWModel& model, const LabeledDataset& test);
double mse(const KRRModel& model, const LabeledDataset& test);

EvalStats evaluate(const NWModel& model, const LabeledDataset& test);
EvalStats evaluate(const KRRModel& model, const LabeledDataset& test);

// JSON round-trips preserve predictions exactly (full double precision).
std::string to_json(const NWModel& model);
std::string to_json(const KRRModel& model);
NWModel nw_model_from_json(const std::string& text);
KRRModel krr_model_from_json(const std::string& text);

void save_model(const std::string& path, const NWModel& model);
void save_model(const std::string& path, const KRRModel& model);

}  // namespace ktreg
