#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "ktreg/errors.hpp"

namespace ktreg {

enum class KernelFamily { kGaussian, kLaplace, kWendland0 };

// Shift-invariant kernel kappa(||x1 - x2|| / h) on covariates:
//   Gaussian:  exp(-||x1 - x2||^2 / (2 h^2))
//   Laplace:   exp(-||x1 - x2|| / h)
//   Wendland0: max(0, 1 - ||x1 - x2|| / h)
// All three satisfy k(x, x) = 1 and take values in [0, 1].
class KernelSpec {
 public:
  KernelSpec() : KernelSpec(KernelFamily::kGaussian, 1.0) {}
  KernelSpec(KernelFamily family, double bandwidth)
      : family_(family), bandwidth_(bandwidth) {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
      throw InputError("kernel bandwidth must be positive and finite");
    }
  }

  KernelFamily family() const { return family_; }
  double bandwidth() const { return bandwidth_; }

 private:
  KernelFamily family_;
  double bandwidth_;
};

// Kernel on (covariate, label) pairs, built from a base kernel k:
//   BaseOnly:      k(x1, x2)                      (labels ignored)
//   Concatenated:  same family/bandwidth on the (d+1)-vectors (x, y)
//   NW:            k(x1, x2) * (1 + y1 y2)
//   RR:            k(x1, x2)^2 + k(x1, x2) * y1 y2
enum class MetaMode { kBaseOnly, kConcatenated, kNW, kRR };

class MetaKernelSpec {
 public:
  MetaKernelSpec() = default;
  MetaKernelSpec(MetaMode mode, KernelSpec base) : mode_(mode), base_(base) {}

  MetaMode mode() const { return mode_; }
  const KernelSpec& base() const { return base_; }

 private:
  MetaMode mode_ = MetaMode::kBaseOnly;
  KernelSpec base_;
};

namespace detail {

inline double kappa_of_sqdist(KernelFamily family, double h, double d2) {
  switch (family) {
    case KernelFamily::kGaussian:
      return std::exp(-d2 / (2.0 * h * h));
    case KernelFamily::kLaplace:
      return std::exp(-std::sqrt(d2) / h);
    case KernelFamily::kWendland0:
      return std::max(0.0, 1.0 - std::sqrt(d2) / h);
  }
  return 0.0;  // unreachable
}

}  // namespace detail

template <typename D1, typename D2>
double eval_base(const KernelSpec& spec, const Eigen::MatrixBase<D1>& x1,
                 const Eigen::MatrixBase<D2>& x2) {
  if (x1.size() != x2.size() || x1.size() < 1) {
    throw InputError("eval_base: covariate dimensions do not match");
  }
  const double d2 = (x1 - x2).squaredNorm();
  return detail::kappa_of_sqdist(spec.family(), spec.bandwidth(), d2);
}

template <typename D1, typename D2>
double eval_meta(const MetaKernelSpec& spec, const Eigen::MatrixBase<D1>& x1,
                 double y1, const Eigen::MatrixBase<D2>& x2, double y2) {
  if (x1.size() != x2.size() || x1.size() < 1) {
    throw InputError("eval_meta: covariate dimensions do not match");
  }
  const KernelSpec& base = spec.base();
  const double d2 = (x1 - x2).squaredNorm();
  switch (spec.mode()) {
    case MetaMode::kBaseOnly:
      return detail::kappa_of_sqdist(base.family(), base.bandwidth(), d2);
    case MetaMode::kConcatenated: {
      const double dy = y1 - y2;
      return detail::kappa_of_sqdist(base.family(), base.bandwidth(),
                                     d2 + dy * dy);
    }
    case MetaMode::kNW: {
      const double k = detail::kappa_of_sqdist(base.family(), base.bandwidth(), d2);
      return k * (1.0 + y1 * y2);
    }
    case MetaMode::kRR: {
      const double k = detail::kappa_of_sqdist(base.family(), base.bandwidth(), d2);
      return k * k + k * y1 * y2;
    }
  }
  return 0.0;  // unreachable
}

// Dense symmetric Gram matrix of the base kernel; entries computed once for
// i <= j and mirrored.
Eigen::MatrixXd gram_base(const KernelSpec& spec,
                          const Eigen::Ref<const Eigen::MatrixXd>& x);

// Dense symmetric Gram matrix of a meta-kernel on labeled points.
Eigen::MatrixXd gram_meta(const MetaKernelSpec& spec,
                          const Eigen::Ref<const Eigen::MatrixXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y);

std::string kernel_family_name(KernelFamily family);
KernelFamily parse_kernel_family(const std::string& name);
std::string meta_mode_name(MetaMode mode);
MetaMode parse_meta_mode(const std::string& name);

}  // namespace ktreg
