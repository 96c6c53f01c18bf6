#include "ktreg/kernels.hpp"

namespace ktreg {

Eigen::MatrixXd gram_base(const KernelSpec& spec,
                          const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const Eigen::Index n = x.rows();
  if (n < 1) throw InputError("gram_base: empty point list");
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = eval_base(spec, x.row(i), x.row(j));
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

Eigen::MatrixXd gram_meta(const MetaKernelSpec& spec,
                          const Eigen::Ref<const Eigen::MatrixXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& y) {
  const Eigen::Index n = x.rows();
  if (n < 1) throw InputError("gram_meta: empty point list");
  if (y.size() != n) throw InputError("gram_meta: label count does not match point count");
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = eval_meta(spec, x.row(i), y(i), x.row(j), y(j));
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

std::string kernel_family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::kGaussian: return "gaussian";
    case KernelFamily::kLaplace: return "laplace";
    case KernelFamily::kWendland0: return "wendland0";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "gaussian") return KernelFamily::kGaussian;
  if (name == "laplace") return KernelFamily::kLaplace;
  if (name == "wendland0") return KernelFamily::kWendland0;
  throw InputError("unknown kernel family: '" + name +
                   "' (expected gaussian|laplace|wendland0)");
}

std::string meta_mode_name(MetaMode mode) {
  switch (mode) {
    case MetaMode::kBaseOnly: return "base";
    case MetaMode::kConcatenated: return "concat";
    case MetaMode::kNW: return "nw";
    case MetaMode::kRR: return "rr";
  }
  return "unknown";
}

MetaMode parse_meta_mode(const std::string& name) {
  if (name == "base") return MetaMode::kBaseOnly;
  if (name == "concat") return MetaMode::kConcatenated;
  if (name == "nw") return MetaMode::kNW;
  if (name == "rr") return MetaMode::kRR;
  throw InputError("unknown meta-kernel mode: '" + name +
                   "' (expected base|concat|nw|rr)");
}

}  // namespace ktreg
