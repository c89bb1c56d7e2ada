#include "vsbo/kernel.hpp"

#include <cmath>

namespace vsbo {

namespace {
constexpr double kSqrt5 = 2.23606797749978969640917366873;
}

std::string to_string(KernelKind kind) {
  return kind == KernelKind::SquaredExponential ? "se" : "matern52";
}

KernelKind kernel_kind_from_string(std::string_view name) {
  if (name == "se" || name == "SE" || name == "rbf" || name == "squared_exponential") {
    return KernelKind::SquaredExponential;
  }
  if (name == "matern52" || name == "matern" || name == "Matern52") return KernelKind::Matern52;
  throw std::invalid_argument("unknown kernel: " + std::string(name));
}

KernelSlope kernel_profile(KernelKind kind, double alpha0_2, double s) {
  if (kind == KernelKind::SquaredExponential) {
    const double k = alpha0_2 * std::exp(-0.5 * s);
    return {k, -0.5 * k};
  }
  // Matern-5/2: k = a (1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r), r = sqrt(s);
  // dk/ds = -(5/6) a (1 + sqrt5 r) exp(-sqrt5 r), smooth at r = 0.
  const double r = std::sqrt(s);
  const double e = std::exp(-kSqrt5 * r);
  const double k = alpha0_2 * (1.0 + kSqrt5 * r + 5.0 * s / 3.0) * e;
  const double dk = -(5.0 / 6.0) * alpha0_2 * (1.0 + kSqrt5 * r) * e;
  return {k, dk};
}

double kernel_eval(const Vector& x, const Vector& x2, const KernelParams& params) {
  if (x.size() != params.rho2.size() || x2.size() != params.rho2.size()) {
    throw std::invalid_argument("kernel_eval: dimension mismatch");
  }
  if (!x.allFinite() || !x2.allFinite()) throw std::invalid_argument("kernel_eval: non-finite input");
  double s = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double d = x[j] - x2[j];
    s += params.rho2[j] * d * d;
  }
  return kernel_profile(params.kind, params.alpha0_2, s).value;
}

}  // namespace vsbo
