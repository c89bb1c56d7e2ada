#pragma once

#include "vsbo/types.hpp"

#include <string>
#include <string_view>

namespace vsbo {

enum class KernelKind { SquaredExponential, Matern52 };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(std::string_view name);

/// ARD stationary kernel parameters. rho2[j] is the inverse squared length
/// scale of dimension j (0 for an inactive dimension); alpha0_2 is the signal
/// variance.
struct KernelParams {
  Vector rho2;
  double alpha0_2 = 1.0;
  KernelKind kind = KernelKind::Matern52;

  int dim() const { return static_cast<int>(rho2.size()); }
};

/// Kernel value as a function of the scaled squared distance
/// s = sum_j rho2[j] (x_j - x2_j)^2, together with dk/ds.
struct KernelSlope {
  double value;
  double dvalue_ds;
};

KernelSlope kernel_profile(KernelKind kind, double alpha0_2, double s);

/// k(x, x2). Throws std::invalid_argument on non-finite input or a size
/// mismatch.
double kernel_eval(const Vector& x, const Vector& x2, const KernelParams& params);

}  // namespace vsbo
