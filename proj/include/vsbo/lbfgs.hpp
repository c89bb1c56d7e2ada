#pragma once

#include "vsbo/types.hpp"

#include <functional>

namespace vsbo {

struct BoundedLbfgsOptions {
  int max_iterations = 200;
  /// Convergence when the projected gradient's infinity norm drops to this.
  double pg_tol = 1e-5;
  int memory = 10;
  int max_backtracks = 40;
  double armijo_c1 = 1e-4;
};

struct BoundedLbfgsResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// f(x, grad) -> value. May throw NumericalError; inside the line search that
/// counts as an infinite value.
using GradObjective = std::function<double(const Vector& x, Vector& grad)>;

/// Minimizes a smooth function over the box [lo, hi] with limited-memory BFGS
/// directions restricted to the free variables and a projected backtracking
/// (Armijo) line search. Iterates are always feasible and the returned value
/// never exceeds the value at the (clamped) starting point.
BoundedLbfgsResult minimize_bounded(const GradObjective& f, const Vector& x0, const Vector& lo,
                                    const Vector& hi, const BoundedLbfgsOptions& opts = {});

/// Projected gradient: components that would push an active bound outward are
/// zeroed.
Vector projected_gradient(const Vector& x, const Vector& g, const Vector& lo, const Vector& hi);

}  // namespace vsbo
