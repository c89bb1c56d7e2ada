#pragma once

#include "vsbo/random.hpp"
#include "vsbo/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vsbo {

using Objective = std::function<double(const Vector&)>;

/// A maximization test problem.
struct Benchmark {
  std::string name;
  int dim = 0;
  Box box;
  Objective objective;
  std::optional<double> known_max;
  std::optional<Vector> known_argmax;
  /// Dims of the most important tier (empty when not declared).
  IndexSet important_dims;
  /// All tiers, most important first.
  std::vector<IndexSet> tiers;

  double operator()(const Vector& x) const { return objective(x); }
};

/// Negated Branin on [-5, 10] x [0, 10]; maximum -0.397887.
double branin(const Vector& x);
/// Hartmann6 on [0, 1]^6; maximum 3.32237.
double hartmann6(const Vector& x);
/// Negated Styblinski-Tang in 4 dims on [-5, 5]^4; maximum 4 * 39.16617.
double styblinski_tang4(const Vector& x);

/// Same formulas without the box check (branin_unchecked is not negated).
double branin_unchecked(double x1, double x2);
double hartmann6_unchecked(const Vector& x);
double styblinski_tang_term(double x);

inline constexpr double kBraninMax = -0.39788735772973816;
inline constexpr double kHartmann6Max = 3.3223680114155125;
inline constexpr double kStyblinskiTangArgmax = -2.903534027771177;
inline constexpr double kStyblinskiTangTermMax = 39.16616570377141;

Benchmark branin_benchmark();
Benchmark hartmann6_benchmark();
Benchmark styblinski_tang4_benchmark();

/// Composite objective f(block 1) + 0.1 f(block 2) + 0.01 f(block 3) over the
/// first three blocks; remaining dims are unrelated. `name` is one of
/// F_branin (dim >= 6), F_hm6 (dim >= 18), F_ST4 (dim >= 12).
Benchmark composite(const std::string& name, int dim);

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the sign
/// of diag(R) folded into Q).
Matrix haar_orthogonal(int dim, Rng& rng);

/// Hartmann6 of the first six rows of a Haar rotation times x, box [-1, 1]^dim;
/// the rotated point is clamped into [0, 1]^6.
Benchmark rotated_hartmann6(int dim, Rng& rng);
/// Same with an explicit 6 x dim projection.
Benchmark rotated_hartmann6(const Matrix& projection);

/// Registry used by the CLI. `dim` <= 0 selects the default; `seed` only
/// matters for rotated problems.
Benchmark make_benchmark(const std::string& name, int dim = 0, std::uint64_t seed = 0);
std::vector<std::string> benchmark_names();

}  // namespace vsbo
