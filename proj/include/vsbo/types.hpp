#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace vsbo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Sorted or ordered list of input-dimension indices (0-based).
using IndexSet = std::vector<int>;

/// Raised when a linear-algebra step cannot be repaired (e.g. Cholesky fails
/// at the top of the jitter ladder).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by posterior_std_grad when the posterior standard deviation is
/// below the floor; callers substitute the floor and a zero gradient.
class DegenerateVarianceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box [lo_j, hi_j]^D.
struct Box {
  Vector lo;
  Vector hi;

  Box() = default;
  Box(Vector lower, Vector upper);

  static Box unit(int dim);
  static Box uniform(int dim, double lower, double upper);

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vector& x, double tol = 0.0) const;
  Vector width() const { return hi - lo; }
  Vector center() const { return 0.5 * (lo + hi); }

  /// Maps a point of this box affinely onto [0,1]^D.
  Vector to_unit(const Vector& x) const;
  /// Inverse of to_unit.
  Vector from_unit(const Vector& u) const;
  Vector clamp(const Vector& x) const;

  /// Restriction of the box to the given coordinates, in order.
  Box slice(const IndexSet& dims) const;
};

/// Validates that `dims` is duplicate-free and inside [0, dim).
void check_index_set(const IndexSet& dims, int dim, const char* what);

/// Complement of `dims` in [0, dim), ascending.
IndexSet complement(const IndexSet& dims, int dim);

IndexSet all_dims(int dim);

Vector gather(const Vector& x, const IndexSet& dims);
void scatter(const Vector& values, const IndexSet& dims, Vector& out);

}  // namespace vsbo
