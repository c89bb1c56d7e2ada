#pragma once

#include "vsbo/types.hpp"

namespace vsbo {

/// Ordered query/output pairs inside a box. Rows are append-only; row i is
/// the i-th query.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(Box box);
  /// Builds from existing rows; every row must lie in `box`.
  Dataset(Box box, Matrix X, Vector y);

  int dim() const { return box_.dim(); }
  int size() const { return static_cast<int>(y_.size()); }
  bool empty() const { return y_.size() == 0; }

  const Box& box() const { return box_; }
  const Matrix& X() const { return X_; }
  const Vector& y() const { return y_; }
  Vector row(int i) const { return X_.row(i).transpose(); }

  void append(const Vector& x, double y);

  /// Index of the largest finite output, or -1 if there is none.
  int argmax() const;

  /// Rows with a finite output only, order preserved.
  Dataset finite_only() const;

 private:
  Box box_;
  Matrix X_;
  Vector y_;
};

/// Affine output standardization: (y - mean) / scale. A constant output
/// vector gets scale 1.
struct Standardizer {
  double mean = 0.0;
  double scale = 1.0;

  static Standardizer fit(const Vector& y);
  double forward(double y) const { return (y - mean) / scale; }
  double inverse(double z) const { return z * scale + mean; }
};

/// Inputs mapped to [0,1]^D and outputs standardized; rows with non-finite
/// outputs dropped. This is the scale every GP in the loop works on.
Dataset normalized_for_fit(const Dataset& data, Standardizer* stats = nullptr);

}  // namespace vsbo
