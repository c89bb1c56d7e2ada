#include "vsbo/dataset.hpp"

#include <cmath>
#include <limits>

namespace vsbo {

Dataset::Dataset(Box box) : box_(std::move(box)), X_(0, box_.dim()), y_(0) {}

Dataset::Dataset(Box box, Matrix X, Vector y) : box_(std::move(box)), X_(std::move(X)), y_(std::move(y)) {
  if (X_.rows() != y_.size()) throw std::invalid_argument("Dataset: X and y lengths disagree");
  if (X_.cols() != box_.dim()) throw std::invalid_argument("Dataset: X has wrong column count");
  for (Eigen::Index i = 0; i < X_.rows(); ++i) {
    if (!box_.contains(X_.row(i).transpose(), 1e-12)) {
      throw std::invalid_argument("Dataset: row outside the box");
    }
  }
}

void Dataset::append(const Vector& x, double y) {
  if (x.size() != box_.dim()) throw std::invalid_argument("Dataset::append: wrong dimension");
  if (!box_.contains(x, 1e-12)) throw std::invalid_argument("Dataset::append: point outside the box");
  const Eigen::Index n = y_.size();
  X_.conservativeResize(n + 1, box_.dim());
  X_.row(n) = x.transpose();
  y_.conservativeResize(n + 1);
  y_[n] = y;
}

int Dataset::argmax() const {
  int best = -1;
  double best_y = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < y_.size(); ++i) {
    if (std::isfinite(y_[i]) && (best < 0 || y_[i] > best_y)) {
      best = static_cast<int>(i);
      best_y = y_[i];
    }
  }
  return best;
}

Dataset Dataset::finite_only() const {
  int count = 0;
  for (Eigen::Index i = 0; i < y_.size(); ++i) count += std::isfinite(y_[i]) ? 1 : 0;
  Matrix X(count, dim());
  Vector y(count);
  int k = 0;
  for (Eigen::Index i = 0; i < y_.size(); ++i) {
    if (!std::isfinite(y_[i])) continue;
    X.row(k) = X_.row(i);
    y[k] = y_[i];
    ++k;
  }
  Dataset out(box_);
  out.X_ = std::move(X);
  out.y_ = std::move(y);
  return out;
}

Standardizer Standardizer::fit(const Vector& y) {
  Standardizer s;
  if (y.size() == 0) return s;
  s.mean = y.mean();
  if (y.size() > 1) {
    const double var = (y.array() - s.mean).square().sum() / static_cast<double>(y.size());
    const double sd = std::sqrt(var);
    s.scale = sd > 1e-12 * std::max(1.0, std::abs(s.mean)) ? sd : 1.0;
  }
  return s;
}

Dataset normalized_for_fit(const Dataset& data, Standardizer* stats) {
  const Dataset finite = data.finite_only();
  const Standardizer st = Standardizer::fit(finite.y());
  if (stats != nullptr) *stats = st;
  const Box& box = data.box();
  Matrix U(finite.size(), data.dim());
  for (int i = 0; i < finite.size(); ++i) {
    U.row(i) = box.to_unit(finite.row(i)).cwiseMax(0.0).cwiseMin(1.0).transpose();
  }
  Vector z = (finite.y().array() - st.mean) / st.scale;
  return Dataset(Box::unit(data.dim()), std::move(U), std::move(z));
}

}  // namespace vsbo
