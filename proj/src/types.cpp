#include "vsbo/types.hpp"

#include <algorithm>
#include <cmath>

namespace vsbo {

Box::Box(Vector lower, Vector upper) : lo(std::move(lower)), hi(std::move(upper)) {
  if (lo.size() != hi.size()) {
    throw std::invalid_argument("Box: lower and upper bounds differ in length");
  }
  for (Eigen::Index j = 0; j < lo.size(); ++j) {
    if (!std::isfinite(lo[j]) || !std::isfinite(hi[j]) || !(lo[j] < hi[j])) {
      throw std::invalid_argument("Box: each dimension needs finite lo < hi");
    }
  }
}

Box Box::unit(int dim) { return uniform(dim, 0.0, 1.0); }

Box Box::uniform(int dim, double lower, double upper) {
  return Box(Vector::Constant(dim, lower), Vector::Constant(dim, upper));
}

bool Box::contains(const Vector& x, double tol) const {
  if (x.size() != lo.size()) return false;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!(x[j] >= lo[j] - tol && x[j] <= hi[j] + tol)) return false;
  }
  return true;
}

Vector Box::to_unit(const Vector& x) const {
  return ((x - lo).array() / (hi - lo).array()).matrix();
}

Vector Box::from_unit(const Vector& u) const {
  return (lo.array() + u.array() * (hi - lo).array()).matrix();
}

Vector Box::clamp(const Vector& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

Box Box::slice(const IndexSet& dims) const { return Box(gather(lo, dims), gather(hi, dims)); }

void check_index_set(const IndexSet& dims, int dim, const char* what) {
  std::vector<bool> seen(static_cast<std::size_t>(std::max(dim, 0)), false);
  for (int j : dims) {
    if (j < 0 || j >= dim) {
      throw std::invalid_argument(std::string(what) + ": index out of range");
    }
    if (seen[static_cast<std::size_t>(j)]) {
      throw std::invalid_argument(std::string(what) + ": duplicate index");
    }
    seen[static_cast<std::size_t>(j)] = true;
  }
}

IndexSet complement(const IndexSet& dims, int dim) {
  std::vector<bool> in(static_cast<std::size_t>(dim), false);
  for (int j : dims) in[static_cast<std::size_t>(j)] = true;
  IndexSet out;
  for (int j = 0; j < dim; ++j) {
    if (!in[static_cast<std::size_t>(j)]) out.push_back(j);
  }
  return out;
}

IndexSet all_dims(int dim) {
  IndexSet out(static_cast<std::size_t>(dim));
  for (int j = 0; j < dim; ++j) out[static_cast<std::size_t>(j)] = j;
  return out;
}

Vector gather(const Vector& x, const IndexSet& dims) {
  Vector out(static_cast<Eigen::Index>(dims.size()));
  for (std::size_t k = 0; k < dims.size(); ++k) out[static_cast<Eigen::Index>(k)] = x[dims[k]];
  return out;
}

void scatter(const Vector& values, const IndexSet& dims, Vector& out) {
  for (std::size_t k = 0; k < dims.size(); ++k) out[dims[k]] = values[static_cast<Eigen::Index>(k)];
}

}  // namespace vsbo
