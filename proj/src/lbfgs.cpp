#include "vsbo/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace vsbo {

Vector projected_gradient(const Vector& x, const Vector& g, const Vector& lo, const Vector& hi) {
  Vector pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)) pg[i] = 0.0;
  }
  return pg;
}

namespace {

struct Pair {
  Vector s;
  Vector y;
  double rho;
};

// Two-loop recursion on the free coordinates only.
Vector lbfgs_direction(const Vector& g, const std::deque<Pair>& mem, const std::vector<bool>& free) {
  const Eigen::Index n = g.size();
  auto mask = [&](const Vector& v) {
    Vector out = v;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!free[static_cast<std::size_t>(i)]) out[i] = 0.0;
    }
    return out;
  };
  Vector q = mask(g);
  std::vector<double> alpha(mem.size());
  std::vector<Vector> sm;
  std::vector<Vector> ym;
  std::vector<double> rho;
  for (const Pair& p : mem) {
    Vector s = mask(p.s);
    Vector y = mask(p.y);
    const double sy = s.dot(y);
    if (sy <= 1e-12 * s.norm() * y.norm() || sy <= 0.0) continue;
    sm.push_back(std::move(s));
    ym.push_back(std::move(y));
    rho.push_back(1.0 / sy);
  }
  alpha.resize(sm.size());
  for (std::size_t k = sm.size(); k-- > 0;) {
    alpha[k] = rho[k] * sm[k].dot(q);
    q -= alpha[k] * ym[k];
  }
  double gamma = 1.0;
  if (!sm.empty()) gamma = sm.back().dot(ym.back()) / ym.back().squaredNorm();
  Vector r = gamma * q;
  for (std::size_t k = 0; k < sm.size(); ++k) {
    const double beta = rho[k] * ym[k].dot(r);
    r += (alpha[k] - beta) * sm[k];
  }
  return -r;
}

}  // namespace

BoundedLbfgsResult minimize_bounded(const GradObjective& f, const Vector& x0, const Vector& lo,
                                    const Vector& hi, const BoundedLbfgsOptions& opts) {
  const Eigen::Index n = x0.size();
  if (lo.size() != n || hi.size() != n) throw std::invalid_argument("minimize_bounded: bound size mismatch");

  BoundedLbfgsResult res;
  Vector x = x0.cwiseMax(lo).cwiseMin(hi);
  Vector g(n);
  double fx = f(x, g);
  ++res.evaluations;
  if (!std::isfinite(fx) || !g.allFinite()) throw NumericalError("minimize_bounded: non-finite start");

  std::deque<Pair> mem;
  Vector g_new(n);
  for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
    const Vector pg = projected_gradient(x, g, lo, hi);
    if (pg.lpNorm<Eigen::Infinity>() <= opts.pg_tol) {
      res.converged = true;
      break;
    }
    std::vector<bool> free(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) free[static_cast<std::size_t>(i)] = pg[i] != 0.0 || g[i] == 0.0;

    Vector d = lbfgs_direction(g, mem, free);
    bool steepest = mem.empty();
    if (!(g.dot(d) < 0.0)) {
      mem.clear();
      d = -pg;
      steepest = true;
    }
    double step = 1.0;
    if (steepest) step = std::min(1.0, 1.0 / std::max(d.lpNorm<Eigen::Infinity>(), 1e-300));

    bool accepted = false;
    Vector x_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    for (int bt = 0; bt < opts.max_backtracks; ++bt, step *= 0.5) {
      x_new = (x + step * d).cwiseMax(lo).cwiseMin(hi);
      const double decrease = g.dot(x_new - x);
      if (decrease >= 0.0 && (x_new - x).lpNorm<Eigen::Infinity>() == 0.0) break;
      try {
        f_new = f(x_new, g_new);
      } catch (const NumericalError&) {
        f_new = std::numeric_limits<double>::infinity();
      }
      ++res.evaluations;
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= fx + opts.armijo_c1 * std::min(decrease, 0.0) &&
          f_new <= fx) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!mem.empty()) {
        mem.clear();
        continue;
      }
      break;
    }
    Pair p{x_new - x, g_new - g, 0.0};
    const double sy = p.s.dot(p.y);
    if (sy > 1e-12 * p.s.norm() * p.y.norm() && sy > 0.0) {
      p.rho = 1.0 / sy;
      mem.push_back(std::move(p));
      if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
    }
    x = x_new;
    fx = f_new;
    g = g_new;
  }
  if (!res.converged) {
    res.converged = projected_gradient(x, g, lo, hi).lpNorm<Eigen::Infinity>() <= opts.pg_tol;
  }
  res.x = std::move(x);
  res.value = fx;
  return res;
}

}  // namespace vsbo
