#include "vsbo/cond_sampler.hpp"

#include "vsbo/log.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace vsbo {

namespace {

constexpr double kSigmaMin = 1e-10;
constexpr double kSigmaMax = 1e10;

void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

// Factor-or-jitter: returns false when even the largest jitter fails.
bool robust_llt(const Matrix& a, Eigen::LLT<Matrix>& llt) {
  const double scale = std::max(a.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  double jitter = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    Matrix b = a;
    b.diagonal().array() += jitter;
    llt.compute(b);
    if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite() &&
        llt.matrixLLT().diagonal().minCoeff() > 0.0) {
      return true;
    }
    jitter = jitter == 0.0 ? 1e-12 * scale : jitter * 10.0;
  }
  return false;
}

}  // namespace

CmaConstants cma_constants(int dim, int lambda) {
  if (dim < 1 || lambda < 1) throw std::invalid_argument("cma_constants: dim and lambda must be >= 1");
  CmaConstants c;
  const int mu = (lambda + 1) / 2;
  c.weights = Vector::Zero(lambda);
  for (int i = 0; i < mu; ++i) {
    c.weights[i] = std::max(std::log(lambda / 2.0 + 0.5) - std::log(i + 1.0), 0.0);
  }
  if (c.weights.sum() <= 0.0) c.weights.head(mu).setConstant(1.0);
  c.weights /= c.weights.sum();
  c.mu_eff = 1.0 / c.weights.squaredNorm();
  const double n = dim;
  const double me = c.mu_eff;
  c.c_sigma = (me + 2.0) / (n + me + 5.0);
  c.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((me - 1.0) / (n + 1.0)) - 1.0) + c.c_sigma;
  c.c_c = (4.0 + me / n) / (n + 4.0 + 2.0 * me / n);
  c.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + me);
  c.c_mu = std::min(1.0 - c.c_1, 2.0 * (me - 2.0 + 1.0 / me) / ((n + 2.0) * (n + 2.0) + me));
  c.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
  return c;
}

Vector recombination_weights(const Vector& y) {
  const int lambda = static_cast<int>(y.size());
  if (lambda < 1) throw std::invalid_argument("recombination_weights: empty batch");
  const Vector base = cma_constants(1, lambda).weights;
  auto key = [&](int i) { return std::isfinite(y[i]) ? y[i] : -std::numeric_limits<double>::infinity(); };
  std::vector<int> order(static_cast<std::size_t>(lambda));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key(a) > key(b); });
  Vector w = Vector::Zero(lambda);
  for (int r = 0; r < lambda;) {
    int e = r + 1;
    while (e < lambda && key(order[static_cast<std::size_t>(e)]) == key(order[static_cast<std::size_t>(r)])) ++e;
    const double avg = base.segment(r, e - r).mean();
    for (int k = r; k < e; ++k) w[order[static_cast<std::size_t>(k)]] = avg;
    r = e;
  }
  return w;
}

GaussState init_state(const Dataset& init_data) {
  const int n = init_data.size();
  if (n < 2) throw std::invalid_argument("init_state: need at least two initial points");
  const int D = init_data.dim();
  const Matrix& X = init_data.X();
  GaussState s;
  s.box = init_data.box();
  const Vector w = recombination_weights(init_data.y());
  s.mean = s.box.clamp(X.transpose() * w);
  s.cov = Matrix::Zero(D, D);
  const Vector centroid = X.colwise().mean().transpose();
  const Vector width = s.box.width();
  for (int j = 0; j < D; ++j) {
    const double var = (X.col(j).array() - centroid[j]).square().sum() / (n - 1);
    const double floor = 0.05 * width[j] * 0.05 * width[j];
    s.cov(j, j) = std::max(var, floor);
  }
  s.sigma_step = 0.3;
  s.path_sigma = Vector::Zero(D);
  s.path_cov = Vector::Zero(D);
  return s;
}

GaussState update_state(const GaussState& state, const Matrix& X, const Vector& y) {
  const int lambda = static_cast<int>(X.rows());
  const int D = state.dim();
  if (lambda < 1 || y.size() != lambda) throw std::invalid_argument("update_state: empty or mismatched batch");
  if (X.cols() != D) throw std::invalid_argument("update_state: dimension mismatch");
  const CmaConstants c = cma_constants(D, lambda);
  const Vector w = recombination_weights(y);

  GaussState s = state;
  const double sigma = state.sigma_step;
  const Matrix steps = (X.rowwise() - state.mean.transpose()) / sigma;  // lambda x D
  const Vector shift = steps.transpose() * w;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(state.cov);
  const Vector evals = eig.eigenvalues().cwiseMax(1e-300);
  const Matrix inv_sqrt = eig.eigenvectors() * evals.cwiseSqrt().cwiseInverse().asDiagonal() *
                          eig.eigenvectors().transpose();

  s.mean = state.mean + sigma * shift;
  s.path_sigma = (1.0 - c.c_sigma) * state.path_sigma +
                 std::sqrt(c.c_sigma * (2.0 - c.c_sigma) * c.mu_eff) * (inv_sqrt * shift);
  const double ps_norm = s.path_sigma.norm();
  const double decay = 1.0 - std::pow(1.0 - c.c_sigma, 2.0 * (state.generation + 1));
  const bool h_sigma = ps_norm / std::sqrt(std::max(decay, 1e-300)) < (1.4 + 2.0 / (D + 1.0)) * c.chi_n;
  s.path_cov = (1.0 - c.c_c) * state.path_cov;
  if (h_sigma) s.path_cov += std::sqrt(c.c_c * (2.0 - c.c_c) * c.mu_eff) * shift;
  const double delta = h_sigma ? 0.0 : c.c_c * (2.0 - c.c_c);

  Matrix rank_mu = steps.transpose() * w.asDiagonal() * steps;
  s.cov = (1.0 - c.c_1 - c.c_mu + c.c_1 * delta) * state.cov + c.c_1 * s.path_cov * s.path_cov.transpose() +
          c.c_mu * rank_mu;
  symmetrize(s.cov);
  s.sigma_step = sigma * std::exp(c.c_sigma / c.d_sigma * (ps_norm / c.chi_n - 1.0));
  if (!std::isfinite(s.sigma_step)) s.sigma_step = state.sigma_step;
  s.sigma_step = std::clamp(s.sigma_step, kSigmaMin, kSigmaMax);
  s.mean = s.box.clamp(s.mean);
  s.generation = state.generation + 1;

  if (!s.cov.allFinite() || !s.mean.allFinite()) {
    log_warning("update_state: non-finite update discarded");
    return state;
  }
  Eigen::LLT<Matrix> llt;
  if (!robust_llt(s.cov, llt)) {
    log_warning("update_state: covariance repaired to its diagonal");
    s.cov = s.cov.diagonal().cwiseAbs().cwiseMax(1e-12).asDiagonal();
  }
  return s;
}

ConditionalGaussian conditional(const GaussState& state, const IndexSet& ipt, const Vector& x_ipt) {
  const int D = state.dim();
  check_index_set(ipt, D, "conditional");
  if (ipt.empty() || static_cast<int>(ipt.size()) >= D) {
    throw std::invalid_argument("conditional: ipt must be a non-empty proper subset");
  }
  if (x_ipt.size() != static_cast<Eigen::Index>(ipt.size())) {
    throw std::invalid_argument("conditional: x_ipt size mismatch");
  }
  ConditionalGaussian out;
  out.dims = complement(ipt, D);
  const int p = static_cast<int>(ipt.size());
  const int q = static_cast<int>(out.dims.size());
  const double s2 = state.sigma_step * state.sigma_step;
  Matrix S11(p, p);
  Matrix S21(q, p);
  Matrix S22(q, q);
  Vector m1(p);
  Vector m2(q);
  for (int a = 0; a < p; ++a) {
    m1[a] = state.mean[ipt[static_cast<std::size_t>(a)]];
    for (int b = 0; b < p; ++b) S11(a, b) = s2 * state.cov(ipt[static_cast<std::size_t>(a)], ipt[static_cast<std::size_t>(b)]);
  }
  for (int a = 0; a < q; ++a) {
    const int i = out.dims[static_cast<std::size_t>(a)];
    m2[a] = state.mean[i];
    for (int b = 0; b < p; ++b) S21(a, b) = s2 * state.cov(i, ipt[static_cast<std::size_t>(b)]);
    for (int b = 0; b < q; ++b) S22(a, b) = s2 * state.cov(i, out.dims[static_cast<std::size_t>(b)]);
  }
  Eigen::LLT<Matrix> llt;
  if (!robust_llt(S11, llt)) {
    log_warning("conditional: singular block, using the marginal");
    out.mean = m2;
    out.cov = S22;
    return out;
  }
  const Matrix gain = llt.solve(S21.transpose()).transpose();  // S21 S11^{-1}
  out.mean = m2 + gain * (x_ipt - m1);
  out.cov = S22 - gain * S21.transpose();
  symmetrize(out.cov);
  return out;
}

Vector sample_nipt(const ConditionalGaussian& cond, const Box& box, Rng& rng) {
  const int q = static_cast<int>(cond.mean.size());
  if (box.dim() != q || cond.cov.rows() != q) throw std::invalid_argument("sample_nipt: dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cond.cov);
  const Matrix root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Vector z(q);
  for (int i = 0; i < q; ++i) z[i] = rng.normal();
  Vector x = cond.mean + root * z;
  for (int i = 0; i < q; ++i) {
    if (!std::isfinite(x[i])) x[i] = std::isfinite(cond.mean[i]) ? cond.mean[i] : box.center()[i];
  }
  return box.clamp(x);
}

Vector mix_sample(const Dataset& data, const IndexSet& nipt, Rng& rng, std::optional<bool> force_incumbent) {
  check_index_set(nipt, data.dim(), "mix_sample");
  const bool coin = rng.coin();
  const bool incumbent = force_incumbent.value_or(coin);
  const int best = data.argmax();
  Vector out(static_cast<Eigen::Index>(nipt.size()));
  if (incumbent && best >= 0) {
    for (std::size_t k = 0; k < nipt.size(); ++k) out[static_cast<Eigen::Index>(k)] = data.X()(best, nipt[k]);
    return out;
  }
  const Box& b = data.box();
  for (std::size_t k = 0; k < nipt.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = rng.uniform(b.lo[nipt[k]], b.hi[nipt[k]]);
  }
  return out;
}

}  // namespace vsbo
