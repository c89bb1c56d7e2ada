#include "vsbo/gp.hpp"

#include "vsbo/random.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <numbers>

namespace vsbo {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// Fills K (and optionally dK/ds) over the active columns.
void kernel_matrix(const Matrix& Xa, const Vector& rho, KernelKind kind, double alpha0_2, Matrix& K,
                   Matrix* slope) {
  const Eigen::Index n = Xa.rows();
  const Eigen::Index p = Xa.cols();
  K.resize(n, n);
  if (slope != nullptr) slope->resize(n, n);
  const KernelSlope diag = kernel_profile(kind, alpha0_2, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = diag.value;
    if (slope != nullptr) (*slope)(i, i) = diag.dvalue_ds;
    for (Eigen::Index j = 0; j < i; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < p; ++k) {
        const double d = Xa(i, k) - Xa(j, k);
        s += rho[k] * d * d;
      }
      const KernelSlope ks = kernel_profile(kind, alpha0_2, s);
      K(i, j) = K(j, i) = ks.value;
      if (slope != nullptr) (*slope)(i, j) = (*slope)(j, i) = ks.dvalue_ds;
    }
  }
}

struct Factor {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
};

// Jitter ladder: none, then 1e-10 * tr(M)/n escalating x10 up to 1e-4 * tr(M)/n.
Factor factorize(Matrix M) {
  const Eigen::Index n = M.rows();
  Factor f;
  f.llt.compute(M);
  if (f.llt.info() == Eigen::Success) return f;
  const double base = M.trace() / static_cast<double>(n);
  for (double scale = 1e-10; scale <= 1e-4 * (1.0 + 1e-9); scale *= 10.0) {
    const double jitter = scale * base;
    Matrix Mj = M;
    Mj.diagonal().array() += jitter;
    f.llt.compute(Mj);
    if (f.llt.info() == Eigen::Success) {
      f.jitter = jitter;
      return f;
    }
  }
  throw NumericalError("Cholesky factorization failed after the jitter ladder");
}

struct NllResult {
  double nll = 0.0;
  Vector grad;  // d nll / d (rho_a..., alpha0_2, sigma0_2)
};

NllResult nll_eval(const Matrix& Xa, const Vector& y, const Vector& rho, double alpha0_2, double sigma0_2,
                   KernelKind kind, bool want_grad) {
  const Eigen::Index n = Xa.rows();
  const Eigen::Index p = Xa.cols();
  Matrix K;
  Matrix slope;
  kernel_matrix(Xa, rho, kind, alpha0_2, K, want_grad ? &slope : nullptr);
  Matrix M = K;
  M.diagonal().array() += sigma0_2;
  const Factor f = factorize(std::move(M));
  const Vector a = f.llt.solve(y);
  const Matrix& L = f.llt.matrixLLT();
  double logdet_half = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet_half += std::log(L(i, i));

  NllResult out;
  out.nll = 0.5 * y.dot(a) + logdet_half + 0.5 * static_cast<double>(n) * kLog2Pi;
  if (!want_grad) return out;

  // dMLL/dtheta = 1/2 sum_ij W_ij dM_ij with W = a a^T - M^{-1}.
  Matrix W = -f.llt.solve(Matrix::Identity(n, n));
  W.noalias() += a * a.transpose();

  out.grad.resize(p + 2);
  const Matrix G = W.cwiseProduct(slope);
  const Vector row_sum = G.rowwise().sum();
  const Matrix GX = G * Xa;
  for (Eigen::Index k = 0; k < p; ++k) {
    // sum_ij G_ij (x_ik - x_jk)^2 = 2 sum_i x_ik^2 rowsum_i - 2 x_k^T G x_k
    const double q = 2.0 * (Xa.col(k).array().square() * row_sum.array()).sum() - 2.0 * Xa.col(k).dot(GX.col(k));
    out.grad[k] = -0.5 * q;
  }
  out.grad[p] = -0.5 * W.cwiseProduct(K).sum() / alpha0_2;
  out.grad[p + 1] = -0.5 * W.trace();
  return out;
}

Matrix active_columns(const Matrix& X, const IndexSet& active) {
  Matrix Xa(X.rows(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) Xa.col(static_cast<Eigen::Index>(k)) = X.col(active[k]);
  return Xa;
}

IndexSet positive_dims(const Vector& rho2) {
  IndexSet out;
  for (Eigen::Index j = 0; j < rho2.size(); ++j) {
    if (rho2[j] > 0.0) out.push_back(static_cast<int>(j));
  }
  return out;
}

void check_params(const Dataset& data, const KernelParams& params, const NoiseParam& noise) {
  if (data.size() < 1) throw std::invalid_argument("GP: need at least one observation");
  if (params.dim() != data.dim()) throw std::invalid_argument("GP: rho2 length differs from data dimension");
  if (!(params.alpha0_2 > 0.0) || !std::isfinite(params.alpha0_2)) {
    throw std::invalid_argument("GP: alpha0_2 must be positive");
  }
  if (!(noise.sigma0_2 >= 0.0) || !std::isfinite(noise.sigma0_2)) {
    throw std::invalid_argument("GP: sigma0_2 must be non-negative");
  }
  if (!params.rho2.allFinite() || params.rho2.minCoeff() < 0.0) {
    throw std::invalid_argument("GP: rho2 entries must be finite and non-negative");
  }
  if (!data.y().allFinite()) throw std::invalid_argument("GP: outputs must be finite");
}

}  // namespace

GPModel GPModel::build(std::shared_ptr<const Dataset> data, IndexSet active, KernelParams params,
                       NoiseParam noise) {
  if (!data) throw std::invalid_argument("GPModel::build: null dataset");
  check_index_set(active, data->dim(), "GPModel::build");
  if (active.empty()) throw std::invalid_argument("GPModel::build: empty active set");
  check_params(*data, params, noise);

  GPModel m;
  m.data_ = std::move(data);
  m.active_ = std::move(active);
  m.noise_ = noise;
  m.params_ = std::move(params);
  Vector masked = Vector::Zero(m.params_.dim());
  for (int j : m.active_) masked[j] = m.params_.rho2[j];
  m.params_.rho2 = masked;
  m.Xa_ = active_columns(m.data_->X(), m.active_);
  m.rho_a_ = gather(m.params_.rho2, m.active_);

  Matrix K;
  kernel_matrix(m.Xa_, m.rho_a_, m.params_.kind, m.params_.alpha0_2, K, nullptr);
  K.diagonal().array() += noise.sigma0_2;
  const Factor f = factorize(std::move(K));
  m.jitter_ = f.jitter;
  m.chol_ = f.llt.matrixL();
  m.alpha_vec_ = f.llt.solve(m.data_->y());
  const Eigen::Index n = m.Xa_.rows();
  double logdet_half = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet_half += std::log(m.chol_(i, i));
  m.final_nll_ = 0.5 * m.data_->y().dot(m.alpha_vec_) + logdet_half + 0.5 * static_cast<double>(n) * kLog2Pi;
  return m;
}

Matrix GPModel::covariance_matrix() const {
  Matrix K;
  kernel_matrix(Xa_, rho_a_, params_.kind, params_.alpha0_2, K, nullptr);
  K.diagonal().array() += noise_.sigma0_2 + jitter_;
  return K;
}

GPModel::ActivePrediction GPModel::predict_active(const Vector& xa, bool with_grad, bool with_sd_grad) const {
  const Eigen::Index n = Xa_.rows();
  const Eigen::Index p = Xa_.cols();
  Vector k(n);
  Vector slope(with_grad ? n : 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < p; ++c) {
      const double d = xa[c] - Xa_(i, c);
      s += rho_a_[c] * d * d;
    }
    const KernelSlope ks = kernel_profile(params_.kind, params_.alpha0_2, s);
    k[i] = ks.value;
    if (with_grad) slope[i] = ks.dvalue_ds;
  }
  ActivePrediction out;
  out.mu = k.dot(alpha_vec_);
  const Vector v = chol_.triangularView<Eigen::Lower>().solve(k);
  out.var = std::max(params_.alpha0_2 - v.squaredNorm(), 0.0);
  if (!with_grad) return out;

  // dk_i/dx_c = slope_i * 2 rho_c (x_c - X_ic)
  const Vector c_mu = slope.cwiseProduct(alpha_vec_);
  const Vector proj_mu = Xa_.transpose() * c_mu;
  const double sum_mu = c_mu.sum();
  out.grad_mu.resize(p);
  for (Eigen::Index c = 0; c < p; ++c) out.grad_mu[c] = 2.0 * rho_a_[c] * (xa[c] * sum_mu - proj_mu[c]);

  out.grad_sd = Vector::Zero(p);
  const double sd = std::sqrt(out.var);
  if (with_sd_grad && sd >= kStdFloor) {
    const Vector w = chol_.transpose().triangularView<Eigen::Upper>().solve(v);
    const Vector c_sd = slope.cwiseProduct(w);
    const Vector proj_sd = Xa_.transpose() * c_sd;
    const double sum_sd = c_sd.sum();
    for (Eigen::Index c = 0; c < p; ++c) {
      out.grad_sd[c] = -2.0 * rho_a_[c] * (xa[c] * sum_sd - proj_sd[c]) / sd;
    }
  }
  return out;
}

void GPModel::predict_active_batch(const Matrix& Xq, Vector& mu, Vector& var) const {
  const Eigen::Index n = Xa_.rows();
  const Eigen::Index p = Xa_.cols();
  const Eigen::Index m = Xq.rows();
  Matrix Ks(n, m);
  for (Eigen::Index q = 0; q < m; ++q) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < p; ++c) {
        const double d = Xq(q, c) - Xa_(i, c);
        s += rho_a_[c] * d * d;
      }
      Ks(i, q) = kernel_profile(params_.kind, params_.alpha0_2, s).value;
    }
  }
  mu = Ks.transpose() * alpha_vec_;
  chol_.triangularView<Eigen::Lower>().solveInPlace(Ks);
  var = (params_.alpha0_2 - Ks.colwise().squaredNorm().transpose().array()).cwiseMax(0.0).matrix();
}

double log_marginal_likelihood(const Dataset& data, const KernelParams& params, const NoiseParam& noise) {
  check_params(data, params, noise);
  const IndexSet act = positive_dims(params.rho2);
  const Matrix Xa = active_columns(data.X(), act);
  return -nll_eval(Xa, data.y(), gather(params.rho2, act), params.alpha0_2, noise.sigma0_2, params.kind, false).nll;
}

Vector mll_gradient(const Dataset& data, const KernelParams& params, const NoiseParam& noise,
                    std::optional<IndexSet> active) {
  check_params(data, params, noise);
  const IndexSet act = active ? *active : positive_dims(params.rho2);
  check_index_set(act, data.dim(), "mll_gradient");
  for (Eigen::Index j = 0; j < params.rho2.size(); ++j) {
    if (params.rho2[j] != 0.0 && std::find(act.begin(), act.end(), static_cast<int>(j)) == act.end()) {
      throw std::invalid_argument("mll_gradient: nonzero rho2 outside the active set");
    }
  }
  const Matrix Xa = active_columns(data.X(), act);
  return -nll_eval(Xa, data.y(), gather(params.rho2, act), params.alpha0_2, noise.sigma0_2, params.kind, true).grad;
}

GPModel fit_gp(std::shared_ptr<const Dataset> data, const IndexSet& active, const FitOptions& opts) {
  if (!data) throw std::invalid_argument("fit_gp: null dataset");
  if (data->size() < 1) throw std::invalid_argument("fit_gp: need at least one observation");
  if (active.empty()) throw std::invalid_argument("fit_gp: empty active set");
  check_index_set(active, data->dim(), "fit_gp");
  if (!data->y().allFinite()) throw std::invalid_argument("fit_gp: outputs must be finite");
  if (opts.restarts < 1) throw std::invalid_argument("fit_gp: restarts must be >= 1");

  const auto p = static_cast<Eigen::Index>(active.size());
  const Matrix Xa = active_columns(data->X(), active);
  const Vector& y = data->y();
  const HyperBounds& hb = opts.bounds;

  Vector lo(p + 2);
  Vector hi(p + 2);
  lo.head(p).setConstant(std::log(hb.rho2_lo));
  hi.head(p).setConstant(std::log(hb.rho2_hi));
  lo[p] = std::log(hb.alpha0_2_lo);
  hi[p] = std::log(hb.alpha0_2_hi);
  lo[p + 1] = std::log(std::max(hb.sigma0_2_lo, kNoiseFloor));
  hi[p + 1] = std::log(hb.sigma0_2_hi);

  const GradObjective objective = [&](const Vector& theta, Vector& grad) {
    const Vector raw = theta.array().exp().matrix();
    NllResult r = nll_eval(Xa, y, raw.head(p), raw[p], raw[p + 1], opts.kind, true);
    grad = r.grad.cwiseProduct(raw);
    return r.nll;
  };

  // Restart 0 is the warm start (or the default point); the rest are
  // log-uniform draws inside the bounds.
  std::vector<Vector> starts;
  {
    Vector t0(p + 2);
    for (Eigen::Index k = 0; k < p; ++k) {
      double r = 1.0;
      if (opts.warm_kernel && opts.warm_kernel->dim() == data->dim()) {
        const double w = opts.warm_kernel->rho2[active[static_cast<std::size_t>(k)]];
        if (w > 0.0 && std::isfinite(w)) r = w;
      }
      t0[k] = std::log(r);
    }
    t0[p] = std::log(opts.warm_kernel ? opts.warm_kernel->alpha0_2 : 1.0);
    t0[p + 1] = std::log(opts.warm_noise ? opts.warm_noise->sigma0_2 : 1e-2);
    starts.push_back(t0.cwiseMax(lo).cwiseMin(hi));
    Rng rng(derive_seed(opts.seed, {0x6670ULL}));
    for (int r = 1; r < opts.restarts; ++r) {
      Vector t(p + 2);
      for (Eigen::Index k = 0; k < p + 2; ++k) t[k] = rng.uniform(lo[k], hi[k]);
      starts.push_back(t);
    }
  }

  double best_nll = std::numeric_limits<double>::infinity();
  Vector best_theta;
  for (const Vector& start : starts) {
    try {
      const BoundedLbfgsResult res = minimize_bounded(objective, start, lo, hi, opts.qn);
      // Strict improvement keeps the lowest restart index on ties.
      if (res.value < best_nll) {
        best_nll = res.value;
        best_theta = res.x;
      }
    } catch (const NumericalError&) {
      continue;
    }
  }
  if (best_theta.size() == 0) throw NumericalError("fit_gp: every restart failed to factorize");

  Vector raw = best_theta.array().exp().matrix();
  raw.head(p) = raw.head(p).cwiseMax(hb.rho2_lo).cwiseMin(hb.rho2_hi);
  raw[p] = std::clamp(raw[p], hb.alpha0_2_lo, hb.alpha0_2_hi);
  raw[p + 1] = std::clamp(raw[p + 1], std::max(hb.sigma0_2_lo, kNoiseFloor), hb.sigma0_2_hi);
  KernelParams params;
  params.kind = opts.kind;
  params.rho2 = Vector::Zero(data->dim());
  for (Eigen::Index k = 0; k < p; ++k) params.rho2[active[static_cast<std::size_t>(k)]] = raw[k];
  params.alpha0_2 = raw[p];
  return GPModel::build(std::move(data), active, std::move(params), NoiseParam{raw[p + 1]});
}

Posterior posterior(const GPModel& model, const Vector& x) {
  if (x.size() != model.dim()) throw std::invalid_argument("posterior: dimension mismatch");
  const Vector xa = gather(x, model.active());
  if (!xa.allFinite()) throw std::invalid_argument("posterior: non-finite input");
  const auto pred = model.predict_active(xa, false);
  return {pred.mu, pred.var};
}

Vector posterior_mean_grad(const GPModel& model, const Vector& x) {
  if (x.size() != model.dim()) throw std::invalid_argument("posterior_mean_grad: dimension mismatch");
  const Vector xa = gather(x, model.active());
  if (!xa.allFinite()) throw std::invalid_argument("posterior_mean_grad: non-finite input");
  const auto pred = model.predict_active(xa, true);
  Vector g = Vector::Zero(model.dim());
  scatter(pred.grad_mu, model.active(), g);
  return g;
}

Vector posterior_std_grad(const GPModel& model, const Vector& x) {
  if (x.size() != model.dim()) throw std::invalid_argument("posterior_std_grad: dimension mismatch");
  const Vector xa = gather(x, model.active());
  if (!xa.allFinite()) throw std::invalid_argument("posterior_std_grad: non-finite input");
  const auto pred = model.predict_active(xa, true);
  if (std::sqrt(pred.var) < kStdFloor) throw DegenerateVarianceError("posterior_std_grad: std below floor");
  Vector g = Vector::Zero(model.dim());
  scatter(pred.grad_sd, model.active(), g);
  return g;
}

}  // namespace vsbo
