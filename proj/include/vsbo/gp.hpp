#pragma once

#include "vsbo/dataset.hpp"
#include "vsbo/kernel.hpp"
#include "vsbo/lbfgs.hpp"

#include <cstdint>
#include <memory>
#include <optional>

namespace vsbo {

/// Observation-noise variance sigma0^2.
struct NoiseParam {
  double sigma0_2 = 1e-2;
};

/// Box constraints applied to the hyperparameters while fitting (the search
/// itself runs on their logarithms).
struct HyperBounds {
  double rho2_lo = 1e-6;
  double rho2_hi = 1e4;
  double alpha0_2_lo = 1e-4;
  double alpha0_2_hi = 1e4;
  double sigma0_2_lo = 1e-8;
  double sigma0_2_hi = 1.0;
};

inline constexpr double kNoiseFloor = 1e-8;
/// Floor substituted for the posterior standard deviation wherever it is a
/// divisor (standardized output scale).
inline constexpr double kStdFloor = 1e-9;

struct FitOptions {
  KernelKind kind = KernelKind::Matern52;
  int restarts = 5;
  std::uint64_t seed = 0;
  BoundedLbfgsOptions qn{};
  HyperBounds bounds{};
  /// Warm start. Entries of warm_kernel.rho2 at active dimensions seed the
  /// first restart; zero entries fall back to the default initial value.
  std::optional<KernelParams> warm_kernel;
  std::optional<NoiseParam> warm_noise;
};

/// Fitted GP restricted to an active subset of the input dimensions.
/// Immutable after construction; safe to share between readers.
class GPModel {
 public:
  /// Factorizes M = K + sigma0^2 I for the given hyperparameters. rho2 at
  /// inactive dimensions is forced to zero. Throws NumericalError when the
  /// jitter ladder is exhausted.
  static GPModel build(std::shared_ptr<const Dataset> data, IndexSet active, KernelParams params,
                       NoiseParam noise);
  static GPModel build(const Dataset& data, IndexSet active, KernelParams params, NoiseParam noise) {
    return build(std::make_shared<const Dataset>(data), std::move(active), std::move(params), noise);
  }

  const KernelParams& params() const { return params_; }
  const NoiseParam& noise() const { return noise_; }
  const Dataset& data() const { return *data_; }
  const IndexSet& active() const { return active_; }
  int dim() const { return params_.dim(); }
  int num_active() const { return static_cast<int>(active_.size()); }

  /// Lower Cholesky factor of covariance_matrix().
  const Matrix& chol() const { return chol_; }
  /// M^{-1} y.
  const Vector& alpha_vec() const { return alpha_vec_; }
  /// Negative log marginal likelihood at the stored parameters.
  double final_nll() const { return final_nll_; }
  /// Diagonal jitter that was needed on top of sigma0^2 (usually 0).
  double jitter() const { return jitter_; }
  /// K + (sigma0^2 + jitter) I.
  Matrix covariance_matrix() const;

  /// Posterior quantities at a point given by its active coordinates only.
  struct ActivePrediction {
    double mu = 0.0;
    double var = 0.0;
    Vector grad_mu;  // over active coordinates
    Vector grad_sd;  // over active coordinates; zero when sd < kStdFloor
  };
  /// `with_grad` fills grad_mu; `with_sd_grad` (defaults to the same) also
  /// fills grad_sd.
  ActivePrediction predict_active(const Vector& x_active, bool with_grad) const {
    return predict_active(x_active, with_grad, with_grad);
  }
  ActivePrediction predict_active(const Vector& x_active, bool with_grad, bool with_sd_grad) const;

  /// Posterior mean and (unclamped-below-zero) variance for many active-coordinate
  /// rows at once.
  void predict_active_batch(const Matrix& Xq, Vector& mu, Vector& var) const;

 private:
  GPModel() = default;

  std::shared_ptr<const Dataset> data_;
  IndexSet active_;
  KernelParams params_;
  NoiseParam noise_;
  Matrix Xa_;
  Vector rho_a_;
  Matrix chol_;
  Vector alpha_vec_;
  double final_nll_ = 0.0;
  double jitter_ = 0.0;
};

struct Posterior {
  double mu;
  double var;
};

/// Log marginal likelihood -1/2 y M^{-1} y - 1/2 log|M| - n/2 log 2pi.
double log_marginal_likelihood(const Dataset& data, const KernelParams& params, const NoiseParam& noise);

/// Gradient of the log marginal likelihood with respect to
/// (rho2[active[0]], ..., rho2[active[p-1]], alpha0_2, sigma0_2).
/// When `active` is omitted, it is the set of dimensions with rho2 > 0.
Vector mll_gradient(const Dataset& data, const KernelParams& params, const NoiseParam& noise,
                    std::optional<IndexSet> active = std::nullopt);

/// Maximizes the marginal likelihood over the active inverse squared length
/// scales, alpha0_2 and sigma0_2 (log-parameterized, bounded, multi-restart
/// quasi-Newton). Deterministic given opts.seed.
GPModel fit_gp(std::shared_ptr<const Dataset> data, const IndexSet& active, const FitOptions& opts);
inline GPModel fit_gp(const Dataset& data, const IndexSet& active, const FitOptions& opts) {
  return fit_gp(std::make_shared<const Dataset>(data), active, opts);
}

/// Posterior mean and variance at a full D-vector (inactive coordinates are
/// ignored). Variance is clamped at zero.
Posterior posterior(const GPModel& model, const Vector& x);

/// Gradient of the posterior mean, D-vector, exact zeros at inactive dims.
Vector posterior_mean_grad(const GPModel& model, const Vector& x);

/// Gradient of the posterior standard deviation, D-vector. Throws
/// DegenerateVarianceError when the standard deviation is below kStdFloor.
Vector posterior_std_grad(const GPModel& model, const Vector& x);

}  // namespace vsbo
