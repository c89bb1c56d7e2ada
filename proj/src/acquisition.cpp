#include "vsbo/acquisition.hpp"

#include "vsbo/log.hpp"
#include "vsbo/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace vsbo {

std::string to_string(AcqKind kind) { return kind == AcqKind::EI ? "ei" : "ucb"; }

AcqKind acq_kind_from_string(std::string_view name) {
  if (name == "ei" || name == "EI") return AcqKind::EI;
  if (name == "ucb" || name == "UCB") return AcqKind::UCB;
  throw std::invalid_argument("unknown acquisition: " + std::string(name));
}

AcqSpec AcqSpec::upper_confidence_bound(double beta) {
  if (!std::isfinite(beta) || beta < 0.0) throw std::invalid_argument("UCB beta must be finite and >= 0");
  return {AcqKind::UCB, 0.0, beta};
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

namespace {

double acq_from_moments(const AcqSpec& spec, double mu, double sd, double* dmu, double* dsd) {
  if (spec.kind == AcqKind::UCB) {
    const double w = std::sqrt(spec.beta);
    if (dmu != nullptr) *dmu = 1.0;
    if (dsd != nullptr) *dsd = w;
    return mu + w * sd;
  }
  const double z = (mu - spec.y_star) / sd;
  const double cdf = normal_cdf(z);
  const double pdf = normal_pdf(z);
  if (dmu != nullptr) *dmu = cdf;
  if (dsd != nullptr) *dsd = pdf;
  return std::max(sd * (z * cdf + pdf), 0.0);
}

void check_spec(const AcqSpec& spec) {
  if (spec.kind == AcqKind::UCB && (!std::isfinite(spec.beta) || spec.beta < 0.0)) {
    throw std::invalid_argument("acquisition: beta must be finite and >= 0");
  }
  if (spec.kind == AcqKind::EI && !std::isfinite(spec.y_star)) {
    throw std::invalid_argument("acquisition: y_star must be finite");
  }
}

}  // namespace

AcqValue acq_value_grad_active(const GPModel& model, const AcqSpec& spec, const Vector& xa) {
  check_spec(spec);
  if (xa.size() != model.num_active()) throw std::invalid_argument("acquisition: dimension mismatch");
  if (!xa.allFinite()) throw std::invalid_argument("acquisition: non-finite input");
  const auto pred = model.predict_active(xa, true);
  double sd = std::sqrt(pred.var);
  Vector grad_sd = pred.grad_sd;
  if (sd < kStdFloor) {
    sd = kStdFloor;
    grad_sd.setZero();
  }
  double dmu = 0.0;
  double dsd = 0.0;
  AcqValue out;
  out.value = acq_from_moments(spec, pred.mu, sd, &dmu, &dsd);
  out.grad = dmu * pred.grad_mu + dsd * grad_sd;
  return out;
}

AcqValue acq_value_grad(const GPModel& model, const AcqSpec& spec, const Vector& x) {
  if (x.size() != model.dim()) throw std::invalid_argument("acquisition: dimension mismatch");
  return acq_value_grad_active(model, spec, gather(x, model.active()));
}

Vector maximize_acq(const GPModel& model, const AcqSpec& spec, const Box& box_active,
                    const AcqMaximizeOptions& opts) {
  check_spec(spec);
  const int p = model.num_active();
  if (box_active.dim() != p) throw std::invalid_argument("maximize_acq: box does not match active dims");
  const int ncand = std::max(opts.candidates, 1);

  Rng rng(derive_seed(opts.seed, {0x61637121ULL}));
  Matrix cand(ncand, p);
  for (int i = 0; i < ncand; ++i) {
    for (int c = 0; c < p; ++c) cand(i, c) = rng.uniform(box_active.lo[c], box_active.hi[c]);
  }
  Vector mu;
  Vector var;
  model.predict_active_batch(cand, mu, var);
  std::vector<double> vals(static_cast<std::size_t>(ncand));
  for (int i = 0; i < ncand; ++i) {
    const double sd = std::max(std::sqrt(var[i]), kStdFloor);
    vals[static_cast<std::size_t>(i)] = acq_from_moments(spec, mu[i], sd, nullptr, nullptr);
  }
  std::vector<int> order(static_cast<std::size_t>(ncand));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return vals[static_cast<std::size_t>(a)] > vals[static_cast<std::size_t>(b)];
  });

  Vector best = cand.row(order.front()).transpose();
  double best_val = vals[static_cast<std::size_t>(order.front())];

  const GradObjective neg_acq = [&](const Vector& xa, Vector& grad) {
    const AcqValue a = acq_value_grad_active(model, spec, xa);
    grad = -a.grad;
    return -a.value;
  };
  const int nstart = std::min(opts.restarts, ncand);
  for (int s = 0; s < nstart; ++s) {
    const Vector x0 = cand.row(order[static_cast<std::size_t>(s)]).transpose();
    try {
      const BoundedLbfgsResult res = minimize_bounded(neg_acq, x0, box_active.lo, box_active.hi, opts.qn);
      if (-res.value > best_val) {
        best_val = -res.value;
        best = res.x;
      }
    } catch (const std::exception& e) {
      log_warning(std::string("maximize_acq: start failed: ") + e.what());
    }
  }
  return box_active.clamp(best);
}

double beta_t(int t, const BetaScheduleParams& p) {
  if (t < 1) throw std::invalid_argument("beta_t: t must be >= 1");
  if (!(p.delta > 0.0 && p.delta < 1.0)) throw std::invalid_argument("beta_t: delta must be in (0,1)");
  if (!(p.a > 0.0) || !(p.b > 0.0)) throw std::invalid_argument("beta_t: a and b must be positive");
  if (!(p.alpha >= 0.0 && p.alpha < 1.0)) throw std::invalid_argument("beta_t: alpha must be in [0,1)");
  if (p.D < 1 || p.d < 1 || p.d > p.D) throw std::invalid_argument("beta_t: need 1 <= d <= D");

  const double D = p.D;
  const double d = p.d;
  const double tt = static_cast<double>(t) * static_cast<double>(t);
  const double inner = std::log(8.0 * D * p.a / p.delta);
  if (!(inner > 0.0)) throw std::invalid_argument("beta_t: log(8 D a / delta) must be positive");
  const double lip = p.b * std::sqrt(inner);
  const double arg1 = 8.0 * std::numbers::pi * std::numbers::pi * tt / (3.0 * p.delta);
  const double arg2 = p.alpha * D * tt * lip + 1.0;
  const double arg3 = D * tt * lip;
  if (!(arg1 > 0.0) || !(arg2 > 0.0) || !(arg3 > 0.0)) throw std::invalid_argument("beta_t: log argument <= 0");
  return 2.0 * std::log(arg1) + 2.0 * (D - d) * std::log(arg2) + 2.0 * d * std::log(arg3);
}

}  // namespace vsbo
