#pragma once

#include "vsbo/gp.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace vsbo {

enum class AcqKind { EI, UCB };

std::string to_string(AcqKind kind);
AcqKind acq_kind_from_string(std::string_view name);

/// Acquisition function choice with its point-of-use constants: the
/// incumbent y_star for EI, the exploration weight beta for UCB.
struct AcqSpec {
  AcqKind kind = AcqKind::EI;
  double y_star = 0.0;
  double beta = 0.0;

  static AcqSpec expected_improvement(double y_star) { return {AcqKind::EI, y_star, 0.0}; }
  static AcqSpec upper_confidence_bound(double beta);
};

/// Acquisition value with its gradient over the model's active coordinates.
struct AcqValue {
  double value = 0.0;
  Vector grad;
};

/// EI = (mu - y*) Phi(z) + sigma phi(z), z = (mu - y*) / sigma;
/// UCB = mu + sqrt(beta) sigma. sigma is replaced by kStdFloor when degenerate
/// (with zero sigma-gradient). `x` is a full D-vector.
AcqValue acq_value_grad(const GPModel& model, const AcqSpec& spec, const Vector& x);

/// Same, with `x_active` holding only the active coordinates.
AcqValue acq_value_grad_active(const GPModel& model, const AcqSpec& spec, const Vector& x_active);

struct AcqMaximizeOptions {
  int restarts = 10;
  int candidates = 512;
  std::uint64_t seed = 0;
  BoundedLbfgsOptions qn{};
};

/// Multi-start bounded quasi-Newton maximization over the active coordinates.
/// Starts are the best `restarts` of `candidates` uniform draws; the winner is
/// the highest final value (lowest start index on ties). `box_active` bounds
/// the active coordinates. Never throws on numerical trouble: the best
/// screening candidate is the fallback.
Vector maximize_acq(const GPModel& model, const AcqSpec& spec, const Box& box_active,
                    const AcqMaximizeOptions& opts = {});

/// Constants of the VS-GP-UCB exploration schedule.
struct BetaScheduleParams {
  double delta = 0.1;
  double a = 1.0;
  double b = 1.0;
  double alpha = 0.1;
  int D = 1;
  int d = 1;
};

/// beta_t = 2 log(8 pi^2 t^2 / (3 delta))
///        + 2 (D - d) log(alpha D t^2 b sqrt(log(8 D a / delta)) + 1)
///        + 2 d log(D t^2 b sqrt(log(8 D a / delta))).
/// Throws std::invalid_argument for invalid parameters or a non-positive log
/// argument.
double beta_t(int t, const BetaScheduleParams& p);

/// Standard normal pdf and cdf.
double normal_pdf(double z);
double normal_cdf(double z);

}  // namespace vsbo
