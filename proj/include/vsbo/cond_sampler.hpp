#pragma once

#include "vsbo/dataset.hpp"
#include "vsbo/random.hpp"

#include <optional>

namespace vsbo {

/// Search distribution N(mean, sigma_step^2 cov) over the whole box, adapted
/// CMA-ES style from batches of query-output pairs.
struct GaussState {
  Box box;
  Vector mean;
  Matrix cov;
  double sigma_step = 0.3;
  int generation = 0;
  Vector path_sigma;
  Vector path_cov;

  int dim() const { return static_cast<int>(mean.size()); }
};

/// CMA-ES constants for dimension `dim` and `lambda` offspring.
struct CmaConstants {
  Vector weights;  // lambda entries, non-negative, summing to 1
  double mu_eff = 1.0;
  double c_sigma = 0.0;
  double d_sigma = 1.0;
  double c_c = 0.0;
  double c_1 = 0.0;
  double c_mu = 0.0;
  double chi_n = 1.0;  // E||N(0, I)||
};

CmaConstants cma_constants(int dim, int lambda);

/// Recombination weights for outputs `y` (any order): log-rank weights over
/// the best ceil(lambda/2), averaged across tied outputs. Non-finite outputs
/// rank last.
Vector recombination_weights(const Vector& y);

/// Initial state from the initial design. Throws std::invalid_argument when
/// fewer than two points are given.
GaussState init_state(const Dataset& init_data);

/// One generation with the rows of (X, y) as offspring. Pure.
GaussState update_state(const GaussState& state, const Matrix& X, const Vector& y);

struct ConditionalGaussian {
  IndexSet dims;  // the conditioned-out (unimportant) dims, ascending
  Vector mean;
  Matrix cov;
};

/// Distribution of the dims outside `ipt` given x[ipt] = x_ipt under
/// N(mean, sigma_step^2 cov). Falls back to the marginal when the block on
/// `ipt` cannot be factorized.
ConditionalGaussian conditional(const GaussState& state, const IndexSet& ipt, const Vector& x_ipt);

/// One draw from N(cond.mean, cond.cov), each coordinate clamped into `box`
/// (the box restricted to cond.dims).
Vector sample_nipt(const ConditionalGaussian& cond, const Box& box, Rng& rng);

/// Mix strategy: with probability 1/2 a uniform draw from the box on `nipt`,
/// otherwise the incumbent best query's coordinates. `force_incumbent`
/// overrides the coin.
Vector mix_sample(const Dataset& data, const IndexSet& nipt, Rng& rng,
                  std::optional<bool> force_incumbent = std::nullopt);

}  // namespace vsbo
