#pragma once

#include "vsbo/gp.hpp"
#include "vsbo/random.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace vsbo {

/// Grad-IS importance of every input dimension.
struct ImportanceScores {
  Vector scores;   // non-negative, zero for dims inactive in the scoring model
  Vector std_err;  // Monte Carlo standard error of each score
  int n_samples = 0;
};

/// scores[j] = (1/N) sum_k |d mu(x_k)/d x_j| / max(sigma(x_k), kStdFloor),
/// x_k ~ Unif(box). Deterministic given the rng state.
ImportanceScores grad_is(const GPModel& model, int n_samples, const Box& box, Rng& rng);

/// Dimensions of `candidates` (all dims when empty) ordered by descending
/// score, ties by ascending index.
IndexSet rank_by_scores(const Vector& scores, const IndexSet& candidates = {});

enum class SelectionBranch { None, First, Full, Accurate, Inaccurate, Forced };

std::string to_string(SelectionBranch branch);
SelectionBranch selection_branch_from_string(const std::string& name);

/// Selected important dimensions (most important first) and the losses of the
/// fits that produced them.
struct Selection {
  IndexSet indices;
  std::vector<double> losses;
  int iteration = 0;
  SelectionBranch branch = SelectionBranch::None;
  /// Ranking position m (1-based) at which the stop rule fired; 0 if it never
  /// fired.
  int stop_index = 0;
};

/// A GP fit restricted to some dimensions, scored with Grad-IS.
struct ScoredFit {
  ImportanceScores scores;
  double loss = 0.0;
};

/// The two model-fitting capabilities the selection procedures need. Tests
/// inject scripted versions; make_gp_oracle builds the real one.
struct SelectionOracle {
  /// Final negative log marginal likelihood of a GP fitted on `dims`, or
  /// nullopt when the fit fails.
  std::function<std::optional<double>(const IndexSet& dims)> loss;
  /// GP fitted on `dims` plus Grad-IS scores of all dimensions under it.
  std::function<ScoredFit(const IndexSet& dims)> score;
};

struct GpOracleOptions {
  FitOptions fit{};
  int n_is = 10000;
  std::uint64_t seed = 0;
};

/// Oracle backed by fit_gp and grad_is on `data` (already normalized). Fits
/// warm-start from the most recent fitted hyperparameters.
SelectionOracle make_gp_oracle(std::shared_ptr<const Dataset> data, const GpOracleOptions& opts);

/// Stepwise-forward selection over `ranking` starting at 1-based position
/// `start`: the GP on the first m ranked dims yields loss L_m; the first
/// m - start >= 2 with L_{m-1} - L_m <= 0 or
/// L_{m-1} - L_m < (L_{m-2} - L_{m-1}) / 10 stops and returns the first m-1
/// dims. Without a stop, returns the whole ranking. start = 1 is the plain
/// procedure; start > 1 is the inaccurate-case variant.
Selection stepwise_forward(const IndexSet& ranking, const SelectionOracle& oracle, int start = 1);

/// Inaccurate case: skip the leading ranked dims that were in `prev`, then
/// run stepwise-forward from the first one that was not.
Selection inaccurate_case(const IndexSet& ranking, const IndexSet& prev, const SelectionOracle& oracle);

/// Accurate case: recursive feature elimination inside `prev` (ranked by a GP
/// fitted on `prev` alone), then stepwise-forward over `ranking` appending
/// dims not already kept.
Selection accurate_case(const IndexSet& ranking, const IndexSet& prev, const SelectionOracle& oracle);

/// Branch taken by the momentum dispatch at BO iteration t, given the outputs
/// observed so far (y[0..t-2]); non-finite outputs count as -inf.
SelectionBranch momentum_branch(int t, const Vector& y_history, const IndexSet* prev, int n_init, int n_vs, int dim);

/// Momentum dispatch: first selection or a full previous selection runs the
/// plain procedure; otherwise the accurate case applies when the last n_vs
/// outputs contain a strict new maximum, the inaccurate case when not.
Selection momentum_select(int t, const Vector& y_history, const IndexSet* prev, int n_init, int n_vs, int dim,
                          const SelectionOracle& oracle);

}  // namespace vsbo
