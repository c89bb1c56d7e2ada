#include "vsbo/var_select.hpp"

#include "vsbo/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace vsbo {

ImportanceScores grad_is(const GPModel& model, int n_samples, const Box& box, Rng& rng) {
  if (n_samples < 1) throw std::invalid_argument("grad_is: n_samples must be >= 1");
  if (box.dim() != model.dim()) throw std::invalid_argument("grad_is: box dimension mismatch");
  const IndexSet& act = model.active();
  const int p = model.num_active();
  Vector sum = Vector::Zero(p);
  Vector sum_sq = Vector::Zero(p);
  Vector xa(p);
  for (int k = 0; k < n_samples; ++k) {
    // Only active coordinates affect the model; drawing just those keeps the
    // stream independent of D.
    for (int c = 0; c < p; ++c) {
      const int j = act[static_cast<std::size_t>(c)];
      xa[c] = rng.uniform(box.lo[j], box.hi[j]);
    }
    const auto pred = model.predict_active(xa, true, false);
    const double sd = std::max(std::sqrt(std::max(pred.var, 0.0)), kStdFloor);
    const Vector term = pred.grad_mu.cwiseAbs() / sd;
    sum += term;
    sum_sq += term.cwiseProduct(term);
  }
  const double n = n_samples;
  ImportanceScores out;
  out.n_samples = n_samples;
  out.scores = Vector::Zero(model.dim());
  out.std_err = Vector::Zero(model.dim());
  for (int c = 0; c < p; ++c) {
    const int j = act[static_cast<std::size_t>(c)];
    const double mean = sum[c] / n;
    out.scores[j] = mean;
    if (n_samples > 1) {
      const double var = std::max(sum_sq[c] / n - mean * mean, 0.0) * n / (n - 1.0);
      out.std_err[j] = std::sqrt(var / n);
    }
  }
  if (!out.scores.allFinite()) throw NumericalError("grad_is: non-finite score");
  return out;
}

IndexSet rank_by_scores(const Vector& scores, const IndexSet& candidates) {
  IndexSet order = candidates.empty() ? all_dims(static_cast<int>(scores.size())) : candidates;
  std::sort(order.begin(), order.end());
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

std::string to_string(SelectionBranch branch) {
  switch (branch) {
    case SelectionBranch::None: return "none";
    case SelectionBranch::First: return "first";
    case SelectionBranch::Full: return "full";
    case SelectionBranch::Accurate: return "accurate";
    case SelectionBranch::Inaccurate: return "inaccurate";
    case SelectionBranch::Forced: return "forced";
  }
  return "none";
}

SelectionBranch selection_branch_from_string(const std::string& name) {
  for (auto b : {SelectionBranch::None, SelectionBranch::First, SelectionBranch::Full, SelectionBranch::Accurate,
                 SelectionBranch::Inaccurate, SelectionBranch::Forced}) {
    if (to_string(b) == name) return b;
  }
  throw std::invalid_argument("unknown selection branch: " + name);
}

namespace {

IndexSet prefix(const IndexSet& ranking, int m) {
  return IndexSet(ranking.begin(), ranking.begin() + std::clamp(m, 1, static_cast<int>(ranking.size())));
}

bool stop_rule(double two_back, double one_back, double current) {
  const double gain = one_back - current;
  return gain <= 0.0 || gain < (two_back - one_back) / 10.0;
}

bool contains(const IndexSet& s, int j) { return std::find(s.begin(), s.end(), j) != s.end(); }

void check_ranking(const IndexSet& ranking) {
  if (ranking.empty()) throw std::invalid_argument("selection: empty ranking");
  check_index_set(ranking, static_cast<int>(ranking.size()), "selection");
}

}  // namespace

Selection stepwise_forward(const IndexSet& ranking, const SelectionOracle& oracle, int start) {
  check_ranking(ranking);
  const int D = static_cast<int>(ranking.size());
  if (start < 1 || start > D) throw std::invalid_argument("stepwise_forward: start out of range");
  Selection out;
  std::vector<double> L(static_cast<std::size_t>(D) + 1, 0.0);
  for (int m = start; m <= D; ++m) {
    const auto loss = oracle.loss(prefix(ranking, m));
    if (!loss) {
      log_warning("stepwise_forward: GP fit failed at m = " + std::to_string(m) + "; stopping");
      out.stop_index = m;
      out.indices = prefix(ranking, m - 1);
      return out;
    }
    out.losses.push_back(*loss);
    L[static_cast<std::size_t>(m)] = *loss;
    if (m - start < 2) continue;
    if (stop_rule(L[static_cast<std::size_t>(m - 2)], L[static_cast<std::size_t>(m - 1)], *loss)) {
      out.stop_index = m;
      out.indices = prefix(ranking, m - 1);
      return out;
    }
  }
  out.indices = ranking;
  return out;
}

Selection inaccurate_case(const IndexSet& ranking, const IndexSet& prev, const SelectionOracle& oracle) {
  check_ranking(ranking);
  if (prev.empty()) throw std::invalid_argument("inaccurate_case: empty previous selection");
  const int D = static_cast<int>(ranking.size());
  int n = 1;
  while (n <= D && contains(prev, ranking[static_cast<std::size_t>(n - 1)])) ++n;
  // Every dim is in prev: nothing left to add.
  if (n > D) {
    Selection out;
    out.indices = ranking;
    return out;
  }
  return stepwise_forward(ranking, oracle, n);
}

Selection accurate_case(const IndexSet& ranking, const IndexSet& prev, const SelectionOracle& oracle) {
  check_ranking(ranking);
  if (prev.empty()) throw std::invalid_argument("accurate_case: empty previous selection");
  const int D = static_cast<int>(ranking.size());
  check_index_set(prev, D, "accurate_case");
  Selection out;

  // Recursive elimination inside prev.
  const ScoredFit within = oracle.score(prev);
  const IndexSet inner = rank_by_scores(within.scores.scores, prev);
  const int w = static_cast<int>(inner.size());
  out.losses.push_back(within.loss);
  double next_loss = within.loss;  // loss of the m+1 prefix
  IndexSet kept;
  double L0 = 0.0;
  for (int m = w - 1; m >= 0; --m) {
    if (m == 0) {
      kept = prefix(inner, 1);
      L0 = next_loss;
      break;
    }
    const auto loss = oracle.loss(prefix(inner, m));
    if (!loss) {
      log_warning("accurate_case: GP fit failed during elimination at m = " + std::to_string(m));
      kept = prefix(inner, m + 1);
      L0 = next_loss;
      break;
    }
    out.losses.push_back(*loss);
    if (*loss > next_loss) {
      kept = prefix(inner, m + 1);
      L0 = next_loss;
      break;
    }
    next_loss = *loss;
  }

  // Forward phase over the fresh ranking.
  double cur = L0;
  std::optional<double> before;
  for (int m = 1; m <= D; ++m) {
    const int j = ranking[static_cast<std::size_t>(m - 1)];
    if (contains(kept, j)) continue;
    IndexSet trial = kept;
    trial.push_back(j);
    const auto loss = oracle.loss(trial);
    if (!loss) {
      log_warning("accurate_case: GP fit failed at m = " + std::to_string(m) + "; stopping");
      out.stop_index = m;
      break;
    }
    out.losses.push_back(*loss);
    if (m >= 2) {
      const double gain = cur - *loss;
      const bool stop = gain <= 0.0 || (before && gain < (*before - cur) / 10.0);
      if (stop) {
        out.stop_index = m;
        break;
      }
    }
    kept = std::move(trial);
    before = cur;
    cur = *loss;
  }
  out.indices = std::move(kept);
  return out;
}

SelectionBranch momentum_branch(int t, const Vector& y_history, const IndexSet* prev, int n_init, int n_vs,
                                int dim) {
  if (n_vs < 1 || n_init < 0) throw std::invalid_argument("momentum: invalid schedule");
  if (t < n_init + n_vs || (t - n_init) % n_vs != 0) {
    throw std::invalid_argument("momentum: t is not a selection iteration");
  }
  if (t == n_init + n_vs || prev == nullptr || prev->empty()) return SelectionBranch::First;
  if (static_cast<int>(prev->size()) >= dim) return SelectionBranch::Full;
  const auto n = static_cast<int>(y_history.size());
  const int split = std::max(n - n_vs, 0);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  auto finite_max = [&](int lo, int hi) {
    double m = kNegInf;
    for (int i = lo; i < hi; ++i) {
      if (std::isfinite(y_history[i])) m = std::max(m, y_history[i]);
    }
    return m;
  };
  const double recent = finite_max(split, n);
  const double before = finite_max(0, split);
  return recent > before ? SelectionBranch::Accurate : SelectionBranch::Inaccurate;
}

Selection momentum_select(int t, const Vector& y_history, const IndexSet* prev, int n_init, int n_vs, int dim,
                          const SelectionOracle& oracle) {
  const SelectionBranch branch = momentum_branch(t, y_history, prev, n_init, n_vs, dim);
  const IndexSet ranking = rank_by_scores(oracle.score(all_dims(dim)).scores.scores);
  Selection out;
  switch (branch) {
    case SelectionBranch::Accurate: out = accurate_case(ranking, *prev, oracle); break;
    case SelectionBranch::Inaccurate: out = inaccurate_case(ranking, *prev, oracle); break;
    default: out = stepwise_forward(ranking, oracle); break;
  }
  out.branch = branch;
  out.iteration = t;
  return out;
}

SelectionOracle make_gp_oracle(std::shared_ptr<const Dataset> data, const GpOracleOptions& opts) {
  if (!data || data->empty()) throw std::invalid_argument("make_gp_oracle: empty dataset");
  struct State {
    std::shared_ptr<const Dataset> data;
    GpOracleOptions opts;
    std::optional<KernelParams> warm;
    std::optional<NoiseParam> warm_noise;
    std::uint64_t calls = 0;

    GPModel fit(const IndexSet& dims) {
      FitOptions fo = opts.fit;
      fo.seed = derive_seed(opts.seed, {0x6669747eULL, calls++});
      if (warm) fo.warm_kernel = warm;
      if (warm_noise) fo.warm_noise = warm_noise;
      GPModel m = fit_gp(data, dims, fo);
      if (!warm) warm = KernelParams{Vector::Zero(data->dim()), m.params().alpha0_2, m.params().kind};
      for (int j : dims) warm->rho2[j] = m.params().rho2[j];
      warm->alpha0_2 = m.params().alpha0_2;
      warm_noise = m.noise();
      return m;
    }
  };
  auto st = std::make_shared<State>(State{std::move(data), opts, std::nullopt, std::nullopt, 0});
  SelectionOracle oracle;
  oracle.loss = [st](const IndexSet& dims) -> std::optional<double> {
    try {
      return st->fit(dims).final_nll();
    } catch (const std::exception& e) {
      log_warning(std::string("selection fit failed: ") + e.what());
      return std::nullopt;
    }
  };
  oracle.score = [st](const IndexSet& dims) {
    const GPModel m = st->fit(dims);
    Rng rng(derive_seed(st->opts.seed, {0x67726164ULL, st->calls}));
    return ScoredFit{grad_is(m, st->opts.n_is, st->data->box(), rng), m.final_nll()};
  };
  return oracle;
}

}  // namespace vsbo
