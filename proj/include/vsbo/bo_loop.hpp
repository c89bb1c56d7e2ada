#pragma once

#include "vsbo/acquisition.hpp"
#include "vsbo/benchmarks.hpp"
#include "vsbo/var_select.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace vsbo {

enum class Method { VSBO, Vanilla, VSGPUCB, GPUCB, Random };
enum class SamplerKind { CMAES, Mix };
/// How dimensions are ranked before stepwise selection.
enum class RankingKind { GradIS, Random };

std::string to_string(Method m);
Method method_from_string(const std::string& name);
std::string to_string(SamplerKind s);
SamplerKind sampler_from_string(const std::string& name);
std::string to_string(RankingKind r);
RankingKind ranking_from_string(const std::string& name);

struct RunConfig {
  Method method = Method::VSBO;
  int n_init = 5;
  int n_iter = 100;
  int n_vs = 20;
  int n_is = 10000;
  KernelKind kernel = KernelKind::Matern52;
  AcqKind acq = AcqKind::EI;
  SamplerKind sampler = SamplerKind::CMAES;
  RankingKind ranking = RankingKind::GradIS;
  std::uint64_t seed = 0;

  /// UCB methods. D and d are filled in by the loop.
  BetaScheduleParams beta_params{};
  /// Constant beta instead of the schedule (UCB methods).
  std::optional<double> beta_fixed;
  /// VS-GP-UCB: the first d coordinates are optimized, the rest held at
  /// fixed_tail (original scale; box center when unset).
  int fixed_split_d = 0;
  std::optional<Vector> fixed_tail;

  /// Stop once the cumulative fit + acquisition time reaches the budget.
  std::optional<double> wall_ms_budget;
  std::optional<double> cpu_ms_budget;

  /// VS-BO: every selection returns all dimensions.
  bool force_full_selection = false;
  /// Write zero timings, so that traces are byte-reproducible.
  bool record_timings = true;

  int fit_restarts = 5;
  int acq_restarts = 10;
  int acq_candidates = 512;

  /// Throws std::invalid_argument when inconsistent.
  void validate() const;
};

struct TraceRecord {
  int iter = 0;  // 1-based query index
  Vector x;      // original scale
  double y = 0.0;
  double best_y = 0.0;
  IndexSet selected;  // non-empty only on iterations that ran a selection
  SelectionBranch branch = SelectionBranch::None;
  double wall_ms_fit = 0.0;
  double wall_ms_acq = 0.0;
  double cpu_ms_fit = 0.0;
  double cpu_ms_acq = 0.0;
};

struct Trace {
  std::vector<TraceRecord> records;
  /// Every selection made during the run, with its losses.
  std::vector<Selection> selections;

  double best_y() const { return records.empty() ? -std::numeric_limits<double>::infinity() : records.back().best_y; }
};

/// Dispatches on cfg.method. Objective takes original-scale inputs.
Trace run(const Objective& f, const Box& box, const RunConfig& cfg);
Trace run(const Benchmark& bench, const RunConfig& cfg);

Trace run_vsbo(const Objective& f, const Box& box, const RunConfig& cfg);
Trace run_vanilla(const Objective& f, const Box& box, const RunConfig& cfg);
Trace run_vs_gp_ucb(const Objective& f, const Box& box, const RunConfig& cfg);
Trace run_gp_ucb(const Objective& f, const Box& box, const RunConfig& cfg);
Trace run_random(const Objective& f, const Box& box, const RunConfig& cfg);

}  // namespace vsbo
