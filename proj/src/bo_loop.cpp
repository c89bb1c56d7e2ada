#include "vsbo/bo_loop.hpp"

#include "vsbo/cond_sampler.hpp"
#include "vsbo/log.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <limits>
#include <stdexcept>

namespace vsbo {

std::string to_string(Method m) {
  switch (m) {
    case Method::VSBO: return "vsbo";
    case Method::Vanilla: return "vanilla";
    case Method::VSGPUCB: return "vsgpucb";
    case Method::GPUCB: return "gpucb";
    case Method::Random: return "random";
  }
  return "vsbo";
}

Method method_from_string(const std::string& name) {
  for (auto m : {Method::VSBO, Method::Vanilla, Method::VSGPUCB, Method::GPUCB, Method::Random}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown method: " + name);
}

std::string to_string(SamplerKind s) { return s == SamplerKind::CMAES ? "cmaes" : "mix"; }

SamplerKind sampler_from_string(const std::string& name) {
  if (name == "cmaes") return SamplerKind::CMAES;
  if (name == "mix") return SamplerKind::Mix;
  throw std::invalid_argument("unknown sampler: " + name);
}

std::string to_string(RankingKind r) { return r == RankingKind::GradIS ? "gradis" : "random"; }

RankingKind ranking_from_string(const std::string& name) {
  if (name == "gradis") return RankingKind::GradIS;
  if (name == "random") return RankingKind::Random;
  throw std::invalid_argument("unknown ranking: " + name);
}

void RunConfig::validate() const {
  if (n_init < 2) throw std::invalid_argument("n_init must be >= 2");
  if (n_iter < 1) throw std::invalid_argument("n_iter must be >= 1");
  if (n_vs < 1) throw std::invalid_argument("n_vs must be >= 1");
  if (n_is < 1) throw std::invalid_argument("n_is must be >= 1");
  if (fit_restarts < 1 || acq_restarts < 1 || acq_candidates < 1) {
    throw std::invalid_argument("restart and candidate counts must be >= 1");
  }
  if (method == Method::VSGPUCB && fixed_split_d < 1) throw std::invalid_argument("vsgpucb needs fixed_split_d >= 1");
  if (beta_fixed && !(*beta_fixed >= 0.0 && std::isfinite(*beta_fixed))) {
    throw std::invalid_argument("beta_fixed must be finite and >= 0");
  }
  if (wall_ms_budget && !(*wall_ms_budget > 0.0)) throw std::invalid_argument("wall_ms budget must be positive");
  if (cpu_ms_budget && !(*cpu_ms_budget > 0.0)) throw std::invalid_argument("cpu_ms budget must be positive");
}

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kTagInit = 0x696e6974;
constexpr std::uint64_t kTagFit = 0x666974;
constexpr std::uint64_t kTagAcq = 0x616371;
constexpr std::uint64_t kTagDraw = 0x64726177;
constexpr std::uint64_t kTagSelect = 0x73656c;
constexpr std::uint64_t kTagRank = 0x72616e6b;

double thread_cpu_ms() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) * 1e3 + static_cast<double>(ts.tv_nsec) * 1e-6;
}

struct Stopwatch {
  std::chrono::steady_clock::time_point wall0 = std::chrono::steady_clock::now();
  double cpu0 = thread_cpu_ms();

  double wall_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall0).count();
  }
  double cpu_ms() const { return thread_cpu_ms() - cpu0; }
};

Vector uniform_unit(Rng& rng, int dim) {
  Vector u(dim);
  for (int j = 0; j < dim; ++j) u[j] = rng.uniform();
  return u;
}

SelectionOracle random_ranking_oracle(SelectionOracle base, std::uint64_t seed, int dim) {
  auto rng = std::make_shared<Rng>(seed);
  SelectionOracle o;
  o.loss = base.loss;
  o.score = [base, rng, dim](const IndexSet& dims) {
    ScoredFit f;
    f.loss = base.loss(dims).value_or(std::numeric_limits<double>::infinity());
    f.scores.scores = Vector::Zero(dim);
    f.scores.std_err = Vector::Zero(dim);
    for (int j : dims) f.scores.scores[j] = rng->uniform();
    f.scores.n_samples = 0;
    return f;
  };
  return o;
}

class Engine {
 public:
  Engine(const Objective& f, const Box& box, const RunConfig& cfg, Method mode)
      : f_(f), box_(box), cfg_(cfg), mode_(mode), D_(box.dim()), unit_(Box::unit(box.dim())) {
    cfg_.validate();
    if (D_ < 1) throw std::invalid_argument("run: empty box");
    if (mode_ == Method::VSGPUCB) {
      if (cfg_.fixed_split_d < 1 || cfg_.fixed_split_d > D_) {
        throw std::invalid_argument("fixed_split_d must be in [1, D]");
      }
      d_ = cfg_.fixed_split_d;
    } else {
      d_ = D_;
    }
    const Vector tail = cfg_.fixed_tail ? *cfg_.fixed_tail : box_.center();
    if (tail.size() != D_) throw std::invalid_argument("fixed_tail must be a full D-vector");
    tail_unit_ = box_.to_unit(tail).cwiseMax(0.0).cwiseMin(1.0);
  }

  Trace run() {
    Rng init_rng(derive_seed(cfg_.seed, {kTagInit}));
    for (int i = 0; i < cfg_.n_init; ++i) {
      Vector u = uniform_unit(init_rng, D_);
      hold_tail(u);
      evaluate(u, TraceRecord{});
    }
    if (mode_ == Method::Random) {
      for (int k = 1; k <= cfg_.n_iter; ++k) evaluate(uniform_unit(init_rng, D_), TraceRecord{});
      return std::move(trace_);
    }

    if (mode_ == Method::VSBO && cfg_.sampler == SamplerKind::CMAES) gauss_ = init_state(unit_);
    last_update_row_ = unit_.size();
    selected_ = all_dims(D_);

    double cum_wall = 0.0;
    double cum_cpu = 0.0;
    for (int k = 1; k <= cfg_.n_iter; ++k) {
      const int t = cfg_.n_init + k;
      TraceRecord rec;
      const Stopwatch fit_clock;
      if (mode_ == Method::VSBO && k % cfg_.n_vs == 0) select(t, rec);
      const IndexSet active = active_dims();
      Standardizer stats;
      auto norm = std::make_shared<const Dataset>(normalized_for_fit(unit_, &stats));
      std::optional<GPModel> model = fit(norm, active, t);
      const double fit_wall = fit_clock.wall_ms();
      const double fit_cpu = fit_clock.cpu_ms();

      const Stopwatch acq_clock;
      Rng draw_rng(derive_seed(cfg_.seed, {kTagDraw, static_cast<std::uint64_t>(t)}));
      Vector u;
      if (model) {
        u = propose(*model, *norm, active, k, t, draw_rng);
      } else {
        log_warning("iteration " + std::to_string(t) + ": no usable GP, querying a uniform point");
        u = uniform_unit(draw_rng, D_);
        hold_tail(u);
      }
      const double acq_wall = acq_clock.wall_ms();
      const double acq_cpu = acq_clock.cpu_ms();

      if (cfg_.record_timings) {
        rec.wall_ms_fit = fit_wall;
        rec.cpu_ms_fit = fit_cpu;
        rec.wall_ms_acq = acq_wall;
        rec.cpu_ms_acq = acq_cpu;
      }
      evaluate(u, rec);
      cum_wall += fit_wall + acq_wall;
      cum_cpu += fit_cpu + acq_cpu;
      if ((cfg_.wall_ms_budget && cum_wall >= *cfg_.wall_ms_budget) ||
          (cfg_.cpu_ms_budget && cum_cpu >= *cfg_.cpu_ms_budget)) {
        log_info("time budget reached after iteration " + std::to_string(t));
        break;
      }
    }
    return std::move(trace_);
  }

 private:
  void hold_tail(Vector& u) const {
    if (d_ < D_) u.tail(D_ - d_) = tail_unit_.tail(D_ - d_);
  }

  IndexSet active_dims() const {
    if (mode_ == Method::VSBO) {
      IndexSet a = selected_;
      std::sort(a.begin(), a.end());
      return a;
    }
    return all_dims(d_);
  }

  void evaluate(const Vector& u, TraceRecord rec) {
    const Vector uc = u.cwiseMax(0.0).cwiseMin(1.0);
    const Vector x = box_.clamp(box_.from_unit(uc));
    double y = std::numeric_limits<double>::quiet_NaN();
    try {
      y = f_(x);
    } catch (const std::exception& e) {
      log_warning(std::string("objective threw: ") + e.what());
    }
    if (!std::isfinite(y)) log_warning("objective returned a non-finite value; excluded from the GP");
    unit_.append(uc, y);
    if (std::isfinite(y)) best_ = std::max(best_, y);
    rec.iter = unit_.size();
    rec.x = x;
    rec.y = y;
    rec.best_y = best_;
    trace_.records.push_back(std::move(rec));
  }

  void select(int t, TraceRecord& rec) {
    Selection sel;
    if (cfg_.force_full_selection) {
      sel.indices = all_dims(D_);
      sel.branch = SelectionBranch::Forced;
      sel.iteration = t;
    } else {
      auto norm = std::make_shared<const Dataset>(normalized_for_fit(unit_));
      if (norm->size() < 2) {
        log_warning("selection skipped: fewer than two finite outputs");
        return;
      }
      GpOracleOptions oo;
      oo.fit.kind = cfg_.kernel;
      oo.fit.restarts = cfg_.fit_restarts;
      oo.n_is = cfg_.n_is;
      oo.seed = derive_seed(cfg_.seed, {kTagSelect, static_cast<std::uint64_t>(t)});
      SelectionOracle oracle = make_gp_oracle(norm, oo);
      if (cfg_.ranking == RankingKind::Random) {
        oracle = random_ranking_oracle(oracle, derive_seed(cfg_.seed, {kTagRank, static_cast<std::uint64_t>(t)}), D_);
      }
      try {
        sel = momentum_select(t, unit_.y(), has_prev_ ? &prev_.indices : nullptr, cfg_.n_init, cfg_.n_vs, D_, oracle);
      } catch (const std::exception& e) {
        log_warning(std::string("selection failed, keeping the previous one: ") + e.what());
        return;
      }
    }
    selected_ = sel.indices;
    rec.selected = sel.indices;
    rec.branch = sel.branch;
    prev_ = sel;
    has_prev_ = true;
    trace_.selections.push_back(std::move(sel));

    if (gauss_ && unit_.size() > last_update_row_) {
      const int n = unit_.size() - last_update_row_;
      gauss_ = update_state(*gauss_, unit_.X().bottomRows(n), unit_.y().tail(n));
      last_update_row_ = unit_.size();
    }
  }

  std::optional<GPModel> fit(const std::shared_ptr<const Dataset>& norm, const IndexSet& active, int t) {
    if (norm->empty()) return std::nullopt;
    FitOptions fo;
    fo.kind = cfg_.kernel;
    fo.restarts = cfg_.fit_restarts;
    fo.seed = derive_seed(cfg_.seed, {kTagFit, static_cast<std::uint64_t>(t)});
    fo.warm_kernel = warm_;
    fo.warm_noise = warm_noise_;
    try {
      GPModel m = fit_gp(norm, active, fo);
      if (!warm_) warm_ = KernelParams{Vector::Zero(D_), 1.0, cfg_.kernel};
      for (int j : active) warm_->rho2[j] = m.params().rho2[j];
      warm_->alpha0_2 = m.params().alpha0_2;
      warm_noise_ = m.noise();
      return m;
    } catch (const std::exception& e) {
      log_warning(std::string("GP fit failed: ") + e.what());
      return std::nullopt;
    }
  }

  AcqSpec acquisition(const Dataset& norm, int k) const {
    const bool ucb = mode_ == Method::GPUCB || mode_ == Method::VSGPUCB || cfg_.acq == AcqKind::UCB;
    if (!ucb) return AcqSpec::expected_improvement(norm.y().maxCoeff());
    if (cfg_.beta_fixed) return AcqSpec::upper_confidence_bound(*cfg_.beta_fixed);
    BetaScheduleParams p = cfg_.beta_params;
    p.D = D_;
    p.d = d_;
    return AcqSpec::upper_confidence_bound(beta_t(k, p));
  }

  Vector propose(const GPModel& model, const Dataset& norm, const IndexSet& active, int k, int t, Rng& draw_rng) {
    AcqMaximizeOptions ao;
    ao.restarts = cfg_.acq_restarts;
    ao.candidates = cfg_.acq_candidates;
    ao.seed = derive_seed(cfg_.seed, {kTagAcq, static_cast<std::uint64_t>(t)});
    const Vector xa = maximize_acq(model, acquisition(norm, k), Box::unit(D_).slice(active), ao);

    Vector u = tail_unit_;
    scatter(xa, active, u);
    if (mode_ != Method::VSBO) return u;
    const IndexSet nipt = complement(active, D_);
    if (nipt.empty()) return u;
    if (cfg_.sampler == SamplerKind::Mix) {
      scatter(mix_sample(unit_, nipt, draw_rng), nipt, u);
    } else {
      const ConditionalGaussian cond = conditional(*gauss_, active, xa);
      scatter(sample_nipt(cond, Box::unit(static_cast<int>(nipt.size())), draw_rng), cond.dims, u);
    }
    return u;
  }

  const Objective& f_;
  Box box_;
  RunConfig cfg_;
  Method mode_;
  int D_;
  int d_ = 0;
  Vector tail_unit_;
  Dataset unit_;
  Trace trace_;
  double best_ = -std::numeric_limits<double>::infinity();

  IndexSet selected_;
  Selection prev_;
  bool has_prev_ = false;
  std::optional<GaussState> gauss_;
  int last_update_row_ = 0;
  std::optional<KernelParams> warm_;
  std::optional<NoiseParam> warm_noise_;
};

}  // namespace

Trace run_vsbo(const Objective& f, const Box& box, const RunConfig& cfg) { return Engine(f, box, cfg, Method::VSBO).run(); }

Trace run_vanilla(const Objective& f, const Box& box, const RunConfig& cfg) {
  return Engine(f, box, cfg, Method::Vanilla).run();
}

Trace run_vs_gp_ucb(const Objective& f, const Box& box, const RunConfig& cfg) {
  return Engine(f, box, cfg, Method::VSGPUCB).run();
}

Trace run_gp_ucb(const Objective& f, const Box& box, const RunConfig& cfg) {
  return Engine(f, box, cfg, Method::GPUCB).run();
}

Trace run_random(const Objective& f, const Box& box, const RunConfig& cfg) {
  return Engine(f, box, cfg, Method::Random).run();
}

Trace run(const Objective& f, const Box& box, const RunConfig& cfg) { return Engine(f, box, cfg, cfg.method).run(); }

Trace run(const Benchmark& bench, const RunConfig& cfg) { return run(bench.objective, bench.box, cfg); }

}  // namespace vsbo
