#include "vsbo/acquisition.hpp"
#include "vsbo/benchmarks.hpp"
#include "vsbo/bo_loop.hpp"
#include "vsbo/campaign.hpp"
#include "vsbo/cond_sampler.hpp"
#include "vsbo/gp.hpp"
#include "vsbo/log.hpp"
#include "vsbo/trace_io.hpp"
#include "vsbo/var_select.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace vsbo;

namespace {

Box make_box(const std::optional<Vector>& lo, const std::optional<Vector>& hi, int dim) {
  if (lo.has_value() != hi.has_value()) throw std::invalid_argument("give both lo and hi, or neither");
  if (!lo) return Box::unit(dim);
  return Box(*lo, *hi);
}

std::shared_ptr<const Dataset> make_data(const Matrix& X, const Vector& y, const std::optional<Vector>& lo,
                                         const std::optional<Vector>& hi) {
  return std::make_shared<const Dataset>(make_box(lo, hi, static_cast<int>(X.cols())), X, y);
}

KernelParams make_params(const Vector& rho2, double alpha0_2, const std::string& kernel) {
  KernelParams p;
  p.rho2 = rho2;
  p.alpha0_2 = alpha0_2;
  p.kind = kernel_kind_from_string(kernel);
  return p;
}

AcqSpec make_acq(const std::string& kind, double y_star, double beta) {
  return acq_kind_from_string(kind) == AcqKind::EI ? AcqSpec::expected_improvement(y_star)
                                                   : AcqSpec::upper_confidence_bound(beta);
}

// Loss seam for the selection algorithms. `loss(dims)` returns a float or
// None (fit failure); `score(dims)` returns (scores, loss).
SelectionOracle make_oracle(py::function loss, std::optional<py::function> score) {
  SelectionOracle o;
  o.loss = [loss](const IndexSet& dims) -> std::optional<double> {
    py::gil_scoped_acquire gil;
    py::object v = loss(dims);
    if (v.is_none()) return std::nullopt;
    return v.cast<double>();
  };
  if (score) {
    o.score = [s = *score](const IndexSet& dims) {
      py::gil_scoped_acquire gil;
      const auto [scores, loss] = s(dims).cast<std::pair<Vector, double>>();
      ScoredFit f;
      f.scores.scores = scores;
      f.scores.std_err = Vector::Zero(scores.size());
      f.loss = loss;
      return f;
    };
  } else {
    o.score = [](const IndexSet&) -> ScoredFit { throw std::invalid_argument("no score function given"); };
  }
  return o;
}

}  // namespace

PYBIND11_MODULE(_vsbo, m) {
  m.doc() = "Variable-selection Bayesian optimization";
  m.attr("__version__") = version_string();

  m.def("set_log_level", [](const std::string& level) {
    if (level == "quiet") {
      set_log_level(LogLevel::Quiet);
    } else if (level == "warning") {
      set_log_level(LogLevel::Warning);
    } else if (level == "info") {
      set_log_level(LogLevel::Info);
    } else {
      throw std::invalid_argument("log level must be quiet, warning or info");
    }
  });

  // Benchmarks
  py::class_<Benchmark>(m, "Benchmark")
      .def_readonly("name", &Benchmark::name)
      .def_readonly("dim", &Benchmark::dim)
      .def_property_readonly("lo", [](const Benchmark& b) { return b.box.lo; })
      .def_property_readonly("hi", [](const Benchmark& b) { return b.box.hi; })
      .def_readonly("known_max", &Benchmark::known_max)
      .def_readonly("known_argmax", &Benchmark::known_argmax)
      .def_readonly("important_dims", &Benchmark::important_dims)
      .def_readonly("tiers", &Benchmark::tiers)
      .def("__call__", [](const Benchmark& b, const Vector& x) { return b(x); }, py::arg("x"))
      .def("__repr__", [](const Benchmark& b) { return "<Benchmark " + b.name + " dim=" + std::to_string(b.dim) + ">"; });
  m.def("make_benchmark", &make_benchmark, py::arg("name"), py::arg("dim") = 0, py::arg("seed") = 0);
  m.def("benchmark_names", &benchmark_names);
  m.def("branin", &branin, py::arg("x"));
  m.def("hartmann6", &hartmann6, py::arg("x"));
  m.def("styblinski_tang4", &styblinski_tang4, py::arg("x"));

  // GP
  py::class_<GPModel>(m, "GPModel")
      .def_property_readonly("active", &GPModel::active)
      .def_property_readonly("rho2", [](const GPModel& g) { return g.params().rho2; })
      .def_property_readonly("alpha0_2", [](const GPModel& g) { return g.params().alpha0_2; })
      .def_property_readonly("sigma0_2", [](const GPModel& g) { return g.noise().sigma0_2; })
      .def_property_readonly("final_nll", &GPModel::final_nll)
      .def(
          "predict",
          [](const GPModel& g, const Vector& x) {
            const Posterior p = posterior(g, x);
            return std::make_pair(p.mu, p.var);
          },
          py::arg("x"), "Posterior (mean, variance) at a full-dimensional point.")
      .def("mean_grad", [](const GPModel& g, const Vector& x) { return posterior_mean_grad(g, x); }, py::arg("x"))
      .def("std_grad", [](const GPModel& g, const Vector& x) { return posterior_std_grad(g, x); }, py::arg("x"));

  m.def(
      "fit_gp",
      [](const Matrix& X, const Vector& y, std::optional<IndexSet> active, const std::string& kernel, int restarts,
         std::uint64_t seed, std::optional<Vector> lo, std::optional<Vector> hi) {
        FitOptions fo;
        fo.kind = kernel_kind_from_string(kernel);
        fo.restarts = restarts;
        fo.seed = seed;
        auto data = make_data(X, y, lo, hi);
        const IndexSet act = active ? *active : all_dims(data->dim());
        py::gil_scoped_release release;
        return fit_gp(data, act, fo);
      },
      py::arg("X"), py::arg("y"), py::arg("active") = py::none(), py::arg("kernel") = "matern52",
      py::arg("restarts") = 5, py::arg("seed") = 0, py::arg("lo") = py::none(), py::arg("hi") = py::none(),
      "Fits GP hyperparameters by maximizing the marginal likelihood. Inputs are used as given.");
  m.def(
      "build_gp",
      [](const Matrix& X, const Vector& y, const Vector& rho2, double alpha0_2, double sigma0_2,
         const std::string& kernel) {
        auto data = make_data(X, y, std::nullopt, std::nullopt);
        IndexSet act;
        for (Eigen::Index j = 0; j < rho2.size(); ++j) {
          if (rho2[j] > 0.0) act.push_back(static_cast<int>(j));
        }
        return GPModel::build(data, act, make_params(rho2, alpha0_2, kernel), NoiseParam{sigma0_2});
      },
      py::arg("X"), py::arg("y"), py::arg("rho2"), py::arg("alpha0_2"), py::arg("sigma0_2"),
      py::arg("kernel") = "matern52", "GP with fixed hyperparameters; active dims are those with rho2 > 0.");
  m.def(
      "log_marginal_likelihood",
      [](const Matrix& X, const Vector& y, const Vector& rho2, double alpha0_2, double sigma0_2,
         const std::string& kernel) {
        return log_marginal_likelihood(*make_data(X, y, std::nullopt, std::nullopt),
                                       make_params(rho2, alpha0_2, kernel), NoiseParam{sigma0_2});
      },
      py::arg("X"), py::arg("y"), py::arg("rho2"), py::arg("alpha0_2"), py::arg("sigma0_2"),
      py::arg("kernel") = "matern52");
  m.def(
      "mll_gradient",
      [](const Matrix& X, const Vector& y, const Vector& rho2, double alpha0_2, double sigma0_2,
         const std::string& kernel) {
        return mll_gradient(*make_data(X, y, std::nullopt, std::nullopt), make_params(rho2, alpha0_2, kernel),
                            NoiseParam{sigma0_2});
      },
      py::arg("X"), py::arg("y"), py::arg("rho2"), py::arg("alpha0_2"), py::arg("sigma0_2"),
      py::arg("kernel") = "matern52",
      "Gradient with respect to (rho2 over dims with rho2 > 0, alpha0_2, sigma0_2).");

  // Acquisition
  m.def(
      "acquisition",
      [](const GPModel& g, const Vector& x, const std::string& kind, double y_star, double beta) {
        const AcqValue v = acq_value_grad(g, make_acq(kind, y_star, beta), x);
        return std::make_pair(v.value, v.grad);
      },
      py::arg("model"), py::arg("x"), py::arg("kind") = "ei", py::arg("y_star") = 0.0, py::arg("beta") = 0.0,
      "(value, gradient over the active coordinates).");
  m.def(
      "maximize_acq",
      [](const GPModel& g, const std::string& kind, double y_star, double beta, std::uint64_t seed, int restarts,
         int candidates) {
        AcqMaximizeOptions o;
        o.seed = seed;
        o.restarts = restarts;
        o.candidates = candidates;
        const Box box = g.data().box().slice(g.active());
        py::gil_scoped_release release;
        return maximize_acq(g, make_acq(kind, y_star, beta), box, o);
      },
      py::arg("model"), py::arg("kind") = "ei", py::arg("y_star") = 0.0, py::arg("beta") = 0.0, py::arg("seed") = 0,
      py::arg("restarts") = 10, py::arg("candidates") = 512,
      "Maximizer over the active coordinates of the model's box.");
  m.def(
      "beta_t",
      [](int t, int D, int d, double delta, double a, double b, double alpha) {
        return beta_t(t, BetaScheduleParams{delta, a, b, alpha, D, d});
      },
      py::arg("t"), py::arg("D"), py::arg("d"), py::arg("delta") = 0.1, py::arg("a") = 1.0, py::arg("b") = 1.0,
      py::arg("alpha") = 0.1);

  // Variable selection
  m.def(
      "grad_is",
      [](const GPModel& g, int n_samples, std::uint64_t seed) {
        Rng rng(seed);
        const ImportanceScores s = grad_is(g, n_samples, g.data().box(), rng);
        return std::make_pair(s.scores, s.std_err);
      },
      py::arg("model"), py::arg("n_samples") = 10000, py::arg("seed") = 0,
      "Importance scores and their Monte Carlo standard errors.");
  m.def("rank_by_scores", &rank_by_scores, py::arg("scores"), py::arg("candidates") = IndexSet{});

  py::class_<Selection>(m, "Selection")
      .def_readonly("indices", &Selection::indices)
      .def_readonly("losses", &Selection::losses)
      .def_readonly("iteration", &Selection::iteration)
      .def_readonly("stop_index", &Selection::stop_index)
      .def_property_readonly("branch", [](const Selection& s) { return to_string(s.branch); });

  m.def(
      "stepwise_forward",
      [](const IndexSet& ranking, py::function loss, int start) {
        return stepwise_forward(ranking, make_oracle(std::move(loss), std::nullopt), start);
      },
      py::arg("ranking"), py::arg("loss"), py::arg("start") = 1);
  m.def(
      "inaccurate_case",
      [](const IndexSet& ranking, const IndexSet& prev, py::function loss) {
        return inaccurate_case(ranking, prev, make_oracle(std::move(loss), std::nullopt));
      },
      py::arg("ranking"), py::arg("prev"), py::arg("loss"));
  m.def(
      "accurate_case",
      [](const IndexSet& ranking, const IndexSet& prev, py::function loss, py::function score) {
        return accurate_case(ranking, prev, make_oracle(std::move(loss), std::move(score)));
      },
      py::arg("ranking"), py::arg("prev"), py::arg("loss"), py::arg("score"));

  // Sampler
  m.def(
      "conditional_gaussian",
      [](const Vector& mean, const Matrix& cov, const IndexSet& ipt, const Vector& x_ipt, double sigma_step) {
        GaussState s;
        s.box = Box::uniform(static_cast<int>(mean.size()), -1e300, 1e300);
        s.mean = mean;
        s.cov = cov;
        s.sigma_step = sigma_step;
        const ConditionalGaussian c = conditional(s, ipt, x_ipt);
        return py::make_tuple(c.dims, c.mean, c.cov);
      },
      py::arg("mean"), py::arg("cov"), py::arg("ipt"), py::arg("x_ipt"), py::arg("sigma_step") = 1.0,
      "(complement dims, mean, covariance) of N(mean, sigma_step^2 cov) given the ipt coordinates.");

  // Loop
  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_property(
          "method", [](const RunConfig& c) { return to_string(c.method); },
          [](RunConfig& c, const std::string& s) { apply_method_label(s, c); },
          "Any method label, e.g. vsbo, vsbo-mix, vanilla, gpucb.")
      .def_readwrite("n_init", &RunConfig::n_init)
      .def_readwrite("n_iter", &RunConfig::n_iter)
      .def_readwrite("n_vs", &RunConfig::n_vs)
      .def_readwrite("n_is", &RunConfig::n_is)
      .def_property(
          "kernel", [](const RunConfig& c) { return to_string(c.kernel); },
          [](RunConfig& c, const std::string& s) { c.kernel = kernel_kind_from_string(s); })
      .def_property(
          "acq", [](const RunConfig& c) { return to_string(c.acq); },
          [](RunConfig& c, const std::string& s) { c.acq = acq_kind_from_string(s); })
      .def_property(
          "sampler", [](const RunConfig& c) { return to_string(c.sampler); },
          [](RunConfig& c, const std::string& s) { c.sampler = sampler_from_string(s); })
      .def_property(
          "ranking", [](const RunConfig& c) { return to_string(c.ranking); },
          [](RunConfig& c, const std::string& s) { c.ranking = ranking_from_string(s); })
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("beta_fixed", &RunConfig::beta_fixed)
      .def_readwrite("fixed_split_d", &RunConfig::fixed_split_d)
      .def_readwrite("fixed_tail", &RunConfig::fixed_tail)
      .def_readwrite("wall_ms_budget", &RunConfig::wall_ms_budget)
      .def_readwrite("cpu_ms_budget", &RunConfig::cpu_ms_budget)
      .def_readwrite("force_full_selection", &RunConfig::force_full_selection)
      .def_readwrite("record_timings", &RunConfig::record_timings)
      .def_readwrite("fit_restarts", &RunConfig::fit_restarts)
      .def_readwrite("acq_restarts", &RunConfig::acq_restarts)
      .def_readwrite("acq_candidates", &RunConfig::acq_candidates)
      .def("validate", &RunConfig::validate);

  py::class_<TraceRecord>(m, "TraceRecord")
      .def_readonly("iter", &TraceRecord::iter)
      .def_readonly("x", &TraceRecord::x)
      .def_readonly("y", &TraceRecord::y)
      .def_readonly("best_y", &TraceRecord::best_y)
      .def_readonly("selected", &TraceRecord::selected)
      .def_property_readonly("branch", [](const TraceRecord& r) { return to_string(r.branch); })
      .def_readonly("wall_ms_fit", &TraceRecord::wall_ms_fit)
      .def_readonly("wall_ms_acq", &TraceRecord::wall_ms_acq)
      .def_readonly("cpu_ms_fit", &TraceRecord::cpu_ms_fit)
      .def_readonly("cpu_ms_acq", &TraceRecord::cpu_ms_acq);

  py::class_<Trace>(m, "Trace")
      .def_readonly("records", &Trace::records)
      .def_readonly("selections", &Trace::selections)
      .def_property_readonly("best_y", &Trace::best_y)
      .def_property_readonly("X",
                             [](const Trace& t) {
                               const Eigen::Index d = t.records.empty() ? 0 : t.records.front().x.size();
                               Matrix X(static_cast<Eigen::Index>(t.records.size()), d);
                               for (std::size_t i = 0; i < t.records.size(); ++i) {
                                 X.row(static_cast<Eigen::Index>(i)) = t.records[i].x.transpose();
                               }
                               return X;
                             })
      .def_property_readonly("y",
                             [](const Trace& t) {
                               Vector y(static_cast<Eigen::Index>(t.records.size()));
                               for (std::size_t i = 0; i < t.records.size(); ++i) y[static_cast<Eigen::Index>(i)] = t.records[i].y;
                               return y;
                             })
      .def("__len__", [](const Trace& t) { return t.records.size(); })
      .def("to_csv",
           [](const Trace& t) {
             std::ostringstream ss;
             write_trace_csv(ss, t);
             return ss.str();
           })
      .def_static(
          "from_csv",
          [](const std::string& text) {
            std::istringstream ss(text);
            return read_trace_csv(ss);
          },
          py::arg("text"))
      .def("save", [](const Trace& t, const std::string& path) { save_trace(path, t); }, py::arg("path"))
      .def_static("load", [](const std::string& path) { return load_trace(path); }, py::arg("path"));

  m.def(
      "run_benchmark",
      [](const Benchmark& b, const RunConfig& cfg) {
        py::gil_scoped_release release;
        return run(b, cfg);
      },
      py::arg("benchmark"), py::arg("config"));
  m.def(
      "run",
      [](const std::function<double(const Vector&)>& f, const Vector& lo, const Vector& hi, const RunConfig& cfg) {
        return run(f, Box(lo, hi), cfg);
      },
      py::arg("objective"), py::arg("lo"), py::arg("hi"), py::arg("config"),
      "Maximizes a Python callable over the box [lo, hi].");
  m.def("method_labels", &method_labels);
}
