// vsbo: run benchmark campaigns and summarize their traces.

#include "vsbo/benchmarks.hpp"
#include "vsbo/campaign.hpp"
#include "vsbo/log.hpp"
#include "vsbo/reports.hpp"
#include "vsbo/trace_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace vsbo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunArgs {
  std::string config_file;
  std::string benchmark;
  int dim = 0;
  std::uint64_t bench_seed = 0;
  std::vector<std::string> methods;
  std::string seeds;
  int iters = 0;
  int n_init = 0;
  int n_vs = 0;
  int n_is = 0;
  std::string kernel;
  std::string acq;
  std::string budget;
  int split_d = 0;
  double beta = 0.0;
  std::string out;
  int jobs = 1;
  bool force = false;
  bool no_timings = false;
  bool force_full = false;
};

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
  std::vector<std::string> methods;
  std::string axis = "iter";
  int points = 50;
};

fs::path default_out_dir() {
  const char* env = std::getenv("VSBO_OUT_DIR");
  return env && *env ? fs::path(env) : fs::path("vsbo_out");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// "wall_ms=60000", "cpu_ms=5000" or "iterations=200".
void apply_budget(const std::string& text, CampaignSpec& spec, bool iters_given) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw UsageError("--budget expects MODE=VALUE");
  const std::string mode = text.substr(0, eq);
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(text.substr(eq + 1), &used);
    if (used != text.size() - eq - 1) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw UsageError("--budget: bad value in '" + text + "'");
  }
  if (mode == "iterations") {
    if (value < 1 || value != static_cast<int>(value)) throw UsageError("--budget iterations must be a positive integer");
    spec.budget_mode = BudgetMode::Iterations;
    spec.config.n_iter = static_cast<int>(value);
    return;
  }
  if (mode == "wall_ms") {
    spec.budget_mode = BudgetMode::WallMs;
  } else if (mode == "cpu_ms") {
    spec.budget_mode = BudgetMode::CpuMs;
  } else {
    throw UsageError("--budget mode must be iterations, wall_ms or cpu_ms");
  }
  spec.budget_ms = value;
  // The time budget binds; the iteration count is only a safety cap.
  if (!iters_given) spec.config.n_iter = 1000;
}

int cmd_run(const RunArgs& a, const CLI::App& sub) {
  auto given = [&](const char* name) { return sub.count(name) > 0; };
  CampaignSpec spec;
  spec.config.n_init = 5;
  if (!a.config_file.empty()) spec = campaign_from_json(read_file(a.config_file), spec);
  if (given("--benchmark")) spec.benchmark = a.benchmark;
  if (given("--dim")) spec.dim = a.dim;
  if (given("--bench-seed")) spec.bench_seed = a.bench_seed;
  if (given("--method")) spec.methods = a.methods;
  if (given("--seeds")) spec.seeds = parse_seeds(a.seeds);
  if (given("--iters")) spec.config.n_iter = a.iters;
  if (given("--n-init")) spec.config.n_init = a.n_init;
  if (given("--n-vs")) spec.config.n_vs = a.n_vs;
  if (given("--n-is")) spec.config.n_is = a.n_is;
  if (given("--kernel")) spec.config.kernel = kernel_kind_from_string(a.kernel);
  if (given("--acq")) spec.config.acq = acq_kind_from_string(a.acq);
  if (given("--split-d")) spec.config.fixed_split_d = a.split_d;
  if (given("--beta")) spec.config.beta_fixed = a.beta;
  if (given("--no-timings")) spec.config.record_timings = false;
  if (given("--force-full-selection")) spec.config.force_full_selection = true;
  if (given("--budget")) apply_budget(a.budget, spec, given("--iters"));
  if (spec.benchmark.empty()) throw UsageError("--benchmark is required");
  if (spec.methods.empty()) spec.methods = {"vsbo"};
  if (spec.seeds.empty()) spec.seeds = {0};
  spec.out_dir = given("--out") ? fs::path(a.out) : default_out_dir();
  spec.jobs = a.jobs;
  spec.force = a.force;
  spec.validate();

  const CampaignResult res = run_campaign(spec);
  for (const fs::path& p : res.written) std::cout << "wrote " << p.string() << '\n';
  for (const fs::path& p : res.skipped) std::cout << "kept " << p.string() << " (use --force to overwrite)\n";
  std::cout << "manifest " << (spec.out_dir / "manifest.json").string() << '\n';
  for (const std::string& f : res.failures) std::cerr << "vsbo: run failed: " << f << '\n';
  return res.failures.empty() ? kExitOk : kExitFailure;
}

std::vector<LabeledTrace> load_inputs(const ReportArgs& a) {
  std::vector<fs::path> paths(a.inputs.begin(), a.inputs.end());
  if (paths.empty()) throw UsageError("no trace files given");
  std::vector<LabeledTrace> traces = load_labeled_traces(paths);
  if (!a.methods.empty()) {
    std::erase_if(traces, [&](const LabeledTrace& t) {
      return std::find(a.methods.begin(), a.methods.end(), t.label) == a.methods.end();
    });
    if (traces.empty()) throw UsageError("no traces match the requested methods");
  }
  return traces;
}

template <typename Writer>
void emit(const std::string& out, Writer&& write) {
  if (out.empty() || out == "-") {
    write(std::cout);
    return;
  }
  if (const fs::path parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream f(out, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + out);
  write(f);
}

int cmd_frequency(const ReportArgs& a) {
  std::vector<Trace> traces;
  for (LabeledTrace& t : load_inputs(a)) traces.push_back(std::move(t.trace));
  const auto rows = selection_frequency(traces);
  emit(a.out, [&](std::ostream& o) { write_frequency_csv(o, rows); });
  return kExitOk;
}

int cmd_compare(const ReportArgs& a) {
  const std::vector<LabeledTrace> traces = load_inputs(a);
  std::vector<CompareRow> rows;
  const std::vector<BudgetAxis> axes = a.axis == "all"
                                           ? std::vector<BudgetAxis>{BudgetAxis::Iteration, BudgetAxis::WallMs,
                                                                     BudgetAxis::CpuMs}
                                           : std::vector<BudgetAxis>{budget_axis_from_string(a.axis)};
  for (BudgetAxis ax : axes) {
    const auto part = compare_table(traces, ax, a.points);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  emit(a.out, [&](std::ostream& o) { write_compare_csv(o, rows); });
  return kExitOk;
}

int cmd_timing(const ReportArgs& a) {
  const auto rows = timing_table(load_inputs(a));
  emit(a.out, [&](std::ostream& o) { write_timing_csv(o, rows); });
  return kExitOk;
}

int cmd_list() {
  std::cout << "name,default_dim,known_max,important_dims\n";
  for (const std::string& name : benchmark_names()) {
    const Benchmark b = make_benchmark(name);
    std::cout << name << ',' << b.dim << ',' << (b.known_max ? format_double(*b.known_max) : "") << ',';
    for (std::size_t i = 0; i < b.important_dims.size(); ++i) std::cout << (i ? "|" : "") << b.important_dims[i];
    std::cout << '\n';
  }
  return kExitOk;
}

void add_report_options(CLI::App* sub, ReportArgs& a, bool with_axis) {
  sub->add_option("inputs", a.inputs, "Trace files or directories")->required();
  sub->add_option("-o,--out", a.out, "Output CSV (default: stdout)");
  sub->add_option("--method", a.methods, "Only traces with these method labels")->delimiter(',');
  if (with_axis) {
    sub->add_option("--axis", a.axis, "Budget axis: iter, wall_ms, cpu_ms or all")
        ->check(CLI::IsMember({"iter", "wall_ms", "cpu_ms", "all"}));
    sub->add_option("--points", a.points, "Checkpoints on time axes")->check(CLI::PositiveNumber);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variable-selection Bayesian optimization benchmark harness"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  bool quiet = false;
  bool verbose = false;
  app.add_flag("-q,--quiet", quiet, "Only errors");
  app.add_flag("-v,--verbose", verbose, "Progress messages");

  RunArgs ra;
  CLI::App* run = app.add_subcommand("run", "Run methods x seeds on one benchmark");
  run->add_option("--config", ra.config_file, "JSON campaign file (a manifest.json works); flags override it");
  run->add_option("--benchmark", ra.benchmark, "Benchmark name (see list-benchmarks)");
  run->add_option("--dim", ra.dim, "Input dimension for the composite and rotated benchmarks");
  run->add_option("--bench-seed", ra.bench_seed, "Seed of the rot_hm6 rotation");
  run->add_option("--method", ra.methods, "Method labels, comma separated")->delimiter(',');
  run->add_option("--seeds", ra.seeds, "Seeds: 3, 0..4 (inclusive) or 1,5,9");
  run->add_option("--iters", ra.iters, "BO iterations after the initial design")->check(CLI::PositiveNumber);
  run->add_option("--n-init", ra.n_init, "Initial uniform points");
  run->add_option("--n-vs", ra.n_vs, "Iterations between variable selections");
  run->add_option("--n-is", ra.n_is, "Monte Carlo samples for importance scores");
  run->add_option("--kernel", ra.kernel, "se or matern52");
  run->add_option("--acq", ra.acq, "ei or ucb");
  run->add_option("--budget", ra.budget, "iterations=N, wall_ms=T or cpu_ms=T");
  run->add_option("--split-d", ra.split_d, "Optimized prefix length for vsgpucb");
  run->add_option("--beta", ra.beta, "Constant UCB beta instead of the schedule");
  run->add_flag("--no-timings", ra.no_timings, "Write zero timings (byte-reproducible traces)");
  run->add_flag("--force-full-selection", ra.force_full, "Every selection keeps all dimensions");
  run->add_option("--out", ra.out, "Output directory (default: $VSBO_OUT_DIR or ./vsbo_out)");
  run->add_option("-j,--jobs", ra.jobs, "Concurrent cells")->check(CLI::PositiveNumber);
  run->add_flag("--force", ra.force, "Overwrite existing traces and manifest");

  ReportArgs fa;
  ReportArgs ca;
  ReportArgs ta;
  CLI::App* freq = app.add_subcommand("report-frequency", "Per-dimension selection counts");
  add_report_options(freq, fa, false);
  CLI::App* cmp = app.add_subcommand("compare", "Mean and std of best value per budget checkpoint");
  add_report_options(cmp, ca, true);
  CLI::App* tim = app.add_subcommand("timing", "Median per-iteration timings");
  add_report_options(tim, ta, false);
  CLI::App* list = app.add_subcommand("list-benchmarks", "Available benchmarks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  set_log_level(quiet ? LogLevel::Quiet : verbose ? LogLevel::Info : LogLevel::Warning);

  try {
    if (run->parsed()) return cmd_run(ra, *run);
    if (freq->parsed()) return cmd_frequency(fa);
    if (cmp->parsed()) return cmd_compare(ca);
    if (tim->parsed()) return cmd_timing(ta);
    if (list->parsed()) return cmd_list();
  } catch (const UsageError& e) {
    std::cerr << "vsbo: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "vsbo: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "vsbo: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
