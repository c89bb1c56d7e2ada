#include "vsbo/campaign.hpp"

#include "vsbo/log.hpp"
#include "vsbo/trace_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#ifndef VSBO_VERSION
#define VSBO_VERSION "0.0.0"
#endif

namespace vsbo {

using nlohmann::json;

namespace {

std::string budget_mode_name(BudgetMode m) {
  switch (m) {
    case BudgetMode::Iterations: return "iterations";
    case BudgetMode::WallMs: return "wall_ms";
    case BudgetMode::CpuMs: return "cpu_ms";
  }
  return "?";
}

BudgetMode budget_mode_from(const std::string& s) {
  for (auto m : {BudgetMode::Iterations, BudgetMode::WallMs, BudgetMode::CpuMs}) {
    if (budget_mode_name(m) == s) return m;
  }
  throw std::invalid_argument("unknown budget mode: " + s);
}

std::uint64_t parse_u64(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw std::invalid_argument("bad seed '" + s + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("seed out of range '" + s + "'");
  }
}

json config_json(const RunConfig& c) {
  json j;
  j["n_init"] = c.n_init;
  j["n_iter"] = c.n_iter;
  j["n_vs"] = c.n_vs;
  j["n_is"] = c.n_is;
  j["kernel"] = to_string(c.kernel);
  j["acq"] = to_string(c.acq);
  j["beta_params"] = {{"delta", c.beta_params.delta},
                      {"a", c.beta_params.a},
                      {"b", c.beta_params.b},
                      {"alpha", c.beta_params.alpha}};
  j["beta_fixed"] = c.beta_fixed ? json(*c.beta_fixed) : json(nullptr);
  j["fixed_split_d"] = c.fixed_split_d;
  if (c.fixed_tail) {
    j["fixed_tail"] = std::vector<double>(c.fixed_tail->data(), c.fixed_tail->data() + c.fixed_tail->size());
  } else {
    j["fixed_tail"] = nullptr;
  }
  j["force_full_selection"] = c.force_full_selection;
  j["record_timings"] = c.record_timings;
  j["fit_restarts"] = c.fit_restarts;
  j["acq_restarts"] = c.acq_restarts;
  j["acq_candidates"] = c.acq_candidates;
  return j;
}

void read_config(const json& j, RunConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("config must be an object");
  auto get = [&](const char* key, auto& out) {
    if (j.contains(key)) j.at(key).get_to(out);
  };
  get("n_init", c.n_init);
  get("n_iter", c.n_iter);
  get("n_vs", c.n_vs);
  get("n_is", c.n_is);
  if (j.contains("kernel")) c.kernel = kernel_kind_from_string(j.at("kernel").get<std::string>());
  if (j.contains("acq")) c.acq = acq_kind_from_string(j.at("acq").get<std::string>());
  if (j.contains("beta_params")) {
    const json& b = j.at("beta_params");
    if (b.contains("delta")) b.at("delta").get_to(c.beta_params.delta);
    if (b.contains("a")) b.at("a").get_to(c.beta_params.a);
    if (b.contains("b")) b.at("b").get_to(c.beta_params.b);
    if (b.contains("alpha")) b.at("alpha").get_to(c.beta_params.alpha);
  }
  if (j.contains("beta_fixed")) {
    c.beta_fixed = j.at("beta_fixed").is_null() ? std::nullopt : std::optional<double>(j.at("beta_fixed").get<double>());
  }
  get("fixed_split_d", c.fixed_split_d);
  if (j.contains("fixed_tail")) {
    if (j.at("fixed_tail").is_null()) {
      c.fixed_tail.reset();
    } else {
      const auto v = j.at("fixed_tail").get<std::vector<double>>();
      c.fixed_tail = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
  }
  get("force_full_selection", c.force_full_selection);
  get("record_timings", c.record_timings);
  get("fit_restarts", c.fit_restarts);
  get("acq_restarts", c.acq_restarts);
  get("acq_candidates", c.acq_candidates);
}

json manifest_json(const CampaignSpec& s) {
  json j;
  j["version"] = version_string();
  j["benchmark"] = s.benchmark;
  j["dim"] = make_benchmark(s.benchmark, s.dim, s.bench_seed).dim;
  j["bench_seed"] = s.bench_seed;
  j["methods"] = s.methods;
  j["seeds"] = s.seeds;
  j["budget"] = {{"mode", budget_mode_name(s.budget_mode)}, {"ms", s.budget_ms}};
  j["config"] = config_json(s.config);
  return j;
}

}  // namespace

std::string version_string() { return VSBO_VERSION; }

std::vector<std::string> method_labels() {
  return {"vsbo", "vsbo-mix", "vsbo-randsel", "vsbo-mix-randsel", "vanilla", "vsgpucb", "gpucb", "random"};
}

void apply_method_label(const std::string& label, RunConfig& cfg) {
  cfg.sampler = SamplerKind::CMAES;
  cfg.ranking = RankingKind::GradIS;
  if (label == "vsbo") {
    cfg.method = Method::VSBO;
  } else if (label == "vsbo-mix") {
    cfg.method = Method::VSBO;
    cfg.sampler = SamplerKind::Mix;
  } else if (label == "vsbo-randsel") {
    cfg.method = Method::VSBO;
    cfg.ranking = RankingKind::Random;
  } else if (label == "vsbo-mix-randsel") {
    cfg.method = Method::VSBO;
    cfg.sampler = SamplerKind::Mix;
    cfg.ranking = RankingKind::Random;
  } else {
    cfg.method = method_from_string(label);
  }
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_u64(part));
      continue;
    }
    const std::uint64_t a = parse_u64(part.substr(0, dots));
    const std::uint64_t b = parse_u64(part.substr(dots + 2));
    if (b < a) throw std::invalid_argument("empty seed range '" + part + "'");
    if (b - a >= 1000000) throw std::invalid_argument("seed range too long '" + part + "'");
    for (std::uint64_t k = a; k <= b; ++k) out.push_back(k);
  }
  if (out.empty()) throw std::invalid_argument("no seeds given");
  return out;
}

void CampaignSpec::validate() const {
  make_benchmark(benchmark, dim, bench_seed);
  if (methods.empty()) throw std::invalid_argument("no methods given");
  if (seeds.empty()) throw std::invalid_argument("no seeds given");
  for (const std::string& m : methods) {
    RunConfig c = config;
    apply_method_label(m, c);
  }
  if (budget_mode != BudgetMode::Iterations && !(budget_ms > 0.0)) {
    throw std::invalid_argument("time budget must be positive");
  }
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  config.validate();
}

std::string campaign_to_json(const CampaignSpec& spec) { return manifest_json(spec).dump(2) + "\n"; }

CampaignSpec campaign_from_json(const std::string& text, CampaignSpec base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  try {
    if (j.contains("benchmark")) j.at("benchmark").get_to(base.benchmark);
    if (j.contains("dim")) j.at("dim").get_to(base.dim);
    if (j.contains("bench_seed")) j.at("bench_seed").get_to(base.bench_seed);
    if (j.contains("methods")) j.at("methods").get_to(base.methods);
    if (j.contains("seeds")) {
      const json& s = j.at("seeds");
      base.seeds = s.is_string() ? parse_seeds(s.get<std::string>()) : s.get<std::vector<std::uint64_t>>();
    }
    if (j.contains("budget")) {
      const json& b = j.at("budget");
      if (b.contains("mode")) base.budget_mode = budget_mode_from(b.at("mode").get<std::string>());
      if (b.contains("ms")) b.at("ms").get_to(base.budget_ms);
    }
    if (j.contains("config")) read_config(j.at("config"), base.config);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return base;
}

Trace run_cell(const CampaignSpec& spec, const std::string& label, std::uint64_t seed) {
  const Benchmark bench = make_benchmark(spec.benchmark, spec.dim, spec.bench_seed);
  RunConfig cfg = spec.config;
  apply_method_label(label, cfg);
  cfg.seed = seed;
  cfg.wall_ms_budget.reset();
  cfg.cpu_ms_budget.reset();
  if (spec.budget_mode == BudgetMode::WallMs) cfg.wall_ms_budget = spec.budget_ms;
  if (spec.budget_mode == BudgetMode::CpuMs) cfg.cpu_ms_budget = spec.budget_ms;
  return run(bench, cfg);
}

CampaignResult run_campaign(const CampaignSpec& spec) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(spec.out_dir);

  const fs::path manifest_path = spec.out_dir / "manifest.json";
  const json manifest = manifest_json(spec);
  if (fs::exists(manifest_path) && !spec.force) {
    std::ifstream in(manifest_path);
    json old;
    try {
      old = json::parse(in);
    } catch (const json::exception&) {
      throw std::runtime_error(manifest_path.string() + " is unreadable; use --force to overwrite");
    }
    if (old != manifest) {
      throw std::runtime_error(manifest_path.string() + " records a different configuration; use --force to overwrite");
    }
  }
  {
    std::ofstream out(manifest_path, std::ios::trunc);
    out << manifest.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + manifest_path.string());
  }

  struct Cell {
    std::string label;
    std::uint64_t seed;
    fs::path path;
  };
  CampaignResult result;
  std::vector<Cell> cells;
  for (const std::string& m : spec.methods) {
    for (std::uint64_t s : spec.seeds) {
      const fs::path p = spec.out_dir / trace_filename(m, s);
      if (!spec.force && fs::exists(p)) {
        result.skipped.push_back(p);
        continue;
      }
      cells.push_back({m, s, p});
    }
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& c = cells[i];
      log_info("running " + c.label + " seed " + std::to_string(c.seed));
      try {
        save_trace(c.path, run_cell(spec, c.label, c.seed));
        std::lock_guard lock(mu);
        result.written.push_back(c.path);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        result.failures.push_back(c.label + " seed " + std::to_string(c.seed) + ": " + e.what());
      }
    }
  };
  const int n_threads = std::min<int>(spec.jobs, static_cast<int>(cells.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  std::sort(result.written.begin(), result.written.end());
  return result;
}

}  // namespace vsbo
