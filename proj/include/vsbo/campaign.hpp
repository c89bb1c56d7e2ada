#pragma once

#include "vsbo/bo_loop.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace vsbo {

/// Named method variants. Each maps onto a RunConfig:
///   vsbo, vsbo-mix, vsbo-randsel, vsbo-mix-randsel, vanilla, vsgpucb, gpucb, random.
std::vector<std::string> method_labels();
/// Throws std::invalid_argument for an unknown label.
void apply_method_label(const std::string& label, RunConfig& cfg);

/// "3", "0..4" (both ends included), "1,5,9", or a mix such as "0..2,7".
std::vector<std::uint64_t> parse_seeds(const std::string& text);

enum class BudgetMode { Iterations, WallMs, CpuMs };

struct CampaignSpec {
  std::string benchmark;
  int dim = 0;                   // 0: the benchmark's default
  std::uint64_t bench_seed = 0;  // rotation for rot_hm6
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
  RunConfig config;  // method and seed are set per cell
  BudgetMode budget_mode = BudgetMode::Iterations;
  double budget_ms = 0.0;
  std::filesystem::path out_dir;
  int jobs = 1;
  bool force = false;

  /// Throws std::invalid_argument (unknown benchmark or method, empty lists, bad budget).
  void validate() const;
};

/// Resolved configuration as JSON text; accepted back by campaign_from_json.
/// out_dir, jobs and force are run-time choices and are not recorded.
std::string campaign_to_json(const CampaignSpec& spec);
/// Fields absent from the text keep their value in `base`.
CampaignSpec campaign_from_json(const std::string& text, CampaignSpec base = {});

struct CampaignResult {
  std::vector<std::filesystem::path> written;
  std::vector<std::filesystem::path> skipped;  // existing traces kept (no force)
  std::vector<std::string> failures;
};

/// Runs every (method, seed) cell, writing <label>_seed<k>.csv and
/// manifest.json under out_dir. Without `force`, an existing manifest must
/// match the new one and existing traces are kept. Cells that throw are
/// reported in `failures`; the other cells still complete.
CampaignResult run_campaign(const CampaignSpec& spec);

/// Run one cell in memory.
Trace run_cell(const CampaignSpec& spec, const std::string& label, std::uint64_t seed);

std::string version_string();

}  // namespace vsbo
