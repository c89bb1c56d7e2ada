#pragma once

#include "vsbo/bo_loop.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace vsbo {

struct LabeledTrace {
  std::string label;  // method label, e.g. "vsbo" or "vsbo-mix"
  std::uint64_t seed = 0;
  Trace trace;
};

/// Files are read as given; directories contribute every <label>_seed<k>.csv
/// inside them, sorted by name. The label and seed come from the file name
/// (a file with another name is labelled by its stem, seed 0). Throws
/// std::invalid_argument when nothing is found.
std::vector<LabeledTrace> load_labeled_traces(const std::vector<std::filesystem::path>& inputs);

struct FrequencyRow {
  int var_index = 0;
  int times_selected = 0;
  int max_possible = 0;
};

/// Tallies selection membership per input dimension over every selection
/// event (rows with a non-empty `selected`) of every trace. Throws
/// std::invalid_argument on an empty set or mixed dimensions.
std::vector<FrequencyRow> selection_frequency(const std::vector<Trace>& traces);

/// Mean over selection events of |S ∩ truth| / |S| and |S ∩ truth| / |truth|.
struct SelectionAccuracy {
  double precision = 0.0;
  double recall = 0.0;
  int events = 0;
};
SelectionAccuracy selection_accuracy(const std::vector<Trace>& traces, const IndexSet& truth);

enum class BudgetAxis { Iteration, WallMs, CpuMs };
std::string to_string(BudgetAxis a);
BudgetAxis budget_axis_from_string(const std::string& name);

struct CompareRow {
  std::string label;
  BudgetAxis axis = BudgetAxis::Iteration;
  double checkpoint = 0.0;
  int n = 0;  // traces contributing
  double mean_best_y = 0.0;
  double std_best_y = 0.0;  // sample std; 0 for a single trace
};

/// Best value reached by each budget checkpoint, per label. Iteration
/// checkpoints are 1..longest trace and shorter traces carry their last value
/// forward. Time checkpoints are `points` evenly spaced cumulative
/// (fit + acq) times up to the largest total; a trace counts at a checkpoint
/// once its first records fit within it.
std::vector<CompareRow> compare_table(const std::vector<LabeledTrace>& traces, BudgetAxis axis, int points = 50);

struct TimingRow {
  std::string label;
  int iter = 0;
  int n = 0;
  double wall_ms_fit = 0.0;
  double wall_ms_acq = 0.0;
  double cpu_ms_fit = 0.0;
  double cpu_ms_acq = 0.0;
};

/// Per label and iteration, the median over traces of each timing column.
std::vector<TimingRow> timing_table(const std::vector<LabeledTrace>& traces);

void write_frequency_csv(std::ostream& out, const std::vector<FrequencyRow>& rows);
void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows);
void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows);

double median(std::vector<double> v);

}  // namespace vsbo
