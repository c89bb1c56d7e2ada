#include "vsbo/reports.hpp"

#include "vsbo/trace_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

namespace vsbo {

namespace {

struct MeanStd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

double record_ms(const TraceRecord& r, BudgetAxis axis) {
  return axis == BudgetAxis::WallMs ? r.wall_ms_fit + r.wall_ms_acq : r.cpu_ms_fit + r.cpu_ms_acq;
}

// Groups by label, keeping first-appearance order.
std::vector<std::pair<std::string, std::vector<const Trace*>>> by_label(const std::vector<LabeledTrace>& traces) {
  std::vector<std::pair<std::string, std::vector<const Trace*>>> groups;
  for (const LabeledTrace& lt : traces) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == lt.label; });
    if (it == groups.end()) {
      groups.push_back({lt.label, {}});
      it = groups.end() - 1;
    }
    it->second.push_back(&lt.trace);
  }
  return groups;
}

}  // namespace

std::vector<LabeledTrace> load_labeled_traces(const std::vector<std::filesystem::path>& inputs) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const fs::path& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && parse_trace_filename(e.path().filename().string())) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(in)) {
      files.push_back(in);
    } else {
      throw std::invalid_argument("no such file or directory: " + in.string());
    }
  }
  if (files.empty()) throw std::invalid_argument("no trace files found");
  std::vector<LabeledTrace> out;
  for (const fs::path& f : files) {
    LabeledTrace lt;
    if (const auto name = parse_trace_filename(f.filename().string())) {
      lt.label = name->label;
      lt.seed = name->seed;
    } else {
      lt.label = f.stem().string();
    }
    lt.trace = load_trace(f);
    out.push_back(std::move(lt));
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<FrequencyRow> selection_frequency(const std::vector<Trace>& traces) {
  int dim = -1;
  for (const Trace& t : traces) {
    for (const TraceRecord& r : t.records) {
      if (dim < 0) dim = static_cast<int>(r.x.size());
      if (r.x.size() != dim) throw std::invalid_argument("frequency report: traces have different dimensions");
    }
  }
  if (dim < 0) throw std::invalid_argument("frequency report: no trace records");
  std::vector<FrequencyRow> rows(static_cast<std::size_t>(dim));
  int events = 0;
  for (const Trace& t : traces) {
    for (const TraceRecord& r : t.records) {
      if (r.selected.empty()) continue;
      ++events;
      for (int j : r.selected) {
        if (j < 0 || j >= dim) throw std::invalid_argument("frequency report: selected index out of range");
        ++rows[static_cast<std::size_t>(j)].times_selected;
      }
    }
  }
  for (int j = 0; j < dim; ++j) {
    rows[static_cast<std::size_t>(j)].var_index = j;
    rows[static_cast<std::size_t>(j)].max_possible = events;
  }
  return rows;
}

SelectionAccuracy selection_accuracy(const std::vector<Trace>& traces, const IndexSet& truth) {
  if (truth.empty()) throw std::invalid_argument("selection_accuracy: empty ground truth");
  const std::set<int> want(truth.begin(), truth.end());
  SelectionAccuracy acc;
  for (const Trace& t : traces) {
    for (const TraceRecord& r : t.records) {
      if (r.selected.empty()) continue;
      const auto hits = std::count_if(r.selected.begin(), r.selected.end(), [&](int j) { return want.count(j) > 0; });
      acc.precision += static_cast<double>(hits) / static_cast<double>(r.selected.size());
      acc.recall += static_cast<double>(hits) / static_cast<double>(want.size());
      ++acc.events;
    }
  }
  if (acc.events > 0) {
    acc.precision /= acc.events;
    acc.recall /= acc.events;
  }
  return acc;
}

std::string to_string(BudgetAxis a) {
  switch (a) {
    case BudgetAxis::Iteration: return "iter";
    case BudgetAxis::WallMs: return "wall_ms";
    case BudgetAxis::CpuMs: return "cpu_ms";
  }
  return "?";
}

BudgetAxis budget_axis_from_string(const std::string& name) {
  for (auto a : {BudgetAxis::Iteration, BudgetAxis::WallMs, BudgetAxis::CpuMs}) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument("unknown budget axis: " + name);
}

std::vector<CompareRow> compare_table(const std::vector<LabeledTrace>& traces, BudgetAxis axis, int points) {
  if (traces.empty()) throw std::invalid_argument("compare: no traces");
  if (points < 1) throw std::invalid_argument("compare: points must be >= 1");
  std::vector<CompareRow> rows;
  for (const auto& [label, group] : by_label(traces)) {
    if (axis == BudgetAxis::Iteration) {
      std::size_t longest = 0;
      for (const Trace* t : group) longest = std::max(longest, t->records.size());
      for (std::size_t i = 0; i < longest; ++i) {
        std::vector<double> vals;
        for (const Trace* t : group) {
          if (t->records.empty()) continue;
          vals.push_back(t->records[std::min(i, t->records.size() - 1)].best_y);
        }
        const MeanStd ms = mean_std(vals);
        rows.push_back({label, axis, static_cast<double>(i + 1), static_cast<int>(vals.size()), ms.mean, ms.sd});
      }
      continue;
    }
    // Cumulative time after each record, per trace.
    std::vector<std::vector<double>> cum(group.size());
    double top = 0.0;
    for (std::size_t g = 0; g < group.size(); ++g) {
      double c = 0.0;
      for (const TraceRecord& r : group[g]->records) {
        c += record_ms(r, axis);
        cum[g].push_back(c);
      }
      top = std::max(top, c);
    }
    for (int k = 1; k <= points; ++k) {
      const double cp = top * k / points;
      std::vector<double> vals;
      for (std::size_t g = 0; g < group.size(); ++g) {
        const auto it = std::upper_bound(cum[g].begin(), cum[g].end(), cp);
        if (it == cum[g].begin()) continue;
        vals.push_back(group[g]->records[static_cast<std::size_t>(it - cum[g].begin()) - 1].best_y);
      }
      if (vals.empty()) continue;
      const MeanStd ms = mean_std(vals);
      rows.push_back({label, axis, cp, static_cast<int>(vals.size()), ms.mean, ms.sd});
    }
  }
  return rows;
}

std::vector<TimingRow> timing_table(const std::vector<LabeledTrace>& traces) {
  if (traces.empty()) throw std::invalid_argument("timing: no traces");
  std::vector<TimingRow> rows;
  for (const auto& [label, group] : by_label(traces)) {
    std::map<int, std::vector<const TraceRecord*>> at;
    for (const Trace* t : group) {
      for (const TraceRecord& r : t->records) at[r.iter].push_back(&r);
    }
    for (const auto& [iter, recs] : at) {
      auto med = [&](double TraceRecord::*field) {
        std::vector<double> v;
        for (const TraceRecord* r : recs) v.push_back(r->*field);
        return median(std::move(v));
      };
      rows.push_back({label, iter, static_cast<int>(recs.size()), med(&TraceRecord::wall_ms_fit),
                      med(&TraceRecord::wall_ms_acq), med(&TraceRecord::cpu_ms_fit), med(&TraceRecord::cpu_ms_acq)});
    }
  }
  return rows;
}

void write_frequency_csv(std::ostream& out, const std::vector<FrequencyRow>& rows) {
  out << "var_index,times_selected,max_possible\n";
  for (const FrequencyRow& r : rows) out << r.var_index << ',' << r.times_selected << ',' << r.max_possible << '\n';
}

void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
  out << "method,axis,checkpoint,n,mean_best_y,std_best_y\n";
  for (const CompareRow& r : rows) {
    out << r.label << ',' << to_string(r.axis) << ',' << format_double(r.checkpoint) << ',' << r.n << ','
        << format_double(r.mean_best_y) << ',' << format_double(r.std_best_y) << '\n';
  }
}

void write_timing_csv(std::ostream& out, const std::vector<TimingRow>& rows) {
  out << "method,iter,wall_ms_fit,wall_ms_acq,cpu_ms_fit,cpu_ms_acq\n";
  for (const TimingRow& r : rows) {
    out << r.label << ',' << r.iter << ',' << format_double(r.wall_ms_fit) << ','
        << format_double(r.wall_ms_acq) << ',' << format_double(r.cpu_ms_fit) << ',' << format_double(r.cpu_ms_acq)
        << '\n';
  }
}

}  // namespace vsbo
