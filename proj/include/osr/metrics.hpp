#pragma once

// Evaluation rows of the results table: capacities in p.u., improvement over
// all-closed, normalized score against a solver reference, openings, and
// per-switch usage.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "osr/h2mg.hpp"

namespace osr {

inline constexpr const char* kMetricsSchema = "osr.metrics/1";

struct ContextMetrics {
  std::string context_id;
  bool feasible = true;
  double capacity_pu = 0.0;  // 0 when the decision is infeasible
  double all_closed_pu = 0.0;
  std::optional<double> solver_pu;
  std::optional<double> improvement_pct;  // needs a positive all-closed capacity
  std::optional<double> normalized;       // (f - f_closed) / (f_solver - f_closed)
  bool excluded = false;                  // solver reference <= all-closed
  std::size_t openings = 0;
};

struct MetricsReport {
  std::string method;
  std::vector<ContextMetrics> contexts;  // sorted by context_id
  std::vector<std::string> switch_labels;
  std::vector<double> usage_pct;  // per switch, share of contexts opening it

  double mean_capacity_pu = 0.0;
  double mean_improvement_pct = 0.0;
  std::optional<double> mean_normalized;
  double mean_openings = 0.0;
  std::size_t never_used = 0;
  std::size_t infeasible = 0;
  std::size_t excluded = 0;
};

// References are capacities in MW keyed by context_id. A missing decision or
// all-closed reference is ErrorCode::Invalid; the solver map may be empty.
MetricsReport evaluate(const std::string& method, const std::vector<Grid>& grids,
                       const std::map<std::string, Decision>& decisions,
                       const std::map<std::string, double>& all_closed_mw,
                       const std::map<std::string, double>& solver_mw);

std::string switch_label(const Switch& s);

// One row per context followed by a SUMMARY row; a "# osr.metrics/1" line
// precedes the header.
std::string metrics_csv(const MetricsReport& report);
std::string usage_csv(const MetricsReport& report);

struct ContextRow {
  std::string context_id;
  bool feasible = true;
  double capacity_pu = 0.0;
  double all_closed_pu = 0.0;
  std::optional<double> solver_pu;
  std::optional<double> improvement_pct;
  std::optional<double> normalized;
  bool excluded = false;
  std::size_t openings = 0;
};
// Reads the per-context rows back from metrics_csv output.
std::vector<ContextRow> parse_metrics_csv(const std::string& text);
std::vector<double> parse_usage_csv(const std::string& text);
// Value of "method=" in the schema comment line, or "" when absent.
std::string csv_method(const std::string& text);

struct Histogram {
  std::string panel;
  std::vector<double> edges;                          // bins + 1
  std::map<std::string, std::vector<std::size_t>> counts;  // per method
};

// Equal-width bins over the pooled range of every method.
Histogram histogram(const std::string& panel, const std::map<std::string, std::vector<double>>& values, int bins);
std::string histograms_csv(const std::vector<Histogram>& hs);

}  // namespace osr
