#include "osr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "osr/error.hpp"
#include "osr/powerlp.hpp"

namespace osr {

namespace {

bool above(double a, double b) { return a > b + 1e-9 * std::max(1.0, std::abs(b)); }

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') fail(ErrorCode::Invalid, "csv: bad number '" + s + "'");
  return v;
}

std::optional<double> to_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return to_double(s);
}

}  // namespace

std::string switch_label(const Switch& s) {
  return s.substation + ":" + std::to_string(s.port_from) + "-" + std::to_string(s.port_to);
}

MetricsReport evaluate(const std::string& method, const std::vector<Grid>& grids,
                       const std::map<std::string, Decision>& decisions,
                       const std::map<std::string, double>& all_closed_mw,
                       const std::map<std::string, double>& solver_mw) {
  MetricsReport r;
  r.method = method;
  if (grids.empty()) return r;
  const std::size_t ns = grids.front().num_switches();
  for (const auto& s : grids.front().switches) r.switch_labels.push_back(switch_label(s));
  std::vector<std::size_t> opened(ns, 0);

  std::vector<const Grid*> order;
  for (const auto& g : grids) order.push_back(&g);
  std::sort(order.begin(), order.end(), [](const Grid* a, const Grid* b) { return a->context_id < b->context_id; });

  double sum_cap = 0.0, sum_imp = 0.0, sum_norm = 0.0, sum_open = 0.0;
  std::size_t n_imp = 0, n_norm = 0;
  for (const Grid* g : order) {
    const auto& id = g->context_id;
    if (g->num_switches() != ns) fail(ErrorCode::Invalid, "evaluate: context " + id + " has a different switch layout");
    const auto d = decisions.find(id);
    if (d == decisions.end()) fail(ErrorCode::Invalid, "evaluate: no decision for context " + id);
    const auto c = all_closed_mw.find(id);
    if (c == all_closed_mw.end()) fail(ErrorCode::Invalid, "evaluate: no all-closed reference for context " + id);
    std::optional<double> solver;
    if (!solver_mw.empty()) {
      const auto s = solver_mw.find(id);
      if (s == solver_mw.end()) fail(ErrorCode::Invalid, "evaluate: no solver reference for context " + id);
      solver = s->second;
    }

    ContextMetrics m;
    m.context_id = id;
    const auto cap = exchange_capacity(*g, d->second);
    m.feasible = cap.feasible();
    const double mw = m.feasible ? cap.capacity_mw : 0.0;
    m.capacity_pu = mw / kBaseMva;
    m.all_closed_pu = c->second / kBaseMva;
    if (solver) m.solver_pu = *solver / kBaseMva;
    if (c->second > 0.0) m.improvement_pct = 100.0 * (mw - c->second) / c->second;
    if (solver) {
      if (above(*solver, c->second)) {
        m.normalized = (mw - c->second) / (*solver - c->second);
      } else {
        m.excluded = true;
      }
    }
    m.openings = d->second.openings();
    for (std::size_t e = 0; e < ns; ++e) {
      if (!d->second.states[e]) ++opened[e];
    }

    sum_cap += m.capacity_pu;
    sum_open += static_cast<double>(m.openings);
    if (m.improvement_pct) {
      sum_imp += *m.improvement_pct;
      ++n_imp;
    }
    if (m.normalized) {
      sum_norm += *m.normalized;
      ++n_norm;
    }
    r.infeasible += m.feasible ? 0 : 1;
    r.excluded += m.excluded ? 1 : 0;
    r.contexts.push_back(std::move(m));
  }
  const double n = static_cast<double>(r.contexts.size());
  r.mean_capacity_pu = sum_cap / n;
  r.mean_openings = sum_open / n;
  r.mean_improvement_pct = n_imp ? sum_imp / static_cast<double>(n_imp) : 0.0;
  if (n_norm) r.mean_normalized = sum_norm / static_cast<double>(n_norm);
  for (std::size_t e = 0; e < ns; ++e) {
    r.usage_pct.push_back(100.0 * static_cast<double>(opened[e]) / n);
    if (opened[e] == 0) ++r.never_used;
  }
  return r;
}

std::string metrics_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << "# " << kMetricsSchema << " method=" << r.method << '\n';
  out << "context_id,feasible,capacity_pu,all_closed_pu,solver_pu,improvement_pct,normalized,excluded,openings\n";
  for (const auto& m : r.contexts) {
    out << m.context_id << ',' << (m.feasible ? 1 : 0) << ',' << num(m.capacity_pu) << ',' << num(m.all_closed_pu)
        << ',' << opt(m.solver_pu) << ',' << opt(m.improvement_pct) << ',' << opt(m.normalized) << ','
        << (m.excluded ? 1 : 0) << ',' << m.openings << '\n';
  }
  // Summary: counts in the flag columns, means elsewhere.
  double closed = 0.0, solver = 0.0;
  std::size_t n_solver = 0;
  for (const auto& m : r.contexts) {
    closed += m.all_closed_pu;
    if (m.solver_pu) {
      solver += *m.solver_pu;
      ++n_solver;
    }
  }
  const double n = std::max<double>(1.0, static_cast<double>(r.contexts.size()));
  out << "SUMMARY," << (r.contexts.size() - r.infeasible) << ',' << num(r.mean_capacity_pu) << ',' << num(closed / n)
      << ',' << (n_solver ? num(solver / static_cast<double>(n_solver)) : "") << ',' << num(r.mean_improvement_pct)
      << ',' << opt(r.mean_normalized) << ',' << r.excluded << ',' << num(r.mean_openings) << '\n';
  return out.str();
}

std::string usage_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << "# " << kMetricsSchema << " method=" << r.method << " never_used=" << r.never_used << '\n';
  out << "switch_index,switch,usage_pct\n";
  for (std::size_t e = 0; e < r.usage_pct.size(); ++e) {
    out << e << ',' << r.switch_labels[e] << ',' << num(r.usage_pct[e]) << '\n';
  }
  return out.str();
}

std::vector<ContextRow> parse_metrics_csv(const std::string& text) {
  std::vector<ContextRow> rows;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.rfind("context_id,", 0) != 0) fail(ErrorCode::Invalid, "metrics csv: unexpected header");
      header = true;
      continue;
    }
    const auto c = split(line);
    if (c.size() != 9) fail(ErrorCode::Invalid, "metrics csv: expected 9 columns in '" + line + "'");
    if (c[0] == "SUMMARY") continue;
    rows.push_back({c[0], c[1] == "1", to_double(c[2]), to_double(c[3]), to_opt(c[4]), to_opt(c[5]), to_opt(c[6]),
                    c[7] == "1", static_cast<std::size_t>(to_double(c[8]))});
  }
  return rows;
}

std::vector<double> parse_usage_csv(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    const auto c = split(line);
    if (c.size() != 3) fail(ErrorCode::Invalid, "usage csv: expected 3 columns");
    out.push_back(to_double(c[2]));
  }
  return out;
}

std::string csv_method(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line) && !line.empty() && line[0] == '#') {
    const auto p = line.find("method=");
    if (p == std::string::npos) continue;
    const auto e = line.find(' ', p);
    return line.substr(p + 7, e == std::string::npos ? std::string::npos : e - p - 7);
  }
  return "";
}

Histogram histogram(const std::string& panel, const std::map<std::string, std::vector<double>>& values, int bins) {
  if (bins < 1) fail(ErrorCode::Config, "histogram: bins must be >= 1");
  Histogram h;
  h.panel = panel;
  double lo = std::numeric_limits<double>::infinity(), hi = -std::numeric_limits<double>::infinity();
  for (const auto& [m, v] : values) {
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (lo > hi) {
    lo = 0.0;
    hi = 1.0;
  }
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  for (int b = 0; b <= bins; ++b) h.edges.push_back(lo + (hi - lo) * b / bins);
  for (const auto& [m, v] : values) {
    auto& cnt = h.counts[m];
    cnt.assign(static_cast<std::size_t>(bins), 0);
    for (double x : v) {
      auto b = static_cast<int>(std::floor((x - lo) / (hi - lo) * bins));
      cnt[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
    }
  }
  return h;
}

std::string histograms_csv(const std::vector<Histogram>& hs) {
  std::ostringstream out;
  out << "# " << kMetricsSchema << " histograms\n";
  out << "panel,method,bin,lo,hi,count\n";
  for (const auto& h : hs) {
    for (const auto& [m, cnt] : h.counts) {
      for (std::size_t b = 0; b < cnt.size(); ++b) {
        out << h.panel << ',' << m << ',' << b << ',' << num(h.edges[b]) << ',' << num(h.edges[b + 1]) << ','
            << cnt[b] << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace osr
