#include "osr/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "osr/error.hpp"

namespace osr {

int LpProblem::add_var(std::string name, double cost, double lo, double hi) {
  var_names.push_back(std::move(name));
  objective.push_back(cost);
  lower.push_back(lo);
  upper.push_back(hi);
  return num_vars() - 1;
}

void LpProblem::add_row(std::string name, std::vector<LpTerm> terms, RowSense sense, double rhs) {
  rows.push_back({std::move(name), std::move(terms), sense, rhs});
}

void LpProblem::check() const {
  const auto n = objective.size();
  if (lower.size() != n || upper.size() != n || var_names.size() != n) {
    fail(ErrorCode::Invalid, "lp: inconsistent variable dimensions");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(objective[j])) fail(ErrorCode::Invalid, "lp: non-finite objective coefficient");
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] == kInf || upper[j] == -kInf) {
      fail(ErrorCode::Invalid, "lp: bad bounds on " + var_names[j]);
    }
  }
  for (const auto& r : rows) {
    if (!std::isfinite(r.rhs)) fail(ErrorCode::Invalid, "lp: non-finite rhs in row " + r.name);
    for (const auto& t : r.terms) {
      if (t.var < 0 || static_cast<std::size_t>(t.var) >= n) fail(ErrorCode::Invalid, "lp: bad index in " + r.name);
      if (!std::isfinite(t.coef)) fail(ErrorCode::Invalid, "lp: non-finite coefficient in " + r.name);
    }
  }
}

namespace {

enum class Phase { One, Two };
enum class StepResult { Optimal, Unbounded };

class BoundedSimplex {
 public:
  BoundedSimplex(const LpProblem& p, const SimplexOptions& opt) : opt_(opt), n_(p.num_vars()) {
    lo_.assign(p.lower.begin(), p.lower.end());
    hi_.assign(p.upper.begin(), p.upper.end());
    presolve(p);
  }

  LpResult run(const LpProblem& p) {
    LpResult res;
    if (bounds_conflict_) return res;
    setup();
    const int cap = opt_.max_iterations > 0 ? opt_.max_iterations : 50 * (m_ + ncols_) + 1000;
    max_iter_ = cap;

    if (num_art_ > 0) {
      std::vector<double> c1(ncols_, 0.0);
      for (int j = art0_; j < ncols_; ++j) c1[j] = 1.0;
      set_cost(c1);
      if (iterate() == StepResult::Unbounded) fail(ErrorCode::Numerical, "lp: phase one reported unbounded");
      refresh_basic();
      double infeas = 0.0;
      for (int j = art0_; j < ncols_; ++j) infeas += std::abs(x_[j]);
      if (infeas > opt_.feasibility_tol * (1.0 + rhs_scale_)) {
        res.iterations = iter_;
        return res;
      }
      for (int j = art0_; j < ncols_; ++j) {
        lo_[j] = 0.0;
        hi_[j] = 0.0;
        if (pos_[j] < 0) x_[j] = 0.0;
      }
    }

    std::vector<double> c2(ncols_, 0.0);
    for (int j = 0; j < n_; ++j) c2[j] = p.objective[j];
    set_cost(c2);
    bland_ = false;
    const auto st = iterate();
    res.iterations = iter_;
    if (st == StepResult::Unbounded) {
      res.status = LpStatus::Unbounded;
      return res;
    }
    refresh_basic();
    res.status = LpStatus::Optimal;
    res.x.assign(x_.begin(), x_.begin() + n_);
    // Clamp round-off outside bounds.
    for (int j = 0; j < n_; ++j) res.x[j] = std::clamp(res.x[j], p.lower[j], p.upper[j]);
    res.objective = 0.0;
    for (int j = 0; j < n_; ++j) res.objective += p.objective[j] * res.x[j];
    return res;
  }

 private:
  struct Row {
    std::map<int, double> coefs;
    RowSense sense;
    double rhs;
  };

  // Singleton rows become bounds; empty rows are checked and dropped.
  void presolve(const LpProblem& p) {
    for (const auto& r : p.rows) {
      Row row{{}, r.sense, r.rhs};
      for (const auto& t : r.terms) row.coefs[t.var] += t.coef;
      std::erase_if(row.coefs, [](const auto& kv) { return kv.second == 0.0; });
      rhs_scale_ = std::max(rhs_scale_, std::abs(r.rhs));
      if (row.coefs.empty()) {
        const double tol = opt_.feasibility_tol;
        const bool ok = (r.sense == RowSense::LessEqual && 0.0 <= r.rhs + tol) ||
                        (r.sense == RowSense::GreaterEqual && 0.0 >= r.rhs - tol) ||
                        (r.sense == RowSense::Equal && std::abs(r.rhs) <= tol);
        if (!ok) bounds_conflict_ = true;
        continue;
      }
      if (row.coefs.size() == 1) {
        const auto [j, a] = *row.coefs.begin();
        const double v = r.rhs / a;
        RowSense s = r.sense;
        if (a < 0.0 && s != RowSense::Equal) s = (s == RowSense::LessEqual) ? RowSense::GreaterEqual : RowSense::LessEqual;
        if (s == RowSense::LessEqual || s == RowSense::Equal) hi_[j] = std::min(hi_[j], v);
        if (s == RowSense::GreaterEqual || s == RowSense::Equal) lo_[j] = std::max(lo_[j], v);
        continue;
      }
      rows_.push_back(std::move(row));
    }
    for (int j = 0; j < n_; ++j) {
      if (lo_[j] > hi_[j] + opt_.feasibility_tol * (1.0 + std::abs(hi_[j]))) bounds_conflict_ = true;
      if (lo_[j] > hi_[j]) hi_[j] = lo_[j];
    }
  }

  void setup() {
    m_ = static_cast<int>(rows_.size());
    // Nonbasic structural start values.
    x_.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j) {
      if (std::isfinite(lo_[j])) x_[j] = lo_[j];
      else if (std::isfinite(hi_[j])) x_[j] = hi_[j];
    }
    std::vector<double> resid(m_);
    std::vector<int> art_sign(m_, 0);
    num_art_ = 0;
    for (int i = 0; i < m_; ++i) {
      double r = rows_[i].rhs;
      for (const auto& [j, a] : rows_[i].coefs) r -= a * x_[j];
      resid[i] = r;
      const auto s = rows_[i].sense;
      const bool slack_ok = (s == RowSense::LessEqual && r >= 0.0) || (s == RowSense::GreaterEqual && r <= 0.0) ||
                            (s == RowSense::Equal && r == 0.0);
      if (!slack_ok) {
        art_sign[i] = r >= 0.0 ? 1 : -1;
        ++num_art_;
      }
    }
    art0_ = n_ + m_;
    ncols_ = n_ + m_ + num_art_;
    lo_.resize(ncols_);
    hi_.resize(ncols_);
    x_.resize(ncols_, 0.0);
    for (int i = 0; i < m_; ++i) {
      const int s = n_ + i;
      switch (rows_[i].sense) {
        case RowSense::LessEqual: lo_[s] = 0.0; hi_[s] = kInf; break;
        case RowSense::GreaterEqual: lo_[s] = -kInf; hi_[s] = 0.0; break;
        case RowSense::Equal: lo_[s] = 0.0; hi_[s] = 0.0; break;
      }
    }
    a0_.assign(static_cast<std::size_t>(m_) * ncols_, 0.0);
    b_.resize(m_);
    basis_.assign(m_, -1);
    pos_.assign(ncols_, -1);
    int next_art = art0_;
    for (int i = 0; i < m_; ++i) {
      double* row = &a0_[static_cast<std::size_t>(i) * ncols_];
      for (const auto& [j, a] : rows_[i].coefs) row[j] = a;
      row[n_ + i] = 1.0;
      b_[i] = rows_[i].rhs;
      if (art_sign[i] != 0) {
        const int a = next_art++;
        row[a] = art_sign[i];
        lo_[a] = 0.0;
        hi_[a] = kInf;
        basis_[i] = a;
        x_[a] = std::abs(resid[i]);
      } else {
        basis_[i] = n_ + i;
        x_[n_ + i] = resid[i];
      }
      pos_[basis_[i]] = i;
    }
    t_ = a0_;
    for (int i = 0; i < m_; ++i) {
      const double piv = a0_[static_cast<std::size_t>(i) * ncols_ + basis_[i]];
      if (piv != 1.0) {
        double* row = &t_[static_cast<std::size_t>(i) * ncols_];
        for (int j = 0; j < ncols_; ++j) row[j] /= piv;
      }
    }
  }

  void set_cost(const std::vector<double>& c) {
    cost_ = c;
    d_ = c;
    for (int i = 0; i < m_; ++i) {
      const double cb = cost_[basis_[i]];
      if (cb == 0.0) continue;
      const double* row = &t_[static_cast<std::size_t>(i) * ncols_];
      for (int j = 0; j < ncols_; ++j) d_[j] -= cb * row[j];
    }
    for (int i = 0; i < m_; ++i) d_[basis_[i]] = 0.0;
  }

  // x_B = B^-1 (b - N x_N); slack columns of the tableau hold B^-1.
  void refresh_basic() {
    std::vector<double> r(b_);
    for (int j = 0; j < ncols_; ++j) {
      if (pos_[j] >= 0 || x_[j] == 0.0) continue;
      for (int i = 0; i < m_; ++i) r[i] -= a0_[static_cast<std::size_t>(i) * ncols_ + j] * x_[j];
    }
    for (int k = 0; k < m_; ++k) {
      const double* row = &t_[static_cast<std::size_t>(k) * ncols_];
      double v = 0.0;
      for (int i = 0; i < m_; ++i) v += row[n_ + i] * r[i];
      x_[basis_[k]] = v;
    }
  }

  StepResult iterate() {
    int degenerate = 0;
    for (;;) {
      if (++iter_ > max_iter_) fail(ErrorCode::Numerical, "lp: simplex iteration cap exceeded");
      // Pricing.
      int q = -1;
      int dir = 0;
      double best = 0.0;
      for (int j = 0; j < ncols_; ++j) {
        if (pos_[j] >= 0 || lo_[j] == hi_[j]) continue;
        const double dj = d_[j];
        int s = 0;
        if (dj < -opt_.optimality_tol && x_[j] < hi_[j]) s = 1;
        else if (dj > opt_.optimality_tol && x_[j] > lo_[j]) s = -1;
        if (s == 0) continue;
        if (bland_) {
          q = j;
          dir = s;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          q = j;
          dir = s;
        }
      }
      if (q < 0) return StepResult::Optimal;

      // Ratio test.
      double step = (std::isfinite(lo_[q]) && std::isfinite(hi_[q])) ? hi_[q] - lo_[q] : kInf;
      int leave = -1;
      double leave_alpha = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = dir * t_[static_cast<std::size_t>(i) * ncols_ + q];
        if (std::abs(a) <= opt_.pivot_tol) continue;
        const int bcol = basis_[i];
        double lim;
        if (a > 0.0) {
          if (!std::isfinite(lo_[bcol])) continue;
          lim = std::max(0.0, (x_[bcol] - lo_[bcol]) / a);
        } else {
          if (!std::isfinite(hi_[bcol])) continue;
          lim = std::max(0.0, (hi_[bcol] - x_[bcol]) / -a);
        }
        const double tie = 1e-12 * (1.0 + std::abs(lim));
        bool take = false;
        if (lim < step - tie) {
          take = true;
        } else if (leave >= 0 && std::abs(lim - step) <= tie) {
          take = bland_ ? bcol < basis_[leave] : std::abs(a) > std::abs(leave_alpha);
        }
        if (take) {
          step = lim;
          leave = i;
          leave_alpha = a;
        }
      }
      if (!std::isfinite(step)) return StepResult::Unbounded;

      degenerate = step <= 1e-12 ? degenerate + 1 : 0;
      if (degenerate > opt_.degenerate_before_bland) bland_ = true;

      if (step > 0.0) {
        x_[q] += dir * step;
        for (int i = 0; i < m_; ++i) {
          const double a = t_[static_cast<std::size_t>(i) * ncols_ + q];
          if (a != 0.0) x_[basis_[i]] -= dir * step * a;
        }
      }
      if (leave < 0) {
        // Bound flip.
        x_[q] = dir > 0 ? hi_[q] : lo_[q];
        continue;
      }
      const int out = basis_[leave];
      x_[out] = leave_alpha > 0.0 ? lo_[out] : hi_[out];
      pivot(leave, q);
    }
  }

  void pivot(int r, int q) {
    double* prow = &t_[static_cast<std::size_t>(r) * ncols_];
    const double piv = prow[q];
    for (int j = 0; j < ncols_; ++j) prow[j] /= piv;
    prow[q] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &t_[static_cast<std::size_t>(i) * ncols_];
      const double f = row[q];
      if (f == 0.0) continue;
      for (int j = 0; j < ncols_; ++j) row[j] -= f * prow[j];
      row[q] = 0.0;
    }
    const double fd = d_[q];
    if (fd != 0.0) {
      for (int j = 0; j < ncols_; ++j) d_[j] -= fd * prow[j];
      d_[q] = 0.0;
    }
    pos_[basis_[r]] = -1;
    basis_[r] = q;
    pos_[q] = r;
  }

  SimplexOptions opt_;
  int n_ = 0;
  int m_ = 0;
  int ncols_ = 0;
  int art0_ = 0;
  int num_art_ = 0;
  int iter_ = 0;
  int max_iter_ = 0;
  bool bland_ = false;
  bool bounds_conflict_ = false;
  double rhs_scale_ = 0.0;
  std::vector<Row> rows_;
  std::vector<double> lo_, hi_, x_, cost_, d_, b_, a0_, t_;
  std::vector<int> basis_, pos_;
};

}  // namespace

LpResult solve_lp(const LpProblem& problem, const SimplexOptions& options) {
  problem.check();
  BoundedSimplex s(problem, options);
  return s.run(problem);
}

double max_violation(const LpProblem& p, const std::vector<double>& x) {
  double worst = 0.0;
  for (int j = 0; j < p.num_vars(); ++j) {
    worst = std::max(worst, p.lower[j] - x[j]);
    worst = std::max(worst, x[j] - p.upper[j]);
  }
  for (const auto& r : p.rows) {
    double lhs = 0.0;
    for (const auto& t : r.terms) lhs += t.coef * x[t.var];
    switch (r.sense) {
      case RowSense::LessEqual: worst = std::max(worst, lhs - r.rhs); break;
      case RowSense::GreaterEqual: worst = std::max(worst, r.rhs - lhs); break;
      case RowSense::Equal: worst = std::max(worst, std::abs(lhs - r.rhs)); break;
    }
  }
  return worst;
}

namespace {

void write_terms(std::ostream& out, const std::vector<LpTerm>& terms, const LpProblem& p) {
  bool first = true;
  for (const auto& t : terms) {
    if (t.coef == 0.0) continue;
    out << (t.coef < 0 ? " - " : (first ? " " : " + ")) << std::abs(t.coef) << ' ' << p.var_names[t.var];
    first = false;
  }
  if (first) out << " 0 " << (p.var_names.empty() ? "x" : p.var_names.front());
}

}  // namespace

void write_lp_text(const LpProblem& p, std::ostream& out) {
  const auto prec = out.precision(17);
  out << "\\ exchange-capacity LP\nMinimize\n obj:";
  std::vector<LpTerm> obj;
  for (int j = 0; j < p.num_vars(); ++j) {
    if (p.objective[j] != 0.0) obj.push_back({j, p.objective[j]});
  }
  write_terms(out, obj, p);
  out << "\nSubject To\n";
  for (const auto& r : p.rows) {
    out << ' ' << r.name << ':';
    write_terms(out, r.terms, p);
    out << (r.sense == RowSense::LessEqual ? " <= " : r.sense == RowSense::Equal ? " = " : " >= ") << r.rhs << '\n';
  }
  out << "Bounds\n";
  for (int j = 0; j < p.num_vars(); ++j) {
    const double lo = p.lower[j], hi = p.upper[j];
    out << ' ';
    if (lo == -kInf && hi == kInf) {
      out << p.var_names[j] << " free\n";
    } else {
      if (lo == -kInf) out << "-inf"; else out << lo;
      out << " <= " << p.var_names[j] << " <= ";
      if (hi == kInf) out << "+inf"; else out << hi;
      out << '\n';
    }
  }
  out << "End\n";
  out.precision(prec);
}

}  // namespace osr
