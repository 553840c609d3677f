#pragma once

// Maximization LPs over nonnegative variables, a dense two-phase simplex
// solver with Bland's rule, and CPLEX-LP text output.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "stochmatch/errors.hpp"

namespace stochmatch {

enum class Relation { less_equal, equal };

struct LpTerm {
  std::size_t var = 0;
  double coef = 0.0;
};

struct LpVariable {
  std::string name;
  std::string tag;  // semantic family, e.g. "x_v(string)", "x_{u,v}", "z_{u,v}"
};

struct LpRow {
  std::string name;
  std::vector<LpTerm> terms;
  Relation rel = Relation::less_equal;
  double rhs = 0.0;
};

/// maximize c·x subject to rows, x >= 0.
class LinearProgram {
 public:
  std::size_t add_variable(std::string name, std::string tag, double objective) {
    variables_.push_back({std::move(name), std::move(tag)});
    objective_.push_back(objective);
    return variables_.size() - 1;
  }

  std::size_t add_row(std::string name, std::vector<LpTerm> terms, Relation rel, double rhs) {
    for (const auto& t : terms) {
      if (t.var >= variables_.size()) throw InternalError("LP row references unknown variable");
      if (!std::isfinite(t.coef)) throw InternalError("LP row has non-finite coefficient");
    }
    if (!std::isfinite(rhs)) throw InternalError("LP row has non-finite right-hand side");
    rows_.push_back({std::move(name), std::move(terms), rel, rhs});
    return rows_.size() - 1;
  }

  const std::vector<LpVariable>& variables() const { return variables_; }
  const std::vector<double>& objective() const { return objective_; }
  const std::vector<LpRow>& rows() const { return rows_; }
  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_rows() const { return rows_.size(); }

 private:
  std::vector<LpVariable> variables_;
  std::vector<double> objective_;
  std::vector<LpRow> rows_;
};

enum class LpStatus { optimal, infeasible, unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
  }
  return "?";
}

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  double objective_value = 0.0;
  std::vector<double> values;  // aligned with lp.variables()
  double max_violation = 0.0;  // largest row violation of `values`

  std::map<std::string, double> assignment(const LinearProgram& lp) const {
    std::map<std::string, double> out;
    for (std::size_t j = 0; j < values.size(); ++j) out[lp.variables()[j].name] = values[j];
    return out;
  }
};

/// Largest amount by which x violates a row or a sign bound.
inline double max_violation(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (double v : x) worst = std::max(worst, -v);
  for (const auto& row : lp.rows()) {
    double lhs = 0.0;
    for (const auto& t : row.terms) lhs += t.coef * x[t.var];
    const double gap = row.rel == Relation::equal ? std::abs(lhs - row.rhs) : lhs - row.rhs;
    worst = std::max(worst, gap);
  }
  return worst;
}

namespace detail {

class Tableau {
 public:
  static constexpr double kEps = 1e-9;

  Tableau(std::size_t rows, std::size_t cols)
      : m_(rows), n_(cols), a_(rows * (cols + 1), 0.0), basis_(rows, 0) {}

  double& at(std::size_t i, std::size_t j) { return a_[i * (n_ + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, n_); }
  std::vector<std::size_t>& basis() { return basis_; }

  enum class Outcome { optimal, unbounded };

  /// Maximizes cost·x over columns j with allowed[j], from the current basis.
  Outcome optimize(const std::vector<double>& cost, const std::vector<bool>& allowed) {
    while (true) {
      // Bland: first improving column enters.
      std::size_t enter = n_;
      for (std::size_t j = 0; j < n_ && enter == n_; ++j) {
        if (!allowed[j]) continue;
        double d = cost[j];
        for (std::size_t i = 0; i < m_; ++i) d -= cost[basis_[i]] * at(i, j);
        if (d > kEps) enter = j;
      }
      if (enter == n_) return Outcome::optimal;

      // Min ratio; ties go to the smallest basic column index.
      std::size_t leave = m_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = at(i, enter);
        if (a <= kEps) continue;
        const double ratio = rhs(i) / a;
        if (leave == m_ || ratio < best - kEps ||
            (ratio <= best + kEps && basis_[i] < basis_[leave])) {
          best = leave == m_ ? ratio : std::min(best, ratio);
          leave = i;
        }
      }
      if (leave == m_) return Outcome::unbounded;
      pivot(leave, enter);
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    const double p = at(r, c);
    for (std::size_t j = 0; j <= n_; ++j) at(r, j) /= p;
    at(r, c) = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= n_; ++j) at(i, j) -= f * at(r, j);
      at(i, c) = 0.0;
    }
    basis_[r] = c;
  }

 private:
  std::size_t m_, n_;
  std::vector<double> a_;
  std::vector<std::size_t> basis_;
};

}  // namespace detail

/// Primal simplex, two phases, Bland's anti-cycling rule. Reports
/// infeasibility and unboundedness through the status; never throws on a
/// well-formed LP.
inline LpSolution solve_lp(const LinearProgram& lp) {
  const std::size_t n = lp.num_variables();
  const std::size_t m = lp.num_rows();

  // Column layout: structural | slack or surplus per row | artificial per row.
  const std::size_t slack0 = n, art0 = n + m, cols = n + 2 * m;
  detail::Tableau t(m, cols);
  std::vector<bool> needs_artificial(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    const LpRow& row = lp.rows()[i];
    const double sign = row.rhs < 0.0 ? -1.0 : 1.0;
    for (const auto& term : row.terms) t.at(i, term.var) += sign * term.coef;
    t.rhs(i) = sign * row.rhs;
    if (row.rel == Relation::less_equal) {
      t.at(i, slack0 + i) = sign;  // +1 slack, or -1 surplus after negation
      needs_artificial[i] = sign < 0.0;
    } else {
      needs_artificial[i] = true;
    }
    if (needs_artificial[i]) {
      t.at(i, art0 + i) = 1.0;
      t.basis()[i] = art0 + i;
    } else {
      t.basis()[i] = slack0 + i;
    }
  }

  std::vector<bool> allowed(cols, true);
  for (std::size_t i = 0; i < m; ++i) {
    allowed[art0 + i] = needs_artificial[i];
    if (lp.rows()[i].rel == Relation::equal) allowed[slack0 + i] = false;
  }

  LpSolution sol;
  double scale = 1.0;
  for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::abs(lp.rows()[i].rhs));

  // Phase 1: drive the artificials to zero.
  if (std::find(needs_artificial.begin(), needs_artificial.end(), true) != needs_artificial.end()) {
    std::vector<double> cost(cols, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      if (needs_artificial[i]) cost[art0 + i] = -1.0;
    }
    t.optimize(cost, allowed);
    double infeasibility = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis()[i] >= art0) infeasibility += t.rhs(i);
    }
    if (infeasibility > 1e-9 * scale) {
      sol.status = LpStatus::infeasible;
      return sol;
    }
    // Pivot remaining zero-level artificials out where possible; rows with
    // no usable column are redundant.
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis()[i] < art0) continue;
      for (std::size_t j = 0; j < art0; ++j) {
        if (allowed[j] && std::abs(t.at(i, j)) > detail::Tableau::kEps) {
          t.pivot(i, j);
          break;
        }
      }
    }
    for (std::size_t i = 0; i < m; ++i) allowed[art0 + i] = false;
  }

  // Phase 2.
  std::vector<double> cost(cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) cost[j] = lp.objective()[j];
  if (t.optimize(cost, allowed) == detail::Tableau::Outcome::unbounded) {
    sol.status = LpStatus::unbounded;
    return sol;
  }

  sol.status = LpStatus::optimal;
  sol.values.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (t.basis()[i] < n) sol.values[t.basis()[i]] = t.rhs(i);
  }
  for (double& v : sol.values) {
    if (v < 0.0 && v > -1e-9) v = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) sol.objective_value += lp.objective()[j] * sol.values[j];
  sol.max_violation = max_violation(lp, sol.values);
  return sol;
}

namespace detail {
inline std::string lp_name(const std::string& s) {
  std::string out;
  for (char ch : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.';
    out += ok ? ch : '_';
  }
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0])) || out[0] == '.') {
    out = "_" + out;
  }
  return out;
}

inline std::string lp_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace detail

/// Writes the LP in CPLEX-LP text format.
inline void write_cplex_lp(const LinearProgram& lp, std::ostream& os) {
  auto terms = [&](const std::vector<LpTerm>& ts) {
    std::string out;
    for (const auto& t : ts) {
      if (t.coef == 0.0) continue;
      out += (t.coef < 0.0 ? " - " : (out.empty() ? " " : " + "));
      out += detail::lp_number(std::abs(t.coef)) + " " + detail::lp_name(lp.variables()[t.var].name);
    }
    return out.empty() ? std::string(" 0 ") + detail::lp_name(lp.variables().empty() ? "x" : lp.variables()[0].name) : out;
  };
  std::vector<LpTerm> obj;
  for (std::size_t j = 0; j < lp.num_variables(); ++j) obj.push_back({j, lp.objective()[j]});
  os << "Maximize\n obj:" << (lp.num_variables() ? terms(obj) : std::string(" 0")) << "\n";
  os << "Subject To\n";
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    const auto& row = lp.rows()[i];
    if (row.terms.empty() || lp.num_variables() == 0) continue;
    os << " " << detail::lp_name(row.name.empty() ? "r" + std::to_string(i) : row.name) << ":"
       << terms(row.terms) << (row.rel == Relation::equal ? " = " : " <= ")
       << detail::lp_number(row.rhs) << "\n";
  }
  os << "End\n";
}

}  // namespace stochmatch
