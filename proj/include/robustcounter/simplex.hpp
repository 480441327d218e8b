#pragma once

// Dense-tableau two-phase primal simplex with Bland's rule.
//
// Every row owns one identity column in the initial basis: its slack when the
// row is "<=" with nonnegative rhs, otherwise an artificial. Artificials are
// never allowed back into the basis in phase 2, but their columns are kept so
// that the final tableau still carries B^-1 for dual recovery.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "robustcounter/model.hpp"
#include "robustcounter/solver_options.hpp"
#include "robustcounter/standard_form.hpp"

namespace robustcounter {

struct LpResult {
  SolveStatus status = SolveStatus::kInfeasible;
  std::vector<double> columns;  // primal values of the standard-form columns
  std::vector<double> duals;    // one multiplier per row; >= 0 on "<=" rows
  std::vector<double> ray;      // improving direction when unbounded
  double objective = 0.0;       // internal (maximization) objective incl. offset
  long iterations = 0;
};

namespace detail {

class Tableau {
 public:
  Tableau(const StandardForm& sf, double pivot_tol)
      : m_(sf.num_rows()), n_(sf.num_columns), pivot_tol_(pivot_tol) {
    // Column layout: structural | slack per "<=" row | artificial per row
    // whose identity column is not a slack.
    std::vector<double> sign(m_, 1.0);
    slack_col_.assign(m_, npos);
    std::size_t next = n_;
    for (std::size_t i = 0; i < m_; ++i) {
      if (sf.senses[i] == RowSense::kLe) slack_col_[i] = next++;
    }
    identity_col_.assign(m_, npos);
    first_artificial_ = next;
    for (std::size_t i = 0; i < m_; ++i) {
      const bool slack_basis = sf.senses[i] == RowSense::kLe && sf.rhs[i] >= 0.0;
      if (slack_basis) {
        identity_col_[i] = slack_col_[i];
      } else {
        identity_col_[i] = next++;
        if (sf.rhs[i] < 0.0) sign[i] = -1.0;
      }
    }
    width_ = next;
    data_.assign(m_ * (width_ + 1), 0.0);
    basis_.resize(m_);
    row_sign_ = sign;
    for (std::size_t i = 0; i < m_; ++i) {
      if (sf.rows[i].size() != n_) throw ModelError("standard form row has wrong width");
      for (std::size_t j = 0; j < n_; ++j) at(i, j) = sign[i] * sf.rows[i][j];
      if (slack_col_[i] != npos) at(i, slack_col_[i]) = sign[i];
      at(i, identity_col_[i]) = 1.0;
      rhs(i) = sign[i] * sf.rhs[i];
      basis_[i] = identity_col_[i];
    }
    reduced_.assign(width_, 0.0);
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  double& at(std::size_t i, std::size_t j) { return data_[i * (width_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * (width_ + 1) + j]; }
  double& rhs(std::size_t i) { return data_[i * (width_ + 1) + width_]; }
  double rhs(std::size_t i) const { return data_[i * (width_ + 1) + width_]; }

  bool is_artificial(std::size_t j) const { return j >= first_artificial_; }

  /// Installs cost vector `cost` (length width_) as the current objective.
  void set_objective(const std::vector<double>& cost) {
    cost_ = cost;
    reduced_ = cost;
    value_ = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost_[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < width_; ++j) reduced_[j] -= cb * at(i, j);
      value_ += cb * rhs(i);
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    const double p = at(r, c);
    for (std::size_t j = 0; j <= width_; ++j) data_[r * (width_ + 1) + j] /= p;
    at(r, c) = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= width_; ++j) {
        data_[i * (width_ + 1) + j] -= f * data_[r * (width_ + 1) + j];
      }
      at(i, c) = 0.0;
    }
    const double d = reduced_[c];
    if (d != 0.0) {
      for (std::size_t j = 0; j < width_; ++j) reduced_[j] -= d * at(r, j);
      value_ += d * rhs(r);
      reduced_[c] = 0.0;
    }
    basis_[r] = c;
  }

  enum class Outcome { kOptimal, kUnbounded, kIterationLimit };

  /// Bland's rule: lowest-index improving column enters; among tied ratios
  /// the row whose basic variable has the lowest index leaves.
  Outcome run(bool allow_artificials, double opt_tol, long& iterations, long max_iterations,
              std::size_t& unbounded_col) {
    while (true) {
      std::size_t enter = npos;
      for (std::size_t j = 0; j < width_; ++j) {
        if (!allow_artificials && is_artificial(j)) continue;
        if (reduced_[j] > opt_tol) {
          enter = j;
          break;
        }
      }
      if (enter == npos) return Outcome::kOptimal;
      if (iterations >= max_iterations) return Outcome::kIterationLimit;

      std::size_t leave = npos;
      double best = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = at(i, enter);
        if (a <= pivot_tol_) continue;
        const double ratio = std::max(rhs(i), 0.0) / a;
        const double slack = 1e-12 * std::max(1.0, best);
        if (leave == npos || ratio < best - slack) {
          leave = i;
          best = ratio;
        } else if (ratio <= best + slack && basis_[i] < basis_[leave]) {
          leave = i;
          best = std::min(best, ratio);
        }
      }
      if (leave == npos) {
        unbounded_col = enter;
        return Outcome::kUnbounded;
      }
      pivot(leave, enter);
      ++iterations;
    }
  }

  std::size_t rows() const { return m_; }
  std::size_t width() const { return width_; }
  std::size_t structural() const { return n_; }
  std::size_t basis(std::size_t i) const { return basis_[i]; }
  std::size_t identity_col(std::size_t i) const { return identity_col_[i]; }
  double row_sign(std::size_t i) const { return row_sign_[i]; }
  double reduced(std::size_t j) const { return reduced_[j]; }
  double value() const { return value_; }
  std::size_t first_artificial() const { return first_artificial_; }

 private:
  std::size_t m_, n_, width_ = 0, first_artificial_ = 0;
  double pivot_tol_;
  std::vector<double> data_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> slack_col_;
  std::vector<std::size_t> identity_col_;
  std::vector<double> row_sign_;
  std::vector<double> cost_;
  std::vector<double> reduced_;
  double value_ = 0.0;
};

}  // namespace detail

/// Solves the standard-form LP and reports column values and row duals.
inline LpResult solve_standard_lp(const StandardForm& sf, const SolverOptions& options = {}) {
  if (sf.rows.size() != sf.senses.size() || sf.rows.size() != sf.rhs.size() ||
      sf.objective.size() != sf.num_columns) {
    throw ModelError("standard form dimension mismatch");
  }
  LpResult result;
  detail::Tableau tab(sf, options.pivot_tol);
  const std::size_t m = tab.rows();
  const std::size_t width = tab.width();
  const double opt_tol = 1e-9;
  std::size_t ray_col = detail::Tableau::npos;

  // Phase 1: maximize minus the sum of artificials.
  if (tab.first_artificial() < width) {
    std::vector<double> cost(width, 0.0);
    for (std::size_t j = tab.first_artificial(); j < width; ++j) cost[j] = -1.0;
    tab.set_objective(cost);
    const auto outcome = tab.run(true, opt_tol, result.iterations,
                                 options.max_simplex_iterations, ray_col);
    if (outcome == detail::Tableau::Outcome::kIterationLimit) {
      result.status = SolveStatus::kLimitReached;
      return result;
    }
    // Each artificial still positive measures the violation of its own row,
    // judged against that row's scale.
    for (std::size_t i = 0; i < m; ++i) {
      if (!tab.is_artificial(tab.basis(i))) continue;
      for (std::size_t k = 0; k < m; ++k) {
        if (tab.identity_col(k) != tab.basis(i)) continue;
        if (tab.rhs(i) > options.feasibility_tol * std::max(1.0, std::abs(sf.rhs[k]))) {
          result.status = SolveStatus::kInfeasible;
          return result;
        }
      }
    }
    // Drive zero-level artificials out where a non-artificial pivot exists;
    // rows without one are redundant and keep their artificial at zero.
    for (std::size_t i = 0; i < m; ++i) {
      if (!tab.is_artificial(tab.basis(i))) continue;
      for (std::size_t j = 0; j < tab.first_artificial(); ++j) {
        if (std::abs(tab.at(i, j)) > options.pivot_tol) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }

  std::vector<double> cost(width, 0.0);
  for (std::size_t j = 0; j < sf.num_columns; ++j) cost[j] = sf.objective[j];
  tab.set_objective(cost);
  const auto outcome =
      tab.run(false, opt_tol, result.iterations, options.max_simplex_iterations, ray_col);
  if (outcome == detail::Tableau::Outcome::kIterationLimit) {
    result.status = SolveStatus::kLimitReached;
    return result;
  }

  std::vector<double> full(width, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double v = tab.rhs(i);
    if (v < 0.0 && v > -1e-11) v = 0.0;
    full[tab.basis(i)] = v;
  }
  result.columns.assign(full.begin(), full.begin() + static_cast<long>(sf.num_columns));

  if (outcome == detail::Tableau::Outcome::kUnbounded) {
    result.status = SolveStatus::kUnbounded;
    result.ray.assign(sf.num_columns, 0.0);
    if (ray_col < sf.num_columns) result.ray[ray_col] = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t b = tab.basis(i);
      if (b < sf.num_columns) result.ray[b] = -tab.at(i, ray_col);
    }
    return result;
  }

  result.status = SolveStatus::kOptimal;
  result.objective = sf.internal_objective(result.columns);
  result.duals.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    // The identity column of row i has zero phase-2 cost, so its reduced cost
    // is -(c_B B^-1)_i in the sign-normalized system.
    result.duals[i] = -tab.reduced(tab.identity_col(i)) * tab.row_sign(i);
  }
  return result;
}

/// LP solve mapped back to the source model's variables.
inline Solution solve_lp(const StandardForm& sf, const SolverOptions& options = {}) {
  const LpResult lp = solve_standard_lp(sf, options);
  Solution sol;
  sol.status = lp.status;
  sol.stats.simplex_iterations = lp.iterations;
  sol.stats.nodes = 1;
  if (lp.status == SolveStatus::kOptimal) {
    sol.values = sf.recover(lp.columns);
    sol.objective = sf.objective_sign * lp.objective;
  }
  return sol;
}

}  // namespace robustcounter
