#pragma once

// Outer approximation of square-root cone rows
//     lhs + s * sqrt(sum_k (c_k v_k)^2 + k0) <= rhs
// by supporting hyperplanes of the convex radical, generated lazily at
// integer-feasible incumbents of the linear master problem.

#include <cmath>
#include <string>
#include <vector>

#include "robustcounter/milp.hpp"
#include "robustcounter/model.hpp"
#include "robustcounter/solver_options.hpp"

namespace robustcounter {

/// Linear cut valid for every point satisfying the cone row: the radical is
/// replaced by its tangent at `at`,
///     sqrt(sum (c v)^2 + k0) >= (sum c^2 vhat v + k0) / sqrt(sum (c vhat)^2 + k0).
/// Returns nullopt when the radical vanishes at `at` (no gradient there).
inline std::optional<std::pair<LinExpr, double>> cone_cut(const Constraint& con,
                                                          std::span<const double> at) {
  const ConeTerm& cone = *con.cone;
  const double radical = cone.radical(at);
  if (radical <= 1e-12) return std::nullopt;
  LinExpr lhs = con.lhs;
  const double s = cone.scale / radical;
  for (const Term& c : cone.components) {
    lhs.add(c.var, s * c.coef * c.coef * at[c.var.value]);
  }
  return std::make_pair(std::move(lhs), con.rhs - s * cone.constant_inside);
}

namespace detail {

// Working master: every cone row is replaced by its linearization at the
// origin of the radical, lhs + s*sqrt(k0) <= rhs, which is valid because the
// radical is never below sqrt(k0).
inline Model cone_master(const Model& model) {
  Model master;
  for (const Variable& v : model.variables()) {
    master.add_variable(v.name, v.kind, v.lower, v.upper);
  }
  for (const Constraint& con : model.constraints()) {
    if (!con.cone) {
      master.add_constraint(con.lhs, con.sense, con.rhs, con.label);
      continue;
    }
    const double floor_value = con.cone->scale * std::sqrt(con.cone->constant_inside);
    master.add_constraint(con.lhs, Sense::kLe, con.rhs - floor_value, con.label);
  }
  master.set_objective(model.objective().sense, model.objective().expr);
  return master;
}

struct SeedCut {
  LinExpr lhs;
  double rhs;
  std::string row;
};

// With the integer part of `incumbent` held fixed, the remaining problem is a
// continuous one; cutting it to convergence with cheap LP solves yields the
// tangents the master needs at that assignment.
inline std::vector<SeedCut> fixed_assignment_cuts(const Model& model, const Model& master,
                                                  std::span<const double> incumbent,
                                                  const SolverOptions& options) {
  constexpr int kRounds = 50;
  Model lp;
  for (const Variable& v : master.variables()) {
    if (v.kind == VarKind::kContinuous) {
      lp.add_variable(v.name, VarKind::kContinuous, v.lower, v.upper);
    } else {
      const double fixed = std::round(incumbent[lp.num_variables()]);
      lp.add_variable(v.name, VarKind::kContinuous, fixed, fixed);
    }
  }
  for (const Constraint& con : master.constraints()) {
    lp.add_constraint(con.lhs, con.sense, con.rhs, con.label);
  }
  lp.set_objective(master.objective().sense, master.objective().expr);

  std::vector<SeedCut> found;
  for (int round = 0; round < kRounds; ++round) {
    const Solution sol = solve_milp(lp, options);
    if (sol.status != SolveStatus::kOptimal) break;
    std::size_t added = 0;
    for (const Constraint& con : model.constraints()) {
      if (!con.cone || con.cone->scale == 0.0) continue;
      const double violation = constraint_residual(con, sol.values);
      if (violation <= options.cone_cut_tol * std::max(1.0, std::abs(con.rhs))) continue;
      if (auto cut = cone_cut(con, sol.values)) {
        lp.add_constraint(cut->first, Sense::kLe, cut->second);
        found.push_back({std::move(cut->first), cut->second, con.label});
        ++added;
      }
    }
    if (added == 0) break;
  }
  return found;
}

}  // namespace detail

inline Solution solve_cone(const Model& model, const SolverOptions& options = {}) {
  options.validate();
  Model master = detail::cone_master(model);
  SolveStats totals;
  long cut_serial = 0;

  for (int round = 0;; ++round) {
    Solution sol = solve_milp(master, options);
    totals.simplex_iterations += sol.stats.simplex_iterations;
    totals.nodes += sol.stats.nodes;
    totals.branches += sol.stats.branches;
    totals.integer_bounds_capped |= sol.stats.integer_bounds_capped;
    totals.cone_rounds = round + 1;
    totals.bound_trace = sol.stats.bound_trace;

    auto finish = [&](Solution s) {
      s.stats = totals;
      return s;
    };
    if (sol.status != SolveStatus::kOptimal) {
      // An infeasible master proves infeasibility of the cone model.
      return finish(std::move(sol));
    }

    double worst = 0.0;
    std::vector<std::pair<LinExpr, double>> cuts;
    std::vector<std::string> labels;
    for (const Constraint& con : model.constraints()) {
      if (!con.cone || con.cone->scale == 0.0) continue;
      const double violation = constraint_residual(con, sol.values);
      worst = std::max(worst, violation);
      if (violation <= options.cone_cut_tol * std::max(1.0, std::abs(con.rhs))) continue;
      if (auto cut = cone_cut(con, sol.values)) {
        cuts.push_back(std::move(*cut));
        labels.push_back(con.label + "__cut" + std::to_string(++cut_serial));
      }
    }
    totals.max_cone_violation = worst;
    if (cuts.empty()) return finish(std::move(sol));
    if (round + 1 >= options.max_cone_rounds) {
      sol.status = SolveStatus::kLimitReached;
      sol.message = "cone rounds exhausted; max cone violation " + std::to_string(worst);
      return finish(std::move(sol));
    }
    for (std::size_t k = 0; k < cuts.size(); ++k) {
      master.add_constraint(std::move(cuts[k].first), Sense::kLe, cuts[k].second, labels[k]);
      ++totals.cone_cuts;
    }
    if (master.has_integer_variables()) {
      for (auto& cut : detail::fixed_assignment_cuts(model, master, sol.values, options)) {
        master.add_constraint(std::move(cut.lhs), Sense::kLe, cut.rhs,
                              cut.row + "__cut" + std::to_string(++cut_serial));
        ++totals.cone_cuts;
      }
    }
  }
}

/// Dispatches to the cone solver when the model carries cone terms.
inline Solution solve(const Model& model, const SolverOptions& options = {}) {
  return model.has_cone_terms() ? solve_cone(model, options) : solve_milp(model, options);
}

}  // namespace robustcounter
