#pragma once

// Best-bound branch-and-bound over LP relaxations. Branches on the most
// fractional integer variable (lowest index on ties); nodes with equal
// bounds are processed first-in first-out, so runs are fully deterministic.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <queue>
#include <vector>

#include "robustcounter/model.hpp"
#include "robustcounter/simplex.hpp"
#include "robustcounter/solver_options.hpp"
#include "robustcounter/standard_form.hpp"

namespace robustcounter {

struct NodeRecord {
  std::vector<double> lower;
  std::vector<double> upper;
  double parent_bound = kInfinity;  // internal maximization sense
  int depth = 0;
  std::uint64_t sequence = 0;
};

namespace detail {

struct NodeQueueOrder {
  bool operator()(const NodeRecord& a, const NodeRecord& b) const {
    if (a.parent_bound != b.parent_bound) return a.parent_bound < b.parent_bound;
    return a.sequence > b.sequence;
  }
};

inline std::vector<double> round_integers(const Model& model, std::vector<double> values,
                                          double tol) {
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!is_integral_kind(model.variables()[j].kind)) continue;
    const double r = std::round(values[j]);
    if (std::abs(values[j] - r) <= tol) values[j] = r == 0.0 ? 0.0 : r;
  }
  return values;
}

}  // namespace detail

inline Solution solve_milp(const Model& model, const SolverOptions& options = {}) {
  options.validate();
  if (model.has_cone_terms()) {
    throw ModelError("solve_milp requires a cone-free model; use solve_cone");
  }
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = model.num_variables();

  Solution best;
  best.status = SolveStatus::kInfeasible;
  SolveStats& stats = best.stats;

  NodeRecord root;
  root.lower.resize(n);
  root.upper.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Variable& v = model.variables()[j];
    root.lower[j] = v.lower;
    root.upper[j] = v.upper;
    if (is_integral_kind(v.kind)) {
      root.lower[j] = std::ceil(v.lower - options.integrality_tol);
      root.upper[j] = std::floor(v.upper + options.integrality_tol);
      if (root.lower[j] > root.upper[j]) {
        best.message = "integer variable '" + v.name + "' has no integral value in its bounds";
        return best;
      }
    }
  }

  double incumbent = -kInfinity;  // internal maximization sense
  std::vector<double> incumbent_values;
  std::priority_queue<NodeRecord, std::vector<NodeRecord>, detail::NodeQueueOrder> open;
  std::uint64_t sequence = 0;
  bool capped = false;
  open.push(root);

  auto finish = [&](SolveStatus status) {
    best.status = status;
    stats.integer_bounds_capped = capped;
    if (!incumbent_values.empty()) {
      best.values = detail::round_integers(model, incumbent_values, options.integrality_tol);
      best.objective = evaluate_objective(model, best.values);
    }
    return best;
  };

  while (!open.empty()) {
    NodeRecord node = open.top();
    open.pop();
    stats.bound_trace.push_back(node.parent_bound);
    if (node.parent_bound <= incumbent + 1e-9 * std::max(1.0, std::abs(incumbent))) {
      // Best-first: every remaining node is bounded by this one.
      break;
    }
    if (stats.nodes >= options.max_nodes) {
      best.message = "node limit reached";
      return finish(SolveStatus::kLimitReached);
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > options.time_limit_seconds) {
      best.message = "time limit reached";
      return finish(SolveStatus::kLimitReached);
    }

    const StandardForm sf = to_standard_form(model, node.lower, node.upper);
    const LpResult lp = solve_standard_lp(sf, options);
    ++stats.nodes;
    stats.simplex_iterations += lp.iterations;

    if (lp.status == SolveStatus::kInfeasible) continue;
    if (lp.status == SolveStatus::kLimitReached) {
      best.message = "simplex iteration limit reached";
      return finish(SolveStatus::kLimitReached);
    }
    if (lp.status == SolveStatus::kUnbounded) {
      if (stats.nodes == 1) {
        best.message = "LP relaxation unbounded";
        return finish(SolveStatus::kUnbounded);
      }
      continue;
    }

    if (stats.nodes == 1) {
      // Root relaxation is bounded; clamp unbounded integer domains so that
      // branching always works on finite intervals.
      for (std::size_t j = 0; j < n; ++j) {
        if (!is_integral_kind(model.variables()[j].kind)) continue;
        if (!std::isfinite(node.lower[j]) || !std::isfinite(node.upper[j])) capped = true;
      }
    }

    const double bound = lp.objective;
    if (bound <= incumbent + 1e-9 * std::max(1.0, std::abs(incumbent))) continue;

    const std::vector<double> x = sf.recover(lp.columns);
    std::size_t branch_var = n;
    double best_frac = options.integrality_tol;
    for (std::size_t j = 0; j < n; ++j) {
      if (!is_integral_kind(model.variables()[j].kind)) continue;
      const double frac = std::abs(x[j] - std::round(x[j]));
      if (frac > best_frac) {
        best_frac = frac;
        branch_var = j;
      }
    }

    if (branch_var == n) {
      incumbent = bound;
      incumbent_values = x;
      continue;
    }

    ++stats.branches;
    const double v = x[branch_var];
    NodeRecord down = node;
    NodeRecord up = node;
    if (capped) {
      for (NodeRecord* child : {&down, &up}) {
        for (std::size_t j = 0; j < n; ++j) {
          if (!is_integral_kind(model.variables()[j].kind)) continue;
          child->lower[j] = std::max(child->lower[j], -options.integer_bound_cap);
          child->upper[j] = std::min(child->upper[j], options.integer_bound_cap);
        }
      }
    }
    down.upper[branch_var] = std::floor(v);
    up.lower[branch_var] = std::ceil(v);
    for (NodeRecord* child : {&down, &up}) {
      child->parent_bound = bound;
      child->depth = node.depth + 1;
      child->sequence = ++sequence;
      if (child->lower[branch_var] <= child->upper[branch_var]) open.push(*child);
    }
  }

  if (incumbent_values.empty()) return finish(SolveStatus::kInfeasible);
  return finish(SolveStatus::kOptimal);
}

}  // namespace robustcounter
