#pragma once

#include <string>

#include "robustcounter/model.hpp"

namespace robustcounter {

enum class Branching { kMostFractional };
enum class NodeOrder { kBestBound };

struct SolverOptions {
  double feasibility_tol = kFeasibilityTol;
  double integrality_tol = kIntegralityTol;
  double cone_cut_tol = 1e-6;  // relative to max(1, |rhs|) of the cone row
  double pivot_tol = 1e-9;
  long max_simplex_iterations = 200000;
  long max_nodes = 200000;
  int max_cone_rounds = 200;
  double time_limit_seconds = 3600.0;
  // Integer variables without finite bounds are clamped here for branching.
  double integer_bound_cap = 1e9;
  Branching branching = Branching::kMostFractional;
  NodeOrder node_order = NodeOrder::kBestBound;

  void validate() const {
    if (!(feasibility_tol > 0) || !(integrality_tol > 0) || !(cone_cut_tol > 0) ||
        !(pivot_tol > 0)) {
      throw ModelError("solver tolerances must be positive");
    }
    if (max_nodes <= 0 || max_cone_rounds <= 0 || max_simplex_iterations <= 0) {
      throw ModelError("solver limits must be positive");
    }
  }
};

}  // namespace robustcounter
