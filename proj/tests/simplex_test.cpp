#include <gtest/gtest.h>

#include <random>

#include "robustcounter/simplex.hpp"
#include "test_support.hpp"

using namespace robustcounter;

namespace {

Model two_var_lp() {
  Model m;
  const VarId x = m.add_variable("x", VarKind::kContinuous);
  const VarId y = m.add_variable("y", VarKind::kContinuous);
  m.add_constraint(LinExpr{{x, 1.0}, {y, 1.0}}, Sense::kLe, 4.0);
  m.add_constraint(LinExpr{{x, 1.0}, {y, 3.0}}, Sense::kLe, 6.0);
  m.set_objective(ObjSense::kMax, LinExpr{{x, 3.0}, {y, 2.0}});
  return m;
}

}  // namespace

TEST(Simplex, SingleBound) {
  Model m;
  const VarId x = m.add_variable("x", VarKind::kContinuous);
  m.add_constraint(LinExpr{{x, 1.0}}, Sense::kLe, 5.0);
  m.set_objective(ObjSense::kMax, LinExpr{{x, 1.0}});
  const Solution s = solve_lp(to_standard_form(m));
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.value(x), 5.0, 1e-9);
  EXPECT_NEAR(s.objective, 5.0, 1e-9);
}

// Vertex oracle: the feasible vertices of {x + y <= 4, x + 3y <= 6, x, y >= 0}
// are (0,0), (4,0), (0,2) and (3,1), where 3x + 2y takes 0, 12, 4 and 11.
TEST(Simplex, TwoVariableVertexOptimum) {
  const double vertices[4][2] = {{0, 0}, {4, 0}, {0, 2}, {3, 1}};
  double best = -1.0;
  const double* arg = nullptr;
  for (const auto& v : vertices) {
    ASSERT_LE(v[0] + v[1], 4.0);
    ASSERT_LE(v[0] + 3 * v[1], 6.0);
    if (3 * v[0] + 2 * v[1] > best) {
      best = 3 * v[0] + 2 * v[1];
      arg = v;
    }
  }
  const Solution s = solve_lp(to_standard_form(two_var_lp()));
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.values[0], arg[0], 1e-9);
  EXPECT_NEAR(s.values[1], arg[1], 1e-9);
  EXPECT_NEAR(s.objective, 12.0, 1e-9);
}

TEST(Simplex, CapRowsDoNotMaskInfeasibility) {
  Model m;
  const VarId a = m.add_variable("a", VarKind::kContinuous, 4.0, 1e9);
  m.add_constraint(LinExpr{{a, 2.0}}, Sense::kLe, 7.0);
  EXPECT_EQ(solve_lp(to_standard_form(m)).status, SolveStatus::kInfeasible);
}

TEST(Simplex, Infeasible) {
  Model m;
  const VarId x = m.add_variable("x", VarKind::kContinuous);
  m.add_constraint(LinExpr{{x, 1.0}}, Sense::kLe, -1.0);
  EXPECT_EQ(solve_lp(to_standard_form(m)).status, SolveStatus::kInfeasible);
}

TEST(Simplex, UnboundedWithCertifiedRay) {
  Model m;
  const VarId x = m.add_variable("x", VarKind::kContinuous);
  const VarId y = m.add_variable("y", VarKind::kContinuous);
  m.add_constraint(LinExpr{{x, 1.0}, {y, -1.0}}, Sense::kLe, 2.0);
  m.set_objective(ObjSense::kMax, LinExpr{{x, 1.0}});
  const StandardForm sf = to_standard_form(m);
  const LpResult r = solve_standard_lp(sf);
  ASSERT_EQ(r.status, SolveStatus::kUnbounded);
  ASSERT_EQ(r.ray.size(), sf.num_columns);
  double gain = 0.0;
  for (std::size_t c = 0; c < sf.num_columns; ++c) {
    EXPECT_GE(r.ray[c], -1e-12);
    gain += sf.objective[c] * r.ray[c];
  }
  EXPECT_GT(gain, 0.0);
  for (std::size_t i = 0; i < sf.num_rows(); ++i) {
    double drift = 0.0;
    for (std::size_t c = 0; c < sf.num_columns; ++c) drift += sf.rows[i][c] * r.ray[c];
    EXPECT_LE(drift, 1e-9);
  }
}

TEST(Simplex, EqualityAndMinimization) {
  Model m;
  const VarId x = m.add_variable("x", VarKind::kContinuous);
  const VarId y = m.add_variable("y", VarKind::kContinuous, -kInfinity, kInfinity);
  m.add_constraint(LinExpr{{x, 1.0}, {y, 1.0}}, Sense::kEq, 3.0);
  m.add_constraint(LinExpr{{x, 1.0}}, Sense::kLe, 5.0);
  m.set_objective(ObjSense::kMin, LinExpr{{y, 1.0}});
  const Solution s = solve_lp(to_standard_form(m));
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.value(y), -2.0, 1e-9);
  EXPECT_NEAR(s.objective, -2.0, 1e-9);
}

TEST(Simplex, DegenerateCycleProneInstance) {
  // Beale's classic cycling example; Bland's rule must terminate.
  Model m;
  const VarId x1 = m.add_variable("x1", VarKind::kContinuous);
  const VarId x2 = m.add_variable("x2", VarKind::kContinuous);
  const VarId x3 = m.add_variable("x3", VarKind::kContinuous);
  const VarId x4 = m.add_variable("x4", VarKind::kContinuous);
  m.add_constraint(LinExpr{{x1, 0.25}, {x2, -60.0}, {x3, -0.04}, {x4, 9.0}}, Sense::kLe, 0.0);
  m.add_constraint(LinExpr{{x1, 0.5}, {x2, -90.0}, {x3, -0.02}, {x4, 3.0}}, Sense::kLe, 0.0);
  m.add_constraint(LinExpr{{x3, 1.0}}, Sense::kLe, 1.0);
  m.set_objective(ObjSense::kMax, LinExpr{{x1, 0.75}, {x2, -150.0}, {x3, 0.02}, {x4, -6.0}});
  const Solution s = solve_lp(to_standard_form(m));
  ASSERT_EQ(s.status, SolveStatus::kOptimal);
  EXPECT_NEAR(s.objective, 0.05, 1e-9);
}

// Weak duality: y >= 0 with y^T A >= c certifies c.z <= y^T b, and at the
// optimum the two agree.
TEST(Simplex, DualsCertifyObjective) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 5.0), c(-2.0, 6.0);
  for (int trial = 0; trial < 100; ++trial) {
    Model m;
    std::vector<VarId> x;
    for (int j = 0; j < 4; ++j) x.push_back(m.add_variable("x" + std::to_string(j), VarKind::kContinuous));
    for (int i = 0; i < 3; ++i) {
      LinExpr e;
      for (VarId v : x) e.add(v, u(rng) + 0.1);
      m.add_constraint(e, Sense::kLe, 1.0 + u(rng));
    }
    if (trial % 3 == 0) m.add_constraint(LinExpr{{x[0], 1.0}, {x[1], 1.0}}, Sense::kEq, 0.2);
    LinExpr obj;
    for (VarId v : x) obj.add(v, c(rng));
    m.set_objective(ObjSense::kMax, obj);

    const StandardForm sf = to_standard_form(m);
    const LpResult r = solve_standard_lp(sf);
    ASSERT_EQ(r.status, SolveStatus::kOptimal);
    double dual_value = 0.0;
    for (std::size_t i = 0; i < sf.num_rows(); ++i) {
      if (sf.senses[i] == RowSense::kLe) {
        EXPECT_GE(r.duals[i], -1e-9);
      }
      dual_value += r.duals[i] * sf.rhs[i];
    }
    for (std::size_t col = 0; col < sf.num_columns; ++col) {
      double reduced = 0.0;
      for (std::size_t i = 0; i < sf.num_rows(); ++i) reduced += r.duals[i] * sf.rows[i][col];
      EXPECT_GE(reduced, sf.objective[col] - 1e-9);
    }
    EXPECT_NEAR(dual_value + sf.objective_offset, r.objective, 1e-6);
  }
}

TEST(Simplex, DimensionMismatchRejected) {
  StandardForm sf = to_standard_form(two_var_lp());
  sf.rows[0].pop_back();
  EXPECT_THROW(solve_standard_lp(sf), ModelError);
}
