#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "robustcounter/robustify.hpp"
#include "robustcounter/sitesel.hpp"
#include "robustcounter/validate.hpp"
#include "test_support.hpp"

using namespace robustcounter;

namespace {

struct SingleRow {
  Model model;
  VarId x;
  ConstraintId c;
  UncertainSet set;
};

SingleRow single_row(bool rhs_uncertain = true) {
  SingleRow s;
  s.x = s.model.add_variable("x", VarKind::kContinuous);
  s.c = s.model.add_constraint(LinExpr{{s.x, 1.0}}, Sense::kLe, 10.0, "c");
  s.model.set_objective(ObjSense::kMax, LinExpr{{s.x, 1.0}});
  s.set.add_coefficient(s.c, s.x);
  if (rhs_uncertain) s.set.add_rhs(s.c);
  return s;
}

// max x1 + x2 + x3 with 2 x1 + 3 x2 + 1.5 x3 <= 12 and x_j <= 3.
struct ThreeCoefficients {
  Model model;
  UncertainSet set;
};

ThreeCoefficients three_coefficients() {
  ThreeCoefficients t;
  std::vector<VarId> x;
  for (int j = 0; j < 3; ++j) {
    x.push_back(t.model.add_variable("x" + std::to_string(j), VarKind::kContinuous, 0.0, 3.0));
  }
  const ConstraintId c = t.model.add_constraint(
      LinExpr{{x[0], 2.0}, {x[1], 3.0}, {x[2], 1.5}}, Sense::kLe, 12.0, "cap");
  t.model.set_objective(ObjSense::kMax, LinExpr{{x[0], 1.0}, {x[1], 1.0}, {x[2], 1.0}});
  for (VarId v : x) t.set.add_coefficient(c, v);
  return t;
}

std::vector<double> first(const Solution& s, std::size_t n) {
  return {s.values.begin(), s.values.begin() + static_cast<std::ptrdiff_t>(n)};
}

}  // namespace

TEST(CornerCheck, IntervalOptimumIsCertified) {
  SingleRow s = single_row();
  const std::vector<double> x{9.0 / 1.1};
  const CornerReport r = corner_check(s.model, s.set, x, 0.1, 0.0);
  EXPECT_EQ(r.corners_checked, 4u);
  EXPECT_TRUE(r.certified);
  EXPECT_NEAR(r.worst_violation[0], 0.0, 1e-12);
}

TEST(CornerCheck, NominalOptimumFails) {
  SingleRow s = single_row();
  const std::vector<double> x{10.0};
  const CornerReport r = corner_check(s.model, s.set, x, 0.1, 0.0);
  EXPECT_FALSE(r.certified);
  EXPECT_NEAR(r.worst_violation[0], 2.0, 1e-12);
  // A tolerance of 0.2 * max(1, 10) = 2 admits it.
  EXPECT_TRUE(corner_check(s.model, s.set, x, 0.1, 0.2).certified);
}

TEST(CornerCheck, NoEntriesReducesToFeasibility) {
  Model m;
  const VarId x = m.add_variable("x", VarKind::kContinuous);
  m.add_constraint(LinExpr{{x, 1.0}}, Sense::kLe, 4.0);
  m.add_constraint(LinExpr{{x, 1.0}}, Sense::kGe, 1.0);
  const UncertainSet none;
  const CornerReport ok = corner_check(m, none, std::vector<double>{2.0}, 0.3, 0.5);
  EXPECT_EQ(ok.corners_checked, 1u);
  EXPECT_TRUE(ok.certified);
  EXPECT_FALSE(corner_check(m, none, std::vector<double>{5.0}, 0.3, 0.5).certified);
  EXPECT_FALSE(corner_check(m, none, std::vector<double>{0.5}, 0.3, 0.5).certified);
}

TEST(CornerCheck, RejectsLargeOrUnboundedSets) {
  Model m;
  std::vector<VarId> x;
  LinExpr e;
  for (int j = 0; j < 21; ++j) {
    x.push_back(m.add_variable("x" + std::to_string(j), VarKind::kContinuous));
    e.add(x.back(), 1.0);
  }
  const ConstraintId c = m.add_constraint(e, Sense::kLe, 1.0);
  UncertainSet big;
  for (VarId v : x) big.add_coefficient(c, v);
  const std::vector<double> zero(21, 0.0);
  EXPECT_THROW(corner_check(m, big, zero, 0.1, 0.0), ModelError);
  UncertainSet normal;
  normal.add_coefficient(c, x[0], Normal{0.0, 1.0});
  EXPECT_THROW(corner_check(m, normal, zero, 0.1, 0.0), ModelError);
}

TEST(CornerCheck, MatchesIndependentCornerOracle) {
  std::mt19937_64 rng(81);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = rc_test::random_robust_instance(rng, 6, 4, 12);
    const Model m = rc_test::robust_instance_model(inst);
    const UncertainSet set = rc_test::robust_instance_set(inst);
    std::uniform_int_distribution<int> val(inst.lo, inst.hi);
    std::vector<double> x(m.num_variables());
    for (double& v : x) v = val(rng);
    const double eps = 0.15, delta = 0.05;
    const CornerReport r = corner_check(m, set, x, eps, delta);
    EXPECT_EQ(r.corners_checked, std::uint64_t{1} << set.size());
    bool certified = rc_test::dense_feasible(inst.base, x);
    for (std::size_t i = 0; i < inst.base.rows.size(); ++i) {
      const double excess = rc_test::worst_corner_excess(inst, i, x, eps);
      EXPECT_NEAR(r.worst_violation[i], std::max(0.0, excess), 1e-9);
      if (excess > delta * std::max(1.0, std::abs(inst.base.rhs[i])) + 1e-9) certified = false;
    }
    EXPECT_EQ(r.certified, certified) << "trial " << trial;
  }
}

TEST(CornerCheck, ExplicitRangesUseEndpoints) {
  Model m;
  const VarId x = m.add_variable("x", VarKind::kContinuous);
  const ConstraintId c = m.add_constraint(LinExpr{{x, 2.0}}, Sense::kLe, 10.0);
  UncertainSet set;
  set.add_coefficient(c, x, BoundedRange{1.5, 2.5});
  set.add_rhs(c, Bounded{0.1});
  const CornerReport r = corner_check(m, set, std::vector<double>{4.0}, 0.0, 0.0);
  EXPECT_NEAR(r.worst_violation[0], 2.5 * 4.0 - 9.0, 1e-12);
}

TEST(MonteCarlo, SingleUniformCoefficientMatchesClosedForm) {
  // a~ = 1 + 0.1 xi with xi ~ U[-1, 1]; at x = 10 the row 10 a~ <= 10.5
  // fails exactly when xi > 0.5, with probability 0.25.
  SingleRow s = single_row(false);
  Model& m = s.model;
  m = Model();
  s.x = m.add_variable("x", VarKind::kContinuous);
  s.c = m.add_constraint(LinExpr{{s.x, 1.0}}, Sense::kLe, 10.5, "c");
  UncertainSet set;
  set.add_coefficient(s.c, s.x);
  const MonteCarloReport r = monte_carlo_check(m, set, std::vector<double>{10.0}, 0.1, 0.0,
                                               100000, 7);
  EXPECT_NEAR(r.worst.frequency, 0.25, r.worst.ci_half_width);
  EXPECT_EQ(r.any.violations, r.worst.violations);
  EXPECT_NEAR(r.worst.ci_half_width, 3.0 * std::sqrt(r.worst.frequency *
                                                     (1 - r.worst.frequency) / 100000.0),
              1e-15);
}

TEST(MonteCarlo, NormalPerturbationMatchesClosedForm) {
  // a~ = 1 + 0.1 |1| xi with xi ~ N(0, 1): 10 a~ > 11 iff xi > 1.
  Model m;
  const VarId x = m.add_variable("x", VarKind::kContinuous);
  const ConstraintId c = m.add_constraint(LinExpr{{x, 1.0}}, Sense::kLe, 11.0);
  UncertainSet set;
  set.add_coefficient(c, x, Normal{0.0, 1.0});
  const MonteCarloReport r = monte_carlo_check(m, set, std::vector<double>{10.0}, 0.1, 0.0,
                                               100000, 9);
  EXPECT_NEAR(r.worst.frequency, 1.0 - normal_cdf(1.0), r.worst.ci_half_width);
}

TEST(MonteCarlo, SymmetricOptimumRespectsReliability) {
  ThreeCoefficients t = three_coefficients();
  const double kappa = 0.05, eps = 0.2;
  const Solution rc = solve(symmetric_robust_counterpart(t.model, t.set, eps, 0.0, kappa).model);
  ASSERT_EQ(rc.status, SolveStatus::kOptimal);
  const MonteCarloReport r =
      monte_carlo_check(t.model, t.set, first(rc, 3), eps, 0.0, 100000, 11);
  EXPECT_LE(r.worst.frequency, kappa + 3.0 * std::sqrt(kappa * (1 - kappa) / 100000.0));

  const Solution nominal = solve(t.model);
  ASSERT_EQ(nominal.status, SolveStatus::kOptimal);
  const MonteCarloReport n =
      monte_carlo_check(t.model, t.set, first(nominal, 3), eps, 0.0, 100000, 11);
  EXPECT_GT(n.worst.frequency, kappa);
}

TEST(MonteCarlo, ZeroEpsilonNeverViolates) {
  ThreeCoefficients t = three_coefficients();
  const Solution nominal = solve(t.model);
  const MonteCarloReport r =
      monte_carlo_check(t.model, t.set, first(nominal, 3), 0.0, 0.0, 5000, 3);
  EXPECT_EQ(r.any.violations, 0u);
}

TEST(MonteCarlo, DeterministicAndStreamsIndependent) {
  ThreeCoefficients t = three_coefficients();
  const std::vector<double> x{2.0, 1.5, 2.0};
  const MonteCarloReport a = monte_carlo_check(t.model, t.set, x, 0.2, 0.0, 20000, 42);
  const MonteCarloReport b = monte_carlo_check(t.model, t.set, x, 0.2, 0.0, 20000, 42);
  EXPECT_EQ(a.worst.violations, b.worst.violations);
  EXPECT_EQ(a.worst.frequency, b.worst.frequency);
  EXPECT_EQ(a.worst.seed, 42u);
  const MonteCarloReport c = monte_carlo_check(t.model, t.set, x, 0.2, 0.0, 20000, 43);
  EXPECT_NE(a.worst.violations, c.worst.violations);

  // Adding an entry on a second row leaves the first row's draws untouched.
  Model m2 = t.model;
  const ConstraintId extra =
      m2.add_constraint(LinExpr{{VarId{0}, 1.0}}, Sense::kLe, 2.1, "extra");
  UncertainSet s2 = t.set;
  s2.add_coefficient(extra, VarId{0}, Uniform{});
  const MonteCarloReport d = monte_carlo_check(m2, s2, x, 0.2, 0.0, 20000, 42);
  EXPECT_EQ(d.per_constraint.at(ConstraintId{0}).violations, a.worst.violations);
  EXPECT_GT(d.per_constraint.at(extra).violations, 0u);
}

TEST(MonteCarlo, RejectsTooFewSamples) {
  ThreeCoefficients t = three_coefficients();
  EXPECT_THROW(monte_carlo_check(t.model, t.set, std::vector<double>{0, 0, 0}, 0.1, 0.0, 999, 1),
               ModelError);
}

TEST(Grid, ParsesRangesAndLists) {
  const auto g = parse_grid("eps=0:0.05:0.2 delta=0,0.1 kappa=1,0.14");
  ASSERT_EQ(g.size(), 5u * 2u * 2u);
  EXPECT_EQ(g[0].epsilon, 0.0);
  EXPECT_EQ(g[0].kappa, 1.0);
  EXPECT_EQ(g[1].kappa, 0.14);
  EXPECT_EQ(g[2].delta, 0.1);
  EXPECT_EQ(g[12].epsilon, 0.15);
  EXPECT_EQ(g.back().epsilon, 0.2);
  const auto only = parse_grid("delta=0.3");
  ASSERT_EQ(only.size(), 1u);
  EXPECT_EQ(only[0].epsilon, 0.0);
  EXPECT_EQ(only[0].kappa, 1.0);
}

TEST(Grid, RejectsMalformedSpecs) {
  for (const char* bad : {"", "   ", "eps", "eps=", "eps=0,,1", "eps=a", "eps=0:0:1",
                          "eps=1:0.1:0", "gamma=1", "eps=0 eps=1", "kappa=0", "eps=-0.1",
                          "eps=0:0.1"}) {
    EXPECT_THROW(parse_grid(bad), GridError) << bad;
  }
}

TEST(Sweep, SiteSelectionFixtureIsMonotoneInEpsilon) {
  const auto inst = load_instance(std::string(RC_DATA_DIR) + "/sitesel_demo");
  const auto rows = sweep(
      [&](const GridPoint& p) { return build_irc(inst, p.epsilon, p.delta).model; },
      parse_grid("eps=0,0.05,0.1"));
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    ASSERT_TRUE(rows[k].objective) << rows[k].status;
    EXPECT_EQ(*rows[k].nominal_objective, *rows[0].objective);
    if (k > 0) {
      EXPECT_LE(*rows[k].objective, *rows[k - 1].objective + 1e-7);
    }
  }
  EXPECT_EQ(*rows[0].relative_gap, 0.0);
}

TEST(Sweep, InfeasibleCellsAreRecorded) {
  SingleRow s = single_row();
  // Force x >= 9.5: eps = 0.1 leaves x <= 9/1.1 and is infeasible.
  s.model.add_constraint(LinExpr{{s.x, 1.0}}, Sense::kGe, 9.5, "floor");
  const auto rows = sweep(
      [&](const GridPoint& p) {
        return interval_robust_counterpart(s.model, s.set, p.epsilon, p.delta).model;
      },
      parse_grid("eps=0,0.1,0"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].status, "optimal");
  EXPECT_EQ(rows[1].status, "infeasible");
  EXPECT_FALSE(rows[1].objective);
  EXPECT_EQ(rows[2].status, "optimal");
  const auto err = sweep([](const GridPoint&) -> Model { throw ModelError("boom"); },
                         parse_grid("eps=0"));
  EXPECT_EQ(err[0].status, "error");
  EXPECT_EQ(err[0].message, "boom");
}

TEST(Sweep, ParallelMatchesSerialAndCsvLayout) {
  const auto inst = load_instance(std::string(RC_DATA_DIR) + "/sitesel_demo");
  const auto grid = parse_grid("eps=0:0.1:0.2 kappa=1,0.14");
  auto builder = [&](const GridPoint& p) {
    return build_rc(inst, p.epsilon, p.delta, p.kappa).model;
  };
  const auto serial = sweep(builder, grid, {}, 1);
  const auto parallel = sweep(builder, grid, {}, 4);
  std::ostringstream a, b;
  write_sweep_csv(a, serial);
  write_sweep_csv(b, parallel);
  EXPECT_EQ(a.str(), b.str());
  std::istringstream lines(a.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "epsilon,delta,kappa,status,objective,nominal_objective,relative_gap");
  int data = 0;
  while (std::getline(lines, line)) ++data;
  EXPECT_EQ(data, 6);
  EXPECT_NE(a.str().find("\n0.1,0,0.14,"), std::string::npos);
}
