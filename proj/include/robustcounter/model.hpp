#pragma once

// Algebraic carrier for (mixed-integer) linear programs with optional
// square-root cone terms. Nominal models and their robust counterparts share
// this one type.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace robustcounter {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kFeasibilityTol = 1e-7;
inline constexpr double kIntegralityTol = 1e-6;

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct VarId {
  std::size_t value = 0;
  friend auto operator<=>(VarId, VarId) = default;
};

struct ConstraintId {
  std::size_t value = 0;
  friend auto operator<=>(ConstraintId, ConstraintId) = default;
};

enum class VarKind { kContinuous, kBinary, kInteger };
enum class Sense { kLe, kGe, kEq };
enum class ObjSense { kMax, kMin };

inline bool is_integral_kind(VarKind kind) { return kind != VarKind::kContinuous; }

inline std::string_view to_string(VarKind kind) {
  switch (kind) {
    case VarKind::kContinuous: return "continuous";
    case VarKind::kBinary: return "binary";
    case VarKind::kInteger: return "integer";
  }
  return "?";
}

inline std::string_view to_string(Sense sense) {
  switch (sense) {
    case Sense::kLe: return "<=";
    case Sense::kGe: return ">=";
    case Sense::kEq: return "=";
  }
  return "?";
}

struct Variable {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lower = 0.0;
  double upper = kInfinity;
};

struct Term {
  VarId var;
  double coef = 0.0;
};

/// Linear expression with merged, id-sorted terms plus a constant.
class LinExpr {
 public:
  LinExpr() = default;
  explicit LinExpr(double constant) : constant_(constant) {}
  LinExpr(std::initializer_list<Term> terms, double constant = 0.0)
      : LinExpr(from_terms(std::vector<Term>(terms), constant)) {}

  /// Canonicalizes an arbitrary term list. Terms are summed per variable in
  /// (id, coefficient) order, so any permutation of the input produces
  /// bit-identical coefficients.
  static LinExpr from_terms(std::vector<Term> terms, double constant = 0.0) {
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) {
      if (a.var != b.var) return a.var < b.var;
      return a.coef < b.coef;
    });
    LinExpr out(constant);
    for (const Term& t : terms) {
      if (!out.terms_.empty() && out.terms_.back().var == t.var) {
        out.terms_.back().coef += t.coef;
      } else {
        out.terms_.push_back(t);
      }
    }
    std::erase_if(out.terms_, [](const Term& t) { return t.coef == 0.0; });
    return out;
  }

  LinExpr& add(VarId var, double coef) {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), var,
                               [](const Term& t, VarId v) { return t.var < v; });
    if (it != terms_.end() && it->var == var) {
      it->coef += coef;
      if (it->coef == 0.0) terms_.erase(it);
    } else if (coef != 0.0) {
      terms_.insert(it, Term{var, coef});
    }
    return *this;
  }

  LinExpr& add(const LinExpr& other, double scale = 1.0) {
    for (const Term& t : other.terms_) add(t.var, scale * t.coef);
    constant_ += scale * other.constant_;
    return *this;
  }

  LinExpr& add_constant(double value) {
    constant_ += value;
    return *this;
  }

  std::span<const Term> terms() const { return terms_; }
  double constant() const { return constant_; }
  bool empty() const { return terms_.empty(); }

  double coefficient(VarId var) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), var,
                               [](const Term& t, VarId v) { return t.var < v; });
    return (it != terms_.end() && it->var == var) ? it->coef : 0.0;
  }

  double evaluate(std::span<const double> values) const {
    double sum = constant_;
    for (const Term& t : terms_) sum += t.coef * values[t.var.value];
    return sum;
  }

 private:
  std::vector<Term> terms_;
  double constant_ = 0.0;
};

/// scale * sqrt(sum_k (coef_k * value_k)^2 + constant_inside).
/// Components are deliberately not merged: (a v)^2 + (b v)^2 != ((a+b) v)^2.
struct ConeTerm {
  double scale = 0.0;
  std::vector<Term> components;
  double constant_inside = 0.0;

  double radical(std::span<const double> values) const {
    double sum = constant_inside;
    for (const Term& c : components) {
      const double w = c.coef * values[c.var.value];
      sum += w * w;
    }
    return std::sqrt(sum);
  }

  double evaluate(std::span<const double> values) const {
    return scale == 0.0 ? 0.0 : scale * radical(values);
  }
};

struct Constraint {
  LinExpr lhs;
  std::optional<ConeTerm> cone;
  Sense sense = Sense::kLe;
  double rhs = 0.0;
  std::string label;
};

struct Objective {
  ObjSense sense = ObjSense::kMax;
  LinExpr expr;
};

/// Names usable in the text format: no whitespace or separator characters,
/// and not starting like a number.
inline bool is_valid_name(std::string_view name) {
  if (name.empty()) return false;
  const char first = name.front();
  if ((first >= '0' && first <= '9') || first == '-' || first == '+' || first == '.') {
    return false;
  }
  for (char c : name) {
    if (c <= ' ' || c == '*' || c == ':' || c == ';' || c == ',' || c == '(' ||
        c == ')' || c == '+' || c == '<' || c == '>' || c == '=' || c == '%' ||
        c == '#') {
      return false;
    }
  }
  return !name.starts_with("inf");
}

class Model {
 public:
  VarId add_variable(std::string name, VarKind kind, double lower = 0.0,
                     double upper = kInfinity) {
    if (!is_valid_name(name)) {
      throw ModelError("invalid variable name '" + name + "'");
    }
    if (var_index_.contains(name)) {
      throw ModelError("duplicate variable name '" + name + "'");
    }
    if (kind == VarKind::kBinary) {
      lower = 0.0;
      upper = 1.0;
    }
    if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
      throw ModelError("variable '" + name + "': lower bound " + std::to_string(lower) +
                       " exceeds upper bound " + std::to_string(upper));
    }
    const VarId id{variables_.size()};
    var_index_.emplace(name, id.value);
    variables_.push_back(Variable{std::move(name), kind, lower, upper});
    return id;
  }

  ConstraintId add_constraint(LinExpr lhs, Sense sense, double rhs, std::string label = {},
                              std::optional<ConeTerm> cone = std::nullopt) {
    check_expr(lhs);
    if (cone) {
      if (sense != Sense::kLe) {
        throw ModelError("cone term only permitted on <= constraints");
      }
      if (!(cone->scale >= 0.0) || !(cone->constant_inside >= 0.0)) {
        throw ModelError("cone scale and constant must be nonnegative");
      }
      for (const Term& c : cone->components) check_var(c.var);
    }
    if (!std::isfinite(rhs)) throw ModelError("constraint rhs must be finite");
    if (label.empty()) label = "c" + std::to_string(constraints_.size());
    if (!is_valid_name(label)) throw ModelError("invalid constraint label '" + label + "'");
    if (con_index_.contains(label)) {
      throw ModelError("duplicate constraint label '" + label + "'");
    }
    const ConstraintId id{constraints_.size()};
    con_index_.emplace(label, id.value);
    constraints_.push_back(
        Constraint{std::move(lhs), std::move(cone), sense, rhs, std::move(label)});
    return id;
  }

  void set_objective(ObjSense sense, LinExpr expr) {
    check_expr(expr);
    objective_ = Objective{sense, std::move(expr)};
  }

  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_constraints() const { return constraints_.size(); }
  std::span<const Variable> variables() const { return variables_; }
  std::span<const Constraint> constraints() const { return constraints_; }
  const Variable& variable(VarId id) const { return variables_.at(id.value); }
  const Constraint& constraint(ConstraintId id) const { return constraints_.at(id.value); }
  const Objective& objective() const { return objective_; }

  std::optional<VarId> find_variable(std::string_view name) const {
    auto it = var_index_.find(std::string(name));
    if (it == var_index_.end()) return std::nullopt;
    return VarId{it->second};
  }

  std::optional<ConstraintId> find_constraint(std::string_view label) const {
    auto it = con_index_.find(std::string(label));
    if (it == con_index_.end()) return std::nullopt;
    return ConstraintId{it->second};
  }

  bool has_cone_terms() const {
    return std::any_of(constraints_.begin(), constraints_.end(),
                       [](const Constraint& c) { return c.cone.has_value(); });
  }

  bool has_integer_variables() const {
    return std::any_of(variables_.begin(), variables_.end(),
                       [](const Variable& v) { return is_integral_kind(v.kind); });
  }

 private:
  void check_var(VarId id) const {
    if (id.value >= variables_.size()) {
      throw ModelError("unknown variable id " + std::to_string(id.value));
    }
  }
  void check_expr(const LinExpr& expr) const {
    for (const Term& t : expr.terms()) check_var(t.var);
    if (!std::isfinite(expr.constant())) throw ModelError("non-finite constant");
  }

  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  Objective objective_;
  std::unordered_map<std::string, std::size_t> var_index_;
  std::unordered_map<std::string, std::size_t> con_index_;
};

/// Full left-hand side value including the cone contribution.
inline double constraint_activity(const Constraint& con, std::span<const double> values) {
  double lhs = con.lhs.evaluate(values);
  if (con.cone) lhs += con.cone->evaluate(values);
  return lhs;
}

/// Residual <= 0 means satisfied: lhs - rhs for <=, rhs - lhs for >=,
/// |lhs - rhs| for equality rows.
inline double constraint_residual(const Constraint& con, std::span<const double> values) {
  const double lhs = constraint_activity(con, values);
  switch (con.sense) {
    case Sense::kLe: return lhs - con.rhs;
    case Sense::kGe: return con.rhs - lhs;
    case Sense::kEq: return std::abs(lhs - con.rhs);
  }
  return 0.0;
}

inline double evaluate_constraint(const Model& model, std::span<const double> values,
                                  ConstraintId id) {
  const Constraint& con = model.constraint(id);
  auto require = [&](VarId v) {
    if (v.value >= values.size() || std::isnan(values[v.value])) {
      throw ModelError("no value supplied for variable '" + model.variable(v).name + "'");
    }
  };
  for (const Term& t : con.lhs.terms()) require(t.var);
  if (con.cone) {
    for (const Term& c : con.cone->components) require(c.var);
  }
  return constraint_residual(con, values);
}

inline double evaluate_objective(const Model& model, std::span<const double> values) {
  return model.objective().expr.evaluate(values);
}

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kLimitReached };

inline std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kLimitReached: return "limit_reached";
  }
  return "?";
}

struct SolveStats {
  long simplex_iterations = 0;
  long nodes = 0;
  long branches = 0;
  long cone_cuts = 0;
  long cone_rounds = 0;
  bool integer_bounds_capped = false;
  double max_cone_violation = 0.0;
  // Bound of every node taken off the branch-and-bound queue, in order.
  std::vector<double> bound_trace;
};

struct Solution {
  SolveStatus status = SolveStatus::kInfeasible;
  std::vector<double> values;
  double objective = 0.0;
  SolveStats stats;
  std::string message;

  bool has_values() const { return !values.empty(); }
  double value(VarId id) const { return values.at(id.value); }
};

/// Largest violation over all rows, bounds and integrality requirements.
struct FeasibilityReport {
  double max_constraint_violation = 0.0;
  double max_bound_violation = 0.0;
  double max_integrality_violation = 0.0;
};

inline FeasibilityReport check_feasibility(const Model& model, std::span<const double> values) {
  FeasibilityReport r;
  for (const Constraint& con : model.constraints()) {
    r.max_constraint_violation =
        std::max(r.max_constraint_violation, constraint_residual(con, values));
  }
  for (std::size_t j = 0; j < model.num_variables(); ++j) {
    const Variable& v = model.variables()[j];
    const double x = values[j];
    r.max_bound_violation = std::max({r.max_bound_violation, v.lower - x, x - v.upper});
    if (is_integral_kind(v.kind)) {
      r.max_integrality_violation =
          std::max(r.max_integrality_violation, std::abs(x - std::round(x)));
    }
  }
  return r;
}

}  // namespace robustcounter
