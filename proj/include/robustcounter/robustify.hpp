#pragma once

// Deterministic robust counterparts of uncertain linear rows.
//
// Interval counterpart (per uncertain row i, with u >= |x| on uncertain
// columns):
//     sum a x + sum_{M_i} h_j u_j <= b_low + delta * max(1, |b|)
// Symmetric counterpart (v free, u >= |x - v|):
//     sum a x + sum_{M_i} h_j u_j + Omega * sqrt(sum h_j^2 v_j^2 + h_b^2)
//         <= b + delta * max(1, |b|)
// where h_j is the half-width of the admissible range of coefficient j.
// Nominal rows are always kept.

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "robustcounter/model.hpp"
#include "robustcounter/uncertain_set.hpp"
#include "robustcounter/uncertainty.hpp"

namespace robustcounter {

using EntryKey = std::pair<ConstraintId, VarId>;

struct CounterpartArtifacts {
  Model model;
  std::map<EntryKey, VarId> aux_u;
  std::map<EntryKey, VarId> aux_v;
  std::map<ConstraintId, ConstraintId> provenance;  // robust row -> nominal row
  std::map<ConstraintId, ConstraintId> robust_row;  // nominal row -> robust row
  std::vector<std::string> notes;
};

namespace detail {

inline double tolerance_allowance(double delta, double rhs) {
  return delta * std::max(1.0, std::abs(rhs));
}

inline Model copy_model(const Model& model) {
  if (model.has_cone_terms()) throw ModelError("robust counterparts need a cone-free model");
  return model;
}

inline void check_uncertain_rows(const Model& model, const UncertainSet& uset) {
  uset.validate_against(model);
  for (ConstraintId id : uset.constraints()) {
    const Constraint& con = model.constraint(id);
    if (con.sense != Sense::kLe) {
      throw ModelError("uncertain constraint '" + con.label + "' must have sense <= (found " +
                       std::string(to_string(con.sense)) + "); normalize it first");
    }
  }
}

// Centre and half-width of one uncertain coefficient or right-hand side.
struct Spread {
  double centre;
  double half;
};

inline Spread bounded_spread(double nominal, const Distribution& dist, double epsilon) {
  const Interval range = bounded_interval(nominal, dist, epsilon);
  if (!std::holds_alternative<BoundedRange>(dist)) {
    // Relative levels: keep the centre exact and the half-width at level * |a|.
    const auto* b = std::get_if<Bounded>(&dist);
    const double level = b && b->level ? *b->level : epsilon;
    return {nominal, level * std::abs(nominal)};
  }
  return {range.mid(), range.half_width()};
}

// Symmetric counterpart: non-bounded perturbations are folded in through the
// (1 - kappa) quantile of their perturbation factor.
inline Spread symmetric_spread(double nominal, const Distribution& dist, double epsilon,
                               double kappa) {
  if (is_bounded_type(dist)) return bounded_spread(nominal, dist, epsilon);
  return {nominal, epsilon * std::abs(nominal) * std::abs(deviation_factor(dist, kappa))};
}

inline bool uses_global_level(const UncertainEntry& e) {
  if (std::holds_alternative<Uniform>(e.distribution)) return true;
  const auto* b = std::get_if<Bounded>(&e.distribution);
  return b && !b->level;
}

inline std::string aux_name(const char* prefix, const Model& model, ConstraintId con,
                            VarId var) {
  return std::string(prefix) + "__" + model.constraint(con).label + "__" +
         model.variable(var).name;
}

}  // namespace detail

inline CounterpartArtifacts interval_robust_counterpart(const Model& model,
                                                        const UncertainSet& uset,
                                                        double epsilon, double delta) {
  RobustConfig{epsilon, delta, 1.0}.validate();
  detail::check_uncertain_rows(model, uset);
  CounterpartArtifacts out{detail::copy_model(model), {}, {}, {}, {}, {}};
  Model& robust = out.model;

  for (ConstraintId id : uset.constraints()) {
    const Constraint& con = model.constraint(id);
    LinExpr row = con.lhs;
    double rhs = con.rhs;
    if (const UncertainEntry* r = uset.rhs_of(id)) {
      if (!is_bounded_type(r->distribution)) {
        throw ModelError("interval counterpart needs bounded uncertainty on '" + con.label + "'");
      }
      rhs = bounded_interval(con.rhs, r->distribution, epsilon).low;
    }
    rhs += detail::tolerance_allowance(delta, con.rhs);

    std::vector<std::pair<VarId, VarId>> links;
    for (const UncertainEntry* e : uset.coefficients_of(id)) {
      if (!is_bounded_type(e->distribution)) {
        throw ModelError("interval counterpart needs bounded uncertainty on '" + con.label +
                         "'; use the symmetric counterpart for " +
                         distribution_name(e->distribution));
      }
      const double nominal = con.lhs.coefficient(e->var());
      const detail::Spread s = detail::bounded_spread(nominal, e->distribution, epsilon);
      const VarId u = robust.add_variable(detail::aux_name("u", model, id, e->var()),
                                          VarKind::kContinuous, 0.0, kInfinity);
      out.aux_u[{id, e->var()}] = u;
      row.add(e->var(), s.centre - nominal);
      row.add(u, s.half);
      links.emplace_back(e->var(), u);
    }

    const ConstraintId robust_id =
        robust.add_constraint(std::move(row), Sense::kLe, rhs, con.label + "__irc");
    out.provenance[robust_id] = id;
    out.robust_row[id] = robust_id;
    for (const auto& [x, u] : links) {
      const std::string& xname = model.variable(x).name;
      out.provenance[robust.add_constraint(LinExpr{{x, 1.0}, {u, -1.0}}, Sense::kLe, 0.0,
                                           con.label + "__irc_hi_" + xname)] = id;
      out.provenance[robust.add_constraint(LinExpr{{x, -1.0}, {u, -1.0}}, Sense::kLe, 0.0,
                                           con.label + "__irc_lo_" + xname)] = id;
    }
  }
  return out;
}

inline CounterpartArtifacts symmetric_robust_counterpart(const Model& model,
                                                         const UncertainSet& uset,
                                                         double epsilon, double delta,
                                                         double kappa) {
  RobustConfig{epsilon, delta, kappa}.validate();
  detail::check_uncertain_rows(model, uset);
  const double omega = omega_from_kappa(kappa);
  CounterpartArtifacts out{detail::copy_model(model), {}, {}, {}, {}, {}};
  Model& robust = out.model;

  for (ConstraintId id : uset.constraints()) {
    const Constraint& con = model.constraint(id);
    const auto coefficients = uset.coefficients_of(id);
    const UncertainEntry* rhs_entry = uset.rhs_of(id);

    // When every entry follows the global level the row keeps the textbook
    // shape eps * [sum |a| u + Omega * sqrt(sum a^2 v^2 + b^2)].
    bool global = !rhs_entry || detail::uses_global_level(*rhs_entry);
    for (const UncertainEntry* e : coefficients) global = global && detail::uses_global_level(*e);
    const double factor = global ? epsilon : 1.0;

    LinExpr row = con.lhs;
    double rhs = con.rhs;
    ConeTerm cone;
    cone.scale = factor * omega;
    if (rhs_entry) {
      const detail::Spread s =
          detail::symmetric_spread(con.rhs, rhs_entry->distribution, epsilon, kappa);
      rhs = s.centre;
      const double h = global ? con.rhs : s.half;
      cone.constant_inside = h * h;
    }
    rhs += detail::tolerance_allowance(delta, con.rhs);

    struct Link {
      VarId x, u, v;
    };
    std::vector<Link> links;
    for (const UncertainEntry* e : coefficients) {
      const VarId x = e->var();
      const double nominal = con.lhs.coefficient(x);
      const detail::Spread s =
          detail::symmetric_spread(nominal, e->distribution, epsilon, kappa);
      const VarId u = robust.add_variable(detail::aux_name("u", model, id, x),
                                          VarKind::kContinuous, 0.0, kInfinity);
      const VarId v = robust.add_variable(detail::aux_name("v", model, id, x),
                                          VarKind::kContinuous, -kInfinity, kInfinity);
      out.aux_u[{id, x}] = u;
      out.aux_v[{id, x}] = v;
      row.add(x, s.centre - nominal);
      row.add(u, s.half);
      const double weight = global ? nominal : std::copysign(s.half, nominal);
      cone.components.push_back(Term{v, weight});
      links.push_back({x, u, v});
    }

    std::optional<ConeTerm> cone_term;
    if (!cone.components.empty() || cone.constant_inside > 0.0) cone_term = std::move(cone);
    const ConstraintId robust_id = robust.add_constraint(std::move(row), Sense::kLe, rhs,
                                                         con.label + "__rc", std::move(cone_term));
    out.provenance[robust_id] = id;
    out.robust_row[id] = robust_id;
    for (const Link& l : links) {
      const std::string& xname = model.variable(l.x).name;
      out.provenance[robust.add_constraint(LinExpr{{l.x, 1.0}, {l.v, -1.0}, {l.u, -1.0}},
                                           Sense::kLe, 0.0,
                                           con.label + "__rc_hi_" + xname)] = id;
      out.provenance[robust.add_constraint(LinExpr{{l.x, -1.0}, {l.v, 1.0}, {l.u, -1.0}},
                                           Sense::kLe, 0.0,
                                           con.label + "__rc_lo_" + xname)] = id;
    }
  }
  return out;
}

}  // namespace robustcounter
