#pragma once

// Conversion of a cone-free model into
//     maximize c.z + offset   s.t.  A z (<= | =) b,  z >= 0
// together with the map back to the original variables.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "robustcounter/model.hpp"

namespace robustcounter {

enum class RowSense { kLe, kEq };

struct StandardForm {
  // Original value x = shift + direction * z[column] - z[negative_column].
  struct ColumnMap {
    std::size_t column = 0;
    std::optional<std::size_t> negative_column;
    double shift = 0.0;
    double direction = 1.0;
  };

  std::size_t num_columns = 0;
  std::vector<std::vector<double>> rows;
  std::vector<RowSense> senses;
  std::vector<double> rhs;
  std::vector<double> objective;
  double objective_offset = 0.0;
  // +1 when the source model maximizes, -1 when it minimizes. The source
  // objective equals sign * (c.z + offset).
  double objective_sign = 1.0;
  std::vector<ColumnMap> variable_columns;
  std::vector<bool> integrality;

  std::size_t num_rows() const { return rows.size(); }

  std::vector<double> recover(std::span<const double> z) const {
    std::vector<double> x(variable_columns.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      const ColumnMap& m = variable_columns[j];
      double v = m.shift + m.direction * z[m.column];
      if (m.negative_column) v -= z[*m.negative_column];
      x[j] = v;
    }
    return x;
  }

  /// Image of an original point in column space (free variables split into
  /// their positive and negative parts).
  std::vector<double> map_point(std::span<const double> x) const {
    std::vector<double> z(num_columns, 0.0);
    for (std::size_t j = 0; j < variable_columns.size(); ++j) {
      const ColumnMap& m = variable_columns[j];
      const double d = m.direction * (x[j] - m.shift);
      if (m.negative_column) {
        z[m.column] = std::max(d, 0.0);
        z[*m.negative_column] = std::max(-d, 0.0);
      } else {
        z[m.column] = d;
      }
    }
    return z;
  }

  double internal_objective(std::span<const double> z) const {
    double v = objective_offset;
    for (std::size_t c = 0; c < num_columns; ++c) v += objective[c] * z[c];
    return v;
  }

  double source_objective(std::span<const double> z) const {
    return objective_sign * internal_objective(z);
  }
};

namespace detail {

inline void append_row(StandardForm& sf, std::vector<double> row, RowSense sense, double rhs) {
  sf.rows.push_back(std::move(row));
  sf.senses.push_back(sense);
  sf.rhs.push_back(rhs);
}

}  // namespace detail

/// Bounds given explicitly (branch-and-bound nodes override the model's).
inline StandardForm to_standard_form(const Model& model, std::span<const double> lower,
                                     std::span<const double> upper) {
  if (model.has_cone_terms()) {
    throw ModelError("standard form requires a cone-free model");
  }
  const std::size_t n = model.num_variables();
  if (lower.size() != n || upper.size() != n) {
    throw ModelError("bound vectors do not match the variable count");
  }

  StandardForm sf;
  sf.variable_columns.resize(n);
  sf.integrality.resize(n);
  std::vector<std::size_t> upper_rows;  // variables needing z <= u - l

  for (std::size_t j = 0; j < n; ++j) {
    const double lo = lower[j];
    const double hi = upper[j];
    if (lo > hi) throw ModelError("bound inversion on '" + model.variables()[j].name + "'");
    StandardForm::ColumnMap& m = sf.variable_columns[j];
    sf.integrality[j] = is_integral_kind(model.variables()[j].kind);
    m.column = sf.num_columns++;
    if (lo == hi) {
      // Fixed: the column carries no coefficients and needs no bound row.
      m.shift = lo;
      m.direction = 0.0;
    } else if (std::isfinite(lo)) {
      m.shift = lo;
      if (std::isfinite(hi)) upper_rows.push_back(j);
    } else if (std::isfinite(hi)) {
      m.shift = hi;
      m.direction = -1.0;
    } else {
      m.negative_column = sf.num_columns++;
    }
  }

  // Expresses a linear form over original variables in column space; the
  // returned constant collects the shifts.
  auto project = [&](const LinExpr& expr, std::vector<double>& row) {
    row.assign(sf.num_columns, 0.0);
    double constant = expr.constant();
    for (const Term& t : expr.terms()) {
      const StandardForm::ColumnMap& m = sf.variable_columns[t.var.value];
      constant += t.coef * m.shift;
      if (m.direction != 0.0) row[m.column] += t.coef * m.direction;
      if (m.negative_column) row[*m.negative_column] -= t.coef;
    }
    return constant;
  };

  std::vector<double> row;
  for (const Constraint& con : model.constraints()) {
    const double constant = project(con.lhs, row);
    const double b = con.rhs - constant;
    switch (con.sense) {
      case Sense::kLe:
        detail::append_row(sf, row, RowSense::kLe, b);
        break;
      case Sense::kGe:
        for (double& a : row) a = -a;
        detail::append_row(sf, row, RowSense::kLe, -b);
        break;
      case Sense::kEq:
        detail::append_row(sf, row, RowSense::kEq, b);
        break;
    }
  }
  for (std::size_t j : upper_rows) {
    row.assign(sf.num_columns, 0.0);
    row[sf.variable_columns[j].column] = 1.0;
    detail::append_row(sf, row, RowSense::kLe, upper[j] - lower[j]);
  }

  const Objective& obj = model.objective();
  sf.objective_sign = obj.sense == ObjSense::kMax ? 1.0 : -1.0;
  sf.objective_offset = sf.objective_sign * project(obj.expr, sf.objective);
  for (double& c : sf.objective) c *= sf.objective_sign;
  return sf;
}

inline StandardForm to_standard_form(const Model& model) {
  std::vector<double> lower, upper;
  for (const Variable& v : model.variables()) {
    lower.push_back(v.lower);
    upper.push_back(v.upper);
  }
  return to_standard_form(model, lower, upper);
}

}  // namespace robustcounter
