#pragma once

// Per-constraint sets of uncertain coefficients (and optional uncertain
// right-hand sides), each tagged with a distribution.
//
// Annotation files carry one entry per line:
//
//   cost1 f_2(bounded 0.05)
//   cost1 RHS(normal 100 5)
//   t7 alpha(range 10.1 11.3)
//   d3 x(discrete 0:0.2 1:0.5 2:0.3)
//
// Supported distributions: bounded [level], range low high, normal mean sd,
// uniform, poisson mean, binomial n p, discrete v:p ...

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "robustcounter/model.hpp"
#include "robustcounter/text_format.hpp"
#include "robustcounter/uncertainty.hpp"

namespace robustcounter {

struct RhsTarget {
  friend auto operator<=>(RhsTarget, RhsTarget) = default;
};

using Target = std::variant<VarId, RhsTarget>;

struct UncertainEntry {
  ConstraintId constraint;
  Target target;
  Distribution distribution;

  bool is_rhs() const { return std::holds_alternative<RhsTarget>(target); }
  VarId var() const { return std::get<VarId>(target); }
};

class UncertainSet {
 public:
  void add(ConstraintId constraint, Target target, Distribution distribution) {
    validate(distribution);
    auto key = std::make_pair(constraint, target);
    if (!keys_.insert(key).second) {
      throw ModelError("duplicate uncertain entry for constraint " +
                       std::to_string(constraint.value));
    }
    entries_.push_back(UncertainEntry{constraint, target, std::move(distribution)});
  }

  void add_coefficient(ConstraintId constraint, VarId var, Distribution distribution = Bounded{}) {
    add(constraint, var, std::move(distribution));
  }
  void add_rhs(ConstraintId constraint, Distribution distribution = Bounded{}) {
    add(constraint, RhsTarget{}, std::move(distribution));
  }

  std::span<const UncertainEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::size_t coefficient_count() const {
    return static_cast<std::size_t>(std::count_if(
        entries_.begin(), entries_.end(), [](const UncertainEntry& e) { return !e.is_rhs(); }));
  }

  /// Constraints carrying at least one entry, in constraint-id order.
  std::vector<ConstraintId> constraints() const {
    std::set<ConstraintId> ids;
    for (const UncertainEntry& e : entries_) ids.insert(e.constraint);
    return {ids.begin(), ids.end()};
  }

  /// Coefficient entries of one constraint, in insertion order.
  std::vector<const UncertainEntry*> coefficients_of(ConstraintId id) const {
    std::vector<const UncertainEntry*> out;
    for (const UncertainEntry& e : entries_) {
      if (e.constraint == id && !e.is_rhs()) out.push_back(&e);
    }
    return out;
  }

  const UncertainEntry* rhs_of(ConstraintId id) const {
    for (const UncertainEntry& e : entries_) {
      if (e.constraint == id && e.is_rhs()) return &e;
    }
    return nullptr;
  }

  /// Checks every referenced constraint and variable against `model`.
  void validate_against(const Model& model) const {
    for (const UncertainEntry& e : entries_) {
      if (e.constraint.value >= model.num_constraints()) {
        throw ModelError("uncertain entry references unknown constraint " +
                         std::to_string(e.constraint.value));
      }
      if (!e.is_rhs() && e.var().value >= model.num_variables()) {
        throw ModelError("uncertain entry references unknown variable " +
                         std::to_string(e.var().value));
      }
    }
  }

 private:
  std::vector<UncertainEntry> entries_;
  std::set<std::pair<ConstraintId, Target>> keys_;
};

inline std::string format_distribution(const Distribution& dist) {
  return std::visit(
      [](const auto& d) -> std::string {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Bounded>) {
          return d.level ? "bounded " + format_number(*d.level) : "bounded";
        } else if constexpr (std::is_same_v<T, BoundedRange>) {
          return "range " + format_number(d.low) + " " + format_number(d.high);
        } else if constexpr (std::is_same_v<T, Normal>) {
          return "normal " + format_number(d.mean) + " " + format_number(d.stddev);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return "uniform";
        } else if constexpr (std::is_same_v<T, Poisson>) {
          return "poisson " + format_number(d.mean);
        } else if constexpr (std::is_same_v<T, Binomial>) {
          return "binomial " + std::to_string(d.trials) + " " + format_number(d.prob);
        } else {
          std::string out = "discrete";
          for (std::size_t i = 0; i < d.values.size(); ++i) {
            out += " " + format_number(d.values[i]) + ":" + format_number(d.probs[i]);
          }
          return out;
        }
      },
      dist);
}

inline std::string format_annotations(const UncertainSet& set, const Model& model) {
  std::ostringstream out;
  for (const UncertainEntry& e : set.entries()) {
    out << model.constraint(e.constraint).label << ' '
        << (e.is_rhs() ? std::string("RHS") : model.variable(e.var()).name) << '('
        << format_distribution(e.distribution) << ")\n";
  }
  return out.str();
}

namespace detail {

inline Distribution parse_distribution(LineCursor& cur) {
  const std::string kind(cur.name());
  auto finish = [&](Distribution d) {
    try {
      validate(d);
    } catch (const ModelError& e) {
      cur.fail(e.what());
    }
    return d;
  };
  if (kind == "bounded") {
    Bounded b;
    if (cur.peek() != ')') b.level = cur.number();
    return finish(b);
  }
  if (kind == "range") {
    const double low = cur.number();
    return finish(BoundedRange{low, cur.number()});
  }
  if (kind == "normal") {
    const double mean = cur.number();
    return finish(Normal{mean, cur.number()});
  }
  if (kind == "uniform") return finish(Uniform{});
  if (kind == "poisson") return finish(Poisson{cur.number()});
  if (kind == "binomial") {
    const double n = cur.number();
    if (n != std::floor(n) || n < 0) cur.fail("binomial trials must be a nonnegative integer");
    return finish(Binomial{static_cast<int>(n), cur.number()});
  }
  if (kind == "discrete") {
    Discrete d;
    while (cur.peek() != ')' && !cur.at_end()) {
      d.values.push_back(cur.number());
      cur.expect(":");
      d.probs.push_back(cur.number());
    }
    return finish(d);
  }
  cur.fail("unknown distribution '" + kind + "'");
}

}  // namespace detail

/// Parses an annotation document against `model`. Unknown constraint labels
/// are collected and reported together.
inline UncertainSet parse_annotations(std::string_view text, const Model& model) {
  UncertainSet set;
  std::vector<std::string> unknown;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t stop = text.find('\n', start);
    if (stop == std::string_view::npos) stop = text.size();
    std::string_view line = text.substr(start, stop - start);
    start = stop + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    detail::LineCursor cur(line, line_no);
    if (cur.at_end() || cur.peek() == '%' || cur.peek() == '#') continue;

    const std::string label(cur.name());
    const std::string target(cur.name());
    cur.expect("(");
    Distribution dist = detail::parse_distribution(cur);
    cur.expect(")");
    if (!cur.at_end()) cur.fail("unexpected text after annotation");

    const auto con = model.find_constraint(label);
    if (!con) {
      if (std::find(unknown.begin(), unknown.end(), label) == unknown.end()) {
        unknown.push_back(label);
      }
      continue;
    }
    Target t = RhsTarget{};
    if (target != "RHS") {
      const auto var = model.find_variable(target);
      if (!var) throw ParseError(line_no, 1, "unknown variable '" + target + "'");
      if (model.constraint(*con).lhs.coefficient(*var) == 0.0) {
        throw ParseError(line_no, 1,
                         "variable '" + target + "' does not appear in constraint '" + label + "'");
      }
      t = *var;
    }
    try {
      set.add(*con, t, std::move(dist));
    } catch (const ModelError& e) {
      throw ParseError(line_no, 1, e.what());
    }
  }
  if (!unknown.empty()) {
    std::string names;
    for (const std::string& u : unknown) names += (names.empty() ? "" : ", ") + u;
    throw ParseError(0, 0, "unknown constraint label(s): " + names);
  }
  return set;
}

inline UncertainSet read_annotation_file(const std::string& path, const Model& model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open annotation file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_annotations(buf.str(), model);
}

}  // namespace robustcounter
