#pragma once

// Hospital site selection: choose sites to open and assign every population
// unit to an open site, maximising expected utilization under a budget.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "robustcounter/model.hpp"
#include "robustcounter/robustify.hpp"
#include "robustcounter/uncertain_set.hpp"
#include "robustcounter/uncertainty.hpp"

namespace robustcounter {

class InstanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PopulationUnit {
  std::string id;
  std::string name;
  double population = 0.0;
};

struct SiteCandidate {
  std::string id;
  std::string name;
  double fixed_cost = 0.0;
  double variable_cost = 0.0;  // per expected subscriber
};

struct UtilizationMatrix {
  std::vector<std::vector<double>> u;  // [unit][site]
  std::vector<double> column_totals;
};

enum class AssignmentMode { kAtLeastOne, kExactlyOne };

struct SiteSelectionInstance {
  std::vector<PopulationUnit> units;
  std::vector<SiteCandidate> sites;
  std::vector<std::vector<double>> probabilities;  // [unit][site]
  double budget = 0.0;
  double min_enrollment = 0.0;
  int max_sites = 1;
  std::vector<bool> uncertain_fixed;     // per site; empty means all
  std::vector<bool> uncertain_variable;  // per site; empty means all
  bool uncertain_budget = true;
  AssignmentMode assignment = AssignmentMode::kAtLeastOne;

  bool fixed_uncertain(std::size_t j) const {
    return uncertain_fixed.empty() || uncertain_fixed.at(j);
  }
  bool variable_uncertain(std::size_t j) const {
    return uncertain_variable.empty() || uncertain_variable.at(j);
  }

  void validate() const {
    if (units.empty() || sites.empty()) throw InstanceError("instance needs units and sites");
    for (const auto& u : units) {
      if (!(u.population >= 0.0) || !std::isfinite(u.population)) {
        throw InstanceError("unit '" + u.id + "': population must be a nonnegative number");
      }
    }
    for (const auto& s : sites) {
      if (!(s.fixed_cost >= 0.0) || !std::isfinite(s.fixed_cost)) {
        throw InstanceError("site '" + s.id + "': fixed_cost must be nonnegative");
      }
      if (!(s.variable_cost >= 0.0) || !std::isfinite(s.variable_cost)) {
        throw InstanceError("site '" + s.id + "': variable_cost must be nonnegative");
      }
    }
    if (probabilities.size() != units.size()) {
      throw InstanceError("probability matrix has " + std::to_string(probabilities.size()) +
                          " rows for " + std::to_string(units.size()) + " units");
    }
    for (std::size_t i = 0; i < units.size(); ++i) {
      if (probabilities[i].size() != sites.size()) {
        throw InstanceError("probability row for unit '" + units[i].id + "' has " +
                            std::to_string(probabilities[i].size()) + " entries for " +
                            std::to_string(sites.size()) + " sites");
      }
      double total = 0.0;
      for (std::size_t j = 0; j < sites.size(); ++j) {
        const double p = probabilities[i][j];
        if (!(p >= 0.0 && p <= 1.0)) {
          throw InstanceError("probability for unit '" + units[i].id + "', site '" +
                              sites[j].id + "' is " + format_value(p) + ", outside [0, 1]");
        }
        total += p;
      }
      if (total > 1.0 + 1e-9) {
        throw InstanceError("probabilities for unit '" + units[i].id + "' sum to " +
                            format_value(total) + " > 1");
      }
    }
    if (!(budget > 1.0) || !std::isfinite(budget)) throw InstanceError("budget must exceed 1");
    if (!(min_enrollment >= 0.0)) throw InstanceError("min_enrollment must be >= 0");
    if (max_sites < 1) throw InstanceError("max_sites must be >= 1");
    if (!uncertain_fixed.empty() && uncertain_fixed.size() != sites.size()) {
      throw InstanceError("uncertain_fixed flags do not match the site count");
    }
    if (!uncertain_variable.empty() && uncertain_variable.size() != sites.size()) {
      throw InstanceError("uncertain_variable flags do not match the site count");
    }
  }

 private:
  static std::string format_value(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  }
};

inline UtilizationMatrix build_utilization(const std::vector<PopulationUnit>& units,
                                           const std::vector<std::vector<double>>& probabilities) {
  if (probabilities.size() != units.size()) {
    throw InstanceError("probability matrix rows do not match unit count");
  }
  UtilizationMatrix out;
  const std::size_t n = probabilities.empty() ? 0 : probabilities.front().size();
  out.column_totals.assign(n, 0.0);
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (probabilities[i].size() != n) throw InstanceError("ragged probability matrix");
    std::vector<double> row(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double p = probabilities[i][j];
      if (!(p >= 0.0 && p <= 1.0)) {
        throw InstanceError("probability at row " + std::to_string(i + 1) + ", column " +
                            std::to_string(j + 1) + " outside [0, 1]");
      }
      row[j] = units[i].population * p;
      out.column_totals[j] += row[j];
    }
    out.u.push_back(std::move(row));
  }
  return out;
}

struct SiteSelectionModel {
  Model model;
  UtilizationMatrix utilization;
  std::vector<VarId> open;                 // y_j
  std::vector<std::vector<VarId>> assign;  // x_ij
  ConstraintId budget;
  std::optional<ConstraintId> robust_budget;
};

namespace detail {

inline std::string site_tag(std::size_t j) { return std::to_string(j + 1); }
inline std::string pair_tag(std::size_t i, std::size_t j) {
  return std::to_string(i + 1) + "_" + std::to_string(j + 1);
}

inline LinExpr budget_lhs(const SiteSelectionInstance& inst, const SiteSelectionModel& sm,
                          double variable_inflation) {
  LinExpr e;
  for (std::size_t j = 0; j < inst.sites.size(); ++j) {
    e.add(sm.open[j], inst.sites[j].fixed_cost);
    const double v = inst.sites[j].variable_cost *
                     (inst.variable_uncertain(j) ? 1.0 + variable_inflation : 1.0);
    for (std::size_t i = 0; i < inst.units.size(); ++i) {
      e.add(sm.assign[i][j], v * sm.utilization.u[i][j]);
    }
  }
  return e;
}

}  // namespace detail

/// Nominal model: binary x_ij, y_j; budget, enrollment, assignment,
/// cardinality and x_ij <= y_j linking rows.
inline SiteSelectionModel build_nominal(const SiteSelectionInstance& inst) {
  inst.validate();
  SiteSelectionModel sm;
  sm.utilization = build_utilization(inst.units, inst.probabilities);
  Model& m = sm.model;
  const std::size_t units = inst.units.size(), sites = inst.sites.size();
  for (std::size_t j = 0; j < sites; ++j) {
    sm.open.push_back(m.add_variable("y_" + detail::site_tag(j), VarKind::kBinary));
  }
  sm.assign.resize(units);
  for (std::size_t i = 0; i < units; ++i) {
    for (std::size_t j = 0; j < sites; ++j) {
      sm.assign[i].push_back(m.add_variable("x_" + detail::pair_tag(i, j), VarKind::kBinary));
    }
  }
  sm.budget = m.add_constraint(detail::budget_lhs(inst, sm, 0.0), Sense::kLe, inst.budget,
                               "budget");
  for (std::size_t j = 0; j < sites; ++j) {
    LinExpr e;
    for (std::size_t i = 0; i < units; ++i) e.add(sm.assign[i][j], sm.utilization.u[i][j]);
    e.add(sm.open[j], -inst.min_enrollment);
    m.add_constraint(e, Sense::kGe, 0.0, "enroll_" + detail::site_tag(j));
  }
  const Sense cover =
      inst.assignment == AssignmentMode::kExactlyOne ? Sense::kEq : Sense::kGe;
  for (std::size_t i = 0; i < units; ++i) {
    LinExpr e;
    for (std::size_t j = 0; j < sites; ++j) e.add(sm.assign[i][j], 1.0);
    m.add_constraint(e, cover, 1.0, "assign_" + std::to_string(i + 1));
  }
  LinExpr card;
  for (VarId y : sm.open) card.add(y, 1.0);
  m.add_constraint(card, Sense::kLe, inst.max_sites, "max_sites");
  for (std::size_t i = 0; i < units; ++i) {
    for (std::size_t j = 0; j < sites; ++j) {
      m.add_constraint(LinExpr{{sm.assign[i][j], 1.0}, {sm.open[j], -1.0}}, Sense::kLe, 0.0,
                       "link_" + detail::pair_tag(i, j));
    }
  }
  LinExpr obj;
  for (std::size_t i = 0; i < units; ++i) {
    for (std::size_t j = 0; j < sites; ++j) obj.add(sm.assign[i][j], sm.utilization.u[i][j]);
  }
  m.set_objective(ObjSense::kMax, obj);
  return sm;
}

/// Uncertain entries of the budget row: fixed costs on M, variable costs on K
/// (one entry per assignment variable), and the budget itself.
inline UncertainSet budget_uncertain_set(const SiteSelectionInstance& inst,
                                         const SiteSelectionModel& sm) {
  UncertainSet set;
  for (std::size_t j = 0; j < inst.sites.size(); ++j) {
    if (inst.fixed_uncertain(j) && inst.sites[j].fixed_cost != 0.0) {
      set.add_coefficient(sm.budget, sm.open[j]);
    }
    if (!inst.variable_uncertain(j) || inst.sites[j].variable_cost == 0.0) continue;
    for (std::size_t i = 0; i < inst.units.size(); ++i) {
      if (sm.utilization.u[i][j] != 0.0) set.add_coefficient(sm.budget, sm.assign[i][j]);
    }
  }
  if (inst.uncertain_budget) set.add_rhs(sm.budget);
  return set;
}

/// Interval counterpart written directly: aux s_j >= |y_j| on uncertain fixed
/// costs, variable costs on K inflated by (1 + epsilon) since x >= 0.
inline SiteSelectionModel build_irc(const SiteSelectionInstance& inst, double epsilon,
                                    double delta) {
  RobustConfig{epsilon, delta, 1.0}.validate();
  SiteSelectionModel sm = build_nominal(inst);
  Model& m = sm.model;
  LinExpr row = detail::budget_lhs(inst, sm, epsilon);
  for (std::size_t j = 0; j < inst.sites.size(); ++j) {
    if (!inst.fixed_uncertain(j)) continue;
    const VarId s = m.add_variable("s_" + detail::site_tag(j), VarKind::kContinuous);
    row.add(s, epsilon * std::abs(inst.sites[j].fixed_cost));
    m.add_constraint(LinExpr{{sm.open[j], 1.0}, {s, -1.0}}, Sense::kLe, 0.0,
                     "budget__irc_hi_s_" + detail::site_tag(j));
    m.add_constraint(LinExpr{{sm.open[j], -1.0}, {s, -1.0}}, Sense::kLe, 0.0,
                     "budget__irc_lo_s_" + detail::site_tag(j));
  }
  const double c = inst.budget;
  const double rhs =
      c - (inst.uncertain_budget ? epsilon * std::abs(c) : 0.0) + delta * std::max(1.0, std::abs(c));
  sm.robust_budget = m.add_constraint(row, Sense::kLe, rhs, "budget__irc");
  return sm;
}

/// Symmetric counterpart of the budget row with a cone term of weight
/// omega_from_kappa(kappa) and constant budget^2.
inline SiteSelectionModel build_rc(const SiteSelectionInstance& inst, double epsilon,
                                   double delta, double kappa) {
  RobustConfig{epsilon, delta, kappa}.validate();
  SiteSelectionModel sm = build_nominal(inst);
  const UncertainSet set = budget_uncertain_set(inst, sm);
  CounterpartArtifacts art = symmetric_robust_counterpart(sm.model, set, epsilon, delta, kappa);
  if (auto it = art.robust_row.find(sm.budget); it != art.robust_row.end()) {
    sm.robust_budget = it->second;
  }
  sm.model = std::move(art.model);
  return sm;
}

struct SiteSelectionSummary {
  std::vector<std::size_t> opened;                        // site indices
  std::vector<std::optional<std::size_t>> assigned_site;  // per unit
  double expected_utilization = 0.0;
  double budget_used = 0.0;  // at nominal costs
};

inline SiteSelectionSummary summarize(const SiteSelectionInstance& inst,
                                      const SiteSelectionModel& sm,
                                      std::span<const double> values) {
  SiteSelectionSummary out;
  auto on = [&](VarId v) { return values[v.value] > 0.5; };
  for (std::size_t j = 0; j < inst.sites.size(); ++j) {
    if (on(sm.open[j])) {
      out.opened.push_back(j);
      out.budget_used += inst.sites[j].fixed_cost;
    }
  }
  out.assigned_site.resize(inst.units.size());
  for (std::size_t i = 0; i < inst.units.size(); ++i) {
    for (std::size_t j = 0; j < inst.sites.size(); ++j) {
      if (!on(sm.assign[i][j])) continue;
      if (!out.assigned_site[i]) out.assigned_site[i] = j;
      out.expected_utilization += sm.utilization.u[i][j];
      out.budget_used += inst.sites[j].variable_cost * sm.utilization.u[i][j];
    }
  }
  return out;
}

namespace detail {

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InstanceError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw InstanceError(path.filename().string() + " is empty");
  return rows;
}

inline double parse_cell(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw InstanceError(where + ": '" + text + "' is not a number");
  }
}

inline void expect_header(const std::vector<std::string>& got,
                          const std::vector<std::string>& want, const std::string& file) {
  if (got != want) {
    std::string w;
    for (const auto& s : want) w += (w.empty() ? "" : ",") + s;
    throw InstanceError(file + ": header must be '" + w + "'");
  }
}

inline std::vector<bool> parse_site_flags(const std::string& value,
                                          const std::vector<SiteCandidate>& sites,
                                          const std::string& key) {
  std::vector<bool> flags(sites.size(), false);
  if (value == "all") return std::vector<bool>(sites.size(), true);
  if (value.empty() || value == "none") return flags;
  std::stringstream ss(value);
  std::string id;
  while (std::getline(ss, id, ',')) {
    id = trim(id);
    auto it = std::find_if(sites.begin(), sites.end(),
                           [&](const SiteCandidate& s) { return s.id == id; });
    if (it == sites.end()) throw InstanceError("config: " + key + " names unknown site '" + id + "'");
    flags[static_cast<std::size_t>(it - sites.begin())] = true;
  }
  return flags;
}

}  // namespace detail

/// Reads units.csv, sites.csv, prob.csv and config.txt from a directory.
inline SiteSelectionInstance load_instance(const std::filesystem::path& dir) {
  SiteSelectionInstance inst;

  const auto units = detail::read_csv(dir / "units.csv");
  detail::expect_header(units[0], {"id", "name", "population"}, "units.csv");
  for (std::size_t r = 1; r < units.size(); ++r) {
    const auto& c = units[r];
    const std::string where = "units.csv line " + std::to_string(r + 1);
    if (c.size() != 3) throw InstanceError(where + ": expected 3 fields");
    inst.units.push_back({c[0], c[1], detail::parse_cell(c[2], where + " population")});
  }

  const auto sites = detail::read_csv(dir / "sites.csv");
  detail::expect_header(sites[0], {"id", "name", "fixed_cost", "variable_cost"}, "sites.csv");
  for (std::size_t r = 1; r < sites.size(); ++r) {
    const auto& c = sites[r];
    const std::string where = "sites.csv line " + std::to_string(r + 1);
    if (c.size() != 4) throw InstanceError(where + ": expected 4 fields");
    inst.sites.push_back({c[0], c[1], detail::parse_cell(c[2], where + " fixed_cost"),
                          detail::parse_cell(c[3], where + " variable_cost")});
  }

  // Header: unit,<site ids...>; one row per unit in units.csv order.
  const auto prob = detail::read_csv(dir / "prob.csv");
  if (prob[0].size() != inst.sites.size() + 1) {
    throw InstanceError("prob.csv: header must list 'unit' and " +
                        std::to_string(inst.sites.size()) + " site ids");
  }
  for (std::size_t j = 0; j < inst.sites.size(); ++j) {
    if (prob[0][j + 1] != inst.sites[j].id) {
      throw InstanceError("prob.csv: column " + std::to_string(j + 2) + " is '" +
                          prob[0][j + 1] + "', expected site '" + inst.sites[j].id + "'");
    }
  }
  if (prob.size() != inst.units.size() + 1) {
    throw InstanceError("prob.csv: expected " + std::to_string(inst.units.size()) +
                        " unit rows, found " + std::to_string(prob.size() - 1));
  }
  for (std::size_t i = 0; i < inst.units.size(); ++i) {
    const auto& c = prob[i + 1];
    if (c.empty() || c[0] != inst.units[i].id) {
      throw InstanceError("prob.csv: row " + std::to_string(i + 2) + " must start with unit '" +
                          inst.units[i].id + "'");
    }
    if (c.size() != inst.sites.size() + 1) {
      throw InstanceError("prob.csv: row for unit '" + inst.units[i].id + "' has " +
                          std::to_string(c.size() - 1) + " values");
    }
    std::vector<double> row;
    for (std::size_t j = 0; j < inst.sites.size(); ++j) {
      row.push_back(detail::parse_cell(
          c[j + 1], "prob.csv unit '" + inst.units[i].id + "', site '" + inst.sites[j].id + "'"));
    }
    inst.probabilities.push_back(std::move(row));
  }

  std::ifstream cfg(dir / "config.txt");
  if (!cfg) throw InstanceError("cannot open " + (dir / "config.txt").string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t number = 0;
  while (std::getline(cfg, line)) {
    ++number;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InstanceError("config.txt line " + std::to_string(number) + ": expected key=value");
    }
    kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  auto required = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw InstanceError("config.txt: missing '" + key + "'");
    return it->second;
  };
  inst.budget = detail::parse_cell(required("budget"), "config budget");
  inst.min_enrollment = detail::parse_cell(required("min_enrollment"), "config min_enrollment");
  const double s = detail::parse_cell(required("max_sites"), "config max_sites");
  if (s != std::floor(s)) throw InstanceError("config: max_sites must be an integer");
  inst.max_sites = static_cast<int>(s);
  inst.uncertain_fixed =
      detail::parse_site_flags(kv.count("uncertain_fixed") ? kv["uncertain_fixed"] : "all",
                               inst.sites, "uncertain_fixed");
  inst.uncertain_variable =
      detail::parse_site_flags(kv.count("uncertain_variable") ? kv["uncertain_variable"] : "all",
                               inst.sites, "uncertain_variable");
  if (kv.count("uncertain_budget")) {
    const std::string& v = kv["uncertain_budget"];
    if (v != "yes" && v != "no") throw InstanceError("config: uncertain_budget must be yes or no");
    inst.uncertain_budget = v == "yes";
  }
  if (kv.count("assignment")) {
    const std::string& v = kv["assignment"];
    if (v == "at_least_one") {
      inst.assignment = AssignmentMode::kAtLeastOne;
    } else if (v == "exactly_one") {
      inst.assignment = AssignmentMode::kExactlyOne;
    } else {
      throw InstanceError("config: assignment must be at_least_one or exactly_one");
    }
  }
  inst.validate();
  return inst;
}

}  // namespace robustcounter
