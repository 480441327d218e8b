// Command-line front end: solve, robustify, sitesel, sweep, validate.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "robustcounter/robustcounter.hpp"

namespace rc = robustcounter;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInfeasible = 2, kUnbounded = 3, kLimit = 4 };

int exit_code(rc::SolveStatus s) {
  switch (s) {
    case rc::SolveStatus::kOptimal: return kOk;
    case rc::SolveStatus::kInfeasible: return kInfeasible;
    case rc::SolveStatus::kUnbounded: return kUnbounded;
    case rc::SolveStatus::kLimitReached: return kLimit;
  }
  return kUsage;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

json number_or_null(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

struct Robust {
  std::string mode = "irc";
  double epsilon = 0.0;
  double delta = 0.0;
  double kappa = 1.0;
};

void add_robust_options(CLI::App* app, Robust& r, const std::vector<std::string>& modes) {
  app->add_option("--mode", r.mode, "Counterpart to build")
      ->check(CLI::IsMember(modes))
      ->capture_default_str();
  app->add_option("--epsilon,--eps", r.epsilon, "Uncertainty level")->capture_default_str();
  app->add_option("--delta", r.delta, "Infeasibility tolerance")->capture_default_str();
  app->add_option("--kappa", r.kappa, "Reliability level (rc)")->capture_default_str();
}

rc::Model counterpart(const rc::Model& model, const rc::UncertainSet& set, const Robust& r) {
  if (r.mode == "irc") return rc::interval_robust_counterpart(model, set, r.epsilon, r.delta).model;
  if (r.mode == "rc") {
    return rc::symmetric_robust_counterpart(model, set, r.epsilon, r.delta, r.kappa).model;
  }
  return model;
}

rc::SiteSelectionModel build_site_model(const rc::SiteSelectionInstance& inst,
                                        const std::string& mode, const rc::GridPoint& p) {
  if (mode == "irc") return rc::build_irc(inst, p.epsilon, p.delta);
  if (mode == "rc") return rc::build_rc(inst, p.epsilon, p.delta, p.kappa);
  return rc::build_nominal(inst);
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("ROBUSTCOUNTER_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw std::invalid_argument("ROBUSTCOUNTER_SEED must be an unsigned integer");
    }
  }
  return 1;
}

void emit(bool as_json, const json& j, const std::string& text) {
  if (as_json) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << text;
  }
}

int report_solution(bool as_json, const rc::Model& model, const rc::Solution& s) {
  std::ostringstream text;
  json j;
  j["status"] = std::string(rc::to_string(s.status));
  text << "status: " << rc::to_string(s.status) << '\n';
  if (s.status == rc::SolveStatus::kOptimal) {
    j["objective"] = s.objective;
    text << "objective: " << fixed6(s.objective) << '\n';
    json values = json::object();
    for (std::size_t k = 0; k < model.num_variables(); ++k) {
      const double v = s.values[k];
      if (std::abs(v) <= 1e-9) continue;
      values[model.variables()[k].name] = v;
      text << model.variables()[k].name << " = " << fixed6(v) << '\n';
    }
    j["values"] = values;
  } else {
    j["objective"] = nullptr;
  }
  if (!s.message.empty()) {
    j["message"] = s.message;
    text << "note: " << s.message << '\n';
  }
  emit(as_json, j, text.str());
  return exit_code(s.status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust counterparts of uncertain mixed-integer models"};
  app.require_subcommand(1);
  app.fallthrough();
  bool as_json = false;
  app.add_flag("--json", as_json, "Print machine-readable JSON");
  rc::SolverOptions solver;
  app.add_option("--node-limit", solver.max_nodes, "Branch-and-bound node limit");
  app.add_option("--time-limit", solver.time_limit_seconds, "Time limit in seconds");

  // solve
  std::string model_path;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a model file");
  solve_cmd->add_option("model", model_path, "Model file")->required();

  // robustify
  std::string rob_model, rob_ann, rob_out;
  Robust rob;
  auto* rob_cmd = app.add_subcommand("robustify", "Write the robust counterpart of a model");
  rob_cmd->add_option("model", rob_model, "Model file")->required();
  rob_cmd->add_option("annotations", rob_ann, "Uncertainty annotation file")->required();
  rob_cmd->add_option("-o,--output", rob_out, "Output model file (default: stdout)");
  add_robust_options(rob_cmd, rob, {"irc", "rc"});

  // sitesel
  std::string site_dir;
  Robust site;
  site.mode = "nominal";
  auto* site_cmd = app.add_subcommand("sitesel", "Solve a site-selection instance");
  site_cmd->add_option("instance", site_dir, "Instance directory")->required();
  add_robust_options(site_cmd, site, {"nominal", "irc", "rc"});

  // sweep
  std::string sweep_instance, sweep_model, sweep_ann, sweep_grid, sweep_out;
  Robust sweep_mode;
  unsigned jobs = 1;
  std::uint64_t sweep_seed = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Solve over a grid of (epsilon, delta, kappa)");
  auto* sweep_inst_opt =
      sweep_cmd->add_option("--instance", sweep_instance, "Site-selection instance directory");
  auto* sweep_model_opt = sweep_cmd->add_option("--model", sweep_model, "Model file");
  sweep_cmd->add_option("--annotations", sweep_ann, "Annotation file (with --model)")
      ->needs(sweep_model_opt);
  sweep_inst_opt->excludes(sweep_model_opt);
  sweep_cmd->add_option("--grid", sweep_grid, "e.g. 'eps=0:0.05:0.2 delta=0,0.1 kappa=1,0.14'")
      ->required();
  sweep_cmd->add_option("-o,--output", sweep_out, "CSV output file (default: stdout)");
  sweep_cmd->add_option("--jobs", jobs, "Parallel grid cells")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--seed", sweep_seed, "Seed (default: ROBUSTCOUNTER_SEED or 1)");
  sweep_cmd->add_option("--mode", sweep_mode.mode, "Counterpart to build")
      ->check(CLI::IsMember({"nominal", "irc", "rc"}))
      ->capture_default_str();

  // validate
  std::string val_model, val_ann, val_check = "corner";
  Robust val;
  val.mode = "irc";
  std::size_t samples = 100000;
  std::uint64_t val_seed = 0;
  auto* val_cmd = app.add_subcommand(
      "validate", "Solve a counterpart and check its optimum against the uncertainty set");
  val_cmd->add_option("model", val_model, "Nominal model file")->required();
  val_cmd->add_option("annotations", val_ann, "Uncertainty annotation file")->required();
  val_cmd->add_option("--check", val_check, "corner or mc")
      ->check(CLI::IsMember({"corner", "mc"}))
      ->capture_default_str();
  val_cmd->add_option("--samples", samples, "Monte Carlo samples")->capture_default_str();
  val_cmd->add_option("--seed", val_seed, "Seed (default: ROBUSTCOUNTER_SEED or 1)");
  add_robust_options(val_cmd, val, {"nominal", "irc", "rc"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    solver.validate();
    if (*solve_cmd) {
      const rc::Model model = rc::read_model_file(model_path);
      return report_solution(as_json, model, rc::solve(model, solver));
    }

    if (*rob_cmd) {
      const rc::Model model = rc::read_model_file(rob_model);
      const rc::UncertainSet set = rc::read_annotation_file(rob_ann, model);
      const rc::Model out = counterpart(model, set, rob);
      if (rob_out.empty()) {
        std::cout << rc::export_text(out);
      } else {
        rc::write_model_file(rob_out, out);
        emit(as_json,
             json{{"output", rob_out},
                  {"variables", out.num_variables()},
                  {"constraints", out.num_constraints()}},
             "wrote " + rob_out + " (" + std::to_string(out.num_variables()) + " variables, " +
                 std::to_string(out.num_constraints()) + " constraints)\n");
      }
      return kOk;
    }

    if (*site_cmd) {
      const rc::SiteSelectionInstance inst = rc::load_instance(site_dir);
      const rc::SiteSelectionModel sm =
          build_site_model(inst, site.mode, {site.epsilon, site.delta, site.kappa});
      const rc::Solution s = rc::solve(sm.model, solver);
      std::ostringstream text;
      json j;
      j["status"] = std::string(rc::to_string(s.status));
      text << "status: " << rc::to_string(s.status) << '\n';
      if (s.status == rc::SolveStatus::kOptimal) {
        const rc::SiteSelectionSummary sum = rc::summarize(inst, sm, s.values);
        std::string open;
        json opened = json::array();
        for (std::size_t j2 : sum.opened) {
          open += (open.empty() ? "site " : ", site ") + inst.sites[j2].id;
          opened.push_back(inst.sites[j2].id);
        }
        text << "open: " << (open.empty() ? "none" : open) << '\n';
        json assign = json::object();
        for (std::size_t i = 0; i < inst.units.size(); ++i) {
          const auto& a = sum.assigned_site[i];
          text << "assign: " << inst.units[i].id << " -> "
               << (a ? "site " + inst.sites[*a].id : std::string("none")) << '\n';
          assign[inst.units[i].id] = a ? json(inst.sites[*a].id) : json(nullptr);
        }
        text << "E = " << fixed6(sum.expected_utilization) << '\n';
        text << "budget used = " << fixed6(sum.budget_used) << " of " << fixed6(inst.budget)
             << '\n';
        j["open"] = opened;
        j["assignment"] = assign;
        j["expected_utilization"] = sum.expected_utilization;
        j["budget_used"] = sum.budget_used;
        j["budget"] = inst.budget;
      }
      if (!s.message.empty()) {
        j["message"] = s.message;
        text << "note: " << s.message << '\n';
      }
      emit(as_json, j, text.str());
      return exit_code(s.status);
    }

    if (*sweep_cmd) {
      if (sweep_instance.empty() == sweep_model.empty()) {
        throw std::invalid_argument("sweep needs exactly one of --instance or --model");
      }
      if (!sweep_model.empty() && sweep_ann.empty() && sweep_mode.mode != "nominal") {
        throw std::invalid_argument("sweep --model needs --annotations for irc or rc");
      }
      if (sweep_cmd->count("--seed") == 0) sweep_seed = default_seed();
      const std::vector<rc::GridPoint> grid = rc::parse_grid(sweep_grid);
      std::vector<rc::SweepRow> rows;
      if (!sweep_instance.empty()) {
        const rc::SiteSelectionInstance inst = rc::load_instance(sweep_instance);
        rows = rc::sweep(
            [&](const rc::GridPoint& p) { return build_site_model(inst, sweep_mode.mode, p).model; },
            grid, solver, jobs);
      } else {
        const rc::Model model = rc::read_model_file(sweep_model);
        const rc::UncertainSet set =
            sweep_ann.empty() ? rc::UncertainSet{} : rc::read_annotation_file(sweep_ann, model);
        rows = rc::sweep(
            [&](const rc::GridPoint& p) {
              return counterpart(model, set, {sweep_mode.mode, p.epsilon, p.delta, p.kappa});
            },
            grid, solver, jobs);
      }
      std::ostringstream csv;
      rc::write_sweep_csv(csv, rows);
      if (sweep_out.empty()) {
        if (as_json) {
          json arr = json::array();
          for (const auto& r : rows) {
            arr.push_back({{"epsilon", r.point.epsilon},
                           {"delta", r.point.delta},
                           {"kappa", r.point.kappa},
                           {"status", r.status},
                           {"objective", number_or_null(r.objective)},
                           {"nominal_objective", number_or_null(r.nominal_objective)},
                           {"relative_gap", number_or_null(r.relative_gap)}});
          }
          std::cout << json{{"seed", sweep_seed}, {"rows", arr}}.dump(2) << '\n';
        } else {
          std::cout << csv.str();
        }
      } else {
        std::ofstream out(sweep_out);
        if (!out) throw std::runtime_error("cannot write '" + sweep_out + "'");
        out << csv.str();
        emit(as_json, json{{"output", sweep_out}, {"rows", rows.size()}, {"seed", sweep_seed}},
             "wrote " + std::to_string(rows.size()) + " rows to " + sweep_out + '\n');
      }
      return kOk;
    }

    if (*val_cmd) {
      if (val_cmd->count("--seed") == 0) val_seed = default_seed();
      const rc::Model model = rc::read_model_file(val_model);
      const rc::UncertainSet set = rc::read_annotation_file(val_ann, model);
      const rc::Solution s = rc::solve(counterpart(model, set, val), solver);
      if (s.status != rc::SolveStatus::kOptimal) {
        emit(as_json, json{{"status", std::string(rc::to_string(s.status))}},
             "status: " + std::string(rc::to_string(s.status)) + '\n');
        return exit_code(s.status);
      }
      const std::vector<double> x(s.values.begin(),
                                  s.values.begin() + static_cast<std::ptrdiff_t>(model.num_variables()));
      std::ostringstream text;
      json j;
      j["status"] = "optimal";
      j["objective"] = s.objective;
      j["mode"] = val.mode;
      text << "solved " << val.mode << ": objective " << fixed6(s.objective) << '\n';
      if (val_check == "corner") {
        const rc::CornerReport r = rc::corner_check(model, set, x, val.epsilon, val.delta);
        j["check"] = "corner";
        j["corners_checked"] = r.corners_checked;
        j["certified"] = r.certified;
        json rows = json::object();
        text << "corners checked: " << r.corners_checked << '\n';
        for (std::size_t i = 0; i < model.num_constraints(); ++i) {
          const auto& label = model.constraints()[i].label;
          rows[label] = {{"worst_violation", r.worst_violation[i]},
                         {"allowance", r.allowance[i]}};
          text << label << ": worst violation " << fixed6(r.worst_violation[i])
               << ", allowance " << fixed6(r.allowance[i]) << '\n';
        }
        j["constraints"] = rows;
        text << "certified: " << (r.certified ? "yes" : "no") << '\n';
      } else {
        const rc::MonteCarloReport r =
            rc::monte_carlo_check(model, set, x, val.epsilon, val.delta, samples, val_seed);
        j["check"] = "mc";
        j["samples"] = samples;
        j["seed"] = val_seed;
        json rows = json::object();
        text << "samples: " << samples << ", seed " << val_seed << '\n';
        for (const auto& [id, e] : r.per_constraint) {
          const auto& label = model.constraint(id).label;
          rows[label] = {{"violations", e.violations},
                         {"frequency", e.frequency},
                         {"ci_half_width", e.ci_half_width}};
          text << label << ": frequency " << fixed6(e.frequency) << " +/- "
               << fixed6(e.ci_half_width) << " (" << e.violations << " violations)\n";
        }
        j["constraints"] = rows;
        j["any_frequency"] = r.any.frequency;
        j["worst_frequency"] = r.worst.frequency;
        text << "any row: frequency " << fixed6(r.any.frequency) << '\n';
      }
      emit(as_json, j, text.str());
      return kOk;
    }
  } catch (const std::exception& e) {
    if (as_json) {
      std::cout << json{{"status", "error"}, {"message", e.what()}}.dump(2) << '\n';
    }
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
