#pragma once

// Independent robustness checks of a candidate solution: exhaustive corner
// enumeration for bounded uncertainty, Monte Carlo violation frequencies for
// random uncertainty, and parameter sweeps against the nominal optimum.

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "robustcounter/cone.hpp"
#include "robustcounter/model.hpp"
#include "robustcounter/text_format.hpp"
#include "robustcounter/uncertain_set.hpp"
#include "robustcounter/uncertainty.hpp"

namespace robustcounter {

inline constexpr std::size_t kMaxCornerEntries = 20;

struct CornerReport {
  std::uint64_t corners_checked = 0;
  std::vector<double> worst_violation;  // per constraint, max(0, lhs - rhs)
  std::vector<double> allowance;        // per constraint
  bool certified = false;
};

namespace detail {

struct RowState {
  double lhs = 0.0;
  double rhs = 0.0;
};

inline double row_allowance(const Constraint& con, double delta, bool uncertain) {
  const double scale = std::max(1.0, std::abs(con.rhs));
  return (uncertain ? delta * scale : 0.0) + 1e-9 * scale;
}

}  // namespace detail

/// Evaluates every joint corner of the uncertainty box. Rows without
/// uncertain entries must hold nominally; uncertain rows may exceed their
/// right-hand side by at most delta * max(1, |b|).
inline CornerReport corner_check(const Model& model, const UncertainSet& uset,
                                 std::span<const double> values, double epsilon, double delta) {
  RobustConfig{epsilon, delta, 1.0}.validate();
  uset.validate_against(model);
  if (values.size() != model.num_variables()) throw ModelError("solution size mismatch");
  if (uset.size() > kMaxCornerEntries) {
    throw ModelError("corner check supports at most " + std::to_string(kMaxCornerEntries) +
                     " uncertain entries (found " + std::to_string(uset.size()) +
                     "); use the Monte Carlo check instead");
  }
  const auto& entries = uset.entries();
  struct Flip {
    std::size_t row;
    double low_delta;  // contribution change from nominal at the low end
    double span;       // change when moving low -> high
    bool rhs;
  };
  std::vector<Flip> flips;
  std::vector<char> uncertain(model.num_constraints(), 0);
  std::vector<detail::RowState> state(model.num_constraints());
  for (std::size_t i = 0; i < model.num_constraints(); ++i) {
    state[i] = {model.constraints()[i].lhs.evaluate(values), model.constraints()[i].rhs};
  }
  for (const UncertainEntry& e : entries) {
    if (!is_bounded_type(e.distribution)) {
      throw ModelError("corner check needs bounded entries; found " +
                       distribution_name(e.distribution));
    }
    const Constraint& con = model.constraint(e.constraint);
    if (con.sense != Sense::kLe) {
      throw ModelError("uncertain constraint '" + con.label + "' must have sense <=");
    }
    uncertain[e.constraint.value] = 1;
    const double nominal = e.is_rhs() ? con.rhs : con.lhs.coefficient(e.var());
    const Interval range = bounded_interval(nominal, e.distribution, epsilon);
    const double x = e.is_rhs() ? 1.0 : values[e.var().value];
    flips.push_back({e.constraint.value, (range.low - nominal) * x, (range.high - range.low) * x,
                     e.is_rhs()});
  }
  // Start at the all-low corner, then walk a Gray code.
  for (const Flip& f : flips) {
    (f.rhs ? state[f.row].rhs : state[f.row].lhs) += f.low_delta;
  }
  CornerReport report;
  report.worst_violation.assign(model.num_constraints(), 0.0);
  report.allowance.resize(model.num_constraints());
  for (std::size_t i = 0; i < model.num_constraints(); ++i) {
    report.allowance[i] = detail::row_allowance(model.constraints()[i], delta, uncertain[i]);
  }
  auto record = [&](std::size_t i) {
    const Constraint& con = model.constraints()[i];
    double v = 0.0;
    if (uncertain[i]) {
      v = state[i].lhs - state[i].rhs;
    } else {
      v = constraint_residual(con, values);
    }
    report.worst_violation[i] = std::max(report.worst_violation[i], std::max(0.0, v));
  };
  for (std::size_t i = 0; i < model.num_constraints(); ++i) record(i);
  std::vector<char> high(flips.size(), 0);
  const std::uint64_t corners = std::uint64_t{1} << flips.size();
  for (std::uint64_t k = 1; k < corners; ++k) {
    const std::size_t bit = static_cast<std::size_t>(std::countr_zero(k));
    const Flip& f = flips[bit];
    const double step = high[bit] ? -f.span : f.span;
    high[bit] ^= 1;
    (f.rhs ? state[f.row].rhs : state[f.row].lhs) += step;
    record(f.row);
  }
  report.corners_checked = corners;
  report.certified = true;
  for (std::size_t i = 0; i < model.num_constraints(); ++i) {
    if (report.worst_violation[i] > report.allowance[i]) report.certified = false;
  }
  return report;
}

struct ViolationEstimate {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double frequency = 0.0;
  double ci_half_width = 0.0;  // 3 * sqrt(f (1 - f) / N)
  std::uint64_t seed = 0;
};

struct MonteCarloReport {
  std::map<ConstraintId, ViolationEstimate> per_constraint;
  ViolationEstimate any;    // at least one uncertain row violated
  ViolationEstimate worst;  // row with the highest frequency
};

inline constexpr std::size_t kMinMonteCarloSamples = 1000;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Stream seed keyed by (constraint, target) so that adding an entry leaves
// the draws of every other entry unchanged.
inline std::uint64_t entry_stream_seed(std::uint64_t seed, const UncertainEntry& e) {
  const std::uint64_t target = e.is_rhs() ? 0 : e.var().value + 1;
  return splitmix64(seed ^ splitmix64(e.constraint.value * 0x100000001B3ULL + target));
}

class EntrySampler {
 public:
  EntrySampler(const UncertainEntry& e, double nominal, double epsilon, std::uint64_t seed)
      : rng_(seed), nominal_(nominal), dist_(e.distribution) {
    scale_ = std::abs(nominal) * epsilon;
    if (const auto* b = std::get_if<Bounded>(&dist_)) {
      if (b->level) scale_ = std::abs(nominal) * *b->level;
    }
    if (const auto* d = std::get_if<Discrete>(&dist_)) {
      pick_ = std::discrete_distribution<std::size_t>(d->probs.begin(), d->probs.end());
    }
  }

  double draw() {
    return std::visit(
        [&](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, BoundedRange>) {
            return std::uniform_real_distribution<double>(d.low, d.high)(rng_);
          } else if constexpr (std::is_same_v<T, Bounded> || std::is_same_v<T, Uniform>) {
            return nominal_ + scale_ * unit_(rng_);
          } else if constexpr (std::is_same_v<T, Normal>) {
            std::normal_distribution<double> gauss(d.mean, d.stddev);
            double xi = gauss(rng_);
            while (std::abs(xi - d.mean) > 6.0 * d.stddev) xi = gauss(rng_);
            return nominal_ + scale_ * xi;
          } else if constexpr (std::is_same_v<T, Poisson>) {
            return nominal_ + scale_ * std::poisson_distribution<long>(d.mean)(rng_);
          } else if constexpr (std::is_same_v<T, Binomial>) {
            return nominal_ + scale_ * std::binomial_distribution<int>(d.trials, d.prob)(rng_);
          } else {
            return nominal_ + scale_ * d.values[pick_(rng_)];
          }
        },
        dist_);
  }

 private:
  std::mt19937_64 rng_;
  double nominal_;
  double scale_ = 0.0;
  Distribution dist_;
  std::uniform_real_distribution<double> unit_{-1.0, 1.0};
  std::discrete_distribution<std::size_t> pick_;
};

inline ViolationEstimate make_estimate(std::size_t n, std::size_t hits, std::uint64_t seed) {
  ViolationEstimate e;
  e.samples = n;
  e.violations = hits;
  e.frequency = static_cast<double>(hits) / static_cast<double>(n);
  e.ci_half_width = 3.0 * std::sqrt(e.frequency * (1.0 - e.frequency) / static_cast<double>(n));
  e.seed = seed;
  return e;
}

}  // namespace detail

/// Draws `samples` independent realizations of every uncertain entry and
/// counts, per uncertain row, the events lhs > rhs + delta * max(1, |b|).
/// Perturbations are a + eps_j |a| xi with xi uniform on [-1, 1] for bounded
/// and uniform entries, or drawn from the tagged distribution otherwise
/// (normal truncated at six standard deviations); range entries are drawn
/// uniformly from their range.
inline MonteCarloReport monte_carlo_check(const Model& model, const UncertainSet& uset,
                                          std::span<const double> values, double epsilon,
                                          double delta, std::size_t samples, std::uint64_t seed) {
  RobustConfig{epsilon, delta, 1.0}.validate();
  uset.validate_against(model);
  if (values.size() != model.num_variables()) throw ModelError("solution size mismatch");
  if (samples < kMinMonteCarloSamples) {
    throw ModelError("Monte Carlo check needs at least " + std::to_string(kMinMonteCarloSamples) +
                     " samples");
  }
  struct Row {
    ConstraintId id;
    double base_lhs = 0.0;  // certain part of the left-hand side
    double rhs = 0.0;
    double allowance = 0.0;
    bool rhs_uncertain = false;
    std::vector<std::pair<std::size_t, double>> coef;  // sampler index, x value
    std::optional<std::size_t> rhs_sampler;
    std::size_t hits = 0;
  };
  std::vector<Row> rows;
  std::vector<detail::EntrySampler> samplers;
  for (ConstraintId id : uset.constraints()) {
    const Constraint& con = model.constraint(id);
    if (con.sense != Sense::kLe) {
      throw ModelError("uncertain constraint '" + con.label + "' must have sense <=");
    }
    Row row;
    row.id = id;
    row.base_lhs = con.lhs.evaluate(values);
    row.rhs = con.rhs;
    row.allowance = delta * std::max(1.0, std::abs(con.rhs)) + 1e-9 * std::max(1.0, std::abs(con.rhs));
    for (const UncertainEntry* e : uset.coefficients_of(id)) {
      const double a = con.lhs.coefficient(e->var());
      const double x = values[e->var().value];
      row.base_lhs -= a * x;
      row.coef.emplace_back(samplers.size(), x);
      samplers.emplace_back(*e, a, epsilon, detail::entry_stream_seed(seed, *e));
    }
    if (const UncertainEntry* e = uset.rhs_of(id)) {
      row.rhs_sampler = samplers.size();
      samplers.emplace_back(*e, con.rhs, epsilon, detail::entry_stream_seed(seed, *e));
    }
    rows.push_back(std::move(row));
  }

  std::vector<double> draw(samplers.size());
  std::size_t any_hits = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t k = 0; k < samplers.size(); ++k) draw[k] = samplers[k].draw();
    bool any = false;
    for (Row& row : rows) {
      double lhs = row.base_lhs;
      for (const auto& [k, x] : row.coef) lhs += draw[k] * x;
      const double rhs = row.rhs_sampler ? draw[*row.rhs_sampler] : row.rhs;
      if (lhs - rhs > row.allowance) {
        ++row.hits;
        any = true;
      }
    }
    any_hits += any;
  }

  MonteCarloReport report;
  report.any = detail::make_estimate(samples, any_hits, seed);
  report.worst = detail::make_estimate(samples, 0, seed);
  for (const Row& row : rows) {
    const ViolationEstimate e = detail::make_estimate(samples, row.hits, seed);
    report.per_constraint.emplace(row.id, e);
    if (e.violations > report.worst.violations) report.worst = e;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Parameter sweeps.

struct GridPoint {
  double epsilon = 0.0;
  double delta = 0.0;
  double kappa = 1.0;
};

class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline double parse_grid_number(const std::string& text, const std::string& key) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw GridError("grid: '" + text + "' is not a number in " + key);
  }
  return v;
}

inline std::vector<double> parse_grid_values(const std::string& key, const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string p;
    while (std::getline(ss, p, ':')) parts.push_back(p);
    if (parts.size() != 3) throw GridError("grid: range for " + key + " must be start:step:stop");
    const double start = parse_grid_number(parts[0], key);
    const double step = parse_grid_number(parts[1], key);
    const double stop = parse_grid_number(parts[2], key);
    if (!(step > 0.0) || stop < start) {
      throw GridError("grid: range for " + key + " needs step > 0 and stop >= start");
    }
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k) {
      // Snap to 12 significant digits so 0.1 + 0.05 prints as 0.15.
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.12g", start + static_cast<double>(k) * step);
      out.push_back(std::strtod(buf, nullptr));
    }
  } else {
    std::stringstream ss(spec);
    std::string p;
    while (std::getline(ss, p, ',')) {
      if (p.empty()) throw GridError("grid: empty value in " + key);
      out.push_back(parse_grid_number(p, key));
    }
  }
  if (out.empty()) throw GridError("grid: no values for " + key);
  return out;
}

}  // namespace detail

/// Parses "eps=0:0.05:0.2 delta=0,0.1 kappa=1,0.14". Omitted keys default to
/// eps=0, delta=0, kappa=1. Points are ordered eps-major, kappa-minor.
inline std::vector<GridPoint> parse_grid(const std::string& text) {
  std::map<std::string, std::vector<double>> axes;
  std::stringstream ss(text);
  std::string token;
  while (ss >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw GridError("grid: expected key=values, got '" + token + "'");
    std::string key = token.substr(0, eq);
    if (key == "epsilon") key = "eps";
    if (key != "eps" && key != "delta" && key != "kappa") {
      throw GridError("grid: unknown key '" + key + "'");
    }
    if (axes.count(key)) throw GridError("grid: duplicate key '" + key + "'");
    axes[key] = detail::parse_grid_values(key, token.substr(eq + 1));
  }
  if (axes.empty()) throw GridError("grid: empty grid");
  const auto eps = axes.count("eps") ? axes["eps"] : std::vector<double>{0.0};
  const auto del = axes.count("delta") ? axes["delta"] : std::vector<double>{0.0};
  const auto kap = axes.count("kappa") ? axes["kappa"] : std::vector<double>{1.0};
  std::vector<GridPoint> grid;
  for (double e : eps) {
    for (double d : del) {
      for (double k : kap) {
        try {
          RobustConfig{e, d, k}.validate();
        } catch (const ModelError& err) {
          throw GridError(std::string("grid: ") + err.what());
        }
        grid.push_back({e, d, k});
      }
    }
  }
  return grid;
}

struct SweepRow {
  GridPoint point;
  std::string status;  // solver status, or "error"
  std::optional<double> objective;
  std::optional<double> nominal_objective;
  std::optional<double> relative_gap;  // (nominal - objective) / |nominal|
  std::string message;
};

using ModelBuilder = std::function<Model(const GridPoint&)>;

/// Solves the builder's model at every grid point, plus the nominal model
/// (the builder at eps = 0, delta = 0, kappa = 1) once for the gap column.
/// Failures are recorded per row. Rows come back in grid order for any
/// number of jobs.
inline std::vector<SweepRow> sweep(const ModelBuilder& build, const std::vector<GridPoint>& grid,
                                   const SolverOptions& options = {}, unsigned jobs = 1) {
  if (grid.empty()) throw GridError("sweep: empty grid");
  auto run = [&](const GridPoint& p) {
    SweepRow row;
    row.point = p;
    try {
      const Solution s = solve(build(p), options);
      row.status = std::string(to_string(s.status));
      row.message = s.message;
      if (s.status == SolveStatus::kOptimal) row.objective = s.objective;
    } catch (const std::exception& e) {
      row.status = "error";
      row.message = e.what();
    }
    return row;
  };
  const SweepRow nominal = run(GridPoint{0.0, 0.0, 1.0});

  std::vector<SweepRow> rows(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < grid.size(); k = next++) rows[k] = run(grid[k]);
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, grid.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (SweepRow& row : rows) {
    row.nominal_objective = nominal.objective;
    if (row.objective && nominal.objective && *nominal.objective != 0.0) {
      row.relative_gap = (*nominal.objective - *row.objective) / std::abs(*nominal.objective);
    }
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  auto cell = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  out << "epsilon,delta,kappa,status,objective,nominal_objective,relative_gap\n";
  for (const SweepRow& r : rows) {
    out << format_number(r.point.epsilon) << ',' << format_number(r.point.delta) << ','
        << format_number(r.point.kappa) << ',' << r.status << ',' << cell(r.objective) << ','
        << cell(r.nominal_objective) << ',' << cell(r.relative_gap) << '\n';
  }
}

}  // namespace robustcounter
