#pragma once

// Robust sequencing rows for batch operations with an uncertain processing
// duration (alpha) or rate (beta):
//
//   next_start - anchor <= a * assign + b * batch + changeover
//                          + H (2 - gate - next_assign) + delta2
//
// The robust variants lower the uncertain coefficient and move the freed
// slack into delta2, which together with delta spans the admissible range.

#include <cmath>
#include <optional>
#include <string>

#include "robustcounter/model.hpp"
#include "robustcounter/uncertainty.hpp"

namespace robustcounter {

enum class TimingParameter { kDuration, kRate };

struct TimingConstraintTemplate {
  double alpha = 0.0;       // fixed processing time, h
  double beta = 0.0;        // processing time per unit of batch size, h/unit
  double horizon = 0.0;     // big-M horizon H, h
  double changeover = 0.0;  // clean-up time between consecutive tasks, h
  TimingParameter uncertain = TimingParameter::kDuration;
  VarId next_start;               // T^s at event n+1
  VarId anchor;                   // T^s (or T^f) at event n
  VarId assign;                   // allocation binary multiplying alpha at event n
  VarId next_assign;              // allocation binary at event n+1
  std::optional<VarId> gate;      // allocation binary in the big-M term, defaults to assign
  std::optional<VarId> batch;     // batch size at event n
  std::string label = "timing";

  void validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !(horizon >= 0.0) || !(changeover >= 0.0)) {
      throw ModelError("timing template '" + label + "' needs nonnegative alpha, beta, H, tcl");
    }
  }
};

// Reading of the normal slack identity: the multiplier always uses the
// standard deviation; the slack may follow it (kSigma) or use the square root
// of the tolerance as printed (kDeltaLiteral).
enum class NormalSlackReading { kSigma, kDeltaLiteral };

struct TimingCounterpart {
  double duration_coef = 0.0;
  double rate_coef = 0.0;
  double delta2 = 0.0;
  LinExpr lhs;
  double rhs = 0.0;
  std::string label;
  std::string note;

  ConstraintId append_to(Model& model) const {
    return model.add_constraint(lhs, Sense::kLe, rhs, label);
  }
};

namespace detail {

inline TimingCounterpart timing_row(const TimingConstraintTemplate& t, double duration_coef,
                                    double rate_coef, double delta2, const std::string& suffix) {
  TimingCounterpart out;
  out.duration_coef = duration_coef;
  out.rate_coef = rate_coef;
  out.delta2 = delta2;
  out.label = t.label + suffix;
  const VarId gate = t.gate.value_or(t.assign);
  out.lhs.add(t.next_start, 1.0);
  out.lhs.add(t.anchor, -1.0);
  out.lhs.add(t.assign, -duration_coef);
  if (t.batch) out.lhs.add(*t.batch, -rate_coef);
  out.lhs.add(gate, t.horizon);
  out.lhs.add(t.next_assign, t.horizon);
  out.rhs = 2.0 * t.horizon + t.changeover + delta2;
  if (delta2 < 0.0) out.note = "delta2 is negative; the row is tightened";
  return out;
}

}  // namespace detail

/// Nominal row (delta2 = 0).
inline TimingCounterpart nominal_timing(const TimingConstraintTemplate& t) {
  t.validate();
  return detail::timing_row(t, t.alpha, t.beta, 0.0, "");
}

/// Relative bounded uncertainty of level epsilon on both coefficients.
inline TimingCounterpart robust_timing_bounded(const TimingConstraintTemplate& t, double epsilon,
                                               double delta) {
  t.validate();
  RobustConfig{epsilon, delta, 1.0}.validate();
  const double nominal = t.uncertain == TimingParameter::kDuration ? t.alpha : t.beta;
  const double delta2 = 2.0 * epsilon * nominal - delta;
  return detail::timing_row(t, (1.0 - epsilon) * t.alpha, (1.0 - epsilon) * t.beta, delta2,
                            "__rb");
}

/// Explicit admissible range for the uncertain coefficient.
inline TimingCounterpart robust_timing_bounded(const TimingConstraintTemplate& t,
                                               BoundedRange range, double delta) {
  t.validate();
  validate(Distribution{range});
  if (!(delta >= 0.0)) throw ModelError("delta must be >= 0");
  const double delta2 = (range.high - range.low) - delta;
  const bool duration = t.uncertain == TimingParameter::kDuration;
  return detail::timing_row(t, duration ? range.low : t.alpha, duration ? t.beta : range.low,
                            delta2, "__rb");
}

/// Normal uncertainty N(mean, stddev) on the uncertain coefficient.
inline TimingCounterpart robust_timing_normal(const TimingConstraintTemplate& t, double mean,
                                              double stddev, double epsilon, double delta,
                                              double kappa,
                                              NormalSlackReading reading = NormalSlackReading::kSigma) {
  t.validate();
  validate(Distribution{Normal{mean, stddev}});
  RobustConfig{epsilon, delta, kappa}.validate();
  const double lambda = normal_lambda(kappa);
  const double shift = lambda * std::sqrt(stddev) - mean;
  const double multiplier = 1.0 - epsilon * shift;
  const double slack_shift =
      reading == NormalSlackReading::kSigma ? shift : lambda * std::sqrt(delta) - mean;
  const double delta2 = 2.0 * epsilon * slack_shift - delta;
  const bool duration = t.uncertain == TimingParameter::kDuration;
  return detail::timing_row(t, duration ? multiplier * t.alpha : t.alpha,
                            duration ? t.beta : multiplier * t.beta, delta2, "__rn");
}

}  // namespace robustcounter
