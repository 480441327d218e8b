#pragma once

// Distribution specifications for uncertain coefficients and the scalar
// deviation machinery built on them.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "robustcounter/model.hpp"

namespace robustcounter {

/// Relative interval |a~ - a| <= level*|a|. Without a level the global
/// epsilon of the robust configuration applies.
struct Bounded {
  std::optional<double> level;
};
/// Explicit absolute range [low, high] for the true value.
struct BoundedRange {
  double low = 0.0;
  double high = 0.0;
};
/// Normal perturbation with the given mean and standard deviation.
struct Normal {
  double mean = 0.0;
  double stddev = 1.0;
};
/// Symmetric uniform perturbation on [-1, 1].
struct Uniform {};
struct Poisson {
  double mean = 1.0;
};
struct Binomial {
  int trials = 1;
  double prob = 0.5;
};
struct Discrete {
  std::vector<double> values;
  std::vector<double> probs;
};

using Distribution =
    std::variant<Bounded, BoundedRange, Normal, Uniform, Poisson, Binomial, Discrete>;

inline std::string distribution_name(const Distribution& d) {
  static const char* const kNames[] = {"bounded", "range",    "normal",  "uniform",
                                       "poisson", "binomial", "discrete"};
  return kNames[d.index()];
}

inline void validate(const Distribution& dist) {
  std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Bounded>) {
          if (d.level && !(*d.level >= 0.0)) throw ModelError("bounded level must be >= 0");
        } else if constexpr (std::is_same_v<T, BoundedRange>) {
          if (!(d.low <= d.high)) throw ModelError("range requires low <= high");
        } else if constexpr (std::is_same_v<T, Normal>) {
          if (!(d.stddev > 0.0)) throw ModelError("normal requires sigma > 0");
        } else if constexpr (std::is_same_v<T, Poisson>) {
          if (!(d.mean > 0.0)) throw ModelError("poisson requires mean > 0");
        } else if constexpr (std::is_same_v<T, Binomial>) {
          if (d.trials < 0) throw ModelError("binomial requires n >= 0");
          if (!(d.prob >= 0.0 && d.prob <= 1.0)) throw ModelError("binomial requires 0 <= p <= 1");
        } else if constexpr (std::is_same_v<T, Discrete>) {
          if (d.values.empty() || d.values.size() != d.probs.size()) {
            throw ModelError("discrete needs matching nonempty value/probability lists");
          }
          double total = 0.0;
          for (double p : d.probs) {
            if (!(p >= 0.0)) throw ModelError("discrete probabilities must be nonnegative");
            total += p;
          }
          if (std::abs(total - 1.0) > 1e-9) throw ModelError("discrete probabilities must sum to 1");
        }
      },
      dist);
}

struct RobustConfig {
  double epsilon = 0.0;
  double delta = 0.0;
  double kappa = 1.0;

  void validate() const {
    if (!(epsilon >= 0.0)) throw ModelError("epsilon must be >= 0");
    if (!(delta >= 0.0)) throw ModelError("delta must be >= 0");
    if (!(kappa > 0.0 && kappa <= 1.0)) throw ModelError("kappa must lie in (0, 1]");
  }
};

/// Cone weight for reliability level kappa: kappa = exp(-omega^2 / 2).
inline double omega_from_kappa(double kappa) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw ModelError("kappa must lie in (0, 1]");
  return std::sqrt(-2.0 * std::log(kappa));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
}

/// Standard-normal quantile at probability p in (0, 1). Rational initial
/// guess (Acklam) refined by Halley steps on the erfc-based CDF.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ModelError("quantile probability must lie in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int it = 0; it < 2; ++it) {
    // Work on whichever tail keeps the residual well conditioned.
    const double e = x < 0.0 ? normal_cdf(x) - p : (1.0 - p) - 0.5 * std::erfc(x / std::sqrt(2.0));
    const double u = e / normal_pdf(x);
    x = x - u / (1.0 + 0.5 * x * u);
  }
  return x;
}

/// Deviation factor lambda = F^-1(1 - kappa) of the standard normal.
inline double normal_lambda(double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw ModelError("kappa must lie in (0, 1)");
  if (kappa == 0.5) return 0.0;
  return -normal_quantile(kappa);
}

namespace detail {

// Probability mass over the support [first, first + pmf.size()), normalized.
struct IntegerPmf {
  long first = 0;
  std::vector<double> pmf;
};

// Terms are generated by the multiplicative recurrence outward from the mode
// (starting at 1) and normalized at the end, so no factorials or tiny
// starting values such as exp(-mean) appear.
inline IntegerPmf poisson_pmf(double mean) {
  const long mode = static_cast<long>(std::floor(mean));
  const long hi = mode + static_cast<long>(std::ceil(40.0 * std::sqrt(mean) + 60.0));
  std::vector<double> w(static_cast<std::size_t>(hi + 1), 0.0);
  w[mode] = 1.0;
  for (long k = mode; k < hi; ++k) w[k + 1] = w[k] * mean / static_cast<double>(k + 1);
  for (long k = mode; k > 0; --k) w[k - 1] = w[k] * static_cast<double>(k) / mean;
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return {0, std::move(w)};
}

inline IntegerPmf binomial_pmf(int n, double p) {
  std::vector<double> w(static_cast<std::size_t>(n) + 1, 0.0);
  if (p <= 0.0) {
    w[0] = 1.0;
    return {0, std::move(w)};
  }
  if (p >= 1.0) {
    w[n] = 1.0;
    return {0, std::move(w)};
  }
  const long mode = std::min<long>(n, static_cast<long>(std::floor((n + 1) * p)));
  const double odds = p / (1.0 - p);
  w[mode] = 1.0;
  for (long k = mode; k < n; ++k) {
    w[k + 1] = w[k] * static_cast<double>(n - k) / static_cast<double>(k + 1) * odds;
  }
  for (long k = mode; k > 0; --k) {
    w[k - 1] = w[k] * static_cast<double>(k) / static_cast<double>(n - k + 1) / odds;
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return {0, std::move(w)};
}

// Smallest support point t with P(X > t) <= kappa; tails are suffix sums.
inline double smallest_tail_point(const std::vector<double>& support,
                                  const std::vector<double>& pmf, double kappa) {
  std::vector<double> tail(pmf.size(), 0.0);  // tail[i] = P(X > support[i])
  double acc = 0.0;
  for (std::size_t i = pmf.size(); i-- > 0;) {
    tail[i] = acc;
    acc += pmf[i];
  }
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (tail[i] <= kappa) return support[i];
  }
  return support.back();
}

}  // namespace detail

/// Smallest t in the support with P(X > t) <= kappa (strict tail).
inline double discrete_deviation(const Distribution& dist, double kappa) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw ModelError("kappa must lie in (0, 1]");
  validate(dist);
  auto from_pmf = [&](const detail::IntegerPmf& pmf) {
    std::vector<double> support(pmf.pmf.size());
    for (std::size_t i = 0; i < support.size(); ++i) {
      support[i] = static_cast<double>(pmf.first + static_cast<long>(i));
    }
    return detail::smallest_tail_point(support, pmf.pmf, kappa);
  };
  if (const auto* p = std::get_if<Poisson>(&dist)) return from_pmf(detail::poisson_pmf(p->mean));
  if (const auto* b = std::get_if<Binomial>(&dist)) {
    return from_pmf(detail::binomial_pmf(b->trials, b->prob));
  }
  if (const auto* d = std::get_if<Discrete>(&dist)) {
    std::vector<std::size_t> order(d->values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return d->values[a] < d->values[b]; });
    std::vector<double> support, pmf;
    for (std::size_t i : order) {
      if (!support.empty() && support.back() == d->values[i]) {
        pmf.back() += d->probs[i];
      } else {
        support.push_back(d->values[i]);
        pmf.push_back(d->probs[i]);
      }
    }
    return detail::smallest_tail_point(support, pmf, kappa);
  }
  throw ModelError("discrete_deviation supports poisson, binomial and discrete, not " +
                   distribution_name(dist));
}

struct Interval {
  double low = 0.0;
  double high = 0.0;
  double mid() const { return 0.5 * (low + high); }
  double half_width() const { return 0.5 * (high - low); }
};

inline Interval bounded_interval(double nominal, double epsilon) {
  if (!std::isfinite(nominal)) throw ModelError("nominal value must be finite");
  if (!(epsilon >= 0.0)) throw ModelError("epsilon must be >= 0");
  const double dev = epsilon * std::abs(nominal);
  return {nominal - dev, nominal + dev};
}

/// Admissible interval for a bounded-type entry; `epsilon` is the global
/// level used when the distribution carries none.
inline Interval bounded_interval(double nominal, const Distribution& dist, double epsilon) {
  validate(dist);
  if (const auto* b = std::get_if<Bounded>(&dist)) {
    return bounded_interval(nominal, b->level.value_or(epsilon));
  }
  if (std::holds_alternative<Uniform>(dist)) return bounded_interval(nominal, epsilon);
  if (const auto* r = std::get_if<BoundedRange>(&dist)) {
    if (!std::isfinite(nominal)) throw ModelError("nominal value must be finite");
    return {r->low, r->high};
  }
  throw ModelError(distribution_name(dist) + " is not a bounded distribution");
}

inline bool is_bounded_type(const Distribution& dist) {
  return std::holds_alternative<Bounded>(dist) || std::holds_alternative<BoundedRange>(dist) ||
         std::holds_alternative<Uniform>(dist);
}

/// Upper (1 - kappa) quantile of the perturbation xi in a~ = a (1 + eps xi).
/// Bounded and uniform perturbations live on [-1, 1], so their factor is 1.
/// The single-coefficient deviation radius is eps * factor * |a|.
inline double deviation_factor(const Distribution& dist, double kappa) {
  validate(dist);
  if (std::holds_alternative<Bounded>(dist) || std::holds_alternative<Uniform>(dist)) return 1.0;
  if (const auto* n = std::get_if<Normal>(&dist)) {
    return n->mean + normal_lambda(kappa) * n->stddev;
  }
  if (std::holds_alternative<BoundedRange>(dist)) {
    throw ModelError("range entries carry absolute bounds, not a relative factor");
  }
  return discrete_deviation(dist, kappa);
}

}  // namespace robustcounter
