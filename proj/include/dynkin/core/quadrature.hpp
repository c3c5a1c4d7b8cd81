#pragma once

// Quadrature building blocks for the spectral integrals.
//
// All rules are built on 16-point Gauss–Legendre panels. The semi-infinite
// integrators grow dyadically; the oscillatory transform integrates between
// consecutive zeros of the trigonometric factor and accelerates the resulting
// alternating series by repeated averaging of partial sums.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include "dynkin/core/errors.hpp"

namespace dynkin::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;
};

/// Result of a [0, ∞) integral truncated at `cutoff` with a bound on the rest.
struct TailResult {
  double value = 0.0;
  double error = 0.0;      // quadrature error on [0, cutoff]
  double tail_bound = 0.0; // bound on the neglected ∫_cutoff^∞
  double cutoff = 0.0;
  std::size_t evaluations = 0;
};

struct Tolerance {
  double abs = 1e-10;
  double rel = 1e-10;

  double target(double magnitude) const noexcept {
    return std::max(abs, rel * std::abs(magnitude));
  }
};

namespace detail {

struct GaussLegendre16 {
  std::array<double, 16> nodes{};
  std::array<double, 16> weights{};

  GaussLegendre16() {
    constexpr int n = 16;
    for (int i = 0; i < n / 2; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = pk;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      nodes[i] = -x;
      nodes[n - 1 - i] = x;
      weights[i] = w;
      weights[n - 1 - i] = w;
    }
  }
};

inline const GaussLegendre16& gl16_rule() {
  static const GaussLegendre16 rule;
  return rule;
}

}  // namespace detail

/// Fixed 16-point Gauss–Legendre rule on [a, b].
template <class F>
double gauss_legendre16(F&& f, double a, double b) {
  const auto& rule = detail::gl16_rule();
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < 16; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return sum * half;
}

struct AdaptiveOptions {
  Tolerance tol{};
  int max_depth = 30;
  std::size_t max_intervals = 4000;
};

/// Globally adaptive bisection. Each interval is scored by comparing the
/// 16-point rule on the whole interval against the sum over its two halves;
/// the worst interval is bisected until the summed error meets the tolerance.
template <class F>
Result adaptive(F&& f, double a, double b, const AdaptiveOptions& opt = {}) {
  struct Interval {
    double a, b, value, error;
    int depth;
    bool operator<(const Interval& o) const { return error < o.error; }
  };
  Result res;
  if (a == b) return res;
  auto score = [&](double lo, double hi, double whole, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double left = gauss_legendre16(f, lo, mid);
    const double right = gauss_legendre16(f, mid, hi);
    res.evaluations += 32;
    return Interval{lo, hi, left + right, std::abs(left + right - whole), depth};
  };
  const double whole = gauss_legendre16(f, a, b);
  res.evaluations += 16;
  std::priority_queue<Interval> heap;
  heap.push(score(a, b, whole, 0));
  double total = heap.top().value;
  double total_err = heap.top().error;
  std::vector<Interval> finished;  // intervals that hit the depth limit
  while (!heap.empty() && total_err > opt.tol.target(total)) {
    if (heap.size() + finished.size() >= opt.max_intervals) break;
    Interval worst = heap.top();
    heap.pop();
    if (worst.depth >= opt.max_depth) {
      finished.push_back(worst);
      continue;
    }
    const double mid = 0.5 * (worst.a + worst.b);
    const double left_whole = gauss_legendre16(f, worst.a, mid);
    const double right_whole = gauss_legendre16(f, mid, worst.b);
    res.evaluations += 32;
    Interval left = score(worst.a, mid, left_whole, worst.depth + 1);
    Interval right = score(mid, worst.b, right_whole, worst.depth + 1);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the drift of the running updates.
  total = 0.0;
  total_err = 0.0;
  for (const auto& iv : finished) {
    total += iv.value;
    total_err += iv.error;
  }
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().error;
    heap.pop();
  }
  res.value = total;
  res.error = total_err;
  res.converged = total_err <= opt.tol.target(total);
  return res;
}

/// Adaptive integration over [a, b] split at the given interior breakpoints.
template <class F>
Result adaptive_with_breaks(F&& f, double a, double b, const std::vector<double>& breaks,
                            const AdaptiveOptions& opt = {}) {
  std::vector<double> pts{a};
  for (double x : breaks)
    if (x > a && x < b) pts.push_back(x);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  Result res;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i + 1] <= pts[i]) continue;
    const Result part = adaptive(f, pts[i], pts[i + 1], opt);
    res.value += part.value;
    res.error += part.error;
    res.evaluations += part.evaluations;
    res.converged = res.converged && part.converged;
  }
  return res;
}

struct GeometricOptions {
  Tolerance tol{};
  std::size_t max_panels = 1000;
  std::vector<double> breaks{};
};

namespace detail {

// Sums panel contributions c_k that decay (eventually) geometrically; the
// tail is extrapolated from the last ratio, with the drift between the last
// two ratios as its uncertainty.
class GeometricSeries {
 public:
  void add(double c) {
    sum_ += c;
    last_.push_back(c);
    if (last_.size() > 3) last_.erase(last_.begin());
  }
  double sum() const { return sum_; }

  struct Tail {
    double estimate;
    double uncertainty;
  };

  /// Uncertainty is +inf when the panels do not (yet) look geometric.
  Tail tail() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (last_.size() < 3 || !std::isfinite(sum_)) return {0.0, inf};
    const double c0 = std::abs(last_[0]);
    const double c1 = std::abs(last_[1]);
    const double c2 = std::abs(last_[2]);
    if (c2 == 0.0 && c1 == 0.0) return {0.0, 0.0};
    if (c1 == 0.0 || c0 == 0.0) return {0.0, inf};
    const double q1 = c1 / c0;
    const double q2 = c2 / c1;
    const double q = std::max(q1, q2);
    // slow decay only once the ratio has settled (exact power law)
    const bool settled = std::abs(q2 - q1) <= 1e-6 * q2;
    if (!(q < (settled ? 0.9999 : 0.98))) return {0.0, inf};
    const double sign = last_[2] < 0.0 ? -1.0 : 1.0;
    const double est = c2 * q2 / (1.0 - q2);
    const double alt = c2 * q1 / (1.0 - q1);
    return {sign * est, std::abs(est - alt)};
  }

 private:
  double sum_ = 0.0;
  std::vector<double> last_;
};

}  // namespace detail

/// ∫_a^∞ f over dyadic panels [a 2^k, a 2^{k+1}]; for integrands with
/// (eventually) power-law or faster decay. Requires a > 0.
template <class F>
Result integrate_to_infinity(F&& f, double a, const GeometricOptions& opt = {}) {
  if (!(a > 0.0)) throw DomainError("integrate_to_infinity: lower limit must be positive");
  detail::GeometricSeries series;
  Result res;
  AdaptiveOptions aopt;
  aopt.tol = {opt.tol.abs * 1e-2, opt.tol.rel * 1e-2};
  double lo = a;
  for (std::size_t k = 0; k < opt.max_panels; ++k) {
    const double hi = 2.0 * lo;
    const Result part = adaptive_with_breaks(f, lo, hi, opt.breaks, aopt);
    res.evaluations += part.evaluations;
    res.error += part.error;
    series.add(part.value);
    const auto tail = series.tail();
    if (std::isfinite(series.sum()) &&
        tail.uncertainty <= opt.tol.target(series.sum() + tail.estimate)) {
      res.value = series.sum() + tail.estimate;
      res.error += tail.uncertainty;
      return res;
    }
    lo = hi;
    if (!std::isfinite(lo) || !std::isfinite(series.sum())) break;
  }
  throw NonConvergenceError("integral to infinity: panel contributions did not decay",
                            series.sum(), series.tail().uncertainty);
}

/// ∫_0^b f over dyadic panels [b 2^{-k-1}, b 2^{-k}]; for integrable
/// singularities of power type at 0.
template <class F>
Result integrate_to_zero(F&& f, double b, const GeometricOptions& opt = {}) {
  if (!(b > 0.0)) throw DomainError("integrate_to_zero: upper limit must be positive");
  detail::GeometricSeries series;
  Result res;
  AdaptiveOptions aopt;
  aopt.tol = {opt.tol.abs * 1e-2, opt.tol.rel * 1e-2};
  double hi = b;
  for (std::size_t k = 0; k < opt.max_panels; ++k) {
    const double lo = 0.5 * hi;
    const Result part = adaptive_with_breaks(f, lo, hi, opt.breaks, aopt);
    res.evaluations += part.evaluations;
    res.error += part.error;
    series.add(part.value);
    const auto tail = series.tail();
    if (std::isfinite(series.sum()) &&
        tail.uncertainty <= opt.tol.target(series.sum() + tail.estimate)) {
      res.value = series.sum() + tail.estimate;
      res.error += tail.uncertainty;
      return res;
    }
    hi = lo;
    if (hi == 0.0 || !std::isfinite(series.sum())) break;
  }
  throw NonConvergenceError("integral to zero: panel contributions did not decay", series.sum(),
                            series.tail().uncertainty);
}

struct CutoffOptions {
  Tolerance tol{1e-8, 0.0};
  double min_cutoff = 0x1.0p10;
  double max_cutoff = 0x1.0p60;
};

/// ∫_0^∞ f with panels [0,1], [1,2], [2,4], ...; stops at the first dyadic
/// cutoff Ξ ≥ min_cutoff where tail_bound(Ξ) ≤ tolerance. Hitting max_cutoff
/// raises NonConvergenceError.
template <class F, class TailBound>
TailResult integrate_with_cutoff(F&& f, TailBound&& tail_bound, const CutoffOptions& opt = {}) {
  TailResult res;
  AdaptiveOptions aopt;
  aopt.tol = {opt.tol.abs * 1e-3, opt.tol.rel * 1e-3};
  aopt.max_depth = 40;
  double lo = 0.0;
  double hi = 1.0;
  for (;;) {
    const Result part = adaptive(f, lo, hi, aopt);
    res.value += part.value;
    res.error += part.error;
    res.evaluations += part.evaluations;
    if (hi >= opt.min_cutoff) {
      const double bound = tail_bound(hi);
      if (bound <= opt.tol.target(res.value)) {
        res.tail_bound = bound;
        res.cutoff = hi;
        return res;
      }
      if (hi >= opt.max_cutoff) {
        throw NonConvergenceError("tail bound " + std::to_string(bound) +
                                      " exceeds tolerance at maximal cutoff " + std::to_string(hi),
                                  res.value, bound);
      }
    }
    lo = hi;
    hi *= 2.0;
  }
}

enum class Trig { cosine, sine };

struct OscillatoryOptions {
  Tolerance tol{1e-8, 0.0};
  std::size_t max_panels = 200000;
  std::size_t averaging_depth = 12;
};

/// ∫_a^∞ g(ξ) trig(ξ r) dξ for r > 0. The range is cut at the zeros of the
/// trigonometric factor; the panel integrals form an (eventually) alternating
/// series whose partial sums are accelerated by repeated averaging. Summation
/// stops early once `abs_tail(ξ)` (a bound on ∫_ξ^∞ |g|) drops below tolerance.
template <class F, class AbsTail>
TailResult oscillatory_transform(F&& g, double r, Trig trig, double a, AbsTail&& abs_tail,
                                 const OscillatoryOptions& opt = {}) {
  if (!(r > 0.0)) throw DomainError("oscillatory_transform: frequency must be positive");
  const double half_period = std::numbers::pi / r;
  const double phase = trig == Trig::cosine ? 0.5 : 0.0;
  auto integrand = [&](double x) {
    return g(x) * (trig == Trig::cosine ? std::cos(x * r) : std::sin(x * r));
  };
  // First zero strictly above a.
  double j = std::floor(a / half_period - phase) + 1.0;
  double lo = a;
  double hi = (j + phase) * half_period;
  AdaptiveOptions aopt;
  aopt.tol = {opt.tol.abs * 1e-3, opt.tol.rel * 1e-3};
  aopt.max_depth = 50;

  TailResult res;
  std::vector<double> partial;
  partial.reserve(1024);
  double sum = 0.0;
  double prev_acc = std::numeric_limits<double>::quiet_NaN();
  double prev_diff = std::numeric_limits<double>::infinity();
  auto accelerate = [&]() {
    const std::size_t m = std::min(opt.averaging_depth, partial.size() - 1);
    std::vector<double> w(partial.end() - static_cast<std::ptrdiff_t>(m + 1), partial.end());
    for (std::size_t level = 0; level < m; ++level)
      for (std::size_t i = 0; i + 1 < w.size() - level; ++i) w[i] = 0.5 * (w[i] + w[i + 1]);
    return w[0];
  };
  for (std::size_t k = 0; k < opt.max_panels; ++k) {
    const Result part = adaptive(integrand, lo, hi, aopt);
    sum += part.value;
    res.error += part.error;
    res.evaluations += part.evaluations;
    partial.push_back(sum);
    const double bound = abs_tail(hi);
    if (bound <= opt.tol.target(sum)) {
      res.value = sum;
      res.tail_bound = bound;
      res.cutoff = hi;
      return res;
    }
    if (partial.size() > opt.averaging_depth + 2) {
      const double acc = accelerate();
      const double diff = std::abs(acc - prev_acc);
      if (diff <= opt.tol.target(acc) && prev_diff <= opt.tol.target(acc)) {
        res.value = acc;
        res.tail_bound = std::max(diff, prev_diff);
        res.cutoff = hi;
        return res;
      }
      prev_diff = diff;
      prev_acc = acc;
    }
    lo = hi;
    hi += half_period;
  }
  throw NonConvergenceError("oscillatory transform did not converge", sum, prev_diff);
}

}  // namespace dynkin::quad
