#pragma once

// Monte Carlo for the symmetrized stable process X̄ (ReΨ̄ = 2c|ξ|^β) and its
// box-kernel local times
//
//   L̂^y_T = (Δt/2ε) Σ_k w_k 1{|X̄_{kΔt} − y| < ε},
//
// with unit weights except a fractional last step when T is not on the grid.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dynkin/core/csv.hpp"
#include "dynkin/core/errors.hpp"
#include "dynkin/core/parallel.hpp"
#include "dynkin/core/quadrature.hpp"
#include "dynkin/core/rng.hpp"
#include "dynkin/core/stats.hpp"
#include "dynkin/levy_model.hpp"
#include "dynkin/potential_kernel.hpp"

namespace dynkin {

struct PathConfig {
  double beta = 2.0;
  /// ReΨ = c|ξ|^β for the process, so X̄ has exponent 2c|ξ|^β.
  double c = 1.0;
  double dt = 1e-3;
  double horizon = 1.0;
  double x0 = 0.0;
  /// Local-time bandwidth; 0 selects Δt^{1/β}.
  double eps = 0.0;
  std::uint64_t seed = 0;

  double bandwidth() const { return eps > 0.0 ? eps : std::pow(dt, 1.0 / beta); }

  void validate() const {
    if (!(beta > 1.0 && beta <= 2.0))
      throw DomainError("local times need beta in (1, 2]; for beta <= 1 the Dalang integral diverges");
    if (!(c > 0.0 && std::isfinite(c))) throw DomainError("path scale c must be positive");
    if (!(dt > 0.0 && std::isfinite(dt))) throw DomainError("path step dt must be positive");
    if (!(horizon >= 0.0 && std::isfinite(horizon))) throw DomainError("path horizon must be >= 0");
    if (!std::isfinite(x0)) throw DomainError("path start must be finite");
    if (!(eps >= 0.0 && std::isfinite(eps))) throw DomainError("bandwidth must be positive");
  }

  /// The process whose symmetrization is simulated.
  LevyModel model() const {
    return beta == 2.0 ? LevyModel::brownian(c) : LevyModel::stable(beta, c);
  }
};

/// One increment of X̄ over Δt: symmetric stable with E e^{iξX} = e^{−2cΔt|ξ|^β}
/// (Chambers–Mallows–Stuck; √(4cΔt)·N for β = 2).
inline double stable_increment(double beta, double c, double dt, RngStream& rng) {
  if (beta == 2.0) return std::sqrt(4.0 * c * dt) * rng.normal();
  const double v = std::numbers::pi * (rng.uniform() - 0.5);
  const double w = -std::log(rng.uniform());
  const double scale = std::pow(2.0 * c * dt, 1.0 / beta);
  if (beta == 1.0) return scale * std::tan(v);
  const double s = std::sin(beta * v) / std::pow(std::cos(v), 1.0 / beta) *
                   std::pow(std::cos((1.0 - beta) * v) / w, (1.0 - beta) / beta);
  return scale * s;
}

/// Median of |S| for E e^{iξS} = e^{−|ξ|^β}, from
/// P(|S| ≤ x) = (2/π)∫₀^∞ sin(xξ) e^{−ξ^β} dξ/ξ.
inline double standard_stable_abs_median(double beta) {
  if (!(beta > 0.0 && beta <= 2.0)) throw DomainError("beta must lie in (0,2]");
  if (beta == 2.0) return std::sqrt(2.0) * 0.67448975019608171;
  if (beta == 1.0) return 1.0;
  static std::mutex mutex;
  static std::map<double, double> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(beta); it != cache.end()) return it->second;
  }
  const double top = std::pow(45.0, 1.0 / beta);
  auto cdf = [&](double x) {
    auto f = [&](double xi) {
      return xi == 0.0 ? x : std::sin(x * xi) * std::exp(-std::pow(xi, beta)) / xi;
    };
    quad::AdaptiveOptions opt;
    opt.tol = {1e-13, 1e-12};
    return 2.0 / std::numbers::pi * quad::adaptive(f, 0.0, top, opt).value;
  };
  double lo = 1e-3, hi = 1e3;
  for (int i = 0; i < 80; ++i) {
    const double mid = std::sqrt(lo * hi);
    (cdf(mid) < 0.5 ? lo : hi) = mid;
  }
  const double median = std::sqrt(lo * hi);
  std::lock_guard lock(mutex);
  cache.emplace(beta, median);
  return median;
}

inline double median_abs_increment(const PathConfig& cfg) {
  return std::pow(2.0 * cfg.c * cfg.dt, 1.0 / cfg.beta) * standard_stable_abs_median(cfg.beta);
}

/// Rejects ε ≥ 2·median|increment| (over-smoothing) and ε < median/8 (below
/// the step resolution).
inline void validate_bandwidth(const PathConfig& cfg, double eps) {
  const double m = median_abs_increment(cfg);
  if (!(eps > 0.0)) throw DomainError("local-time bandwidth must be positive");
  if (eps >= 2.0 * m)
    throw DomainError("bandwidth " + csv::format(eps) + " over-smooths the path: it must stay below "
                      "2*median|increment| = " + csv::format(2.0 * m));
  if (eps < m / 8.0)
    throw DomainError("bandwidth " + csv::format(eps) + " is below the step resolution "
                      "median|increment|/8 = " + csv::format(m / 8.0));
}

/// X̄ at times kΔt, k = 0..n; the last step carries weight `last_weight`
/// (fraction of Δt inside the horizon).
struct Path {
  PathConfig cfg;
  std::uint32_t index = 0;
  std::vector<double> x;
  double last_weight = 1.0;

  double horizon() const {
    if (x.size() < 2) return 0.0;
    return (static_cast<double>(x.size() - 2) + last_weight) * cfg.dt;
  }
};

namespace detail {

struct StepPlan {
  std::uint64_t steps = 0;
  double last_weight = 1.0;
};

inline StepPlan plan_steps(double horizon, double dt) {
  if (horizon <= 0.0) return {0, 1.0};
  const double q = horizon / dt;
  auto n = static_cast<std::uint64_t>(std::ceil(q - 1e-9));
  if (n == 0) n = 1;
  return {n, std::clamp(q - static_cast<double>(n - 1), 0.0, 1.0)};
}

// Streams X̄ over a planned horizon, calling visit(x, weight) at each left
// endpoint.
template <class Visit>
void walk(const PathConfig& cfg, std::uint32_t index, double x0, const StepPlan& plan,
          Visit&& visit) {
  RngStream rng(cfg.seed, StreamDomain::path_increments, index);
  double x = x0;
  for (std::uint64_t k = 0; k < plan.steps; ++k) {
    const bool last = k + 1 == plan.steps;
    visit(x, last ? plan.last_weight : 1.0);
    if (!last) x += stable_increment(cfg.beta, cfg.c, cfg.dt, rng);
  }
}

inline double exponential_time(const PathConfig& cfg, std::uint32_t index, double alpha) {
  RngStream rng(cfg.seed, StreamDomain::exit_times, index);
  return -std::log(rng.uniform()) / alpha;
}

}  // namespace detail

/// Path `index` of cfg up to cfg.horizon.
inline Path simulate_path(const PathConfig& cfg, std::uint32_t index = 0) {
  cfg.validate();
  const auto plan = detail::plan_steps(cfg.horizon, cfg.dt);
  Path p{cfg, index, {}, plan.last_weight};
  if (plan.steps == 0) {
    p.x = {cfg.x0};
    return p;
  }
  p.x.reserve(plan.steps + 1);
  RngStream rng(cfg.seed, StreamDomain::path_increments, index);
  double x = cfg.x0;
  p.x.push_back(x);
  for (std::uint64_t k = 0; k < plan.steps; ++k) {
    x += stable_increment(cfg.beta, cfg.c, cfg.dt, rng);
    p.x.push_back(x);
  }
  return p;
}

struct LocalTimeEstimate {
  double y = 0.0;
  double value = 0.0;
  double eps = 0.0;
  std::size_t paths = 1;
};

/// L̂^y over steps [first, last) of the path (default: the whole path).
inline LocalTimeEstimate local_time(const Path& path, double y, double eps,
                                    std::size_t first = 0,
                                    std::optional<std::size_t> last = std::nullopt) {
  validate_bandwidth(path.cfg, eps);
  const std::size_t steps = path.x.empty() ? 0 : path.x.size() - 1;
  const std::size_t end = std::min(last.value_or(steps), steps);
  double count = 0.0;
  for (std::size_t k = first; k < end; ++k)
    if (std::abs(path.x[k] - y) < eps) count += k + 1 == steps ? path.last_weight : 1.0;
  return {y, path.cfg.dt / (2.0 * eps) * count, eps, 1};
}

/// A Monte Carlo mean with its error budget. `eps_bias` is the exact effect
/// of box smoothing on the target (E L̂ → ε-average of ū as Δt → 0);
/// `dt_bias` the first-order left-endpoint counting error.
struct ResolventCheck {
  double estimate = 0.0;
  double stderr_value = 0.0;
  double exact = 0.0;
  double smoothed = 0.0;
  double eps_bias = 0.0;
  double dt_bias = 0.0;
  double eps = 0.0;
  double dt = 0.0;
  std::size_t paths = 0;
};

namespace detail {

// (1/2ε) ∫_{r−ε}^{r+ε} ū_α(s) ds, split at the cusp s = 0.
inline double smoothed_potential(const LevyModel& model, double alpha, double r, double eps) {
  auto u = [&](double s) { return u_alpha(model, alpha, s, KernelOptions{{1e-11, 1e-9}}); };
  double a = r - eps, b = r + eps, acc = 0.0;
  if (a < 0.0 && b > 0.0) {
    acc = quad::gauss_legendre16(u, a, 0.0) + quad::gauss_legendre16(u, 0.0, b);
  } else {
    acc = quad::gauss_legendre16(u, a, b);
  }
  return acc / (2.0 * eps);
}

}  // namespace detail

/// Mean of L̂^y_{S(α)} over paths started at x, S(α) ~ Exp(α) independent of
/// the path. The resolvent identity gives E L^y_{S(α)} = α∫e^{−αs}E L_s ds = ū_α(x−y),
/// which is what `exact` holds.
inline ResolventCheck resolvent_check(const PathConfig& cfg, double alpha, double x, double y,
                                      std::size_t paths, unsigned threads = 0) {
  cfg.validate();
  if (!(alpha > 0.0)) throw DomainError("resolvent check needs alpha > 0");
  if (paths < 2) throw DomainError("resolvent check needs at least 2 paths");
  const double eps = cfg.bandwidth();
  validate_bandwidth(cfg, eps);
  auto work = [&](std::size_t lo, std::size_t hi) {
    RunningStats acc;
    for (std::size_t p = lo; p < hi; ++p) {
      const auto idx = static_cast<std::uint32_t>(p);
      const auto plan = detail::plan_steps(detail::exponential_time(cfg, idx, alpha), cfg.dt);
      double count = 0.0;
      detail::walk(cfg, idx, x, plan, [&](double xk, double w) {
        if (std::abs(xk - y) < eps) count += w;
      });
      acc.add(cfg.dt / (2.0 * eps) * count);
    }
    return acc;
  };
  auto merge = [](RunningStats& a, const RunningStats& b) { a.merge(b); };
  const auto acc = parallel_blocks<RunningStats>(paths, 256, work, merge, threads);

  const LevyModel model = cfg.model();
  ResolventCheck out;
  out.estimate = acc.mean();
  out.stderr_value = acc.stderr_mean();
  out.exact = u_alpha(model, alpha, x - y);
  out.smoothed = detail::smoothed_potential(model, alpha, x - y, eps);
  out.eps_bias = out.smoothed - out.exact;
  out.dt_bias = std::abs(x - y) < eps ? cfg.dt / (4.0 * eps) : 0.0;
  out.eps = eps;
  out.dt = cfg.dt;
  out.paths = paths;
  return out;
}

/// E^x L̂^y_t over a fixed horizon t.
struct LocalTimeMean {
  double value = 0.0;
  double stderr_value = 0.0;
  std::size_t paths = 0;
};

inline LocalTimeMean expected_local_time(const PathConfig& cfg, double x, double y, double t,
                                         std::size_t paths, unsigned threads = 0) {
  cfg.validate();
  if (paths < 2) throw DomainError("expected local time needs at least 2 paths");
  const double eps = cfg.bandwidth();
  validate_bandwidth(cfg, eps);
  const auto plan = detail::plan_steps(t, cfg.dt);
  auto work = [&](std::size_t lo, std::size_t hi) {
    RunningStats acc;
    for (std::size_t p = lo; p < hi; ++p) {
      double count = 0.0;
      detail::walk(cfg, static_cast<std::uint32_t>(p), x, plan, [&](double xk, double w) {
        if (std::abs(xk - y) < eps) count += w;
      });
      acc.add(cfg.dt / (2.0 * eps) * count);
    }
    return acc;
  };
  auto merge = [](RunningStats& a, const RunningStats& b) { a.merge(b); };
  const auto acc = parallel_blocks<RunningStats>(paths, 256, work, merge, threads);
  return {acc.mean(), acc.stderr_mean(), paths};
}

/// E^a[L^a_S − L^b_S | S ≥ t] against E^a[· | S < t], S = S(α).
struct CorollaryResult {
  double alpha = 0.0;
  double t = 0.0;
  double a = 0.0;
  double b = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  std::size_t n_late = 0;
  std::size_t n_early = 0;
  std::size_t paths = 0;
  double eps = 0.0;
  double dt = 0.0;
  bool pass = false;
};

inline constexpr std::size_t kMinConditioningHits = 500;

inline CorollaryResult corollary_test(const PathConfig& cfg, double alpha, double a, double b,
                                      double t, std::size_t paths, unsigned threads = 0) {
  cfg.validate();
  if (!(alpha > 0.0)) throw DomainError("corollary test needs alpha > 0");
  if (!(t > 0.0)) throw DomainError("corollary test needs t > 0");
  const double eps = cfg.bandwidth();
  validate_bandwidth(cfg, eps);
  struct Bins {
    RunningStats late, early;
  };
  auto work = [&](std::size_t lo, std::size_t hi) {
    Bins bins;
    for (std::size_t p = lo; p < hi; ++p) {
      const auto idx = static_cast<std::uint32_t>(p);
      const double s = detail::exponential_time(cfg, idx, alpha);
      double ca = 0.0, cb = 0.0;
      detail::walk(cfg, idx, a, detail::plan_steps(s, cfg.dt), [&](double xk, double w) {
        if (std::abs(xk - a) < eps) ca += w;
        if (std::abs(xk - b) < eps) cb += w;
      });
      const double diff = cfg.dt / (2.0 * eps) * (ca - cb);
      (s >= t ? bins.late : bins.early).add(diff);
    }
    return bins;
  };
  auto merge = [](Bins& x, const Bins& y) {
    x.late.merge(y.late);
    x.early.merge(y.early);
  };
  const auto bins = parallel_blocks<Bins>(paths, 256, work, merge, threads);

  const double p_late = std::exp(-alpha * t);
  for (const auto& [n, name] : {std::pair{bins.late.count(), "S >= t"},
                               std::pair{bins.early.count(), "S < t"}}) {
    if (n < kMinConditioningHits)
      throw DomainError(std::string("conditioning bin ") + name + " received " + std::to_string(n) +
                        " paths (need " + std::to_string(kMinConditioningHits) +
                        "); increase paths or choose t nearer ln(2)/alpha, where P(S >= t) = " +
                        csv::format(p_late));
  }
  CorollaryResult r;
  r.alpha = alpha;
  r.t = t;
  r.a = a;
  r.b = b;
  r.lhs = bins.late.mean();
  r.rhs = bins.early.mean();
  r.lhs_se = bins.late.stderr_mean();
  r.rhs_se = bins.early.stderr_mean();
  r.n_late = bins.late.count();
  r.n_early = bins.early.count();
  r.paths = paths;
  r.eps = eps;
  r.dt = cfg.dt;
  r.pass = r.lhs <= r.rhs + 2.0 * std::hypot(r.lhs_se, r.rhs_se);
  return r;
}

inline void write_corollary_csv(std::ostream& os, const csv::Header& header,
                                const std::vector<CorollaryResult>& rows) {
  header.write(os);
  os << "alpha,t,a,b,lhs,rhs,lhs_se,rhs_se,paths,eps,dt,verdict\n";
  for (const auto& r : rows)
    csv::write_row(os, {csv::format(r.alpha), csv::format(r.t), csv::format(r.a),
                        csv::format(r.b), csv::format(r.lhs), csv::format(r.rhs),
                        csv::format(r.lhs_se), csv::format(r.rhs_se), std::to_string(r.paths),
                        csv::format(r.eps), csv::format(r.dt), r.pass ? "pass" : "fail"});
}

}  // namespace dynkin
