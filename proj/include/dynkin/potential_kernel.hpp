#pragma once

// Spectral kernels of the symmetrized process X̄ (exponent 2ReΨ) and the
// covariances of the fields built from them:
//
//   p̄_t(r)  = (1/π) ∫₀^∞ cos(ξr) e^{-2tReΨ} dξ
//   ū_α(r)  = (1/π) ∫₀^∞ cos(ξr) / λ dξ,                λ = α + 2ReΨ(ξ)
//   Var V   = (1/π) ∫₀^∞ (1 - e^{-λt}) / λ dξ
//   Var S   = (1/π) ∫₀^∞ e^{-λt} / λ dξ
//   Var U   = (1/π) ∫₀^∞ (1 - e^{-2tReΨ}) / (2ReΨ) dξ
//
// Each is (1/π)∫ g(ξ) cos(ξr) dξ for an envelope g ≥ 0. At r = 0 the integral is
// closed at a dyadic cutoff Ξ with an analytic tail estimate; otherwise the
// cosine transform is summed over half periods with acceleration.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "dynkin/core/diagnostics.hpp"
#include "dynkin/core/errors.hpp"
#include "dynkin/core/quadrature.hpp"
#include "dynkin/levy_model.hpp"

namespace dynkin {

enum class Kernel { potential, pbar, var_v, var_s, var_u };

inline const char* to_string(Kernel k) {
  switch (k) {
    case Kernel::potential:
      return "potential";
    case Kernel::pbar:
      return "pbar";
    case Kernel::var_v:
      return "varV";
    case Kernel::var_s:
      return "varS";
    case Kernel::var_u:
      return "varU";
  }
  return "?";
}

/// Which kernel, with its parameters. `derivative` (var_s only) weights the
/// spectrum by ξ^{2n}: the covariance of the n-th derivative of S_α(t,·).
struct KernelSpec {
  Kernel kernel = Kernel::potential;
  double alpha = 0.0;
  double t = 0.0;
  int derivative = 0;

  static KernelSpec potential(double alpha) { return {Kernel::potential, alpha, 0.0, 0}; }
  static KernelSpec pbar(double t) { return {Kernel::pbar, 0.0, t, 0}; }
  static KernelSpec var_v(double alpha, double t) { return {Kernel::var_v, alpha, t, 0}; }
  static KernelSpec var_s(double alpha, double t, int n = 0) { return {Kernel::var_s, alpha, t, n}; }
  static KernelSpec var_u(double t) { return {Kernel::var_u, 0.0, t, 0}; }

  bool uses_alpha() const noexcept {
    return kernel == Kernel::potential || kernel == Kernel::var_v || kernel == Kernel::var_s;
  }
  bool uses_time() const noexcept { return kernel != Kernel::potential; }

  void validate() const {
    if (uses_alpha() && !(alpha > 0.0 && std::isfinite(alpha)))
      throw DomainError(std::string(to_string(kernel)) + " kernel needs alpha > 0");
    if (uses_time() && !(t > 0.0 && std::isfinite(t)))
      throw DomainError(std::string(to_string(kernel)) + " kernel needs t > 0");
    if (derivative < 0 || (derivative > 0 && kernel != Kernel::var_s))
      throw DomainError("derivative order applies to the varS kernel only and must be >= 0");
  }

  std::string describe() const {
    std::string s = to_string(kernel);
    s += "(";
    if (uses_alpha()) s += "alpha=" + std::to_string(alpha);
    if (uses_alpha() && uses_time()) s += ",";
    if (uses_time()) s += "t=" + std::to_string(t);
    if (derivative > 0) s += ",n=" + std::to_string(derivative);
    return s + ")";
  }
};

/// A kernel value with its error budget: `error` = quadrature error + tail
/// uncertainty, `cutoff` = Ξ where the tail was closed (or the last panel
/// edge of an accelerated oscillatory sum).
struct KernelValue {
  double value = 0.0;
  double error = 0.0;
  double cutoff = 0.0;
  double tail = 0.0;
  std::size_t evaluations = 0;
};

/// g(ξ) given r = ReΨ(ξ) already evaluated.
inline double envelope_from_exponent(const KernelSpec& spec, double xi, double r) {
  switch (spec.kernel) {
    case Kernel::potential:
      return 1.0 / (spec.alpha + 2.0 * r);
    case Kernel::pbar:
      return std::exp(-2.0 * spec.t * r);
    case Kernel::var_v: {
      const double lambda = spec.alpha + 2.0 * r;
      return -std::expm1(-lambda * spec.t) / lambda;
    }
    case Kernel::var_s: {
      const double lambda = spec.alpha + 2.0 * r;
      const double base = std::exp(-lambda * spec.t) / lambda;
      return spec.derivative == 0 ? base : std::pow(xi * xi, spec.derivative) * base;
    }
    case Kernel::var_u: {
      const double x = 2.0 * spec.t * r;
      // removable singularity at ReΨ = 0
      if (x < 1e-6) return spec.t * (1.0 - 0.5 * x);
      return -std::expm1(-x) / (2.0 * r);
    }
  }
  return 0.0;
}

/// g(ξ) = 2π·(spectral density); nonnegative, even in ξ.
inline double kernel_envelope(const LevyModel& model, const KernelSpec& spec, double xi) {
  return envelope_from_exponent(spec, xi, model.re_psi(xi));
}

/// ∫_Ξ^∞ g dξ ≈ estimate, with |error| ≤ uncertainty.
struct TailEstimate {
  double estimate = 0.0;
  double uncertainty = kInfinity;
};

namespace detail {

// ∫_Ξ^∞ ξ^m e^{-2tReΨ} dξ ≤ Ξ^{m+1} e^{-2tR}/(2tR·p - m - 1) when ReΨ grows at
// least like a power of index p beyond Ξ.
inline double gaussian_tail_bound(double cutoff, double re, double p, double t, int m) {
  const double denom = 2.0 * t * re * p - (m + 1.0);
  if (!(re > 0.0) || !(p > 0.0) || !(denom > 0.0)) return kInfinity;
  const double log_bound = (m + 1.0) * std::log(cutoff) - 2.0 * t * re - std::log(denom);
  return std::exp(log_bound);
}

}  // namespace detail

inline TailEstimate kernel_tail(const LevyModel& model, const KernelSpec& spec, double cutoff) {
  const double re = model.re_psi(cutoff);
  const double p = model.local_index(cutoff);
  switch (spec.kernel) {
    case Kernel::potential:
    case Kernel::var_v: {
      // 1/(2R)(1 - α/(2R)) ≤ 1/(α + 2R) ≤ 1/(2R), R nondecreasing beyond Ξ
      const double inv = model.inverse_tail(cutoff);
      if (!std::isfinite(inv) || !(re > 0.0)) return {};
      const double half_width = inv * std::min(1.0, spec.alpha / (2.0 * re)) / 2.0;
      double unc = half_width;
      if (spec.kernel == Kernel::var_v)
        unc += std::exp(-spec.alpha * spec.t) / (2.0 * re) *
               detail::gaussian_tail_bound(cutoff, re, p, spec.t, 0);
      return {inv - half_width, unc};
    }
    case Kernel::var_u: {
      const double inv = model.inverse_tail(cutoff);
      if (!std::isfinite(inv)) return {};
      const double half_width = 0.5 * inv * std::exp(-2.0 * spec.t * re);
      return {inv - half_width, half_width};
    }
    case Kernel::pbar:
      return {0.0, detail::gaussian_tail_bound(cutoff, re, p, spec.t, 0)};
    case Kernel::var_s: {
      if (!(re > 0.0)) return {};
      const double b = detail::gaussian_tail_bound(cutoff, re, p, spec.t, 2 * spec.derivative);
      return {0.0, std::exp(-spec.alpha * spec.t) / (2.0 * re) * b};
    }
  }
  return {};
}

struct KernelOptions {
  quad::Tolerance tol{1e-8, 0.0};
  double min_cutoff = 0x1.0p10;
  double max_cutoff = 0x1.0p60;
};

namespace detail {

// ∫₀^∞ g over [0,1], [1,2], [2,4], ... closed by `tail` at the first dyadic
// cutoff ≥ min_cutoff whose uncertainty meets the tolerance.
template <class G, class Tail>
KernelValue cutoff_integral(G&& g, Tail&& tail, const KernelOptions& opt, const std::string& what) {
  KernelValue out;
  quad::AdaptiveOptions aopt;
  aopt.tol = {opt.tol.abs * 1e-3, opt.tol.rel * 1e-3};
  aopt.max_depth = 45;
  double sum = 0.0;
  double lo = 0.0;
  double hi = 1.0;
  for (;;) {
    const auto part = quad::adaptive(g, lo, hi, aopt);
    sum += part.value;
    out.error += part.error;
    out.evaluations += part.evaluations;
    if (hi >= opt.min_cutoff) {
      const TailEstimate te = tail(hi);
      if (te.uncertainty <= opt.tol.target(sum + te.estimate)) {
        out.value = sum + te.estimate;
        out.error += te.uncertainty;
        out.tail = te.estimate;
        out.cutoff = hi;
        return out;
      }
      if (hi >= opt.max_cutoff) {
        throw NonConvergenceError(what + ": tail uncertainty " + std::to_string(te.uncertainty) +
                                      " exceeds tolerance at the maximal cutoff " +
                                      std::to_string(hi) +
                                      " (the Dalang integral may diverge for this model)",
                                  sum, te.uncertainty);
      }
    }
    lo = hi;
    hi *= 2.0;
  }
}

}  // namespace detail

/// (1/π) ∫₀^∞ g(ξ) cos(ξr) dξ for the chosen kernel.
inline KernelValue kernel_value(const LevyModel& model, const KernelSpec& spec, double r,
                                const KernelOptions& opt = {}) {
  spec.validate();
  if (!std::isfinite(r)) throw DomainError("kernel lag must be finite");
  r = std::abs(r);
  using std::numbers::pi;
  // tolerances refer to the final (1/π-scaled) value
  KernelOptions scaled = opt;
  scaled.tol.abs = opt.tol.abs * pi;
  auto g = [&](double xi) { return kernel_envelope(model, spec, xi); };
  auto tail = [&](double cutoff) { return kernel_tail(model, spec, cutoff); };
  const std::string what = spec.describe() + " for " + model.describe();

  KernelValue out;
  if (r == 0.0) {
    out = detail::cutoff_integral(g, tail, scaled, what);
  } else {
    quad::OscillatoryOptions oopt;
    oopt.tol = scaled.tol;
    auto abs_tail = [&](double xi) {
      const auto te = tail(xi);
      return te.estimate + te.uncertainty;
    };
    try {
      const auto res = quad::oscillatory_transform(g, r, quad::Trig::cosine, 0.0, abs_tail, oopt);
      out.value = res.value;
      out.error = res.error + res.tail_bound;
      out.cutoff = res.cutoff;
      out.tail = res.tail_bound;
      out.evaluations = res.evaluations;
    } catch (const NonConvergenceError& e) {
      throw NonConvergenceError(what + " at r=" + std::to_string(r) + ": " + e.what(),
                                e.partial_value() / pi, e.error_estimate() / pi);
    }
  }
  out.value /= pi;
  out.error /= pi;
  out.tail /= pi;
  return out;
}

/// ū_α(r) = (1/π) ∫₀^∞ cos(ξr)/(α + 2ReΨ(ξ)) dξ.
inline double u_alpha(const LevyModel& model, double alpha, double r,
                      const KernelOptions& opt = {}) {
  return kernel_value(model, KernelSpec::potential(alpha), r, opt).value;
}

/// p̄_t(r) = (1/π) ∫₀^∞ cos(ξr) e^{-2tReΨ(ξ)} dξ, clamped at 0 (with a warning)
/// when round-off leaves it slightly negative.
inline double pbar_density(const LevyModel& model, double t, double r,
                           const KernelOptions& opt = {}) {
  const auto kv = kernel_value(model, KernelSpec::pbar(t), r, opt);
  if (kv.value >= 0.0) return kv.value;
  const double slack = std::max(opt.tol.target(0.0), kv.error);
  if (kv.value > -slack) {
    warn("pbar_density(t=" + std::to_string(t) + ", r=" + std::to_string(r) +
         ") raw value " + std::to_string(kv.value) + " clamped to 0");
    return 0.0;
  }
  throw NonConvergenceError("pbar_density is negative beyond its error budget", kv.value,
                            kv.error);
}

/// Parameters of a variance-profile query. `tolerance` is relative.
struct KernelQuery {
  double alpha = 1.0;
  double t = 1.0;
  double tolerance = 1e-6;

  void validate() const {
    if (!(alpha > 0.0 && std::isfinite(alpha))) throw DomainError("kernel query needs alpha > 0");
    if (!(t > 0.0 && std::isfinite(t))) throw DomainError("kernel query needs t > 0");
    if (!(tolerance > 0.0)) throw DomainError("kernel query needs tolerance > 0");
  }
};

struct VarianceProfile {
  double var_u = 0.0;
  double var_v = 0.0;
  double var_s = 0.0;
  double var_eta = 0.0;
  double err_u = 0.0;
  double err_v = 0.0;
  double err_s = 0.0;
  double err_eta = 0.0;
  double cutoff = 0.0;  // largest cutoff used
};

inline VarianceProfile variance_profile(const LevyModel& model, const KernelQuery& q) {
  q.validate();
  KernelOptions opt;
  opt.tol = {1e-15, q.tolerance};
  const auto u = kernel_value(model, KernelSpec::var_u(q.t), 0.0, opt);
  const auto v = kernel_value(model, KernelSpec::var_v(q.alpha, q.t), 0.0, opt);
  const auto s = kernel_value(model, KernelSpec::var_s(q.alpha, q.t), 0.0, opt);
  const auto e = kernel_value(model, KernelSpec::potential(q.alpha), 0.0, opt);
  return {u.value, v.value,  s.value, e.value, u.error,
          v.error, s.error, e.error, std::max({u.cutoff, v.cutoff, s.cutoff, e.cutoff})};
}

/// Finite signed measure Σ cᵢ δ_{xᵢ}; duplicate locations are merged.
class AtomicMeasure {
 public:
  struct Atom {
    double x;
    double c;
  };

  explicit AtomicMeasure(const std::vector<Atom>& atoms) {
    if (atoms.empty()) throw DomainError("atomic measure needs at least one atom");
    std::map<double, double> merged;
    for (const auto& a : atoms) {
      if (!std::isfinite(a.x) || !std::isfinite(a.c))
        throw DomainError("atomic measure needs finite locations and weights");
      merged[a.x] += a.c;
    }
    for (const auto& [x, c] : merged)
      if (c != 0.0) atoms_.push_back({x, c});
    if (atoms_.empty()) throw DomainError("atomic measure has zero total variation");
  }

  static AtomicMeasure dirac(double x, double c = 1.0) { return AtomicMeasure({{x, c}}); }
  /// δ_a − δ_b
  static AtomicMeasure dipole(double a, double b) { return AtomicMeasure({{a, 1.0}, {b, -1.0}}); }

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }

  double total_variation() const noexcept {
    double s = 0.0;
    for (const auto& a : atoms_) s += std::abs(a.c);
    return s;
  }

  /// μ̂(ξ) = Σ cⱼ e^{iξxⱼ}
  std::complex<double> fourier(double xi) const {
    std::complex<double> s = 0.0;
    for (const auto& a : atoms_) s += a.c * std::polar(1.0, xi * a.x);
    return s;
  }

 private:
  std::vector<Atom> atoms_;
};

/// Double sum over distinct lags, or the spectral integral (1/π)∫ g |μ̂|². The
/// spectral route needs a rapidly decaying envelope (pbar, varS).
enum class QuadraticRoute { double_sum, spectral };

inline KernelValue quadratic_form(const LevyModel& model, const AtomicMeasure& mu,
                                  const KernelSpec& spec,
                                  QuadraticRoute route = QuadraticRoute::double_sum,
                                  const KernelOptions& opt = {}) {
  spec.validate();
  const auto& atoms = mu.atoms();
  if (route == QuadraticRoute::double_sum) {
    std::map<double, double> lag_weight;
    for (const auto& a : atoms)
      for (const auto& b : atoms) lag_weight[std::abs(a.x - b.x)] += a.c * b.c;
    KernelValue out;
    for (const auto& [lag, w] : lag_weight) {
      if (w == 0.0) continue;
      const auto k = kernel_value(model, spec, lag, opt);
      out.value += w * k.value;
      out.error += std::abs(w) * k.error;
      out.cutoff = std::max(out.cutoff, k.cutoff);
      out.evaluations += k.evaluations;
    }
    return out;
  }
  if (spec.kernel != Kernel::pbar && spec.kernel != Kernel::var_s)
    throw DomainError("spectral quadratic form supports the pbar and varS kernels only");
  using std::numbers::pi;
  const double tv2 = mu.total_variation() * mu.total_variation();
  auto g = [&](double xi) { return kernel_envelope(model, spec, xi) * std::norm(mu.fourier(xi)); };
  auto tail = [&](double cutoff) {
    const auto te = kernel_tail(model, spec, cutoff);
    return TailEstimate{0.0, tv2 * (te.estimate + te.uncertainty)};
  };
  KernelOptions scaled = opt;
  scaled.tol.abs = opt.tol.abs * pi;
  auto out = detail::cutoff_integral(g, tail, scaled, "spectral " + spec.describe());
  out.value /= pi;
  out.error /= pi;
  return out;
}

}  // namespace dynkin
