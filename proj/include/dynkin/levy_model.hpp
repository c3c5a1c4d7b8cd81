#pragma once

// Symmetric Lévy processes on the line, described by the real part of their
// characteristic exponent,
//
//     E exp(iξX_t) = exp(-tΨ(ξ)),   ReΨ(ξ) = σ²ξ²/2 + ∫(1 - cos zξ) ν(dz),
//
// together with Feller's functions K and G of the Lévy measure, the averaged
// exponent R(ξ) = ξ⁻¹∫₀^ξ ReΨ, and numerical checks of the integrability and
// growth conditions used by the heat/cable equations.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dynkin/core/csv.hpp"
#include "dynkin/core/errors.hpp"
#include "dynkin/core/quadrature.hpp"

namespace dynkin {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Density of a symmetric Lévy measure on (0, ∞), extended by ρ(-z) = ρ(z).
///
/// Both supported families are piecewise power laws: a single segment
/// C z^{-1-β} on [z_min, z_max], or tabulated nodes joined by log-log
/// interpolation (zero outside the table).
class LevyMeasure {
 public:
  struct Segment {
    double lo;
    double hi;  // may be +inf
    double scale;
    double index;  // ρ(z) = scale · z^{-1-index} on [lo, hi)
  };

  /// Quadrature values of ∫₀¹ z²ρ(z)dz and ∫₁^∞ ρ(z)dz, checked at construction.
  struct Certificate {
    double small_jump_moment = 0.0;
    double large_jump_mass = 0.0;
  };

  static LevyMeasure power_law(double scale, double index, double z_min = 0.0,
                               double z_max = kInfinity) {
    if (!(scale > 0.0)) throw DomainError("power-law Lévy density needs scale > 0");
    if (!(z_min >= 0.0) || !(z_max > z_min))
      throw DomainError("power-law Lévy density needs 0 <= z_min < z_max");
    if (!std::isfinite(index)) throw DomainError("power-law index must be finite");
    LevyMeasure m;
    m.family_ = "power_law";
    m.segments_.push_back({z_min, z_max, scale, index});
    m.certify();
    return m;
  }

  /// Nodes (z, ρ(z)) with z strictly increasing and ρ > 0.
  static LevyMeasure tabulated(std::vector<std::pair<double, double>> nodes) {
    if (nodes.size() < 2) throw DomainError("tabulated Lévy density needs at least two nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!(nodes[i].first > 0.0) || !(nodes[i].second > 0.0))
        throw DomainError("tabulated Lévy density needs z > 0 and rho > 0 at every node");
      if (i > 0 && !(nodes[i].first > nodes[i - 1].first))
        throw DomainError("tabulated Lévy density needs strictly increasing z");
    }
    LevyMeasure m;
    m.family_ = "tabulated";
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      const auto [z0, r0] = nodes[i];
      const auto [z1, r1] = nodes[i + 1];
      // log ρ linear in log z: ρ = r0 (z/z0)^s with s = -1 - index
      const double s = std::log(r1 / r0) / std::log(z1 / z0);
      const double index = -1.0 - s;
      m.segments_.push_back({z0, z1, r0 * std::pow(z0, 1.0 + index), index});
    }
    m.nodes_ = std::move(nodes);
    m.certify();
    return m;
  }

  double density(double z) const noexcept {
    z = std::abs(z);
    for (const auto& s : segments_)
      if (z >= s.lo && z < s.hi) return s.scale * std::pow(z, -1.0 - s.index);
    return 0.0;
  }

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  const std::string& family() const noexcept { return family_; }
  const std::vector<std::pair<double, double>>& nodes() const noexcept { return nodes_; }
  const Certificate& certificate() const noexcept { return certificate_; }
  double support_lower() const noexcept { return segments_.front().lo; }
  double support_upper() const noexcept { return segments_.back().hi; }

  std::vector<double> breakpoints() const {
    std::vector<double> b;
    for (const auto& s : segments_) {
      b.push_back(s.lo);
      if (std::isfinite(s.hi)) b.push_back(s.hi);
    }
    return b;
  }

  /// ∫_a^∞ ρ in closed form (each segment is a power law).
  double mass_above_closed_form(double a) const noexcept {
    double total = 0.0;
    for (const auto& s : segments_) {
      const double lo = std::max(a, s.lo);
      if (!(s.hi > lo)) continue;
      total += power_integral(s.scale, -1.0 - s.index, lo, s.hi);
    }
    return total;
  }

  /// Largest value of ρ on [a, ∞).
  double sup_density_above(double a) const noexcept {
    double sup = 0.0;
    for (const auto& s : segments_) {
      const double lo = std::max(a, s.lo);
      if (!(s.hi > lo)) continue;
      const double at_lo = s.scale * std::pow(lo, -1.0 - s.index);
      const double at_hi =
          std::isfinite(s.hi) ? s.scale * std::pow(s.hi, -1.0 - s.index) : 0.0;
      sup = std::max({sup, at_lo, at_hi});
    }
    return sup;
  }

  /// ∫₀^ε z²ρ(z)dz by quadrature.
  double second_moment_below(double eps, const quad::Tolerance& tol = {1e-14, 1e-11}) const {
    if (eps <= support_lower()) return 0.0;
    quad::GeometricOptions opt;
    opt.tol = tol;
    opt.breaks = breakpoints();
    auto f = [this](double z) { return z * z * density(z); };
    if (support_lower() > 0.0)
      return quad::adaptive_with_breaks(f, support_lower(), eps, opt.breaks, {tol, 40, 20000})
          .value;
    return quad::integrate_to_zero(f, eps, opt).value;
  }

  /// ∫_ε^∞ ρ(z)dz by quadrature.
  double mass_above(double eps, const quad::Tolerance& tol = {1e-14, 1e-11}) const {
    if (eps >= support_upper()) return 0.0;
    quad::GeometricOptions opt;
    opt.tol = tol;
    opt.breaks = breakpoints();
    auto f = [this](double z) { return density(z); };
    const double lo = std::max(eps, support_lower());
    if (std::isfinite(support_upper()))
      return quad::adaptive_with_breaks(f, lo, support_upper(), opt.breaks, {tol, 40, 20000})
          .value;
    return quad::integrate_to_infinity(f, lo, opt).value;
  }

  /// ∫₀^∞ (1 - cos zξ) ρ(z) dz for ξ > 0, split at z = 1/ξ.
  double one_minus_cos_integral(double xi, const quad::Tolerance& tol) const {
    return split_transform(xi, tol, quad::Trig::cosine);
  }

  /// ∫₀^∞ (1 - sin(zξ)/(zξ)) ρ(z) dz for ξ > 0, split at z = 1/ξ.
  double one_minus_sinc_integral(double xi, const quad::Tolerance& tol) const {
    return split_transform(xi, tol, quad::Trig::sine);
  }

 private:
  LevyMeasure() = default;

  // ∫_a^b scale·z^p dz (b may be infinite; caller guarantees convergence).
  static double power_integral(double scale, double p, double a, double b) noexcept {
    if (std::abs(p + 1.0) < 1e-14) return scale * std::log(b / a);
    if (!std::isfinite(b)) return p < -1.0 ? -scale * std::pow(a, p + 1.0) / (p + 1.0) : kInfinity;
    return scale * (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / (p + 1.0);
  }

  void certify() {
    try {
      certificate_.small_jump_moment = second_moment_below(1.0);
      certificate_.large_jump_mass = mass_above(1.0);
    } catch (const NonConvergenceError& e) {
      throw DomainError(std::string("Lévy density is not a Lévy measure (") + e.what() +
                        "): need finite ∫_0^1 z²ρ and ∫_1^∞ ρ");
    }
    if (!std::isfinite(certificate_.small_jump_moment) ||
        !std::isfinite(certificate_.large_jump_mass))
      throw DomainError("Lévy density is not a Lévy measure: need finite ∫_0^1 z²ρ and ∫_1^∞ ρ");
  }

  double split_transform(double xi, const quad::Tolerance& tol, quad::Trig trig) const {
    xi = std::abs(xi);
    if (xi == 0.0) return 0.0;
    const double split = 1.0 / xi;
    const auto breaks = breakpoints();
    // 1 - cos θ = 2 sin²(θ/2); 1 - sinc θ computed by series for small θ.
    auto kernel = [trig](double theta) {
      if (trig == quad::Trig::cosine) {
        const double s = std::sin(0.5 * theta);
        return 2.0 * s * s;
      }
      if (theta < 0.5) {
        // Σ_{k≥1} (-1)^{k+1} θ^{2k}/(2k+1)!
        const double t2 = theta * theta;
        double term = t2 / 6.0;
        double sum = 0.0;
        for (int k = 1; k <= 8; ++k) {
          sum += term;
          term *= -t2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
        }
        return sum;
      }
      return 1.0 - std::sin(theta) / theta;
    };
    auto inner_f = [&](double z) { return kernel(z * xi) * density(z); };

    double inner = 0.0;
    if (split > support_lower()) {
      const double hi = std::min(split, support_upper());
      quad::GeometricOptions gopt;
      gopt.tol = {tol.abs * 1e-2, tol.rel * 1e-2};
      gopt.breaks = breaks;
      if (support_lower() > 0.0) {
        inner = quad::adaptive_with_breaks(inner_f, support_lower(), hi, breaks,
                                           {gopt.tol, 40, 20000})
                    .value;
      } else {
        // Contributions of the dyadic panels below `hi` decay geometrically.
        inner = quad::integrate_to_zero(inner_f, hi, gopt).value;
      }
    }

    double outer = 0.0;
    const double lo = std::max(split, support_lower());
    if (lo < support_upper()) {
      const double mass = mass_above_closed_form(lo);
      // ∫_lo^∞ (1 - trig) ρ = mass - ∫_lo^∞ trig·ρ  (for sinc, trig·ρ = sin(zξ)ρ/(zξ))
      double oscillating = 0.0;
      // Second mean value bound on each monotone piece: |∫ρ trig(ξz)| ≤ 2 sup ρ / ξ.
      const double crude = 2.0 * static_cast<double>(segments_.size()) * sup_density_above(lo) / xi;
      if (crude > tol.target(mass)) oscillating = oscillating_part(xi, trig, lo, 0.1 * tol.target(mass));
      outer = mass - oscillating;
    }
    return inner + outer;
  }

  // ∫_lo^∞ trig(ξz) g(z) dz segment by segment, g = ρ (cosine) or ρ/(ξz) (sine).
  // Each segment is a power law A z^q: half-period panels up to z₀ ~ |q|/ξ, then
  // the integration-by-parts series Σ (-1)^k g^{(k)} e^{iξz}/(iξ)^{k+1}, whose
  // terms shrink like |q - k|/(ξz).
  double oscillating_part(double xi, quad::Trig trig, double lo, double budget) const {
    const bool cosine = trig == quad::Trig::cosine;
    const double half = std::numbers::pi / xi;
    double total = 0.0;
    for (const auto& seg : segments_) {
      const double a = std::max(lo, seg.lo);
      const double b = seg.hi;
      if (!(b > a)) continue;
      const double amp = cosine ? seg.scale : seg.scale / xi;
      const double q = cosine ? -1.0 - seg.index : -2.0 - seg.index;
      auto f = [&](double z) {
        return amp * std::pow(z, q) * (cosine ? std::cos(z * xi) : std::sin(z * xi));
      };
      const double z0 = std::min(b, std::max(a, 16.0 * (std::abs(q) + 2.0) / xi));
      const double panels = std::ceil((z0 - a) / half);
      quad::AdaptiveOptions aopt;
      aopt.tol = {0.5 * budget / (static_cast<double>(segments_.size()) * std::max(1.0, panels)),
                  0.0};
      aopt.max_depth = 50;
      for (double x = a; x < z0;) {
        const double y = std::min(z0, x + half);
        total += quad::adaptive(f, x, y, aopt).value;
        x = y;
      }
      if (z0 < b) {
        const double value = asymptotic_antiderivative(amp, q, xi, z0, cosine);
        const double upper = std::isfinite(b) ? asymptotic_antiderivative(amp, q, xi, b, cosine) : 0.0;
        total += upper - value;
      }
    }
    return total;
  }

  // Re or Im of Σ_k (-1)^k g^{(k)}(z) e^{iξz}/(iξ)^{k+1} for g = A z^q, ξz ≫ |q|.
  static double asymptotic_antiderivative(double amp, double q, double xi, double z, bool cosine) {
    const std::complex<double> i_xi(0.0, xi);
    std::complex<double> sum = 0.0;
    double deriv = amp * std::pow(z, q);  // g^{(k)}(z)
    std::complex<double> denom = i_xi;
    for (int k = 0; k < 80; ++k) {
      const std::complex<double> term = (k % 2 == 0 ? deriv : -deriv) / denom;
      sum += term;
      if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
      deriv *= (q - k) / z;
      denom *= i_xi;
    }
    const std::complex<double> value = sum * std::polar(1.0, xi * z);
    return cosine ? value.real() : value.imag();
  }

  std::string family_;
  std::vector<Segment> segments_;
  std::vector<std::pair<double, double>> nodes_;
  Certificate certificate_;
};

/// ∫₀^∞ (1 - cos u) u^{-1-β} du, the constant tying a stable exponent c|ξ|^β to
/// its Lévy density.
inline double stable_levy_constant(double beta) {
  if (!(beta > 0.0 && beta < 2.0)) throw DomainError("stable Lévy constant needs beta in (0,2)");
  if (std::abs(beta - 1.0) < 1e-12) return std::numbers::pi / 2.0;
  return std::tgamma(1.0 - beta) * std::cos(std::numbers::pi * beta / 2.0) / beta;
}

class LevyModel {
 public:
  struct Brownian {
    double kappa;
  };
  struct Stable {
    double beta;
    double c;
  };
  struct Khintchine {
    double sigma2;
    LevyMeasure measure;
  };
  using Kind = std::variant<Brownian, Stable, Khintchine>;

  /// ReΨ(ξ) = κξ².
  static LevyModel brownian(double kappa) {
    if (!(kappa > 0.0)) throw DomainError("brownian model needs kappa > 0");
    return LevyModel(Brownian{kappa});
  }

  /// ReΨ(ξ) = c|ξ|^β.
  static LevyModel stable(double beta, double c) {
    if (!(beta > 0.0 && beta <= 2.0)) throw DomainError("beta must lie in (0,2]");
    if (!(c > 0.0)) throw DomainError("stable model needs c > 0");
    return LevyModel(Stable{beta, c});
  }

  /// ReΨ(ξ) = σ²ξ²/2 + ∫(1 - cos zξ) ν(dz).
  static LevyModel khintchine(double sigma2, LevyMeasure measure) {
    if (!(sigma2 >= 0.0)) throw DomainError("khintchine model needs sigma2 >= 0");
    return LevyModel(Khintchine{sigma2, std::move(measure)});
  }

  const Kind& kind() const noexcept { return kind_; }
  bool is_closed_form() const noexcept { return !std::holds_alternative<Khintchine>(kind_); }

  /// Relative tolerance used for quadrature-based exponents.
  static constexpr quad::Tolerance kExponentTolerance{1e-300, 1e-10};

  double re_psi(double xi) const {
    xi = std::abs(xi);
    if (xi == 0.0) return 0.0;
    if (const auto* b = std::get_if<Brownian>(&kind_)) return b->kappa * xi * xi;
    if (const auto* s = std::get_if<Stable>(&kind_)) return s->c * std::pow(xi, s->beta);
    const auto& k = std::get<Khintchine>(kind_);
    return 0.5 * k.sigma2 * xi * xi +
           2.0 * k.measure.one_minus_cos_integral(xi, kExponentTolerance);
  }

  /// ∫_Ξ^∞ dξ / (2 ReΨ(ξ)); +inf when the integral diverges. Exact for the
  /// closed forms, an analytic bound when σ² > 0, and a local power-law
  /// estimate for pure-jump Khintchine models.
  double inverse_tail(double cutoff) const {
    if (const auto* b = std::get_if<Brownian>(&kind_)) return 1.0 / (2.0 * b->kappa * cutoff);
    if (const auto* s = std::get_if<Stable>(&kind_)) {
      if (s->beta <= 1.0) return kInfinity;
      return std::pow(cutoff, 1.0 - s->beta) / (2.0 * s->c * (s->beta - 1.0));
    }
    const auto& k = std::get<Khintchine>(kind_);
    if (k.sigma2 > 0.0) return 1.0 / (k.sigma2 * cutoff);
    const double p = local_index(cutoff);
    if (!(p > 1.0 + 1e-3)) return kInfinity;
    return cutoff / (2.0 * re_psi(cutoff) * (p - 1.0));
  }

  /// log₂ ReΨ(2ξ)/ReΨ(ξ): the local power-law index of the exponent.
  double local_index(double xi) const {
    const double a = re_psi(xi);
    const double b = re_psi(2.0 * xi);
    if (!(a > 0.0)) return 0.0;
    return std::log2(b / a);
  }

  /// Index used to size spectral grids: β for stable, 2 for Brownian, the
  /// local index at ξ = 10³ (clamped to [0.5, 2]) otherwise.
  double effective_index() const {
    if (std::holds_alternative<Brownian>(kind_)) return 2.0;
    if (const auto* s = std::get_if<Stable>(&kind_)) return s->beta;
    return std::clamp(local_index(1e3), 0.5, 2.0);
  }

  /// Lévy measure: the stored one for Khintchine models, the canonical
  /// c/(2∫(1-cos u)u^{-1-β}du) |z|^{-1-β} density for stable β < 2, none for
  /// Brownian motion.
  std::optional<LevyMeasure> levy_measure() const {
    if (const auto* k = std::get_if<Khintchine>(&kind_)) return k->measure;
    if (const auto* s = std::get_if<Stable>(&kind_)) {
      if (s->beta >= 2.0) return std::nullopt;
      return LevyMeasure::power_law(s->c / (2.0 * stable_levy_constant(s->beta)), s->beta);
    }
    return std::nullopt;
  }

  double gaussian_coefficient() const noexcept {
    if (const auto* b = std::get_if<Brownian>(&kind_)) return 2.0 * b->kappa;
    if (const auto* s = std::get_if<Stable>(&kind_)) return s->beta == 2.0 ? 2.0 * s->c : 0.0;
    return std::get<Khintchine>(kind_).sigma2;
  }

  std::string describe() const {
    using csv::format;
    if (const auto* b = std::get_if<Brownian>(&kind_)) return "brownian(kappa=" + format(b->kappa) + ")";
    if (const auto* s = std::get_if<Stable>(&kind_))
      return "stable(beta=" + format(s->beta) + ",c=" + format(s->c) + ")";
    const auto& k = std::get<Khintchine>(kind_);
    std::string out = "khintchine(sigma2=" + format(k.sigma2) + ",density=" + k.measure.family();
    if (k.measure.family() == "power_law") {
      const auto& seg = k.measure.segments().front();
      out += ",C=" + format(seg.scale) + ",beta=" + format(seg.index) + ",z_min=" + format(seg.lo) +
             ",z_max=" + format(seg.hi);
    } else {
      out += ",nodes=" + std::to_string(k.measure.nodes().size());
    }
    return out + ")";
  }

 private:
  explicit LevyModel(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

inline double re_psi(const LevyModel& model, double xi) { return model.re_psi(xi); }

struct FellerValues {
  double K;
  double G;
};

/// K(ε) = ε⁻² ∫_{|z|≤ε} z² ν(dz) and G(ε) = ν{|z| > ε}, by quadrature.
inline FellerValues feller_functions(const LevyModel& model, double eps) {
  if (!(eps > 0.0)) throw DomainError("feller_functions needs eps > 0");
  const auto nu = model.levy_measure();
  if (!nu) throw DomainError("feller_functions: model has no Lévy measure (" + model.describe() + ")");
  return {2.0 * nu->second_moment_below(eps) / (eps * eps), 2.0 * nu->mass_above(eps)};
}

/// R(ξ) = ξ⁻¹ ∫₀^ξ ReΨ(z) dz. Closed forms for Brownian/stable; for Khintchine
/// models the Lévy–Khintchine form σ²ξ²/6 + ∫(1 - sinc(|z|ξ)) ν(dz).
inline double averaged_exponent(const LevyModel& model, double xi) {
  if (!(xi > 0.0)) throw DomainError("averaged_exponent needs xi > 0");
  if (const auto* b = std::get_if<LevyModel::Brownian>(&model.kind())) return b->kappa * xi * xi / 3.0;
  if (const auto* s = std::get_if<LevyModel::Stable>(&model.kind()))
    return s->c * std::pow(xi, s->beta) / (s->beta + 1.0);
  const auto& k = std::get<LevyModel::Khintchine>(model.kind());
  return k.sigma2 * xi * xi / 6.0 +
         2.0 * k.measure.one_minus_sinc_integral(xi, LevyModel::kExponentTolerance);
}

enum class Verdict { satisfied_numerically, violated_numerically, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::satisfied_numerically:
      return "satisfied-numerically";
    case Verdict::violated_numerically:
      return "violated-numerically";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "?";
}

/// Geometric grid min·10^{k/per_decade}, k = 0.., up to and including max.
struct GeometricGrid {
  double min = 10.0;
  double max = 1e6;
  int per_decade = 4;

  std::vector<double> points() const {
    if (!(min > 0.0) || !(max > min) || per_decade < 1)
      throw DomainError("geometric grid needs 0 < min < max and per_decade >= 1");
    std::vector<double> out;
    const double decades = std::log10(max / min);
    const int n = static_cast<int>(std::floor(decades * per_decade + 1e-9));
    for (int k = 0; k <= n; ++k) out.push_back(min * std::pow(10.0, static_cast<double>(k) / per_decade));
    return out;
  }
};

struct ConditionReport {
  struct Row {
    double abscissa;
    double value;
  };
  double alpha = 0.0;
  double dalang_integral = 0.0;  // ∫_ℝ dξ/(α + 2ReΨ); +inf when divergent
  bool dalang_infinite = false;
  std::vector<Row> dalang_panels;  // (2^k, contribution of [2^k, 2^{k+1}] to the integral)
  std::vector<Row> hawkes_trend;            // (ξ, ReΨ(ξ)/log ξ)
  std::vector<Row> quasi_increasing_ratio;  // (z, ReΨ(2z)/sup_{[z,2z]} ReΨ)
  std::vector<Row> kg_ratio;                // (ε, G(ε)/K(ε))
  Verdict dalang = Verdict::inconclusive;
  Verdict hawkes = Verdict::inconclusive;
  Verdict quasi_increasing = Verdict::inconclusive;
  Verdict kg = Verdict::inconclusive;
};

/// Thresholds behind the tri-state verdicts. A limit statement is called
/// satisfied when the trend over the top decade of the grid is monotone and
/// clears the threshold, violated when it clearly goes the other way.
struct ConditionThresholds {
  int dalang_max_panel = 40;                   // integrate dyadic panels up to 2^40
  int dalang_decision_panels = 6;              // panels inspected at the top
  double dalang_convergent_ratio = 0.95;       // panel ratio ≤ this: local decay index ≥ 1.07
  double dalang_divergent_ratio = 0.99;        // panel ratio ≥ this: log divergence or worse
  double hawkes_growth = 1.2;                  // growth of ReΨ/log over the top decade
  double hawkes_flat = 1.02;
  double quasi_min_constant = 0.25;            // inf of the ratio over the top decade
  double quasi_violation = 1e-3;
  double kg_stable_spread = 1.5;               // max/min of G/K over the bottom decade
  double kg_growth = 2.0;
};

namespace detail {

// Rows with abscissa within a factor 10 of the extreme end of the grid.
inline std::vector<double> decade_values(const std::vector<ConditionReport::Row>& rows, bool top) {
  std::vector<double> v;
  if (rows.empty()) return v;
  const double edge = top ? rows.back().abscissa : rows.front().abscissa;
  for (const auto& r : rows)
    if (top ? r.abscissa >= edge / 10.0 * (1 - 1e-12) : r.abscissa <= edge * 10.0 * (1 + 1e-12))
      v.push_back(r.value);
  return v;
}

}  // namespace detail

inline ConditionReport condition_report(const LevyModel& model, double alpha,
                                        const GeometricGrid& xi_grid = {10.0, 1e6, 4},
                                        const GeometricGrid& eps_grid = {1e-6, 1e-1, 4},
                                        const ConditionThresholds& th = {}) {
  if (!(alpha > 0.0)) throw DomainError("condition_report needs alpha > 0");
  ConditionReport rep;
  rep.alpha = alpha;

  // Dalang integral over dyadic panels; the tail decides the verdict.
  {
    auto f = [&](double xi) { return 2.0 / (alpha + 2.0 * model.re_psi(xi)); };
    quad::AdaptiveOptions aopt;
    aopt.tol = {1e-13, 1e-9};
    double sum = quad::adaptive(f, 0.0, 1.0, aopt).value;
    std::vector<double> panels;
    for (int k = 0; k < th.dalang_max_panel; ++k) {
      const double lo = std::ldexp(1.0, k);
      const double c = quad::adaptive(f, lo, 2.0 * lo, aopt).value;
      panels.push_back(c);
      rep.dalang_panels.push_back({lo, c});
      sum += c;
    }
    const std::size_t n = panels.size();
    const std::size_t m = static_cast<std::size_t>(th.dalang_decision_panels);
    double qmax = 0.0;
    double qmin = kInfinity;
    bool monotone = true;
    for (std::size_t i = n - m; i < n; ++i) {
      const double q = panels[i] / panels[i - 1];
      qmax = std::max(qmax, q);
      qmin = std::min(qmin, q);
      if (i + 1 < n && panels[i + 1] > panels[i] * (1.0 + 1e-12) && q < 1.0) monotone = false;
    }
    if (qmax <= th.dalang_convergent_ratio && monotone) {
      rep.dalang = Verdict::satisfied_numerically;
      rep.dalang_integral = sum + panels.back() * qmax / (1.0 - qmax);
    } else if (qmin >= th.dalang_divergent_ratio) {
      rep.dalang = Verdict::violated_numerically;
      rep.dalang_integral = kInfinity;
      rep.dalang_infinite = true;
    } else {
      rep.dalang = Verdict::inconclusive;
      rep.dalang_integral = sum;
    }
  }

  const auto xis = xi_grid.points();
  for (double xi : xis) {
    if (xi <= 1.0) continue;
    rep.hawkes_trend.push_back({xi, model.re_psi(xi) / std::log(xi)});
  }
  if (rep.hawkes_trend.empty()) throw DomainError("condition_report: xi grid must extend above 1");
  {
    const auto top = detail::decade_values(rep.hawkes_trend, true);
    const bool increasing = std::is_sorted(top.begin(), top.end()) &&
                            std::adjacent_find(top.begin(), top.end()) == top.end();
    const double growth = top.back() / top.front();
    if (increasing && growth >= th.hawkes_growth)
      rep.hawkes = Verdict::satisfied_numerically;
    else if (growth <= th.hawkes_flat)
      rep.hawkes = Verdict::violated_numerically;
    else
      rep.hawkes = Verdict::inconclusive;
  }

  for (double z : xis) {
    const double target = model.re_psi(2.0 * z);
    double sup = 0.0;
    for (int i = 0; i <= 16; ++i) sup = std::max(sup, model.re_psi(z * (1.0 + i / 16.0)));
    rep.quasi_increasing_ratio.push_back({z, target / sup});
  }
  {
    const auto top = detail::decade_values(rep.quasi_increasing_ratio, true);
    const double inf = *std::min_element(top.begin(), top.end());
    if (inf >= th.quasi_min_constant)
      rep.quasi_increasing = Verdict::satisfied_numerically;
    else if (inf <= th.quasi_violation)
      rep.quasi_increasing = Verdict::violated_numerically;
    else
      rep.quasi_increasing = Verdict::inconclusive;
  }

  const auto epss = eps_grid.points();
  const auto nu = model.levy_measure();
  for (double eps : epss) {
    if (!nu) {
      // No jumps: G ≡ 0 and the Gaussian component alone gives the growth condition.
      rep.kg_ratio.push_back({eps, 0.0});
      continue;
    }
    const auto fk = feller_functions(model, eps);
    rep.kg_ratio.push_back({eps, fk.K > 0.0 ? fk.G / fk.K : kInfinity});
  }
  if (!nu || model.gaussian_coefficient() > 0.0) {
    rep.kg = Verdict::satisfied_numerically;
  } else {
    const auto bottom = detail::decade_values(rep.kg_ratio, false);  // smallest ε first
    const double lo = *std::min_element(bottom.begin(), bottom.end());
    const double hi = *std::max_element(bottom.begin(), bottom.end());
    const bool finite = std::isfinite(hi);
    // Growth as ε decreases: compare the smallest ε against the top of its decade.
    const bool growing = std::is_sorted(bottom.rbegin(), bottom.rend());
    if (finite && hi <= th.kg_stable_spread * lo)
      rep.kg = Verdict::satisfied_numerically;
    else if (!finite || (growing && bottom.front() >= th.kg_growth * bottom.back()))
      rep.kg = Verdict::violated_numerically;
    else
      rep.kg = Verdict::inconclusive;
  }
  return rep;
}

}  // namespace dynkin
