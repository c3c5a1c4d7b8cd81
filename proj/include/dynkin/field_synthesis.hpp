#pragma once

// Spectral synthesis of the stationary-in-x Gaussian fields U(t,·), V_α(t,·),
// S_α(t,·), η_α = V_α + S_α and derivative fields S_α^{(n)}:
//
//   F(x_j) = Σ_k √(2 f(ξ_k) Δξ) (A_k cos ξ_k x_j + B_k sin ξ_k x_j)
//          = Re Σ_k c_k e^{iξ_k x_j},   c_k = √(2fΔξ)(A_k − iB_k),
//
// on midpoint frequencies ξ_k = (k+½)Δξ.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "dynkin/core/csv.hpp"
#include "dynkin/core/errors.hpp"
#include "dynkin/core/fft.hpp"
#include "dynkin/core/rng.hpp"
#include "dynkin/core/stats.hpp"
#include "dynkin/levy_model.hpp"
#include "dynkin/potential_kernel.hpp"

namespace dynkin {

struct SpectralGrid {
  double cutoff = 0.0;
  std::size_t modes = 0;

  double spacing() const noexcept { return cutoff / static_cast<double>(modes); }
  double frequency(std::size_t k) const noexcept {
    return (static_cast<double>(k) + 0.5) * spacing();
  }

  void validate() const {
    if (!(cutoff > 0.0 && std::isfinite(cutoff)))
      throw DomainError("spectral grid cutoff must be positive and finite");
    if (modes < 2) throw DomainError("spectral grid needs at least 2 modes");
  }

  /// Ξ = 256 (α+1)^{1/β_eff}, K = 2¹⁴.
  static SpectralGrid default_for(const LevyModel& model, double alpha) {
    return {256.0 * std::pow(alpha + 1.0, 1.0 / model.effective_index()), std::size_t{1} << 14};
  }
};

/// x_j = j·Δx, j = 0..M−1.
struct SpatialGrid {
  double dx = 0.0;
  std::size_t points = 0;

  double x(std::size_t j) const noexcept { return static_cast<double>(j) * dx; }

  void validate() const {
    if (!(dx > 0.0 && std::isfinite(dx))) throw DomainError("spatial grid step must be positive");
    if (points < 1) throw DomainError("spatial grid needs at least one point");
  }

  /// Δx = 2π/(4Ξ), M = 1024.
  static SpatialGrid default_for(const SpectralGrid& grid) {
    return {2.0 * std::numbers::pi / grid.cutoff / 4.0, 1024};
  }
};

enum class FieldKind { U, V, S, eta, S_derivative };

inline const char* to_string(FieldKind k) {
  switch (k) {
    case FieldKind::U: return "U";
    case FieldKind::V: return "V";
    case FieldKind::S: return "S";
    case FieldKind::eta: return "eta";
    case FieldKind::S_derivative: return "S_derivative";
  }
  return "?";
}

struct FieldSpec {
  FieldKind kind = FieldKind::eta;
  double alpha = 0.0;
  double t = 0.0;
  int derivative = 0;

  static FieldSpec heat(double t) { return {FieldKind::U, 0.0, t, 0}; }
  static FieldSpec cable(double alpha, double t) { return {FieldKind::V, alpha, t, 0}; }
  static FieldSpec smooth_part(double alpha, double t) { return {FieldKind::S, alpha, t, 0}; }
  static FieldSpec stationary(double alpha) { return {FieldKind::eta, alpha, 0.0, 0}; }
  static FieldSpec smooth_derivative(int n, double alpha, double t) {
    return {FieldKind::S_derivative, alpha, t, n};
  }

  /// The covariance kernel whose envelope is 2π·f.
  KernelSpec kernel() const {
    switch (kind) {
      case FieldKind::U: return KernelSpec::var_u(t);
      case FieldKind::V: return KernelSpec::var_v(alpha, t);
      case FieldKind::S: return KernelSpec::var_s(alpha, t, 0);
      case FieldKind::eta: return KernelSpec::potential(alpha);
      case FieldKind::S_derivative: return KernelSpec::var_s(alpha, t, derivative);
    }
    return {};
  }

  void validate() const {
    if (kind == FieldKind::S_derivative && derivative < 1)
      throw DomainError("derivative field needs order n >= 1");
    if (kind != FieldKind::S_derivative && derivative != 0)
      throw DomainError("derivative order applies to S_derivative fields only");
    kernel().validate();
  }

  std::string describe() const {
    std::string s = to_string(kind);
    s += "(";
    if (kind != FieldKind::U) s += "alpha=" + csv::format(alpha);
    if (kind != FieldKind::U && kind != FieldKind::eta) s += ",";
    if (kind != FieldKind::eta) s += "t=" + csv::format(t);
    if (kind == FieldKind::S_derivative) s += ",n=" + std::to_string(derivative);
    return s + ")";
  }
};

/// f(ξ) for the field; kind U at ξ = 0 is the limit t/(2π).
inline double spectral_density(const FieldSpec& spec, const LevyModel& model, double xi) {
  spec.validate();
  return kernel_envelope(model, spec.kernel(), xi) / (2.0 * std::numbers::pi);
}

inline double spectral_density(FieldKind kind, const LevyModel& model, double alpha, double t,
                               double xi, int n = 0) {
  return spectral_density(FieldSpec{kind, alpha, t, n}, model, xi);
}

/// Variance bias of the discretized field. exact − synthesized splits into the
/// truncated tail beyond Ξ and the midpoint-rule error on [0, Ξ].
struct SynthesisBias {
  double exact_variance = 0.0;
  double exact_error = 0.0;
  double synthesized_variance = 0.0;
  double tail = 0.0;
  double riemann = 0.0;

  double total() const noexcept { return exact_variance - synthesized_variance; }
  /// Covariance bias bound usable at any lag.
  double bound() const noexcept { return std::abs(tail) + std::abs(riemann) + exact_error; }
};

struct FieldSample {
  FieldSpec spec;
  SpatialGrid xs;
  SpectralGrid grid;
  std::uint64_t seed = 0;
  std::uint32_t replicate = 0;
  std::string model;
  std::vector<double> values;
  SynthesisBias bias;
};

struct JointSample {
  FieldSample V;
  FieldSample S;
  FieldSample eta;
  std::optional<FieldSample> S_deriv;
};

enum class SynthesisMethod { automatic, direct };

struct SynthesisOptions {
  SynthesisMethod method = SynthesisMethod::automatic;
  /// Tolerance for the exact variances reported in SynthesisBias.
  KernelOptions bias{{1e-14, 1e-10}};
};

namespace detail {

// Evaluates Re Σ_k c_k e^{iξ_k x_j} on the spatial grid, by FFT when
// Δξ·Δx = 2π/n for a power of two n ≥ max(K, M), directly otherwise.
class SpectralEvaluator {
 public:
  SpectralEvaluator(const SpectralGrid& grid, const SpatialGrid& xs, SynthesisMethod method)
      : grid_(grid), xs_(xs) {
    const double n_real = 2.0 * std::numbers::pi / (grid.spacing() * xs.dx);
    if (method == SynthesisMethod::automatic && n_real < 0x1.0p40) {
      const auto n = static_cast<std::size_t>(std::llround(n_real));
      const bool pow2 = n != 0 && (n & (n - 1)) == 0;
      if (pow2 && std::abs(n_real - static_cast<double>(n)) <= 64 * 0x1.0p-52 * n_real &&
          n >= grid.modes &&
          n >= xs.points) {
        fft_size_ = n;
        twiddle_.resize(xs.points);
        for (std::size_t j = 0; j < xs.points; ++j)
          twiddle_[j] = std::polar(1.0, std::numbers::pi * static_cast<double>(j) / static_cast<double>(n));
      }
    }
  }

  bool uses_fft() const noexcept { return fft_size_ != 0; }
  std::size_t fft_size() const noexcept { return fft_size_; }

  std::vector<double> operator()(const std::vector<std::complex<double>>& c) const {
    std::vector<double> out(xs_.points);
    if (uses_fft()) {
      fft::Buffer in(fft_size_);
      fft::Buffer res(fft_size_);
      std::fill(in.data(), in.data() + fft_size_, std::complex<double>{});
      std::copy(c.begin(), c.end(), in.data());
      fft::backward(in, res);
      for (std::size_t j = 0; j < xs_.points; ++j) out[j] = (twiddle_[j] * res[j]).real();
      return out;
    }
    const double dxi = grid_.spacing();
    for (std::size_t j = 0; j < xs_.points; ++j) {
      const double theta = dxi * xs_.x(j);
      const std::complex<double> step = std::polar(1.0, theta);
      std::complex<double> phase;
      double acc = 0.0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        // reseed the rotation periodically to bound drift
        if (k % 32 == 0)
          phase = std::polar(1.0, (static_cast<double>(k) + 0.5) * theta);
        else
          phase *= step;
        acc += c[k].real() * phase.real() - c[k].imag() * phase.imag();
      }
      out[j] = acc;
    }
    return out;
  }

 private:
  SpectralGrid grid_;
  SpatialGrid xs_;
  std::size_t fft_size_ = 0;
  std::vector<std::complex<double>> twiddle_;
};

// Amplitudes √(2fΔξ) and the variance bias for one field kind. `re_fine` holds
// ReΨ at the K midpoints, `re_coarse` at the K/2 midpoints of doubled cells.
struct Channel {
  FieldSpec spec;
  std::vector<double> amplitude;
  SynthesisBias bias;
};

inline Channel make_channel(const LevyModel& model, const FieldSpec& spec, const SpectralGrid& grid,
                            const std::vector<double>& re_fine,
                            const std::vector<double>& re_coarse, const KernelOptions& opt) {
  using std::numbers::pi;
  const KernelSpec ks = spec.kernel();
  const double dxi = grid.spacing();
  Channel ch{spec, std::vector<double>(grid.modes), {}};
  double fine = 0.0;
  for (std::size_t k = 0; k < grid.modes; ++k) {
    const double g = envelope_from_exponent(ks, grid.frequency(k), re_fine[k]);
    const double var = g * dxi / pi;
    ch.amplitude[k] = std::sqrt(var);
    fine += var;
  }
  double coarse = 0.0;
  for (std::size_t k = 0; k < re_coarse.size(); ++k) {
    const double xi = (2.0 * static_cast<double>(k) + 1.0) * dxi;
    coarse += envelope_from_exponent(ks, xi, re_coarse[k]) * 2.0 * dxi / pi;
  }
  // midpoint rule: error ∝ h², so I − S_K ≈ (S_K − S_{K/2})/3
  if (grid.modes % 2 == 0) ch.bias.riemann = (fine - coarse) / 3.0;
  ch.bias.synthesized_variance = fine;
  const TailEstimate te = kernel_tail(model, ks, grid.cutoff);
  ch.bias.tail = (te.estimate + te.uncertainty) / pi;
  const KernelValue exact = kernel_value(model, ks, 0.0, opt);
  ch.bias.exact_variance = exact.value;
  ch.bias.exact_error = exact.error;
  return ch;
}

inline std::vector<double> exponent_at(const LevyModel& model, const SpectralGrid& grid,
                                       bool coarse) {
  std::vector<double> re;
  if (!coarse) {
    re.resize(grid.modes);
    for (std::size_t k = 0; k < grid.modes; ++k) re[k] = model.re_psi(grid.frequency(k));
  } else {
    re.resize(grid.modes / 2);
    for (std::size_t k = 0; k < re.size(); ++k)
      re[k] = model.re_psi((2.0 * static_cast<double>(k) + 1.0) * grid.spacing());
  }
  return re;
}

inline double channel_covariance(const Channel& ch, const SpectralGrid& grid, double r) {
  double acc = 0.0;
  for (std::size_t k = 0; k < grid.modes; ++k)
    acc += ch.amplitude[k] * ch.amplitude[k] * std::cos(grid.frequency(k) * r);
  return acc;
}

}  // namespace detail

/// Immutable sampler of (V_α, S_α, η_α[, S_α^{(n)}]) at one (α, t). Mode k of
/// replicate r uses normal pairs 2k (V) and 2k+1 (S) of the field_modes stream.
class JointSampler {
 public:
  JointSampler(const LevyModel& model, double alpha, double t, SpectralGrid grid, SpatialGrid xs,
               std::optional<int> derivative = std::nullopt, const SynthesisOptions& opt = {})
      : grid_(grid), xs_(xs), model_(model.describe()), eval_(init(grid, xs, opt)) {
    FieldSpec::cable(alpha, t).validate();
    if (derivative) FieldSpec::smooth_derivative(*derivative, alpha, t).validate();
    const auto fine = detail::exponent_at(model, grid, false);
    const auto coarse = detail::exponent_at(model, grid, true);
    v_ = detail::make_channel(model, FieldSpec::cable(alpha, t), grid, fine, coarse, opt.bias);
    s_ = detail::make_channel(model, FieldSpec::smooth_part(alpha, t), grid, fine, coarse, opt.bias);
    eta_ = detail::make_channel(model, FieldSpec::stationary(alpha), grid, fine, coarse, opt.bias);
    if (derivative)
      d_ = detail::make_channel(model, FieldSpec::smooth_derivative(*derivative, alpha, t), grid,
                                fine, coarse, opt.bias);
  }

  const SpectralGrid& grid() const noexcept { return grid_; }
  const SpatialGrid& spatial_grid() const noexcept { return xs_; }
  bool uses_fft() const noexcept { return eval_.uses_fft(); }

  const SynthesisBias& bias(FieldKind kind) const { return channel(kind).bias; }

  /// Exact covariance of the synthesized field at lag r: Σ 2f(ξ_k)Δξ cos(ξ_k r).
  double synthesized_covariance(FieldKind kind, double r) const {
    return detail::channel_covariance(channel(kind), grid_, r);
  }

  JointSample sample(std::uint64_t seed, std::uint32_t replicate = 0) const {
    const CounterRng rng(seed, StreamDomain::field_modes, replicate);
    const std::size_t K = grid_.modes;
    std::vector<std::complex<double>> cv(K), cs(K), cd;
    if (d_) cd.resize(K);
    const std::complex<double> rot = d_ ? std::pow(std::complex<double>(0.0, 1.0),
                                                   d_->spec.derivative)
                                        : std::complex<double>(1.0, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      const auto zv = rng.normal_pair(2 * k);
      const auto zs = rng.normal_pair(2 * k + 1);
      cv[k] = v_.amplitude[k] * std::complex<double>(zv[0], -zv[1]);
      const std::complex<double> ws(zs[0], -zs[1]);
      cs[k] = s_.amplitude[k] * ws;
      if (d_) cd[k] = d_->amplitude[k] * ws * rot;
    }
    JointSample out{make(v_, seed, replicate, eval_(cv)), make(s_, seed, replicate, eval_(cs)),
                    make(eta_, seed, replicate, {}), std::nullopt};
    out.eta.values.resize(xs_.points);
    for (std::size_t j = 0; j < xs_.points; ++j)
      out.eta.values[j] = out.V.values[j] + out.S.values[j];
    if (d_) out.S_deriv = make(*d_, seed, replicate, eval_(cd));
    return out;
  }

 private:
  static detail::SpectralEvaluator init(const SpectralGrid& grid, const SpatialGrid& xs,
                                        const SynthesisOptions& opt) {
    grid.validate();
    xs.validate();
    return detail::SpectralEvaluator(grid, xs, opt.method);
  }

  const detail::Channel& channel(FieldKind kind) const {
    switch (kind) {
      case FieldKind::V: return v_;
      case FieldKind::S: return s_;
      case FieldKind::eta: return eta_;
      case FieldKind::S_derivative:
        if (d_) return *d_;
        break;
      case FieldKind::U: break;
    }
    throw DomainError(std::string("joint sampler does not produce field ") + to_string(kind));
  }

  FieldSample make(const detail::Channel& ch, std::uint64_t seed, std::uint32_t replicate,
                   std::vector<double> values) const {
    return {ch.spec, xs_, grid_, seed, replicate, model_, std::move(values), ch.bias};
  }

  SpectralGrid grid_;
  SpatialGrid xs_;
  std::string model_;
  detail::SpectralEvaluator eval_;
  detail::Channel v_, s_, eta_;
  std::optional<detail::Channel> d_;
};

/// Immutable sampler of U(t,·); mode k uses normal pair k of the heat_modes stream.
class HeatSampler {
 public:
  HeatSampler(const LevyModel& model, double t, SpectralGrid grid, SpatialGrid xs,
              const SynthesisOptions& opt = {})
      : grid_(grid), xs_(xs), model_(model.describe()), eval_(init(grid, xs, opt)) {
    FieldSpec::heat(t).validate();
    const auto fine = detail::exponent_at(model, grid, false);
    const auto coarse = detail::exponent_at(model, grid, true);
    u_ = detail::make_channel(model, FieldSpec::heat(t), grid, fine, coarse, opt.bias);
  }

  bool uses_fft() const noexcept { return eval_.uses_fft(); }
  const SynthesisBias& bias() const noexcept { return u_.bias; }
  double synthesized_covariance(double r) const {
    return detail::channel_covariance(u_, grid_, r);
  }

  FieldSample sample(std::uint64_t seed, std::uint32_t replicate = 0) const {
    const CounterRng rng(seed, StreamDomain::heat_modes, replicate);
    std::vector<std::complex<double>> c(grid_.modes);
    for (std::size_t k = 0; k < grid_.modes; ++k) {
      const auto z = rng.normal_pair(k);
      c[k] = u_.amplitude[k] * std::complex<double>(z[0], -z[1]);
    }
    return {u_.spec, xs_, grid_, seed, replicate, model_, eval_(c), u_.bias};
  }

 private:
  static detail::SpectralEvaluator init(const SpectralGrid& grid, const SpatialGrid& xs,
                                        const SynthesisOptions& opt) {
    grid.validate();
    xs.validate();
    return detail::SpectralEvaluator(grid, xs, opt.method);
  }

  SpectralGrid grid_;
  SpatialGrid xs_;
  std::string model_;
  detail::SpectralEvaluator eval_;
  detail::Channel u_;
};

inline JointSample sample_joint(const LevyModel& model, double alpha, double t,
                                const SpectralGrid& grid, const SpatialGrid& xs,
                                std::uint64_t seed, std::optional<int> derivative = std::nullopt,
                                std::uint32_t replicate = 0) {
  return JointSampler(model, alpha, t, grid, xs, derivative).sample(seed, replicate);
}

inline FieldSample sample_heat_field(const LevyModel& model, double t, const SpectralGrid& grid,
                                     const SpatialGrid& xs, std::uint64_t seed,
                                     std::uint32_t replicate = 0) {
  return HeatSampler(model, t, grid, xs).sample(seed, replicate);
}

// ---------------------------------------------------------------------------
// Ensemble statistics

/// Per-lag mean over base points of F(x)F(x+r), accumulated across replicates.
class CovarianceEnsemble {
 public:
  CovarianceEnsemble() = default;
  explicit CovarianceEnsemble(std::vector<std::size_t> steps)
      : steps_(std::move(steps)), stats_(steps_.size()) {}

  void add(const std::vector<double>& values) {
    for (std::size_t i = 0; i < steps_.size(); ++i) {
      const std::size_t m = steps_[i];
      if (m >= values.size()) throw DomainError("covariance lag exceeds the spatial grid");
      double acc = 0.0;
      for (std::size_t j = 0; j + m < values.size(); ++j) acc += values[j] * values[j + m];
      stats_[i].add(acc / static_cast<double>(values.size() - m));
    }
  }

  void merge(const CovarianceEnsemble& o) {
    if (steps_.empty()) {
      *this = o;
      return;
    }
    if (o.steps_.empty()) return;
    for (std::size_t i = 0; i < stats_.size(); ++i) stats_[i].merge(o.stats_[i]);
  }

  const std::vector<std::size_t>& steps() const noexcept { return steps_; }
  const RunningStats& at(std::size_t i) const { return stats_.at(i); }

 private:
  std::vector<std::size_t> steps_;
  std::vector<RunningStats> stats_;
};

/// Per-replicate spatial averages of |F(x+r) − F(x)|².
class StructureFunction {
 public:
  StructureFunction() = default;
  StructureFunction(SpatialGrid xs, std::vector<std::size_t> steps)
      : xs_(xs), steps_(std::move(steps)) {
    for (auto m : steps_)
      if (m == 0 || m >= xs_.points) throw DomainError("structure-function lag outside the grid");
  }

  void add(const std::vector<double>& values) {
    if (values.size() != xs_.points) throw DomainError("sample does not match the spatial grid");
    std::vector<double> row(steps_.size());
    for (std::size_t i = 0; i < steps_.size(); ++i) {
      const std::size_t m = steps_[i];
      double acc = 0.0;
      for (std::size_t j = 0; j + m < values.size(); ++j) {
        const double d = values[j + m] - values[j];
        acc += d * d;
      }
      row[i] = acc / static_cast<double>(values.size() - m);
    }
    rows_.push_back(std::move(row));
  }

  void merge(const StructureFunction& o) {
    if (steps_.empty()) {
      *this = o;
      return;
    }
    if (o.steps_.empty()) return;
    if (o.steps_ != steps_) throw DomainError("cannot merge structure functions with different lags");
    rows_.insert(rows_.end(), o.rows_.begin(), o.rows_.end());
  }

  std::size_t replicates() const noexcept { return rows_.size(); }
  const std::vector<std::size_t>& steps() const noexcept { return steps_; }
  std::vector<double> lags() const {
    std::vector<double> out;
    for (auto m : steps_) out.push_back(static_cast<double>(m) * xs_.dx);
    return out;
  }
  const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }

  /// Ensemble mean at each lag, optionally excluding replicates [skip_lo, skip_hi).
  std::vector<double> means(std::size_t skip_lo = 0, std::size_t skip_hi = 0) const {
    std::vector<double> out(steps_.size(), 0.0);
    std::size_t n = 0;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      if (r >= skip_lo && r < skip_hi) continue;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += rows_[r][i];
      ++n;
    }
    for (auto& v : out) v /= static_cast<double>(n);
    return out;
  }

 private:
  SpatialGrid xs_;
  std::vector<std::size_t> steps_;
  std::vector<std::vector<double>> rows_;
};

struct LagBand {
  double lo = 0.0;
  double hi = 0.0;
};

/// ξ with 2ReΨ(ξ) = level, by bisection on log ξ; clamped to [1e-12, cap].
inline double crossover_frequency(const LevyModel& model, double level, double cap) {
  if (2.0 * model.re_psi(cap) <= level) return cap;
  double lo = std::log(1e-12);
  double hi = std::log(cap);
  if (2.0 * model.re_psi(std::exp(lo)) >= level) return std::exp(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (2.0 * model.re_psi(std::exp(mid)) < level ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

/// Lags where the synthesized increments follow the continuum law:
/// above the grid and cutoff scales, below the sampled extent, the
/// anti-period 2π/Δξ, and the correlation length 1/ξ_c of the field.
inline LagBand resolved_band(const LevyModel& model, const FieldSpec& spec,
                             const SpectralGrid& grid, const SpatialGrid& xs) {
  spec.validate();
  double level = 0.0;
  switch (spec.kind) {
    case FieldKind::eta: level = spec.alpha; break;
    case FieldKind::U: level = 1.0 / spec.t; break;
    default: level = std::max(spec.alpha, 1.0 / spec.t); break;
  }
  const double xi_c = crossover_frequency(model, level, grid.cutoff);
  const double anti_period = 2.0 * std::numbers::pi / grid.spacing();
  LagBand band;
  band.lo = std::max(4.0 * xs.dx, 8.0 / grid.cutoff);
  band.hi = std::min({static_cast<double>(xs.points) * xs.dx / 4.0, anti_period / 8.0,
                      0.1 / xi_c});
  return band;
}

struct LagRange {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 12;
};

/// Geometric lags snapped to distinct positive multiples of Δx.
inline std::vector<std::size_t> lag_steps(const LagRange& range, const SpatialGrid& xs) {
  if (!(range.min > 0.0 && range.max > range.min) || range.count < 2)
    throw DomainError("lag range needs 0 < min < max and at least two lags");
  std::vector<std::size_t> out;
  const double ratio = std::pow(range.max / range.min, 1.0 / static_cast<double>(range.count - 1));
  for (std::size_t i = 0; i < range.count; ++i) {
    const double r = range.min * std::pow(ratio, static_cast<double>(i));
    const auto m = static_cast<std::size_t>(std::max(1.0, std::round(r / xs.dx)));
    if (out.empty() || out.back() != m) out.push_back(m);
  }
  return out;
}

struct ScalingFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  double intercept = 0.0;
  std::vector<double> lags;
  std::vector<double> structure;
};

namespace detail {

inline std::pair<double, double> loglog_fit(const std::vector<double>& x,
                                            const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace detail

/// Least-squares slope of log E|F(x+r) − F(x)|² against log r, with a
/// delete-a-group jackknife standard error over replicates.
inline ScalingFit increment_scaling_exponent(const StructureFunction& sf, const LagBand& band) {
  const auto lags = sf.lags();
  if (lags.size() < 8) throw DomainError("increment scaling needs at least 8 distinct lags");
  const double lo = lags.front();
  const double hi = lags.back();
  if (std::log10(hi / lo) < 1.5 - 1e-9)
    throw DomainError("increment scaling lags must span at least 1.5 decades");
  if (lo < band.lo || hi > band.hi)
    throw DomainError("lag range [" + csv::format(lo) + ", " + csv::format(hi) +
                      "] lies outside the resolved band [" + csv::format(band.lo) + ", " +
                      csv::format(band.hi) + "]");
  const std::size_t n = sf.replicates();
  if (n < 2) throw DomainError("increment scaling needs at least 2 replicates");

  ScalingFit fit;
  fit.lags = lags;
  fit.structure = sf.means();
  std::tie(fit.slope, fit.intercept) = detail::loglog_fit(lags, fit.structure);

  const std::size_t groups = std::min<std::size_t>(n, 32);
  std::vector<double> partial;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t a = g * n / groups;
    const std::size_t b = (g + 1) * n / groups;
    partial.push_back(detail::loglog_fit(lags, sf.means(a, b)).first);
  }
  double mean = 0.0;
  for (double p : partial) mean += p;
  mean /= static_cast<double>(groups);
  double ss = 0.0;
  for (double p : partial) ss += (p - mean) * (p - mean);
  fit.stderr_slope = std::sqrt(ss * static_cast<double>(groups - 1) / static_cast<double>(groups));
  return fit;
}

/// Convenience form over stored samples of one field.
inline ScalingFit increment_scaling_exponent(const LevyModel& model,
                                             const std::vector<FieldSample>& samples,
                                             const LagRange& range) {
  if (samples.empty()) throw DomainError("increment scaling needs samples");
  const auto& first = samples.front();
  StructureFunction sf(first.xs, lag_steps(range, first.xs));
  for (const auto& s : samples) sf.add(s.values);
  return increment_scaling_exponent(sf, resolved_band(model, first.spec, first.grid, first.xs));
}

// ---------------------------------------------------------------------------
// CSV

inline csv::Header field_header(const FieldSample& s) {
  csv::Header h;
  h.add("kind", to_string(s.spec.kind))
      .add("field", s.spec.describe())
      .add("model", s.model)
      .add_int("seed", s.seed)
      .add_int("replicate", s.replicate)
      .add("cutoff", s.grid.cutoff)
      .add_int("modes", s.grid.modes)
      .add("dx", s.xs.dx)
      .add_int("points", s.xs.points)
      .add("exact_variance", s.bias.exact_variance)
      .add("synthesized_variance", s.bias.synthesized_variance)
      .add("tail_bias", s.bias.tail)
      .add("riemann_bias", s.bias.riemann);
  return h;
}

inline void write_field_csv(std::ostream& os, const FieldSample& s) {
  field_header(s).write(os);
  os << "x,value\n";
  for (std::size_t j = 0; j < s.values.size(); ++j)
    csv::write_row(os, {csv::format(s.xs.x(j)), csv::format(s.values[j])});
}

struct CovarianceRow {
  double lag = 0.0;
  double empirical = 0.0;
  double exact = 0.0;
  double stderr_value = 0.0;
};

inline void write_covariance_csv(std::ostream& os, const csv::Header& header,
                                 const std::vector<CovarianceRow>& rows) {
  header.write(os);
  os << "lag,empirical_cov,exact_cov,stderr\n";
  for (const auto& r : rows)
    csv::write_row(os, {csv::format(r.lag), csv::format(r.empirical), csv::format(r.exact),
                        csv::format(r.stderr_value)});
}

}  // namespace dynkin
