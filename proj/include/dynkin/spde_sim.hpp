#pragma once

// Heat (α = 0) and cable (α > 0) equations on a torus of circumference L,
// advanced mode by mode with the exact Ornstein–Uhlenbeck transition
//
//   û_n ← e^{−(ReΨ(k_n)+α/2)Δt} û_n + ζ_n,
//   E|ζ_n|² = (1/L)(1 − e^{−λ_n Δt})/λ_n,   λ_n = 2ReΨ(k_n) + α,
//
// so every grid-point marginal is exact in law for any Δt.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dynkin/core/csv.hpp"
#include "dynkin/core/errors.hpp"
#include "dynkin/core/parallel.hpp"
#include "dynkin/core/rng.hpp"
#include "dynkin/core/stats.hpp"
#include "dynkin/levy_model.hpp"
#include "dynkin/potential_kernel.hpp"

namespace dynkin {

struct TorusConfig {
  double L = 0.0;
  std::size_t N = 0;
  double alpha = 0.0;
  double dt = 0.0;

  long half() const noexcept { return static_cast<long>((N - 1) / 2); }
  double frequency(long n) const noexcept {
    return 2.0 * std::numbers::pi * static_cast<double>(n) / L;
  }

  void validate() const {
    if (!(L > 0.0 && std::isfinite(L))) throw DomainError("torus circumference L must be positive");
    if (N == 0 || N % 2 == 0) throw DomainError("torus mode count N must be odd");
    if (!(alpha >= 0.0 && std::isfinite(alpha))) throw DomainError("torus killing alpha must be >= 0");
    if (!(dt > 0.0 && std::isfinite(dt))) throw DomainError("torus time step must be positive");
  }
};

/// Modes n = −H..H stored at index n + H.
struct TorusState {
  double time = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t seed = 0;
  std::uint32_t path = 0;
  std::vector<std::complex<double>> modes;

  static TorusState zero(const TorusConfig& cfg, std::uint64_t seed = 0, std::uint32_t path = 0) {
    cfg.validate();
    return {0.0, 0, seed, path, std::vector<std::complex<double>>(cfg.N)};
  }

  long half() const noexcept { return static_cast<long>(modes.size() / 2); }
  std::complex<double> mode(long n) const { return modes.at(static_cast<std::size_t>(n + half())); }

  /// Sets û_n and û_{−n} = conj(û_n); the zero mode must be real.
  void set_mode(long n, std::complex<double> v) {
    if (n == 0 && v.imag() != 0.0) throw DomainError("zero mode must be real");
    modes.at(static_cast<std::size_t>(half() + n)) = v;
    modes.at(static_cast<std::size_t>(half() - n)) = std::conj(v);
  }
};

/// λ_n = 2ReΨ(k_n) + α for n = 0..H.
inline std::vector<double> torus_rates(const TorusConfig& cfg, const LevyModel& model) {
  cfg.validate();
  std::vector<double> out(static_cast<std::size_t>(cfg.half()) + 1);
  for (long n = 0; n <= cfg.half(); ++n)
    out[static_cast<std::size_t>(n)] = 2.0 * model.re_psi(cfg.frequency(n)) + cfg.alpha;
  return out;
}

namespace detail {

// (1 − e^{−λt})/λ, equal to t at λ = 0
inline double relaxed(double lambda, double t) {
  const double x = lambda * t;
  if (x < 1e-8) return t * (1.0 - 0.5 * x);
  return -std::expm1(-x) / lambda;
}

}  // namespace detail

/// E|û_n(t)|², exact.
inline double mode_variance(const TorusConfig& cfg, double lambda, double t) {
  return detail::relaxed(lambda, t) / cfg.L;
}

/// The same quantity by iterating the one-step variance recursion.
inline double mode_variance_recursion(const TorusConfig& cfg, double lambda, std::uint64_t steps) {
  const double decay = std::exp(-lambda * cfg.dt);
  const double inject = mode_variance(cfg, lambda, cfg.dt);
  double v = 0.0;
  for (std::uint64_t i = 0; i < steps; ++i) v = decay * v + inject;
  return v;
}

/// Var u(x, t) = (1/L) Σ_n (1 − e^{−λ_n t})/λ_n cos(k_n r) at lag r;
/// t = +∞ gives the stationary covariance (α > 0).
inline double torus_covariance(const TorusConfig& cfg, const std::vector<double>& rates, double t,
                               double r = 0.0) {
  double acc = std::isinf(t) ? 1.0 / rates[0] : detail::relaxed(rates[0], t);
  for (std::size_t n = 1; n < rates.size(); ++n) {
    const double v = std::isinf(t) ? 1.0 / rates[n] : detail::relaxed(rates[n], t);
    acc += 2.0 * v * std::cos(cfg.frequency(static_cast<long>(n)) * r);
  }
  return acc / cfg.L;
}

/// Precomputed decay factors and noise scales; immutable and shareable.
/// Step j of path p draws normal pair j·(H+1) + n of the torus_noise stream.
class TorusSimulator {
 public:
  TorusSimulator(const TorusConfig& cfg, const LevyModel& model)
      : cfg_(cfg), rates_(torus_rates(cfg, model)) {
    decay_.resize(rates_.size());
    scale_.resize(rates_.size());
    for (std::size_t n = 0; n < rates_.size(); ++n) {
      decay_[n] = std::exp(-0.5 * rates_[n] * cfg.dt);
      const double var = mode_variance(cfg, rates_[n], cfg.dt);
      // zero mode: real with the full variance; others split over Re and Im
      scale_[n] = std::sqrt(n == 0 ? var : 0.5 * var);
    }
  }

  const TorusConfig& config() const noexcept { return cfg_; }
  const std::vector<double>& rates() const noexcept { return rates_; }

  void step(TorusState& s) const {
    check(s);
    const long H = cfg_.half();
    const CounterRng rng(s.seed, StreamDomain::torus_noise, s.path);
    const std::uint64_t base = s.steps * static_cast<std::uint64_t>(H + 1);
    auto* u = s.modes.data() + H;
    const auto z0 = rng.normal_pair(base);
    u[0] = std::complex<double>(decay_[0] * u[0].real() + scale_[0] * z0[0], 0.0);
    for (long n = 1; n <= H; ++n) {
      const auto z = rng.normal_pair(base + static_cast<std::uint64_t>(n));
      const auto k = static_cast<std::size_t>(n);
      u[n] = decay_[k] * u[n] + scale_[k] * std::complex<double>(z[0], z[1]);
      u[-n] = std::conj(u[n]);
    }
    ++s.steps;
    s.time = static_cast<double>(s.steps) * cfg_.dt;
  }

  void advance(TorusState& s, std::uint64_t steps) const {
    for (std::uint64_t i = 0; i < steps; ++i) step(s);
  }

  void check(const TorusState& s) const {
    if (s.modes.size() != cfg_.N)
      throw DomainError("torus state has " + std::to_string(s.modes.size()) +
                        " modes, configuration expects " + std::to_string(cfg_.N));
  }

 private:
  TorusConfig cfg_;
  std::vector<double> rates_;
  std::vector<double> decay_;
  std::vector<double> scale_;
};

inline TorusState step(TorusState state, const TorusConfig& cfg, const LevyModel& model) {
  TorusSimulator(cfg, model).step(state);
  return state;
}

/// u(x) = Σ_n û_n e^{ik_n x} at each x ∈ [0, L).
inline std::vector<double> snapshot(const TorusState& s, const TorusConfig& cfg,
                                    const std::vector<double>& xs) {
  if (s.modes.size() != cfg.N) throw DomainError("torus state does not match configuration");
  const long H = cfg.half();
  double scale = 0.0;
  for (const auto& m : s.modes) scale += std::abs(m);
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) {
    if (!(x >= 0.0 && x < cfg.L))
      throw DomainError("snapshot point " + csv::format(x) + " outside [0, L)");
    const double theta = cfg.frequency(1) * x;
    const std::complex<double> w = std::polar(1.0, theta);
    std::complex<double> phase(1.0, 0.0);
    std::complex<double> acc = s.mode(0);
    for (long n = 1; n <= H; ++n) {
      if (n % 64 == 0)
        phase = std::polar(1.0, theta * static_cast<double>(n));
      else
        phase *= w;
      acc += s.mode(n) * phase + s.mode(-n) * std::conj(phase);
    }
    if (std::abs(acc.imag()) > 1e-12 * std::max(1.0, scale))
      throw std::logic_error("torus snapshot has imaginary residue " + csv::format(acc.imag()));
    out.push_back(acc.real());
  }
  return out;
}

/// Σ_{m≠0} k(r + mL) / k(0) for the covariance kernel of the field at time t
/// (varV for α > 0, varU for α = 0).
inline double image_sum_ratio(const TorusConfig& cfg, const LevyModel& model, double t,
                              double r = 0.0) {
  const KernelSpec spec =
      cfg.alpha > 0.0 ? KernelSpec::var_v(cfg.alpha, t) : KernelSpec::var_u(t);
  KernelOptions opt;
  opt.tol = {1e-12, 1e-8};
  const double k0 = kernel_value(model, spec, 0.0, opt).value;
  double acc = 0.0;
  for (int m = 1; m <= 256; ++m) {
    const double term = std::abs(kernel_value(model, spec, r + m * cfg.L, opt).value) +
                        std::abs(kernel_value(model, spec, r - m * cfg.L, opt).value);
    acc += term;
    if (term < 1e-6 * acc || term < 1e-15 * k0) break;
  }
  return acc / k0;
}

// ---------------------------------------------------------------------------
// Ensemble moments

struct MomentRow {
  double t = 0.0;
  double x = 0.0;
  double mean = 0.0;
  double stderr_mean = 0.0;
  double var = 0.0;
  double exact_var = 0.0;
  double stderr_var = 0.0;
  std::size_t paths = 0;
};

/// E u(x,t)² averaged over the probes of each path, then over paths.
struct PooledVariance {
  double t = 0.0;
  double value = 0.0;
  double stderr_value = 0.0;
  double exact = 0.0;
};

struct LagCovariance {
  double t = 0.0;
  double lag = 0.0;
  double empirical = 0.0;
  double exact = 0.0;
  double stderr_value = 0.0;
};

/// Pooled variance at t and 2t against the relaxation bound e^{−αt}·Var η.
struct StationarityCheck {
  double t = 0.0;
  double var_t = 0.0;
  double var_2t = 0.0;
  double stderr_diff = 0.0;
  double bound = 0.0;
  bool passed = false;
};

struct MomentReport {
  TorusConfig cfg;
  std::string model;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  std::vector<MomentRow> rows;
  std::vector<PooledVariance> pooled;
  std::vector<LagCovariance> covariances;
  std::optional<StationarityCheck> stationarity;
};

struct MomentOptions {
  /// Recording times; empty means {t_end/2, t_end}. Each must be a multiple of Δt.
  std::vector<double> times;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

namespace detail {

struct MomentAccumulator {
  std::vector<RunningStats> value;   // [time][probe]
  std::vector<RunningStats> square;  // [time][probe]
  std::vector<RunningStats> pooled;  // [time]
  std::vector<RunningStats> lagged;  // [time][probe], u(x_0)u(x_i)
  std::vector<RunningStats> diff;    // pooled(2t) − pooled(t), per path

  void merge(const MomentAccumulator& o) {
    if (value.empty()) {
      *this = o;
      return;
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      value[i].merge(o.value[i]);
      square[i].merge(o.square[i]);
      lagged[i].merge(o.lagged[i]);
    }
    for (std::size_t i = 0; i < pooled.size(); ++i) pooled[i].merge(o.pooled[i]);
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i].merge(o.diff[i]);
  }
};

}  // namespace detail

inline MomentReport run_moments(const TorusConfig& cfg, const LevyModel& model, double t_end,
                                std::size_t paths, const std::vector<double>& probes,
                                const MomentOptions& opt = {}) {
  cfg.validate();
  if (!(t_end > 0.0)) throw DomainError("run_moments needs t_end > 0");
  if (paths < 2) throw DomainError("run_moments needs at least 2 paths");
  if (probes.empty()) throw DomainError("run_moments needs at least one probe point");
  std::vector<double> times = opt.times;
  if (times.empty()) times = {0.5 * t_end, t_end};
  std::sort(times.begin(), times.end());
  std::vector<std::uint64_t> marks;
  for (double t : times) {
    const double q = t / cfg.dt;
    const auto m = static_cast<std::uint64_t>(std::llround(q));
    if (m == 0 || std::abs(q - static_cast<double>(m)) > 1e-9 * q)
      throw DomainError("recording time " + csv::format(t) + " is not a positive multiple of dt");
    marks.push_back(m);
  }
  // stationarity pairs (t, 2t) among the recording times
  std::vector<std::pair<std::size_t, std::size_t>> doubling;
  for (std::size_t i = 0; i < marks.size(); ++i)
    for (std::size_t j = i + 1; j < marks.size(); ++j)
      if (marks[j] == 2 * marks[i]) doubling.emplace_back(i, j);

  const TorusSimulator sim(cfg, model);
  const std::size_t T = times.size();
  const std::size_t P = probes.size();

  auto work = [&](std::size_t lo, std::size_t hi) {
    detail::MomentAccumulator acc;
    acc.value.resize(T * P);
    acc.square.resize(T * P);
    acc.lagged.resize(T * P);
    acc.pooled.resize(T);
    acc.diff.resize(doubling.size());
    std::vector<double> pooled(T);
    for (std::size_t p = lo; p < hi; ++p) {
      auto state = TorusState::zero(cfg, opt.seed, static_cast<std::uint32_t>(p));
      for (std::size_t i = 0; i < T; ++i) {
        sim.advance(state, marks[i] - state.steps);
        const auto u = snapshot(state, cfg, probes);
        double sq = 0.0;
        for (std::size_t j = 0; j < P; ++j) {
          acc.value[i * P + j].add(u[j]);
          acc.square[i * P + j].add(u[j] * u[j]);
          acc.lagged[i * P + j].add(u[0] * u[j]);
          sq += u[j] * u[j];
        }
        pooled[i] = sq / static_cast<double>(P);
        acc.pooled[i].add(pooled[i]);
      }
      for (std::size_t d = 0; d < doubling.size(); ++d)
        acc.diff[d].add(pooled[doubling[d].second] - pooled[doubling[d].first]);
    }
    return acc;
  };
  auto merge = [](detail::MomentAccumulator& a, const detail::MomentAccumulator& b) { a.merge(b); };
  const auto acc = parallel_blocks<detail::MomentAccumulator>(paths, 64, work, merge, opt.threads);

  MomentReport rep;
  rep.cfg = cfg;
  rep.model = model.describe();
  rep.seed = opt.seed;
  rep.paths = paths;
  for (std::size_t i = 0; i < T; ++i) {
    const double exact = torus_covariance(cfg, sim.rates(), times[i]);
    for (std::size_t j = 0; j < P; ++j) {
      const auto& v = acc.value[i * P + j];
      const auto& s = acc.square[i * P + j];
      rep.rows.push_back({times[i], probes[j], v.mean(), v.stderr_mean(), s.mean(), exact,
                          s.stderr_mean(), paths});
      const auto& c = acc.lagged[i * P + j];
      const double lag = probes[j] - probes[0];
      rep.covariances.push_back(
          {times[i], lag, c.mean(), torus_covariance(cfg, sim.rates(), times[i], lag),
           c.stderr_mean()});
    }
    rep.pooled.push_back({times[i], acc.pooled[i].mean(), acc.pooled[i].stderr_mean(), exact});
  }
  if (cfg.alpha > 0.0 && !doubling.empty()) {
    const auto [a, b] = doubling.back();
    StationarityCheck st;
    st.t = times[a];
    st.var_t = acc.pooled[a].mean();
    st.var_2t = acc.pooled[b].mean();
    st.stderr_diff = acc.diff.back().stderr_mean();
    st.bound = std::exp(-cfg.alpha * st.t) *
               torus_covariance(cfg, sim.rates(), std::numeric_limits<double>::infinity());
    st.passed = std::abs(st.var_2t - st.var_t) <= st.bound + 3.0 * st.stderr_diff;
    rep.stationarity = st;
  }
  return rep;
}

inline void write_moment_csv(std::ostream& os, const MomentReport& rep) {
  csv::Header h;
  h.add("model", rep.model)
      .add("L", rep.cfg.L)
      .add_int("N", rep.cfg.N)
      .add("alpha", rep.cfg.alpha)
      .add("dt", rep.cfg.dt)
      .add_int("seed", rep.seed);
  h.write(os);
  os << "t,x,mean,var,exact_var,stderr,paths\n";
  for (const auto& r : rep.rows)
    csv::write_row(os, {csv::format(r.t), csv::format(r.x), csv::format(r.mean),
                        csv::format(r.var), csv::format(r.exact_var), csv::format(r.stderr_var),
                        std::to_string(r.paths)});
}

}  // namespace dynkin
