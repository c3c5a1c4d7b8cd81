// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance            run all criteria
//   acceptance 3 7 11     run a subset
// Exit status is 0 only when every selected criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dynkin/field_synthesis.hpp"
#include "dynkin/levy_model.hpp"
#include "dynkin/localtime_mc.hpp"
#include "dynkin/potential_kernel.hpp"
#include "dynkin/spde_sim.hpp"

using namespace dynkin;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

// Tracks the largest violation of lhs <= rhs.
struct Worst {
  bool ok = true;
  double excess = -std::numeric_limits<double>::infinity();
  std::string where;
  int cases = 0;

  void le(double lhs, double rhs, const std::string& w) {
    ++cases;
    const double e = lhs - rhs;
    if (!(e <= 0.0)) ok = false;
    if (e > excess || where.empty()) {
      excess = e;
      where = w;
    }
  }
  std::string report() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d cases, worst lhs-rhs %.3g at %s", cases, excess, where.c_str());
    return buf;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const LevyModel kBrown = LevyModel::brownian(1.0);
const LevyModel kStable = LevyModel::stable(1.5, 1.0);
const double kAlphas[] = {0.1, 0.5, 1.0, 3.0, 8.0};
const double kTimes[] = {0.05, 0.3, 1.0, 2.0, 5.0};

KernelOptions tight() {
  KernelOptions o;
  o.tol = {1e-10, 0.0};
  return o;
}

Outcome closed_form_potential() {
  Worst w;
  for (double a : {0.5, 2.0, 8.0})
    for (double r : {0.0, 0.5, 1.0, 2.0}) {
      const double s = std::sqrt(a / 2.0);
      const double exact = std::exp(-s * r) / (4.0 * s);
      w.le(std::abs(u_alpha(kBrown, a, r, tight()) - exact), 1e-6, fmt("alpha=%g r=%g", a, r));
    }
  return {w.ok, w.report()};
}

Outcome spectral_additivity() {
  const LevyModel models[] = {kBrown, kStable, LevyModel::stable(0.7, 2.0), LevyModel::stable(1.9, 0.3),
                              LevyModel::khintchine(0.2, LevyMeasure::power_law(1.0, 1.3, 0.0, kInfinity))};
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<int> pick(0, 4);
  std::uniform_real_distribution<double> lg(-3.0, 3.0);
  Worst w;
  for (int i = 0; i < 10000; ++i) {
    const auto& m = models[pick(gen)];
    const double a = std::pow(10.0, lg(gen)), t = std::pow(10.0, lg(gen)), xi = std::pow(10.0, lg(gen));
    const double v = spectral_density(FieldKind::V, m, a, t, xi);
    const double s = spectral_density(FieldKind::S, m, a, t, xi);
    const double e = spectral_density(FieldKind::eta, m, a, t, xi);
    w.le(std::abs(v + s - e), 1e-12 * e, fmt("%s alpha=%g t=%g xi=%g", m.describe().c_str(), a, t, xi));
  }
  return {w.ok, w.report()};
}

Outcome existence_sandwich() {
  Worst w;
  for (const auto& m : {kBrown, kStable})
    for (double a : kAlphas)
      for (double t : kTimes) {
        const auto p = variance_profile(m, {a, t});
        const auto u2 = kernel_value(m, KernelSpec::potential(2.0 * a), 0.0);
        const auto where = fmt("%s alpha=%g t=%g", m.describe().c_str(), a, t);
        const double tv = p.err_v + u2.error * std::exp(t * a);
        const double tu = p.err_u + u2.error * std::exp(2.0 * t * a);
        w.le(-std::expm1(-t * a) * u2.value, p.var_v + tv, where + " V lower");
        w.le(p.var_v, std::exp(t * a) * u2.value + tv, where + " V upper");
        w.le(-std::expm1(-2.0 * t * a) * u2.value, p.var_u + tu, where + " U lower");
        w.le(p.var_u, std::exp(2.0 * t * a) * u2.value + tu, where + " U upper");
      }
  return {w.ok, w.report()};
}

Outcome green_bound() {
  Worst w;
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> pos(-5.0, 5.0), la(std::log(0.05), std::log(20.0));
  for (const auto& m : {kBrown, kStable}) {
    const auto u1 = kernel_value(m, KernelSpec::potential(1.0), 0.0);
    for (int i = 0; i < 100; ++i) {
      const double x = pos(gen), y = pos(gen), a = std::exp(la(gen));
      const auto u = kernel_value(m, KernelSpec::potential(a), x - y);
      const double c = std::numbers::e * (a + 2.0 / a);
      w.le(u.value, c * u1.value + u.error + c * u1.error,
           fmt("%s alpha=%g x=%g y=%g", m.describe().c_str(), a, x, y));
    }
  }
  return {w.ok, w.report()};
}

Outcome heat_versus_cable() {
  Worst w;
  const auto mu = AtomicMeasure::dipole(0.0, 0.7);
  for (const auto& m : {kBrown, kStable})
    for (double a : kAlphas)
      for (double t : kTimes) {
        const auto p = variance_profile(m, {a, t});
        const double c = 3.0 * std::exp(a * t);
        const auto where = fmt("%s alpha=%g t=%g", m.describe().c_str(), a, t);
        w.le(p.var_v, p.var_u + p.err_u + p.err_v, where);
        w.le(p.var_u, c * p.var_v + p.err_u + c * p.err_v, where);
        const auto qv = quadratic_form(m, mu, KernelSpec::var_v(a, t), QuadraticRoute::double_sum);
        const auto qu = quadratic_form(m, mu, KernelSpec::var_u(t), QuadraticRoute::double_sum);
        w.le(qv.value, qu.value + qv.error + qu.error, where + " dipole");
        w.le(qu.value, c * qv.value + c * qv.error + qu.error, where + " dipole");
      }
  return {w.ok, w.report()};
}

Outcome tail_bounded_by_cable() {
  Worst w;
  const auto mu = AtomicMeasure::dipole(0.0, 0.7);
  for (const auto& m : {kBrown, kStable})
    for (double a : kAlphas)
      for (double t : kTimes) {
        const auto s = quadratic_form(m, mu, KernelSpec::var_s(a, t), QuadraticRoute::double_sum);
        const auto v = quadratic_form(m, mu, KernelSpec::var_v(a, t), QuadraticRoute::double_sum);
        const double f = 1.0 / std::expm1(t * a);
        w.le(s.value, f * v.value + s.error + f * v.error, fmt("%s alpha=%g t=%g", m.describe().c_str(), a, t));
      }
  std::string detail = "exact: " + w.report();

  // paired per-replicate difference |S(μ)|² − |V(μ)|²/(e^{tα}−1)
  const double a = 1.0, t = 1.0, f = 1.0 / std::expm1(t * a);
  const std::size_t reps = 100000;
  bool empirical_ok = true;
  for (const auto& m : {kBrown, kStable}) {
    const SpectralGrid grid{64.0, 1024};
    const JointSampler js(m, a, t, grid, {0.7, 2});
    RunningStats d, s2, v2;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto smp = js.sample(6, static_cast<std::uint32_t>(r));
      const double is = smp.S.values[0] - smp.S.values[1];
      const double iv = smp.V.values[0] - smp.V.values[1];
      d.add(is * is - f * iv * iv);
      s2.add(is * is);
      v2.add(iv * iv);
    }
    const bool ok = d.mean() <= 3.0 * d.stderr_mean();
    empirical_ok = empirical_ok && ok;
    detail += fmt("; %s E|S|^2=%.5g E|V|^2/(e^ta-1)=%.5g diff %.3g (3se %.3g)", m.describe().c_str(),
                  s2.mean(), f * v2.mean(), d.mean(), 3.0 * d.stderr_mean());
  }
  return {w.ok && empirical_ok, detail};
}

Outcome covariance_fidelity() {
  const double a = 2.0;
  const SpectralGrid grid{SpectralGrid::default_for(kBrown, a).cutoff, 4096};
  const JointSampler js(kBrown, a, 1.0, grid, {0.5, 3});
  CovarianceEnsemble cov({0, 1, 2});
  for (std::uint32_t r = 0; r < 100000; ++r) cov.add(js.sample(7, r).eta.values);
  Outcome out;
  for (std::size_t i = 0; i < 3; ++i) {
    const double lag = 0.5 * static_cast<double>(i);
    const double exact = std::exp(-lag) / 4.0;
    const auto& st = cov.at(i);
    const bool ok = std::abs(st.mean() - exact) <= 3.0 * st.stderr_mean();
    out.pass = out.pass && ok;
    out.detail += fmt("%sr=%g: %.5f vs %.5f (3se %.5f)", i ? "; " : "", lag, st.mean(), exact, 3.0 * st.stderr_mean());
  }
  out.detail += fmt("; bias bound %.2g", js.bias(FieldKind::eta).bound());
  return out;
}

Outcome derivative_variance() {
  const double a = 1.0, t = 1.0;
  const SpectralGrid grid{24.0, 2048};
  Outcome out;
  for (int n = 1; n <= 4; ++n) {
    const JointSampler js(kStable, a, t, grid, {0.1, 1}, n);
    RunningStats sq;
    for (std::uint32_t r = 0; r < 20000; ++r) {
      const double v = js.sample(8, r).S_deriv->values[0];
      sq.add(v * v);
    }
    const auto exact = kernel_value(kStable, KernelSpec::var_s(a, t, n), 0.0, tight());
    const bool ok = std::abs(sq.mean() - exact.value) <= 3.0 * sq.stderr_mean();
    out.pass = out.pass && ok;
    out.detail += fmt("%sn=%d: %.5g vs %.5g (3se %.2g, bias %.1g)", n > 1 ? "; " : "", n, sq.mean(),
                      exact.value, 3.0 * sq.stderr_mean(), js.bias(FieldKind::S_derivative).bound());
  }
  return out;
}

ScalingFit scaling_of(const LevyModel& m, FieldKind kind, double a, double t, std::uint64_t seed) {
  const SpectralGrid grid{1024.0, 4096};
  const SpatialGrid xs{2.0 * std::numbers::pi / (4.0 * grid.cutoff), 16384};
  const FieldSpec spec{kind, a, kind == FieldKind::eta ? 0.0 : t, 0};
  const auto band = resolved_band(m, spec, grid, xs);
  StructureFunction sf(xs, lag_steps({0.05, 2.0, 12}, xs));
  if (kind == FieldKind::U) {
    const HeatSampler hs(m, t, grid, xs);
    for (std::uint32_t r = 0; r < 200; ++r) sf.add(hs.sample(seed, r).values);
  } else {
    const JointSampler js(m, a, t, grid, xs);
    for (std::uint32_t r = 0; r < 200; ++r) {
      const auto s = js.sample(seed, r);
      sf.add(kind == FieldKind::eta ? s.eta.values : s.V.values);
    }
  }
  return increment_scaling_exponent(sf, band);
}

Outcome increment_scaling() {
  const auto e15 = scaling_of(kStable, FieldKind::eta, 1e-4, 1.0, 9);
  const auto e20 = scaling_of(kBrown, FieldKind::eta, 1e-4, 1.0, 9);
  const auto u15 = scaling_of(kStable, FieldKind::U, 0.0, 100.0, 10);
  const auto v15 = scaling_of(kStable, FieldKind::V, 0.01, 100.0, 11);
  const double joint = 2.0 * std::hypot(u15.stderr_slope, v15.stderr_slope);
  Outcome out;
  out.pass = std::abs(e15.slope - 0.5) <= 0.05 && std::abs(e20.slope - 1.0) <= 0.05 &&
             std::abs(u15.slope - v15.slope) <= joint;
  out.detail = fmt("eta beta=1.5 slope %.4f+-%.4f, eta beta=2 slope %.4f+-%.4f, U %.5f+-%.5f vs V %.5f+-%.5f (2 sigma %.4f)",
                   e15.slope, e15.stderr_slope, e20.slope, e20.stderr_slope, u15.slope, u15.stderr_slope, v15.slope, v15.stderr_slope, joint);
  return out;
}

Outcome torus_variance() {
  std::vector<double> probes;
  for (int i = 0; i < 32; ++i) probes.push_back(2.0 * i);
  const TorusConfig coarse{64.0, 4097, 2.0, 0.1};
  const TorusConfig fine{64.0, 4097, 2.0, 0.0125};
  const double ratio = image_sum_ratio(coarse, kBrown, 6.0);
  const auto a = run_moments(coarse, kBrown, 6.0, 10000, probes, {{6.0}, 10, 0});
  const auto b = run_moments(fine, kBrown, 6.0, 1000, probes, {{6.0}, 10, 0});
  const auto& pa = a.pooled.back();
  const auto& pb = b.pooled.back();
  const double gap = std::abs(pa.value - pb.value), band = 3.0 * std::hypot(pa.stderr_value, pb.stderr_value);
  Outcome out;
  out.pass = ratio < 0.01 && std::abs(pa.value - 0.25) <= 0.02 * 0.25 && gap <= band;
  out.detail = fmt("var(t=6) %.5f+-%.5f (exact %.5f, target 0.25 +-2%%); dt=0.0125 %.5f+-%.5f, gap %.5f <= %.5f; "
                   "image ratio %.2g",
                   pa.value, pa.stderr_value, pa.exact, pb.value, pb.stderr_value, gap, band, ratio);
  return out;
}

Outcome resolvent_normalization() {
  PathConfig cfg{2.0, 1.0, 1e-4};
  cfg.seed = 11;
  const auto r = resolvent_check(cfg, 2.0, 0.0, 0.0, 100000);
  const double target = 0.125, half_width = 0.05 * target;
  Outcome out;
  out.pass = std::abs(r.estimate - target) <= half_width && std::abs(r.eps_bias) <= half_width &&
             std::abs(r.dt_bias) <= half_width;
  out.detail = fmt("E L^0_S(2) = %.5f+-%.5f vs asserted %.3f +-5%%; u_2(0) = %.5f (deviation %.2f%%); "
                   "eps bias %.2g, dt bias %.2g, eps %.3g",
                   r.estimate, r.stderr_value, target, r.exact, 100.0 * (r.estimate / r.exact - 1.0),
                   r.eps_bias, r.dt_bias, r.eps);
  return out;
}

Outcome exit_time_corollary() {
  struct Case {
    double beta, alpha, a, b, t, dt;
  };
  Outcome out;
  for (const Case& c : {Case{1.5, 1.0, 0.0, 1.0, std::log(2.0), 2e-3}, Case{2.0, 2.0, 0.0, 0.5, 1.0, 1e-3}}) {
    PathConfig cfg{c.beta, 1.0, c.dt};
    cfg.seed = 12;
    const auto r = corollary_test(cfg, c.alpha, c.a, c.b, c.t, 20000);
    out.pass = out.pass && r.pass;
    out.detail += fmt("%sbeta=%g: lhs %.4f+-%.4f rhs %.4f+-%.4f %s", c.beta == 1.5 ? "" : "; ", c.beta, r.lhs,
                      r.lhs_se, r.rhs, r.rhs_se, r.pass ? "pass" : "fail");
  }
  return out;
}

Outcome condition_checks() {
  Outcome out;
  const auto good = condition_report(kStable, 1.0);
  const auto bad = condition_report(LevyModel::stable(1.0, 1.0), 1.0);
  out.pass = good.dalang == Verdict::satisfied_numerically && bad.dalang == Verdict::violated_numerically;
  out.detail = fmt("stable(1.5) %s, stable(1) %s", to_string(good.dalang), to_string(bad.dalang));

  Worst ratio;
  for (double beta : {0.5, 1.0, 1.5, 1.9}) {
    const auto m = LevyModel::stable(beta, 1.0);
    for (double eps : GeometricGrid{1e-4, 1e2, 2}.points()) {
      const auto kg = feller_functions(m, eps);
      const double want = (2.0 - beta) / beta;
      ratio.le(std::abs(kg.G / kg.K - want), 1e-4 * want, fmt("beta=%g eps=%g", beta, eps));
    }
  }
  out.pass = out.pass && ratio.ok;
  out.detail += "; G/K = (2-beta)/beta: " + ratio.report();

  Worst lower, upper;
  const LevyModel jumps[] = {kStable, LevyModel::stable(0.8, 1.0),
                             LevyModel::stable(1.9, 0.3),
                             LevyModel::khintchine(0.0, LevyMeasure::power_law(1.0, 1.2, 0.0, kInfinity))};
  for (const auto& m : jumps)
    for (double xi : GeometricGrid{1e-2, 1e4, 4}.points()) {
      const auto kg = feller_functions(m, 1.0 / xi);
      const double slack = 1e-8 * (kg.K + kg.G) + 1e-14;
      const auto where = fmt("%s xi=%g", m.describe().c_str(), xi);
      lower.le(kg.K / 3.0, m.re_psi(xi) + slack, where);
      upper.le(averaged_exponent(m, xi), 0.5 * kg.K + kg.G + slack, where);
    }
  out.pass = out.pass && lower.ok && upper.ok;
  out.detail += "; K/3 <= Re psi: " + lower.report() + "; averaged <= K/2+G: " + upper.report();
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "closed-form potential kernel", 1, closed_form_potential},
      {2, "spectral additivity", 1, spectral_additivity},
      {3, "existence sandwich", 10, existence_sandwich},
      {4, "Green bound", 10, green_bound},
      {5, "heat versus cable variance", 10, heat_versus_cable},
      {6, "tail field bounded by cable field", 120, tail_bounded_by_cable},
      {7, "stationary covariance fidelity", 120, covariance_fidelity},
      {8, "derivative field variance", 120, derivative_variance},
      {9, "increment scaling exponents", 300, increment_scaling},
      {10, "torus cable variance and dt invariance", 300, torus_variance},
      {11, "local-time resolvent normalization", 600, resolvent_normalization},
      {12, "exit-time corollary", 600, exit_time_corollary},
      {13, "condition checks", 30, condition_checks},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += "; over budget";
    }
    if (!o.pass) ++failed;
    std::printf("%s %2d %s [%.2f s / %.0f s] %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, c.budget_s,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
