#pragma once

// Property suites run by `dynkin-lab verify`. Each property folds many
// inequality checks into one verdict carrying the worst margin seen.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dynkin/core/csv.hpp"
#include "dynkin/core/stats.hpp"
#include "dynkin/field_synthesis.hpp"
#include "dynkin/levy_model.hpp"
#include "dynkin/localtime_mc.hpp"
#include "dynkin/potential_kernel.hpp"
#include "dynkin/spde_sim.hpp"

namespace dynkin {

enum class Outcome { pass, fail, skip };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::pass: return "pass";
    case Outcome::fail: return "fail";
    case Outcome::skip: return "skip";
  }
  return "?";
}

struct PropertyResult {
  std::string suite;
  std::string name;
  Outcome outcome = Outcome::skip;
  std::size_t cases = 0;
  double worst_excess = 0.0;  // max over cases of lhs − (rhs + slack); ≤ 0 passes
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  double tol = 1e-8;
  std::size_t paths = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  std::size_t paths_or(std::size_t fallback) const { return paths ? paths : fallback; }
};

/// Accumulates lhs ≤ rhs checks for one property.
class Tally {
 public:
  Tally(std::string suite, std::string name)
      : start_(std::chrono::steady_clock::now()) {
    res_.suite = std::move(suite);
    res_.name = std::move(name);
    res_.worst_excess = -std::numeric_limits<double>::infinity();
  }

  void le(double lhs, double rhs, const std::string& where) {
    ++res_.cases;
    const double excess = std::isnan(lhs - rhs) ? std::numeric_limits<double>::infinity() : lhs - rhs;
    if (excess > res_.worst_excess) {
      res_.worst_excess = excess;
      worst_ = where + ": " + csv::format(lhs) + " <= " + csv::format(rhs);
    }
  }
  void near(double value, double target, double slack, const std::string& where) {
    le(std::abs(value - target), slack, where + " |" + csv::format(value) + " - " +
                                            csv::format(target) + "|");
  }

  PropertyResult finish() {
    res_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (res_.cases == 0) {
      res_.outcome = Outcome::skip;
      res_.worst_excess = 0.0;
      return res_;
    }
    res_.outcome = res_.worst_excess <= 0.0 ? Outcome::pass : Outcome::fail;
    res_.detail = "worst case " + worst_;
    return res_;
  }

  static PropertyResult skipped(std::string suite, std::string name, std::string why) {
    PropertyResult r;
    r.suite = std::move(suite);
    r.name = std::move(name);
    r.outcome = Outcome::skip;
    r.detail = std::move(why);
    return r;
  }

 private:
  PropertyResult res_;
  std::string worst_;
  std::chrono::steady_clock::time_point start_;
};

namespace suites {

inline std::string at(const char* k, double v) { return std::string(k) + "=" + csv::format(v); }

inline bool has_pure_jump_measure(const LevyModel& m) {
  return m.levy_measure().has_value() && m.gaussian_coefficient() == 0.0;
}

inline std::vector<PropertyResult> models(const LevyModel& m, const VerifyOptions& opt) {
  std::vector<PropertyResult> out;
  {
    Tally t("models", "zero_at_origin");
    t.le(std::abs(m.re_psi(0.0)), 0.0, "xi=0");
    out.push_back(t.finish());
  }
  {
    Tally t("models", "evenness");
    std::mt19937_64 gen(opt.seed);
    std::uniform_real_distribution<double> lg(-3.0, 4.0);
    for (int i = 0; i < 1000; ++i) {
      const double xi = std::pow(10.0, lg(gen));
      const double a = m.re_psi(xi), b = m.re_psi(-xi);
      t.le(std::abs(a - b), m.is_closed_form() ? 0.0 : 1e-12 * std::abs(a), at("xi", xi));
      t.le(-a, 0.0, at("xi", xi));
    }
    out.push_back(t.finish());
  }
  const auto xis = GeometricGrid{0.1, 1e4, 3}.points();
  if (has_pure_jump_measure(m)) {
    Tally r1("models", "feller_lower_bound");
    Tally rkg("models", "feller_averaged_upper_bound");
    for (double xi : xis) {
      const auto kg = feller_functions(m, 1.0 / xi);
      const double slack = opt.tol * (kg.K + kg.G) + 1e-12;
      r1.le(kg.K / 3.0, m.re_psi(xi) + slack, at("xi", xi));
      rkg.le(averaged_exponent(m, xi), 0.5 * kg.K + kg.G + slack, at("xi", xi));
    }
    out.push_back(r1.finish());
    out.push_back(rkg.finish());
  } else {
    out.push_back(Tally::skipped("models", "feller_lower_bound", "model has a Gaussian part or no jumps"));
    out.push_back(Tally::skipped("models", "feller_averaged_upper_bound", "model has a Gaussian part or no jumps"));
  }
  if (const auto* s = std::get_if<LevyModel::Stable>(&m.kind()); s && s->beta < 2.0) {
    Tally t("models", "stable_self_consistency");
    const auto k = LevyModel::khintchine(0.0, *m.levy_measure());
    for (double xi : GeometricGrid{0.1, 100.0, 5}.points())
      t.near(k.re_psi(xi) / m.re_psi(xi), 1.0, 1e-4, at("xi", xi));
    out.push_back(t.finish());
    Tally g("models", "stable_kg_ratio");
    for (double eps : GeometricGrid{1e-4, 1.0, 2}.points()) {
      const auto kg = feller_functions(m, eps);
      g.near(kg.G / kg.K, (2.0 - s->beta) / s->beta, 1e-4, at("eps", eps));
    }
    out.push_back(g.finish());
  }
  {
    Tally t("models", "dalang_condition");
    const auto rep = condition_report(m, 1.0);
    t.le(rep.dalang == Verdict::satisfied_numerically ? 0.0 : 1.0, 0.0,
         std::string("verdict ") + to_string(rep.dalang));
    out.push_back(t.finish());
  }
  return out;
}

inline std::vector<PropertyResult> kernels(const LevyModel& m, const VerifyOptions& opt) {
  std::vector<PropertyResult> out;
  KernelOptions kopt;
  kopt.tol = {opt.tol, 0.0};
  {
    Tally t("kernels", "green_bound");
    std::mt19937_64 gen(opt.seed + 1);
    std::uniform_real_distribution<double> pos(-5.0, 5.0);
    std::uniform_real_distribution<double> la(std::log(0.1), std::log(10.0));
    const double u1 = u_alpha(m, 1.0, 0.0, kopt);
    for (int i = 0; i < 100; ++i) {
      const double x = pos(gen), y = pos(gen), alpha = std::exp(la(gen));
      const double c = std::numbers::e * (alpha + 2.0 / alpha);
      t.le(u_alpha(m, alpha, x - y, kopt), c * u1 + opt.tol,
           at("alpha", alpha) + " " + at("r", x - y));
    }
    out.push_back(t.finish());
  }
  const double alphas[] = {0.1, 0.5, 1.0, 3.0, 8.0};
  const double times[] = {0.05, 0.3, 1.0, 2.0, 5.0};
  {
    Tally sw("kernels", "existence_sandwich");
    Tally add("kernels", "spectral_additivity");
    for (double alpha : alphas)
      for (double tt : times) {
        const auto p = variance_profile(m, {alpha, tt});
        const auto u2 = kernel_value(m, KernelSpec::potential(2.0 * alpha), 0.0, kopt);
        const std::string w = at("alpha", alpha) + " " + at("t", tt);
        const double tol_v = p.err_v + u2.error * std::exp(tt * alpha);
        const double tol_u = p.err_u + u2.error * std::exp(2 * tt * alpha);
        sw.le((1.0 - std::exp(-tt * alpha)) * u2.value, p.var_v + tol_v, w + " V lower");
        sw.le(p.var_v, std::exp(tt * alpha) * u2.value + tol_v, w + " V upper");
        sw.le((1.0 - std::exp(-2.0 * tt * alpha)) * u2.value, p.var_u + tol_u, w + " U lower");
        sw.le(p.var_u, std::exp(2.0 * tt * alpha) * u2.value + tol_u, w + " U upper");
        add.near((p.var_v + p.var_s) / p.var_eta, 1.0, 1e-8, w);
      }
    out.push_back(sw.finish());
    out.push_back(add.finish());
  }
  {
    Tally t("kernels", "heat_dominates_cable");
    const auto mu = AtomicMeasure::dipole(0.0, 0.7);
    for (double alpha : {0.1, 1.0, 4.0})
      for (double tt : {0.1, 1.0, 3.0}) {
        const auto p = variance_profile(m, {alpha, tt});
        const std::string w = at("alpha", alpha) + " " + at("t", tt);
        const double c = 3.0 * std::exp(alpha * tt);
        t.le(p.var_v, p.var_u + p.err_u + p.err_v, w);
        t.le(p.var_u, c * p.var_v + p.err_u + c * p.err_v, w);
        const auto qv = quadratic_form(m, mu, KernelSpec::var_v(alpha, tt), QuadraticRoute::double_sum, kopt);
        const auto qu = quadratic_form(m, mu, KernelSpec::var_u(tt), QuadraticRoute::double_sum, kopt);
        t.le(qv.value, qu.value + qv.error + qu.error, w + " dipole");
        t.le(qu.value, c * qv.value + c * qv.error + qu.error, w + " dipole");
      }
    out.push_back(t.finish());
  }
  {
    Tally t("kernels", "smoother_than");
    std::mt19937_64 gen(opt.seed + 2);
    std::uniform_real_distribution<double> pos(-2.0, 2.0);
    std::normal_distribution<double> weight;
    for (int trial = 0; trial < 12; ++trial) {
      std::vector<AtomicMeasure::Atom> atoms;
      for (int i = 0; i < 1 + trial % 4; ++i) atoms.push_back({pos(gen), weight(gen)});
      const AtomicMeasure mu(atoms);
      const double alpha = 0.5 + trial * 0.3, tt = 0.2 + 0.15 * trial;
      const auto s = quadratic_form(m, mu, KernelSpec::var_s(alpha, tt), QuadraticRoute::double_sum, kopt);
      const auto v = quadratic_form(m, mu, KernelSpec::var_v(alpha, tt), QuadraticRoute::double_sum, kopt);
      const double f = 1.0 / std::expm1(tt * alpha);
      t.le(s.value, f * v.value + s.error + f * v.error, "trial " + std::to_string(trial));
    }
    out.push_back(t.finish());
  }
  {
    Tally t("kernels", "pbar_nonincreasing");
    double prev = std::numeric_limits<double>::infinity();
    double prev_err = 0.0;
    for (double tt : GeometricGrid{0.01, 100.0, 2}.points()) {
      const auto kv = kernel_value(m, KernelSpec::pbar(tt), 0.0, kopt);
      if (std::isfinite(prev)) t.le(kv.value, prev + kv.error + prev_err, at("t", tt));
      prev = kv.value;
      prev_err = kv.error;
    }
    out.push_back(t.finish());
  }
  return out;
}

inline std::vector<PropertyResult> fields(const LevyModel& m, const VerifyOptions& opt) {
  std::vector<PropertyResult> out;
  const double alpha = 1.0, t = 1.0;
  const std::size_t reps = opt.paths_or(2000);
  const auto grid = SpectralGrid::default_for(m, alpha);
  const auto xs = SpatialGrid::default_for(grid);
  const JointSampler js(m, alpha, t, grid, xs);
  {
    Tally d("fields", "determinism");
    const auto a = js.sample(opt.seed, 3);
    const auto b = js.sample(opt.seed, 3);
    double diff = 0.0;
    for (std::size_t j = 0; j < xs.points; ++j)
      diff = std::max(diff, std::abs(a.eta.values[j] - b.eta.values[j]));
    d.le(diff, 0.0, "replicate 3");
    out.push_back(d.finish());
  }
  {
    Tally d("fields", "discretization_consistency");
    const SpectralGrid coarse{grid.cutoff, grid.modes / 4};
    const JointSampler jc(m, alpha, t, coarse, {xs.dx, 1});
    for (auto k : {FieldKind::V, FieldKind::S, FieldKind::eta}) {
      const auto& b = js.bias(k);
      const auto& bc = jc.bias(k);
      const std::string w = to_string(k);
      // the fine-grid Riemann gap must close on the coarse one and sit inside its own budget
      d.le(std::abs(b.total() - b.tail), std::abs(bc.total() - bc.tail) + 1e-12, w + " K refinement");
      d.le(std::abs(b.total()), b.bound() * 1.5 + 1e-12, w + " budget");
    }
    out.push_back(d.finish());
  }
  // dipole δ_0 − δ_r and covariance lags on the spatial grid
  const std::size_t m1 = std::min<std::size_t>(xs.points - 1, static_cast<std::size_t>(std::lround(0.5 / xs.dx)));
  const std::size_t m2 = std::min<std::size_t>(xs.points - 1, 2 * m1);
  {
    RunningStats v2, s2;
    CovarianceEnsemble cov({0, m1, m2});
    for (std::size_t r = 0; r < reps; ++r) {
      const auto s = js.sample(opt.seed, static_cast<std::uint32_t>(r));
      const double iv = s.V.values[m1] - s.V.values[0];
      const double is = s.S.values[m1] - s.S.values[0];
      v2.add(iv * iv);
      s2.add(is * is);
      cov.add(s.eta.values);
    }
    Tally sm("fields", "smoother_than_empirical");
    const double f = 1.0 / std::expm1(t * alpha);
    sm.le(s2.mean(), f * v2.mean() + 3.0 * std::hypot(s2.stderr_mean(), f * v2.stderr_mean()),
          at("r", xs.x(m1)));
    out.push_back(sm.finish());
    Tally cf("fields", "covariance_fidelity");
    const double bias = js.bias(FieldKind::eta).bound();
    for (std::size_t i = 0; i < 3; ++i) {
      const double lag = xs.x(cov.steps()[i]);
      const auto ex = kernel_value(m, KernelSpec::potential(alpha), lag, {{1e-10, 0.0}});
      cf.near(cov.at(i).mean(), ex.value, 3.0 * cov.at(i).stderr_mean() + bias + ex.error, at("r", lag));
    }
    out.push_back(cf.finish());
  }
  {
    const auto rep = condition_report(m, alpha);
    if (rep.hawkes != Verdict::satisfied_numerically) {
      out.push_back(Tally::skipped("fields", "derivative_variance", "log-growth condition not satisfied"));
    } else {
      Tally dv("fields", "derivative_variance");
      for (int n = 1; n <= 4; ++n) {
        const JointSampler jd(m, alpha, t, grid, {xs.dx, 1}, n);
        RunningStats sq;
        for (std::size_t r = 0; r < reps; ++r) {
          const auto s = jd.sample(opt.seed + 7, static_cast<std::uint32_t>(r));
          sq.add(s.S_deriv->values[0] * s.S_deriv->values[0]);
        }
        const auto& b = jd.bias(FieldKind::S_derivative);
        dv.near(sq.mean(), b.exact_variance, 3.0 * sq.stderr_mean() + b.bound(), "n=" + std::to_string(n));
      }
      out.push_back(dv.finish());
    }
  }
  return out;
}

inline std::vector<PropertyResult> spde(const LevyModel& m, const VerifyOptions& opt) {
  std::vector<PropertyResult> out;
  {
    Tally h("spde", "hermitian_symmetry");
    const TorusConfig cfg{3.0, 5, 0.5, 0.01};
    const TorusSimulator sim(cfg, m);
    auto s = TorusState::zero(cfg, opt.seed);
    for (int i = 0; i < 1000; ++i) {
      sim.advance(s, 1000);
      double worst = std::abs(s.mode(0).imag());
      for (long n = 1; n <= cfg.half(); ++n) worst = std::max(worst, std::abs(s.mode(-n) - std::conj(s.mode(n))));
      h.le(worst, 0.0, "step " + std::to_string(s.steps));
    }
    out.push_back(h.finish());
  }
  {
    Tally d("spde", "dt_invariance");
    const TorusConfig coarse{8.0, 33, 0.0, 0.1};
    TorusConfig fine = coarse;
    fine.dt = coarse.dt / 8.0;
    const std::vector<double> probes{0.0, 2.0, 4.0, 6.0};
    const std::size_t paths = opt.paths_or(4000);
    const auto a = run_moments(coarse, m, 1.0, paths, probes, {{1.0}, opt.seed, opt.threads});
    const auto b = run_moments(fine, m, 1.0, paths, probes, {{1.0}, opt.seed + 1, opt.threads});
    const auto& pa = a.pooled[0];
    const auto& pb = b.pooled[0];
    d.near(pa.value, pb.value, 3.0 * std::hypot(pa.stderr_value, pb.stderr_value), "dt vs dt/8");
    d.near(pa.value, pa.exact, 3.0 * pa.stderr_value, "dt exact");
    d.near(pb.value, pb.exact, 3.0 * pb.stderr_value, "dt/8 exact");
    out.push_back(d.finish());
  }
  {
    Tally v("spde", "mode_long_run_variance");
    const TorusConfig cfg{4.0, 9, 1.0, 0.5};
    const TorusSimulator sim(cfg, m);
    std::vector<RunningStats> sq(5);
    const std::size_t paths = opt.paths_or(4000);
    for (std::size_t p = 0; p < paths; ++p) {
      auto s = TorusState::zero(cfg, opt.seed + 2, static_cast<std::uint32_t>(p));
      sim.advance(s, 40);
      for (long n = 0; n <= 4; ++n) sq[n].add(std::norm(s.mode(n)));
    }
    for (long n = 0; n <= 4; ++n) {
      const double target = mode_variance(cfg, sim.rates()[n], 20.0);
      v.near(sq[n].mean(), target, 3.0 * sq[n].stderr_mean(), "n=" + std::to_string(n));
    }
    out.push_back(v.finish());
  }
  {
    Tally c("spde", "cable_modes_below_heat_modes");
    const TorusConfig cfg{10.0, 33, 0.0, 0.1};
    const auto rates = torus_rates(cfg, m);
    for (double alpha : {0.1, 1.0, 5.0})
      for (double tt : {0.01, 1.0, 30.0})
        for (std::size_t n = 0; n < rates.size(); ++n)
          c.le(mode_variance(cfg, rates[n] + alpha, tt), mode_variance(cfg, rates[n], tt),
               at("alpha", alpha) + " " + at("t", tt) + " n=" + std::to_string(n));
    out.push_back(c.finish());
  }
  return out;
}

/// PathConfig for the model, when it has local times that can be simulated.
inline std::optional<PathConfig> path_config_for(const LevyModel& m) {
  if (const auto* b = std::get_if<LevyModel::Brownian>(&m.kind())) return PathConfig{2.0, b->kappa};
  if (const auto* s = std::get_if<LevyModel::Stable>(&m.kind()); s && s->beta > 1.0)
    return PathConfig{s->beta, s->c};
  return std::nullopt;
}

inline std::vector<PropertyResult> localtime(const LevyModel& m, const VerifyOptions& opt) {
  std::vector<PropertyResult> out;
  auto base = path_config_for(m);
  if (!base) {
    for (const char* n : {"additivity", "domination", "linear_growth", "resolvent_normalization"})
      out.push_back(Tally::skipped("localtime", n, "path simulation needs brownian or stable(beta > 1)"));
    return out;
  }
  PathConfig cfg = *base;
  cfg.dt = 2e-3;
  cfg.seed = opt.seed;
  {
    Tally a("localtime", "additivity");
    PathConfig pc = cfg;
    pc.horizon = 4.0;
    for (std::uint32_t p = 0; p < 20; ++p) {
      const auto path = simulate_path(pc, p);
      const double eps = pc.bandwidth();
      const std::size_t n = path.x.size() - 1;
      for (double y : {0.0, 0.3, -0.6}) {
        const double whole = local_time(path, y, eps).value;
        const double parts = local_time(path, y, eps, 0, n / 2).value + local_time(path, y, eps, n / 2).value;
        a.near(whole, parts, 1e-12 * std::max(1.0, whole), "path " + std::to_string(p) + " " + at("y", y));
      }
    }
    out.push_back(a.finish());
  }
  const std::size_t paths = opt.paths_or(3000);
  const auto at_y = expected_local_time(cfg, 0.0, 0.0, 1.0, paths, opt.threads);
  {
    Tally d("localtime", "domination");
    for (double x : {0.3, 0.7, 1.5}) {
      const auto e = expected_local_time(cfg, x, 0.0, 1.0, paths, opt.threads);
      d.le(e.value, at_y.value + 3.0 * std::hypot(e.stderr_value, at_y.stderr_value), at("x", x));
    }
    out.push_back(d.finish());
  }
  {
    Tally g("localtime", "linear_growth");
    for (double tt : {1.0, 2.0, 4.0}) {
      const auto e = expected_local_time(cfg, 0.7, 0.0, tt, paths, opt.threads);
      g.le(e.value, 2.0 * tt * at_y.value + 3.0 * std::hypot(e.stderr_value, 2.0 * tt * at_y.stderr_value),
           at("t", tt));
    }
    out.push_back(g.finish());
  }
  {
    Tally r("localtime", "resolvent_normalization");
    for (double alpha : {1.0, 2.0}) {
      const auto rc = resolvent_check(cfg, alpha, 0.0, 0.0, opt.paths_or(20000), opt.threads);
      r.near(rc.estimate, rc.exact, 3.0 * rc.stderr_value + std::abs(rc.eps_bias) + rc.dt_bias,
             at("alpha", alpha));
    }
    out.push_back(r.finish());
  }
  return out;
}

}  // namespace suites

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"models", "kernels", "fields", "spde", "localtime"};
  return names;
}

/// Runs one suite, or all of them for "all". Suites other than `models`
/// are skipped when the Dalang condition is not satisfied for the model.
inline std::vector<PropertyResult> run_suite(const std::string& suite, const LevyModel& m,
                                             const VerifyOptions& opt) {
  std::vector<PropertyResult> out;
  const bool all = suite == "all";
  if (!all && std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end())
    throw DomainError("unknown verify suite \"" + suite + "\"");
  auto want = [&](const char* s) { return all || suite == s; };
  auto append = [&](std::vector<PropertyResult> v) { out.insert(out.end(), v.begin(), v.end()); };
  if (want("models")) append(suites::models(m, opt));
  const bool dalang = condition_report(m, 1.0).dalang == Verdict::satisfied_numerically;
  for (const auto& [name, fn] :
       {std::pair{"kernels", &suites::kernels}, {"fields", &suites::fields},
        {"spde", &suites::spde}, {"localtime", &suites::localtime}}) {
    if (!want(name)) continue;
    if (!dalang) {
      out.push_back(Tally::skipped(name, "*", "Dalang condition not satisfied for " + m.describe()));
      continue;
    }
    append(fn(m, opt));
  }
  return out;
}

inline void write_verify_csv(std::ostream& os, const csv::Header& header,
                             const std::vector<PropertyResult>& rows) {
  header.write(os);
  os << "suite,property,verdict,cases,worst_excess,detail\n";
  for (const auto& r : rows) {
    std::string detail = r.detail;
    for (auto& ch : detail)
      if (ch == ',' || ch == '\n') ch = ';';
    csv::write_row(os, {r.suite, r.name, to_string(r.outcome), std::to_string(r.cases),
                        csv::format(r.worst_excess), detail});
  }
}

}  // namespace dynkin
