#pragma once

// Command execution for dynkin-lab: turns a validated ExperimentConfig into
// CSV artifacts plus summary.txt, and an exit status.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dynkin/config.hpp"
#include "dynkin/core/csv.hpp"
#include "dynkin/core/parallel.hpp"
#include "dynkin/field_synthesis.hpp"
#include "dynkin/levy_model.hpp"
#include "dynkin/localtime_mc.hpp"
#include "dynkin/potential_kernel.hpp"
#include "dynkin/spde_sim.hpp"
#include "dynkin/verify.hpp"

namespace dynkin {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { exit_ok = 0, exit_property_failure = 1, exit_usage = 2, exit_nonconvergence = 3 };

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"check", "kernel", "synth", "spde", "localtime", "verify"};
  return names;
}

/// Flag overrides; flags win over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<double> tol;
  std::optional<std::string> suite;
  std::optional<unsigned> threads;
};

inline void apply(ExperimentConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  if (o.paths) {
    if (*o.paths < 2) throw ConfigError({"--paths: must be >= 2"});
    cfg.synth.replications = *o.paths;
    cfg.spde.paths = *o.paths;
    cfg.localtime.paths = *o.paths;
    cfg.verify.paths = *o.paths;
  }
  if (o.tol) {
    if (!(*o.tol > 0.0)) throw ConfigError({"--tol: must be > 0"});
    cfg.kernel.tol = *o.tol;
    cfg.verify.tol = *o.tol;
  }
  if (o.suite) {
    const auto& names = suite_names();
    if (*o.suite != "all" && std::find(names.begin(), names.end(), *o.suite) == names.end())
      throw ConfigError({"--suite: must be one of {all, models, kernels, fields, spde, localtime}"});
    cfg.verify.suite = *o.suite;
  }
}

/// Collects artifacts and summary lines for one command invocation.
class RunContext {
 public:
  RunContext(std::string command, const ExperimentConfig& cfg, std::filesystem::path out,
             std::ostream& log)
      : command_(std::move(command)), cfg_(cfg), out_(std::move(out)), log_(log) {
    std::filesystem::create_directories(out_);
  }

  const ExperimentConfig& cfg() const { return cfg_; }

  csv::Header header() const {
    csv::Header h;
    h.add("program", std::string("dynkin-lab ") + kVersion)
        .add("command", command_)
        .add("model", cfg_.levy().describe())
        .add_int("seed", cfg_.seed)
        .add("config", canonical_json(cfg_).dump());
    return h;
  }

  /// Writes `name` under the output directory via a temporary file and rename.
  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const auto target = out_ / name;
    const auto tmp = out_ / (name + ".tmp");
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
      body(os);
      os.flush();
      if (!os) throw std::runtime_error("write to " + tmp.string() + " failed");
    }
    std::filesystem::rename(tmp, target);
    files_.push_back(name);
  }

  void line(const std::string& s) {
    summary_ << s << '\n';
    log_ << s << '\n';
  }

  void finish(int status) {
    line("status: " + std::to_string(status));
    std::ostringstream files;
    for (const auto& f : files_) files << ' ' << f;
    line("artifacts:" + files.str());
    const std::string text = summary_.str();
    write("summary.txt", [&](std::ostream& os) {
      os << "dynkin-lab " << kVersion << " " << command_ << "\nmodel: " << cfg_.levy().describe()
         << "\nseed: " << cfg_.seed << '\n'
         << text;
    });
  }

 private:
  std::string command_;
  const ExperimentConfig& cfg_;
  std::filesystem::path out_;
  std::ostream& log_;
  std::ostringstream summary_;
  std::vector<std::string> files_;
};

namespace commands {

inline int check(RunContext& ctx) {
  const auto& c = ctx.cfg().check;
  const auto& model = ctx.cfg().levy();
  const auto rep = condition_report(model, c.alpha, c.xi, c.eps);
  ctx.write("conditions.csv", [&](std::ostream& os) {
    auto h = ctx.header();
    h.add("alpha", c.alpha);
    h.write(os);
    os << "table,abscissa,value\n";
    auto dump = [&](const char* name, const std::vector<ConditionReport::Row>& rows) {
      for (const auto& r : rows) csv::write_row(os, {name, csv::format(r.abscissa), csv::format(r.value)});
    };
    dump("dalang_panel", rep.dalang_panels);
    dump("hawkes_trend", rep.hawkes_trend);
    dump("quasi_increasing_ratio", rep.quasi_increasing_ratio);
    dump("kg_ratio", rep.kg_ratio);
  });
  ctx.line("dalang: " + std::string(to_string(rep.dalang)) + " (integral " +
           (rep.dalang_infinite ? std::string("inf") : csv::format(rep.dalang_integral)) + ")");
  ctx.line("hawkes: " + std::string(to_string(rep.hawkes)));
  ctx.line("quasi_increasing: " + std::string(to_string(rep.quasi_increasing)));
  ctx.line("kg_ratio: " + std::string(to_string(rep.kg)));
  return rep.dalang == Verdict::violated_numerically ? exit_property_failure : exit_ok;
}

inline int kernel(RunContext& ctx) {
  const auto& k = ctx.cfg().kernel;
  const auto& model = ctx.cfg().levy();
  KernelOptions opt;
  opt.tol = {k.tol, 0.0};
  struct Row {
    KernelSpec spec;
    double r;
    KernelValue v;
  };
  std::vector<Row> rows;
  auto eval = [&](const KernelSpec& spec) {
    for (double r : k.r) rows.push_back({spec, r, kernel_value(model, spec, r, opt)});
  };
  for (double a : k.alpha) eval(KernelSpec::potential(a));
  for (double t : k.t) {
    eval(KernelSpec::pbar(t));
    eval(KernelSpec::var_u(t));
  }
  for (double a : k.alpha)
    for (double t : k.t) {
      eval(KernelSpec::var_v(a, t));
      eval(KernelSpec::var_s(a, t));
    }
  ctx.write("kernels.csv", [&](std::ostream& os) {
    ctx.header().write(os);
    os << "kernel,alpha,t,r,value,error,cutoff\n";
    for (const auto& r : rows)
      csv::write_row(os, {to_string(r.spec.kernel), csv::format(r.spec.alpha), csv::format(r.spec.t),
                          csv::format(r.r), csv::format(r.v.value), csv::format(r.v.error),
                          csv::format(r.v.cutoff)});
  });
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.v.error);
  ctx.line("kernel values: " + std::to_string(rows.size()) + ", largest error bound " + csv::format(worst));
  return exit_ok;
}

inline FieldKind parse_kind(const std::string& s) {
  if (s == "U") return FieldKind::U;
  if (s == "V") return FieldKind::V;
  if (s == "S") return FieldKind::S;
  if (s == "eta") return FieldKind::eta;
  return FieldKind::S_derivative;
}

inline int synth(RunContext& ctx) {
  const auto& s = ctx.cfg().synth;
  const auto& model = ctx.cfg().levy();
  const std::uint64_t seed = ctx.cfg().seed;
  SpectralGrid grid = SpectralGrid::default_for(model, s.alpha);
  if (s.cutoff) grid.cutoff = *s.cutoff;
  if (s.modes) grid.modes = *s.modes;
  SpatialGrid xs = SpatialGrid::default_for(grid);
  if (s.dx) xs.dx = *s.dx;
  if (s.points) xs.points = *s.points;

  std::vector<FieldKind> kinds;
  for (const auto& f : s.fields) {
    const auto k = parse_kind(f);
    if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
  }
  const bool want_joint = std::any_of(kinds.begin(), kinds.end(), [](FieldKind k) { return k != FieldKind::U; });
  const bool want_deriv = std::count(kinds.begin(), kinds.end(), FieldKind::S_derivative) > 0;
  const bool want_heat = std::count(kinds.begin(), kinds.end(), FieldKind::U) > 0;
  std::optional<JointSampler> joint;
  std::optional<HeatSampler> heat;
  if (want_joint)
    joint.emplace(model, s.alpha, s.t, grid, xs,
                  want_deriv ? std::optional<int>(s.derivative) : std::nullopt);
  if (want_heat) heat.emplace(model, s.t, grid, xs);

  auto draw = [&](std::uint32_t r) {
    std::vector<FieldSample> out;
    std::optional<JointSample> js;
    if (joint) js = joint->sample(seed, r);
    for (auto k : kinds) {
      switch (k) {
        case FieldKind::U: out.push_back(heat->sample(seed, r)); break;
        case FieldKind::V: out.push_back(js->V); break;
        case FieldKind::S: out.push_back(js->S); break;
        case FieldKind::eta: out.push_back(js->eta); break;
        case FieldKind::S_derivative: out.push_back(*js->S_deriv); break;
      }
    }
    return out;
  };

  const auto first = draw(0);
  for (const auto& f : first) {
    ctx.write(std::string("field_") + to_string(f.spec.kind) + ".csv", [&](std::ostream& os) {
      auto h = ctx.header();
      for (const auto& [k, v] : field_header(f).entries)
        if (std::none_of(h.entries.begin(), h.entries.end(), [&](const auto& e) { return e.first == k; }))
          h.add(k, v);
      h.write(os);
      os << "x,value\n";
      for (std::size_t j = 0; j < f.values.size(); ++j)
        csv::write_row(os, {csv::format(f.xs.x(j)), csv::format(f.values[j])});
    });
    ctx.line(std::string("field ") + f.spec.describe() + ": exact variance " +
             csv::format(f.bias.exact_variance) + ", synthesized " +
             csv::format(f.bias.synthesized_variance) + ", bias bound " + csv::format(f.bias.bound()));
  }
  if (s.replications < 2) return exit_ok;

  std::vector<std::size_t> cov_steps;
  for (double lag : s.cov_lags) {
    const auto m = static_cast<std::size_t>(std::llround(lag / xs.dx));
    if (m >= xs.points) throw DomainError("synth.cov_lags: lag " + csv::format(lag) + " exceeds the spatial grid");
    if (std::find(cov_steps.begin(), cov_steps.end(), m) == cov_steps.end()) cov_steps.push_back(m);
  }
  std::vector<std::size_t> sf_steps;
  std::vector<LagBand> bands;
  if (s.scaling) {
    sf_steps = lag_steps(*s.scaling, xs);
    for (const auto& f : first) bands.push_back(resolved_band(model, f.spec, grid, xs));
  }

  struct Acc {
    std::vector<CovarianceEnsemble> cov;
    std::vector<StructureFunction> sf;
  };
  auto work = [&](std::size_t lo, std::size_t hi) {
    Acc acc;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      acc.cov.emplace_back(cov_steps);
      if (s.scaling) acc.sf.emplace_back(xs, sf_steps);
    }
    for (std::size_t r = lo; r < hi; ++r) {
      const auto fs = draw(static_cast<std::uint32_t>(r));
      for (std::size_t i = 0; i < fs.size(); ++i) {
        acc.cov[i].add(fs[i].values);
        if (s.scaling) acc.sf[i].add(fs[i].values);
      }
    }
    return acc;
  };
  auto merge = [](Acc& a, const Acc& b) {
    if (a.cov.empty()) {
      a = b;
      return;
    }
    for (std::size_t i = 0; i < a.cov.size(); ++i) {
      a.cov[i].merge(b.cov[i]);
      if (!a.sf.empty()) a.sf[i].merge(b.sf[i]);
    }
  };
  const auto acc = parallel_blocks<Acc>(s.replications, 64, work, merge, ctx.cfg().threads);

  for (std::size_t i = 0; i < first.size(); ++i) {
    const auto& f = first[i];
    std::vector<CovarianceRow> rows;
    for (std::size_t j = 0; j < cov_steps.size(); ++j) {
      const double lag = xs.x(cov_steps[j]);
      const auto ex = kernel_value(model, f.spec.kernel(), lag, {{1e-10, 0.0}});
      rows.push_back({lag, acc.cov[i].at(j).mean(), ex.value, acc.cov[i].at(j).stderr_mean()});
    }
    auto h = ctx.header();
    h.add("field", f.spec.describe()).add_int("replications", s.replications)
        .add("bias_bound", f.bias.bound());
    ctx.write(std::string("covariance_") + to_string(f.spec.kind) + ".csv",
              [&](std::ostream& os) { write_covariance_csv(os, h, rows); });
    for (const auto& r : rows)
      ctx.line(std::string("cov ") + to_string(f.spec.kind) + " lag " + csv::format(r.lag) + ": " +
               csv::format(r.empirical) + " +- " + csv::format(r.stderr_value) + " vs exact " +
               csv::format(r.exact));
  }
  if (s.scaling) {
    std::vector<std::pair<std::string, ScalingFit>> fits;
    for (std::size_t i = 0; i < first.size(); ++i)
      fits.emplace_back(first[i].spec.describe(), increment_scaling_exponent(acc.sf[i], bands[i]));
    ctx.write("scaling.csv", [&](std::ostream& os) {
      auto h = ctx.header();
      h.add_int("replications", s.replications);
      h.write(os);
      os << "field,slope,stderr,lag_min,lag_max,band_lo,band_hi\n";
      for (std::size_t i = 0; i < fits.size(); ++i) {
        const auto& [name, fit] = fits[i];
        csv::write_row(os, {name, csv::format(fit.slope), csv::format(fit.stderr_slope),
                            csv::format(fit.lags.front()), csv::format(fit.lags.back()),
                            csv::format(bands[i].lo), csv::format(bands[i].hi)});
      }
    });
    for (const auto& [name, fit] : fits)
      ctx.line("scaling " + name + ": slope " + csv::format(fit.slope) + " +- " + csv::format(fit.stderr_slope));
  }
  return exit_ok;
}

inline int spde(RunContext& ctx) {
  const auto& p = ctx.cfg().spde;
  const auto& model = ctx.cfg().levy();
  const TorusConfig cfg{p.L, p.N, p.alpha, p.dt};
  cfg.validate();
  const double ratio = image_sum_ratio(cfg, model, p.t_end);
  if (!(ratio < 0.01))
    throw DomainError("torus too small: image-sum ratio " + csv::format(ratio) +
                      " at t_end is not below 1%; increase spde.L");
  const auto rep = run_moments(cfg, model, p.t_end, p.paths, p.probes, {p.times, ctx.cfg().seed, ctx.cfg().threads});
  ctx.write("moments.csv", [&](std::ostream& os) {
    auto h = ctx.header();
    h.add("image_sum_ratio", ratio);
    h.write(os);
    write_moment_csv(os, rep);
  });
  const double t_last = rep.pooled.back().t;
  std::vector<CovarianceRow> rows;
  for (const auto& c : rep.covariances)
    if (c.t == t_last) rows.push_back({c.lag, c.empirical, c.exact, c.stderr_value});
  auto h = ctx.header();
  h.add("t", t_last);
  ctx.write("covariance.csv", [&](std::ostream& os) { write_covariance_csv(os, h, rows); });
  for (const auto& pv : rep.pooled)
    ctx.line("pooled variance t=" + csv::format(pv.t) + ": " + csv::format(pv.value) + " +- " +
             csv::format(pv.stderr_value) + " vs exact " + csv::format(pv.exact));
  if (rep.stationarity) {
    const auto& st = *rep.stationarity;
    ctx.line("stationarity t=" + csv::format(st.t) + " vs 2t: |" + csv::format(st.var_2t) + " - " +
             csv::format(st.var_t) + "| <= " + csv::format(st.bound) + " + 3*" +
             csv::format(st.stderr_diff) + ": " + (st.passed ? "pass" : "fail"));
    if (!st.passed) return exit_property_failure;
  }
  return exit_ok;
}

inline int localtime(RunContext& ctx) {
  const auto& l = ctx.cfg().localtime;
  const auto& model = ctx.cfg().levy();
  auto base = suites::path_config_for(model);
  if (!base)
    throw DomainError("localtime needs a brownian or stable(beta in (1,2]) model, got " + model.describe());
  PathConfig cfg = *base;
  cfg.dt = l.dt;
  cfg.eps = l.eps;
  cfg.seed = ctx.cfg().seed;
  int status = exit_ok;
  if (l.mode != "corollary") {
    const auto r = resolvent_check(cfg, l.alpha, l.x, l.y, l.paths, ctx.cfg().threads);
    ctx.write("resolvent.csv", [&](std::ostream& os) {
      ctx.header().write(os);
      os << "alpha,x,y,estimate,stderr,exact,smoothed,eps_bias,dt_bias,eps,dt,paths\n";
      csv::write_row(os, {csv::format(l.alpha), csv::format(l.x), csv::format(l.y), csv::format(r.estimate),
                          csv::format(r.stderr_value), csv::format(r.exact), csv::format(r.smoothed),
                          csv::format(r.eps_bias), csv::format(r.dt_bias), csv::format(r.eps),
                          csv::format(r.dt), std::to_string(r.paths)});
    });
    ctx.line("resolvent: E L_S = " + csv::format(r.estimate) + " +- " + csv::format(r.stderr_value) +
             " vs u_alpha = " + csv::format(r.exact) + " (eps bias " + csv::format(r.eps_bias) +
             ", dt bias " + csv::format(r.dt_bias) + ")");
  }
  if (l.mode != "resolvent") {
    const auto r = corollary_test(cfg, l.alpha, l.a, l.b, l.t, l.paths, ctx.cfg().threads);
    ctx.write("corollary.csv", [&](std::ostream& os) { write_corollary_csv(os, ctx.header(), {r}); });
    ctx.line("corollary: lhs " + csv::format(r.lhs) + " +- " + csv::format(r.lhs_se) + ", rhs " +
             csv::format(r.rhs) + " +- " + csv::format(r.rhs_se) + ": " + (r.pass ? "pass" : "fail"));
    if (!r.pass) status = exit_property_failure;
  }
  return status;
}

inline int verify(RunContext& ctx) {
  const auto& v = ctx.cfg().verify;
  const VerifyOptions opt{v.tol, v.paths, ctx.cfg().seed, ctx.cfg().threads};
  const auto results = run_suite(v.suite, ctx.cfg().levy(), opt);
  auto h = ctx.header();
  h.add("suite", v.suite);
  ctx.write("verify.csv", [&](std::ostream& os) { write_verify_csv(os, h, results); });
  std::size_t failed = 0;
  for (const auto& r : results) {
    if (r.outcome == Outcome::fail) ++failed;
    std::string tag = r.outcome == Outcome::pass ? "PASS" : r.outcome == Outcome::fail ? "FAIL" : "SKIP";
    ctx.line(tag + " " + r.suite + "." + r.name + " [" + std::to_string(r.cases) + " cases, " +
             csv::format(std::round(r.seconds * 100.0) / 100.0) + " s] " + r.detail);
  }
  ctx.line(std::to_string(failed) + " of " + std::to_string(results.size()) + " properties failed");
  return failed ? exit_property_failure : exit_ok;
}

}  // namespace commands

/// Runs a command; module errors propagate to the caller with their type.
inline int run(const std::string& command, const ExperimentConfig& cfg,
               const std::filesystem::path& out, std::ostream& log = std::cout) {
  RunContext ctx(command, cfg, out, log);
  int status = exit_ok;
  if (command == "check") status = commands::check(ctx);
  else if (command == "kernel") status = commands::kernel(ctx);
  else if (command == "synth") status = commands::synth(ctx);
  else if (command == "spde") status = commands::spde(ctx);
  else if (command == "localtime") status = commands::localtime(ctx);
  else if (command == "verify") status = commands::verify(ctx);
  else throw DomainError("unknown command \"" + command + "\"");
  ctx.finish(status);
  return status;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError({p.string() + ": cannot open configuration file"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Full front end below argument parsing: load, override, run, map errors
/// to exit codes. Error messages name the command, config path and model.
inline int execute(const std::string& command, const std::filesystem::path& config_path,
                   const Overrides& overrides, const std::filesystem::path& out,
                   std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  const std::string where = "dynkin-lab " + command + " (config " + config_path.string() + ")";
  ExperimentConfig cfg;
  try {
    cfg = parse_config(read_file(config_path));
    apply(cfg, overrides);
  } catch (const ConfigError& e) {
    err << where << ": invalid configuration\n";
    for (const auto& m : e.messages()) err << "  " << m << '\n';
    return exit_usage;
  }
  const std::string ctx = where + " model " + cfg.levy().describe() + " seed " + std::to_string(cfg.seed);
  try {
    return run(command, cfg, out, log);
  } catch (const NonConvergenceError& e) {
    err << ctx << ": numerical non-convergence: " << e.what() << " (partial value "
        << csv::format(e.partial_value()) << ", error estimate " << csv::format(e.error_estimate()) << ")\n";
    return exit_nonconvergence;
  } catch (const DomainError& e) {
    err << ctx << ": " << e.what() << '\n';
    return exit_usage;
  }
}

}  // namespace dynkin
