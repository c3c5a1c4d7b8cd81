#pragma once

// JSON experiment configuration. Unknown keys are rejected, every value is
// range-checked, and all problems are reported together.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynkin/core/errors.hpp"
#include "dynkin/field_synthesis.hpp"
#include "dynkin/levy_model.hpp"

namespace dynkin {

using json = nlohmann::ordered_json;

struct CheckBlock {
  double alpha = 1.0;
  GeometricGrid xi{10.0, 1e6, 4};
  GeometricGrid eps{1e-6, 1e-1, 4};
};

struct KernelBlock {
  std::vector<double> alpha{1.0};
  std::vector<double> t{1.0};
  std::vector<double> r{0.0, 0.5, 1.0, 2.0};
  double tol = 1e-8;
};

struct SynthBlock {
  std::vector<std::string> fields{"V", "S", "eta"};
  double alpha = 1.0;
  double t = 1.0;
  int derivative = 1;  // order of S_derivative, used when that field is requested
  std::optional<double> cutoff;
  std::optional<std::size_t> modes;
  std::optional<double> dx;
  std::optional<std::size_t> points;
  std::size_t replications = 1;
  std::vector<double> cov_lags{0.0, 0.05, 0.1, 0.2};
  std::optional<LagRange> scaling;
};

struct SpdeBlock {
  double L = 64.0;
  std::size_t N = 4097;
  double alpha = 2.0;
  double dt = 0.1;
  double t_end = 6.0;
  std::size_t paths = 1000;
  std::vector<double> probes{0.0, 0.5, 1.0, 2.0};
  std::vector<double> times;
};

struct LocaltimeBlock {
  std::string mode = "both";  // resolvent | corollary | both
  double dt = 1e-3;
  double eps = 0.0;
  double alpha = 1.0;
  double x = 0.0;
  double y = 0.0;
  double a = 0.0;
  double b = 1.0;
  double t = std::numbers::ln2;
  std::size_t paths = 10000;
};

struct VerifyBlock {
  std::string suite = "all";
  double tol = 1e-8;
  std::size_t paths = 0;  // 0: per-suite defaults
};

struct ExperimentConfig {
  json model_json;
  std::optional<LevyModel> model;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  CheckBlock check;
  KernelBlock kernel;
  SynthBlock synth;
  SpdeBlock spde;
  LocaltimeBlock localtime;
  VerifyBlock verify;

  const LevyModel& levy() const { return *model; }
};

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

/// Reads one JSON object, recording errors against dotted key paths.
class ObjectReader {
 public:
  ObjectReader(const json* j, std::string path, std::vector<std::string>& errors,
               std::vector<std::string> allowed)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_) return;
    if (!j_->is_object()) {
      fail(path_, "expected an object");
      j_ = nullptr;
      return;
    }
    for (const auto& [key, _] : j_->items())
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        fail(join_path(path_, key), "unknown key");
  }

  const json* child(const std::string& key) const {
    if (!j_ || !j_->contains(key)) return nullptr;
    return &(*j_)[key];
  }
  std::string path(const std::string& key) const { return join_path(path_, key); }
  bool has(const std::string& key) const { return child(key) != nullptr; }

  void fail(const std::string& path, const std::string& msg) const {
    errors_.push_back((path.empty() ? std::string("config") : path) + ": " + msg);
  }

  template <class Check>
  void number(const std::string& key, double& out, Check check, const char* rule) const {
    const json* v = child(key);
    if (!v) return;
    if (!v->is_number()) return fail(path(key), "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d) || !check(d)) return fail(path(key), std::string("must be ") + rule);
    out = d;
  }

  template <class Int>
  void integer(const std::string& key, Int& out, long long min, const char* rule) const {
    const json* v = child(key);
    if (!v) return;
    if (!v->is_number_integer()) return fail(path(key), "expected an integer");
    if (v->is_number_unsigned()) {
      const auto u = v->get<std::uint64_t>();
      if (min > 0 && u < static_cast<std::uint64_t>(min)) return fail(path(key), std::string("must be ") + rule);
      out = static_cast<Int>(u);
      return;
    }
    const auto i = v->get<long long>();
    if (i < min) return fail(path(key), std::string("must be ") + rule);
    out = static_cast<Int>(i);
  }

  template <class Check>
  void number_list(const std::string& key, std::vector<double>& out, Check check, const char* rule,
                   bool allow_empty = false) const {
    const json* v = child(key);
    if (!v) return;
    if (!v->is_array()) return fail(path(key), "expected an array of numbers");
    if (v->empty() && !allow_empty) return fail(path(key), "must not be empty");
    std::vector<double> tmp;
    bool ok = true;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& e = (*v)[i];
      const std::string p = path(key) + "[" + std::to_string(i) + "]";
      if (!e.is_number()) {
        fail(p, "expected a number");
        ok = false;
        continue;
      }
      const double d = e.get<double>();
      if (!std::isfinite(d) || !check(d)) {
        fail(p, std::string("must be ") + rule);
        ok = false;
        continue;
      }
      tmp.push_back(d);
    }
    if (ok) out = std::move(tmp);
  }

  void string(const std::string& key, std::string& out, const std::vector<std::string>& choices) const {
    const json* v = child(key);
    if (!v) return;
    if (!v->is_string()) return fail(path(key), "expected a string");
    const auto s = v->get<std::string>();
    if (!choices.empty() && std::find(choices.begin(), choices.end(), s) == choices.end()) {
      std::string list;
      for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
      return fail(path(key), "must be one of {" + list + "}, got \"" + s + "\"");
    }
    out = s;
  }

 private:
  const json* j_;
  std::string path_;
  std::vector<std::string>& errors_;
};

inline auto positive = [](double v) { return v > 0.0; };
inline auto nonnegative = [](double v) { return v >= 0.0; };
inline auto any_finite = [](double) { return true; };

inline void read_grid(const ObjectReader& parent, const std::string& key, GeometricGrid& g,
                      std::vector<std::string>& errors) {
  ObjectReader r(parent.child(key), parent.path(key), errors, {"min", "max", "per_decade"});
  r.number("min", g.min, positive, "> 0");
  r.number("max", g.max, positive, "> 0");
  r.integer("per_decade", g.per_decade, 1, ">= 1");
  if (parent.has(key) && !(g.max > g.min)) r.fail(parent.path(key), "needs min < max");
}

inline std::optional<LevyModel> read_model(const json* j, std::vector<std::string>& errors) {
  if (!j) {
    errors.push_back("model: required");
    return std::nullopt;
  }
  ObjectReader head(j, "model", errors, {"kind", "kappa", "beta", "c", "sigma2", "density"});
  if (!j->is_object()) return std::nullopt;
  std::string kind;
  head.string("kind", kind, {"brownian", "stable", "khintchine"});
  if (!head.has("kind")) {
    head.fail("model.kind", "required");
    return std::nullopt;
  }
  if (kind.empty()) return std::nullopt;
  auto forbid = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (head.has(k)) head.fail(head.path(k), std::string("not a parameter of ") + kind + " models");
  };
  const std::size_t before = errors.size();
  try {
    if (kind == "brownian") {
      forbid({"beta", "c", "sigma2", "density"});
      double kappa = 1.0;
      head.number("kappa", kappa, any_finite, "finite");
      if (errors.size() == before) return LevyModel::brownian(kappa);
    } else if (kind == "stable") {
      forbid({"kappa", "sigma2", "density"});
      double beta = 1.5, c = 1.0;
      if (!head.has("beta")) head.fail("model.beta", "required");
      head.number("beta", beta, any_finite, "finite");
      head.number("c", c, any_finite, "finite");
      if (errors.size() == before) return LevyModel::stable(beta, c);
    } else {
      forbid({"kappa", "beta", "c"});
      double sigma2 = 0.0;
      head.number("sigma2", sigma2, nonnegative, ">= 0");
      ObjectReader d(head.child("density"), "model.density", errors,
                     {"family", "scale", "index", "z_min", "z_max", "nodes"});
      if (!head.has("density")) {
        head.fail("model.density", "required for khintchine models");
        return std::nullopt;
      }
      std::string family;
      d.string("family", family, {"power_law", "tabulated"});
      if (!d.has("family")) d.fail("model.density.family", "required");
      if (family == "power_law") {
        double scale = 1.0, index = 1.0, z_min = 0.0, z_max = kInfinity;
        for (const char* k : {"scale", "index"})
          if (!d.has(k)) d.fail(d.path(k), "required");
        if (d.has("nodes")) d.fail(d.path("nodes"), "not used by the power_law family");
        d.number("scale", scale, positive, "> 0");
        d.number("index", index, any_finite, "finite");
        d.number("z_min", z_min, nonnegative, ">= 0");
        if (const json* zm = d.child("z_max"); zm && !zm->is_null())
          d.number("z_max", z_max, positive, "> 0");
        if (errors.size() == before)
          return LevyModel::khintchine(sigma2, LevyMeasure::power_law(scale, index, z_min, z_max));
      } else if (family == "tabulated") {
        for (const char* k : {"scale", "index", "z_min", "z_max"})
          if (d.has(k)) d.fail(d.path(k), "not used by the tabulated family");
        std::vector<std::pair<double, double>> nodes;
        const json* n = d.child("nodes");
        if (!n) {
          d.fail(d.path("nodes"), "required");
        } else if (!n->is_array()) {
          d.fail(d.path("nodes"), "expected an array of [z, rho] pairs");
        } else {
          for (std::size_t i = 0; i < n->size(); ++i) {
            const auto& e = (*n)[i];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
              d.fail(d.path("nodes") + "[" + std::to_string(i) + "]", "expected [z, rho]");
              continue;
            }
            nodes.emplace_back(e[0].get<double>(), e[1].get<double>());
          }
        }
        if (errors.size() == before)
          return LevyModel::khintchine(sigma2, LevyMeasure::tabulated(std::move(nodes)));
      }
    }
  } catch (const DomainError& e) {
    errors.push_back("model: " + std::string(e.what()));
  }
  return std::nullopt;
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

/// Parses and validates a configuration document; throws ConfigError with
/// every problem found.
inline ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte);
    std::string what = e.what();
    if (auto p = what.find("syntax error"); p != std::string::npos) what = what.substr(p);
    throw ConfigError({"line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                       what});
  }
  std::vector<std::string> errors;
  ExperimentConfig cfg;
  detail::ObjectReader root(&doc, "", errors,
                            {"model", "seed", "threads", "check", "kernel", "synth", "spde",
                             "localtime", "verify"});
  if (!doc.is_object()) throw ConfigError(errors);
  using detail::any_finite;
  using detail::nonnegative;
  using detail::positive;

  cfg.model = detail::read_model(root.child("model"), errors);
  if (root.has("model")) cfg.model_json = *root.child("model");
  root.integer("seed", cfg.seed, 0, ">= 0");
  root.integer("threads", cfg.threads, 0, ">= 0");

  {
    detail::ObjectReader r(root.child("check"), "check", errors, {"alpha", "xi_grid", "eps_grid"});
    r.number("alpha", cfg.check.alpha, positive, "> 0");
    detail::read_grid(r, "xi_grid", cfg.check.xi, errors);
    detail::read_grid(r, "eps_grid", cfg.check.eps, errors);
  }
  {
    auto& k = cfg.kernel;
    detail::ObjectReader r(root.child("kernel"), "kernel", errors, {"alpha", "t", "r", "tol"});
    r.number_list("alpha", k.alpha, positive, "> 0");
    r.number_list("t", k.t, positive, "> 0");
    r.number_list("r", k.r, any_finite, "finite");
    r.number("tol", k.tol, positive, "> 0");
  }
  {
    auto& s = cfg.synth;
    detail::ObjectReader r(root.child("synth"), "synth", errors,
                           {"fields", "alpha", "t", "derivative", "cutoff", "modes", "dx", "points",
                            "replications", "cov_lags", "scaling"});
    if (const json* f = r.child("fields")) {
      if (!f->is_array() || f->empty()) {
        r.fail("synth.fields", "expected a nonempty array of field names");
      } else {
        std::vector<std::string> names;
        for (std::size_t i = 0; i < f->size(); ++i) {
          const auto& e = (*f)[i];
          const std::string p = "synth.fields[" + std::to_string(i) + "]";
          static const std::vector<std::string> kinds{"U", "V", "S", "eta", "S_derivative"};
          if (!e.is_string() ||
              std::find(kinds.begin(), kinds.end(), e.get<std::string>()) == kinds.end()) {
            r.fail(p, "must be one of {U, V, S, eta, S_derivative}");
            continue;
          }
          names.push_back(e.get<std::string>());
        }
        s.fields = names;
      }
    }
    r.number("alpha", s.alpha, positive, "> 0");
    r.number("t", s.t, positive, "> 0");
    r.integer("derivative", s.derivative, 1, ">= 1");
    double cutoff = 0.0, dx = 0.0;
    std::size_t modes = 0, points = 0;
    r.number("cutoff", cutoff, positive, "> 0");
    r.integer("modes", modes, 2, ">= 2");
    r.number("dx", dx, positive, "> 0");
    r.integer("points", points, 1, ">= 1");
    if (cutoff > 0.0) s.cutoff = cutoff;
    if (modes > 0) s.modes = modes;
    if (dx > 0.0) s.dx = dx;
    if (points > 0) s.points = points;
    r.integer("replications", s.replications, 1, ">= 1");
    r.number_list("cov_lags", s.cov_lags, nonnegative, ">= 0", true);
    if (r.has("scaling")) {
      LagRange lr;
      detail::ObjectReader sr(r.child("scaling"), "synth.scaling", errors, {"min", "max", "count"});
      for (const char* k : {"min", "max"})
        if (!sr.has(k)) sr.fail(sr.path(k), "required");
      sr.number("min", lr.min, positive, "> 0");
      sr.number("max", lr.max, positive, "> 0");
      sr.integer("count", lr.count, 8, ">= 8");
      if (lr.min > 0.0 && lr.max > 0.0 && !(lr.max > lr.min)) sr.fail("synth.scaling", "needs min < max");
      s.scaling = lr;
    }
  }
  {
    auto& p = cfg.spde;
    detail::ObjectReader r(root.child("spde"), "spde", errors,
                           {"L", "N", "alpha", "dt", "t_end", "paths", "probes", "times"});
    r.number("L", p.L, positive, "> 0");
    r.integer("N", p.N, 1, ">= 1");
    if (r.has("N") && p.N % 2 == 0) r.fail("spde.N", "must be odd");
    r.number("alpha", p.alpha, nonnegative, ">= 0");
    r.number("dt", p.dt, positive, "> 0");
    r.number("t_end", p.t_end, positive, "> 0");
    r.integer("paths", p.paths, 2, ">= 2");
    r.number_list("probes", p.probes, nonnegative, ">= 0");
    r.number_list("times", p.times, positive, "> 0", true);
    for (std::size_t i = 0; i < p.probes.size(); ++i)
      if (p.probes[i] >= p.L) r.fail("spde.probes[" + std::to_string(i) + "]", "must lie in [0, L)");
  }
  {
    auto& l = cfg.localtime;
    detail::ObjectReader r(root.child("localtime"), "localtime", errors,
                           {"mode", "dt", "eps", "alpha", "x", "y", "a", "b", "t", "paths"});
    r.string("mode", l.mode, {"resolvent", "corollary", "both"});
    r.number("dt", l.dt, positive, "> 0");
    r.number("eps", l.eps, nonnegative, ">= 0");
    r.number("alpha", l.alpha, positive, "> 0");
    for (auto [k, v] : {std::pair{"x", &l.x}, {"y", &l.y}, {"a", &l.a}, {"b", &l.b}})
      r.number(k, *v, any_finite, "finite");
    r.number("t", l.t, positive, "> 0");
    r.integer("paths", l.paths, 2, ">= 2");
  }
  {
    auto& v = cfg.verify;
    detail::ObjectReader r(root.child("verify"), "verify", errors, {"suite", "tol", "paths"});
    r.string("suite", v.suite, {"all", "models", "kernels", "fields", "spde", "localtime"});
    r.number("tol", v.tol, positive, "> 0");
    r.integer("paths", v.paths, 0, ">= 0");
  }
  if (!errors.empty()) throw ConfigError(errors);
  return cfg;
}

/// Canonical form with every default filled in; stored in CSV headers.
inline json canonical_json(const ExperimentConfig& c) {
  json j;
  json m = c.model_json;
  if (m.is_object() && m.contains("kind")) {
    const auto kind = m["kind"];
    if (kind == "brownian" && !m.contains("kappa")) m["kappa"] = 1.0;
    if (kind == "stable" && !m.contains("c")) m["c"] = 1.0;
    if (kind == "khintchine") {
      if (!m.contains("sigma2")) m["sigma2"] = 0.0;
      auto& d = m["density"];
      if (d.is_object() && d.value("family", "") == "power_law") {
        if (!d.contains("z_min")) d["z_min"] = 0.0;
        if (!d.contains("z_max")) d["z_max"] = nullptr;
      }
    }
  }
  j["model"] = m;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["check"] = {{"alpha", c.check.alpha},
                {"xi_grid", {{"min", c.check.xi.min}, {"max", c.check.xi.max}, {"per_decade", c.check.xi.per_decade}}},
                {"eps_grid", {{"min", c.check.eps.min}, {"max", c.check.eps.max}, {"per_decade", c.check.eps.per_decade}}}};
  j["kernel"] = {{"alpha", c.kernel.alpha}, {"t", c.kernel.t}, {"r", c.kernel.r}, {"tol", c.kernel.tol}};
  json s = {{"fields", c.synth.fields},
            {"alpha", c.synth.alpha},
            {"t", c.synth.t},
            {"derivative", c.synth.derivative}};
  if (c.synth.cutoff) s["cutoff"] = *c.synth.cutoff;
  if (c.synth.modes) s["modes"] = *c.synth.modes;
  if (c.synth.dx) s["dx"] = *c.synth.dx;
  if (c.synth.points) s["points"] = *c.synth.points;
  s["replications"] = c.synth.replications;
  s["cov_lags"] = c.synth.cov_lags;
  if (c.synth.scaling)
    s["scaling"] = {{"min", c.synth.scaling->min}, {"max", c.synth.scaling->max}, {"count", c.synth.scaling->count}};
  j["synth"] = s;
  j["spde"] = {{"L", c.spde.L},         {"N", c.spde.N},         {"alpha", c.spde.alpha},
               {"dt", c.spde.dt},       {"t_end", c.spde.t_end}, {"paths", c.spde.paths},
               {"probes", c.spde.probes}, {"times", c.spde.times}};
  const auto& l = c.localtime;
  j["localtime"] = {{"mode", l.mode}, {"dt", l.dt}, {"eps", l.eps}, {"alpha", l.alpha},
                    {"x", l.x},       {"y", l.y},   {"a", l.a},     {"b", l.b},
                    {"t", l.t},       {"paths", l.paths}};
  j["verify"] = {{"suite", c.verify.suite}, {"tol", c.verify.tol}, {"paths", c.verify.paths}};
  return j;
}

}  // namespace dynkin
