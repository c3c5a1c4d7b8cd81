#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dynkin/potential_kernel.hpp"

namespace dynkin {
namespace {

using std::numbers::pi;

// ∫₀^∞ dξ/(α + bξ^β) = α^{1/β-1} b^{-1/β} (π/β)/sin(π/β)
double stable_potential_at_zero(double alpha, double b, double beta) {
  return std::pow(alpha, 1.0 / beta - 1.0) * std::pow(b, -1.0 / beta) * (pi / beta) /
         std::sin(pi / beta) / pi;
}

double brownian_potential(double alpha, double r) {
  const double a = std::sqrt(alpha / 2.0);
  return std::exp(-a * std::abs(r)) / (4.0 * a);
}

const LevyModel kBrown = LevyModel::brownian(1.0);
const LevyModel kStable = LevyModel::stable(1.5, 1.0);

TEST(UAlpha, BrownianClosedForm) {
  EXPECT_NEAR(u_alpha(kBrown, 2.0, 0.0), 0.25, 1e-9);
  EXPECT_NEAR(u_alpha(kBrown, 2.0, 1.0), std::exp(-1.0) / 4.0, 1e-8);
  for (double alpha : {0.05, 0.5, 8.0, 40.0})
    for (double r : {0.0, 0.01, 0.3, 2.0, 7.0})
      EXPECT_NEAR(u_alpha(kBrown, alpha, r), brownian_potential(alpha, r), 1e-8)
          << "alpha=" << alpha << " r=" << r;
}

TEST(UAlpha, StableAtOriginMatchesBetaIntegral) {
  for (double beta : {1.2, 1.5, 1.9})
    for (double alpha : {0.1, 1.0, 10.0}) {
      const auto m = LevyModel::stable(beta, 0.7);
      EXPECT_NEAR(u_alpha(m, alpha, 0.0), stable_potential_at_zero(alpha, 1.4, beta), 1e-8)
          << "beta=" << beta << " alpha=" << alpha;
    }
}

TEST(UAlpha, EvenInLag) {
  for (double r : {0.2, 1.0, 3.5}) {
    EXPECT_EQ(u_alpha(kStable, 1.0, r), u_alpha(kStable, 1.0, -r));
    EXPECT_EQ(u_alpha(kBrown, 0.3, r), u_alpha(kBrown, 0.3, -r));
  }
}

TEST(UAlpha, DalangFailureIsNonConvergence) {
  EXPECT_THROW(u_alpha(LevyModel::stable(1.0, 1.0), 1.0, 0.0), NonConvergenceError);
  EXPECT_THROW(u_alpha(LevyModel::stable(0.7, 1.0), 1.0, 0.0), NonConvergenceError);
  EXPECT_THROW(u_alpha(kBrown, 0.0, 0.0), DomainError);
}

TEST(UAlpha, CutoffIsRecorded) {
  const auto kv = kernel_value(kBrown, KernelSpec::potential(2.0), 0.0);
  EXPECT_GE(kv.cutoff, 1024.0);
  EXPECT_LE(kv.error, 1e-8);
  EXPECT_GT(kv.tail, 0.0);
}

TEST(PbarDensity, GaussianExamples) {
  const double peak = 1.0 / (2.0 * std::sqrt(2.0 * pi));
  EXPECT_NEAR(pbar_density(kBrown, 1.0, 0.0), peak, 1e-9);
  EXPECT_NEAR(peak, 0.199471, 1e-6);
  EXPECT_NEAR(pbar_density(kBrown, 1.0, 2.0), peak * std::exp(-0.5), 1e-9);
  EXPECT_NEAR(pbar_density(kBrown, 1.0, 2.0), 0.120985, 1e-6);
}

TEST(PbarDensity, StableAndCauchyOracles) {
  // (1/π)∫₀^∞ e^{-2tξ^β} dξ = Γ(1 + 1/β)(2t)^{-1/β}/π
  for (double t : {0.1, 1.0, 5.0})
    EXPECT_NEAR(pbar_density(kStable, t, 0.0), std::tgamma(1.0 + 1.0 / 1.5) *
                                                    std::pow(2.0 * t, -1.0 / 1.5) / pi,
                1e-9);
  // β = 1: Cauchy density with scale 2t
  const auto cauchy = LevyModel::stable(1.0, 1.0);
  for (double r : {0.0, 0.5, 3.0, 20.0})
    EXPECT_NEAR(pbar_density(cauchy, 0.5, r), (1.0 / pi) * 1.0 / (1.0 + r * r), 1e-8) << r;
}

TEST(PbarDensity, NonnegativeFarOut) {
  std::vector<std::string> warnings;
  auto old = set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  for (double r : {15.0, 30.0, 60.0}) {
    const double v = pbar_density(kBrown, 1.0, r);
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1e-8);
  }
  set_warning_sink(old);
}

TEST(PbarDensity, NonincreasingInTime) {
  const std::vector<LevyModel> models = {
      kBrown, kStable, LevyModel::stable(1.1, 2.0),
      LevyModel::khintchine(0.2, LevyMeasure::power_law(0.5, 1.3, 0.0, 3.0))};
  for (const auto& m : models) {
    double prev = kInfinity;
    for (double t : GeometricGrid{0.01, 100.0, 3}.points()) {
      const double v = pbar_density(m, t, 0.0);
      EXPECT_LE(v, prev + 1e-9) << m.describe() << " t=" << t;
      prev = v;
    }
  }
}

TEST(VarianceProfile, BrownianExamples) {
  const auto p = variance_profile(kBrown, {2.0, 1.0});
  EXPECT_NEAR(p.var_u, 1.0 / std::sqrt(2.0 * pi), 1e-7);
  EXPECT_NEAR(p.var_eta, 0.25, 1e-7);
  const auto late = variance_profile(kBrown, {2.0, 40.0});
  EXPECT_NEAR(late.var_v, 0.25, 1e-7);
  EXPECT_LT(late.var_s, 1e-30);
  // √t/√(2π) for other times
  for (double t : {0.01, 0.5, 4.0})
    EXPECT_NEAR(variance_profile(kBrown, {1.0, t}).var_u, std::sqrt(t / (2.0 * pi)), 1e-7);
}

TEST(VarianceProfile, SmootherAtDoublingTime) {
  for (const auto& m : {kBrown, kStable}) {
    for (double alpha : {0.2, 1.0, 5.0}) {
      const auto p = variance_profile(m, {alpha, std::log(2.0) / alpha});
      EXPECT_LE(p.var_s, p.var_v + p.err_s + p.err_v);
    }
  }
}

TEST(VarianceProfile, AdditivityIsExactToQuadrature) {
  const std::vector<LevyModel> models = {
      kBrown, kStable, LevyModel::stable(1.2, 0.4),
      LevyModel::khintchine(0.0, LevyMeasure::power_law(0.3, 1.5))};
  for (const auto& m : models)
    for (double alpha : {0.1, 1.0, 10.0})
      for (double t : {0.01, 1.0, 10.0}) {
        const auto p = variance_profile(m, {alpha, t, 1e-10});
        EXPECT_NEAR((p.var_v + p.var_s) / p.var_eta, 1.0, 1e-8)
            << m.describe() << " alpha=" << alpha << " t=" << t;
      }
}

TEST(VarianceProfile, ExistenceSandwich) {
  for (const auto& m : {kBrown, kStable})
    for (double alpha : {0.1, 0.5, 1.0, 3.0, 8.0})
      for (double t : {0.05, 0.3, 1.0, 2.0, 5.0}) {
        const auto p = variance_profile(m, {alpha, t});
        const auto u2 = kernel_value(m, KernelSpec::potential(2.0 * alpha), 0.0);
        const double tol_v = p.err_v + u2.error * std::exp(t * alpha);
        const double tol_u = p.err_u + u2.error * std::exp(2 * t * alpha);
        EXPECT_LE((1.0 - std::exp(-t * alpha)) * u2.value, p.var_v + tol_v);
        EXPECT_LE(p.var_v, std::exp(t * alpha) * u2.value + tol_v);
        EXPECT_LE((1.0 - std::exp(-2.0 * t * alpha)) * u2.value, p.var_u + tol_u);
        EXPECT_LE(p.var_u, std::exp(2.0 * t * alpha) * u2.value + tol_u);
      }
}

TEST(VarianceProfile, HeatDominatesCable) {
  for (const auto& m : {kBrown, kStable})
    for (double alpha : {0.1, 1.0, 4.0})
      for (double t : {0.1, 1.0, 3.0}) {
        const auto p = variance_profile(m, {alpha, t});
        const double tol = p.err_u + p.err_v;
        EXPECT_LE(p.var_v, p.var_u + tol);
        EXPECT_LE(p.var_u, 3.0 * std::exp(alpha * t) * p.var_v + tol);
        const auto mu = AtomicMeasure::dipole(0.0, 0.7);
        const auto qv = quadratic_form(m, mu, KernelSpec::var_v(alpha, t));
        const auto qu = quadratic_form(m, mu, KernelSpec::var_u(t));
        EXPECT_LE(qv.value, qu.value + qv.error + qu.error);
        EXPECT_LE(qu.value, 3.0 * std::exp(alpha * t) * qv.value + qv.error + qu.error);
      }
}

TEST(GreenBound, RandomTriples) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> pos(-5.0, 5.0);
  std::uniform_real_distribution<double> log_alpha(std::log(0.1), std::log(10.0));
  for (const auto& m : {kBrown, kStable}) {
    const double u1 = u_alpha(m, 1.0, 0.0);
    for (int i = 0; i < 100; ++i) {
      const double x = pos(gen);
      const double y = pos(gen);
      const double alpha = std::exp(log_alpha(gen));
      const double c = std::numbers::e * (alpha + 2.0 / alpha);
      EXPECT_LE(u_alpha(m, alpha, x - y), c * u1 + 1e-8);
    }
  }
}

TEST(AtomicMeasure, MergesAndRejects) {
  const AtomicMeasure m({{1.0, 2.0}, {0.0, 1.0}, {1.0, -0.5}});
  ASSERT_EQ(m.atoms().size(), 2u);
  EXPECT_EQ(m.atoms()[1].c, 1.5);
  EXPECT_EQ(m.total_variation(), 2.5);
  EXPECT_THROW(AtomicMeasure({{0.3, 1.0}, {0.3, -1.0}}), DomainError);
  EXPECT_THROW(AtomicMeasure(std::vector<AtomicMeasure::Atom>{}), DomainError);
  EXPECT_THROW(AtomicMeasure::dipole(2.0, 2.0), DomainError);
}

TEST(QuadraticForm, Examples) {
  EXPECT_NEAR(quadratic_form(kStable, AtomicMeasure::dirac(3.0), KernelSpec::potential(1.0)).value,
              u_alpha(kStable, 1.0, 0.0), 1e-14);
  const double q =
      quadratic_form(kBrown, AtomicMeasure::dipole(0.0, 1.0), KernelSpec::potential(2.0)).value;
  EXPECT_NEAR(q, 2.0 * (0.25 - std::exp(-1.0) / 4.0), 1e-8);
  EXPECT_NEAR(q, 0.316060, 1e-6);
}

TEST(QuadraticForm, SpectralRouteAgrees) {
  const AtomicMeasure mu({{0.0, 1.0}, {0.4, -2.0}, {1.5, 0.7}});
  for (const auto& m : {kBrown, kStable}) {
    for (const auto& spec : {KernelSpec::pbar(0.5), KernelSpec::var_s(1.0, 0.7),
                             KernelSpec::var_s(1.0, 1.0, 2)}) {
      const auto a = quadratic_form(m, mu, spec);
      const auto b = quadratic_form(m, mu, spec, QuadraticRoute::spectral);
      EXPECT_NEAR(a.value, b.value, 1e-8) << m.describe() << " " << spec.describe();
    }
  }
  EXPECT_THROW(quadratic_form(kBrown, mu, KernelSpec::potential(1.0), QuadraticRoute::spectral),
               DomainError);
}

TEST(QuadraticForm, SmootherThanOnRandomMeasures) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> pos(-2.0, 2.0);
  std::normal_distribution<double> weight;
  for (const auto& m : {kBrown, kStable}) {
    for (int trial = 0; trial < 12; ++trial) {
      std::vector<AtomicMeasure::Atom> atoms;
      const int n = 1 + trial % 4;
      for (int i = 0; i < n; ++i) atoms.push_back({pos(gen), weight(gen)});
      const AtomicMeasure mu(atoms);
      const double alpha = 0.5 + trial * 0.3;
      const double t = 0.2 + 0.15 * trial;
      const auto s = quadratic_form(m, mu, KernelSpec::var_s(alpha, t));
      const auto v = quadratic_form(m, mu, KernelSpec::var_v(alpha, t));
      const double factor = 1.0 / std::expm1(t * alpha);
      EXPECT_LE(s.value, v.value * factor + s.error + factor * v.error)
          << m.describe() << " trial " << trial;
    }
  }
}

TEST(KernelEnvelope, HeatLimitAtZeroFrequency) {
  EXPECT_EQ(kernel_envelope(kStable, KernelSpec::var_u(2.5), 0.0), 2.5);
  EXPECT_NEAR(kernel_envelope(kStable, KernelSpec::var_u(2.5), 1e-6), 2.5, 1e-8);
}

}  // namespace
}  // namespace dynkin
