#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dynkin/localtime_mc.hpp"

namespace dynkin {
namespace {

using std::numbers::pi;

TEST(StableIncrement, GaussianCaseVariance) {
  RngStream rng(1, StreamDomain::property_tests, 0);
  RunningStats sq;
  for (int i = 0; i < 100000; ++i) {
    const double x = stable_increment(2.0, 0.7, 0.01, rng);
    sq.add(x * x);
  }
  EXPECT_NEAR(sq.mean(), 4.0 * 0.7 * 0.01, 3.0 * sq.stderr_mean());
}

TEST(StableIncrement, CauchyQuartiles) {
  RngStream rng(2, StreamDomain::property_tests, 0);
  const double scale = 2.0 * 0.5 * 0.3;
  std::vector<double> x(1000000);
  for (auto& v : x) v = stable_increment(1.0, 0.5, 0.3, rng);
  std::sort(x.begin(), x.end());
  const double q1 = x[250000], med = x[500000], q3 = x[750000];
  EXPECT_NEAR(med, 0.0, 0.01 * scale);
  EXPECT_NEAR((q3 - q1) / (2.0 * scale), 1.0, 0.01);
}

TEST(StableIncrement, SymmetricWithStableCharacteristicFunction) {
  RngStream rng(3, StreamDomain::property_tests, 0);
  std::vector<RunningStats> cf(3);
  RunningStats sign;
  const double xis[] = {0.5, 1.0, 2.0};
  for (int i = 0; i < 200000; ++i) {
    const double x = stable_increment(1.5, 0.5, 1.0, rng);
    sign.add(x > 0 ? 1.0 : -1.0);
    for (int j = 0; j < 3; ++j) cf[j].add(std::cos(xis[j] * x));
  }
  EXPECT_NEAR(sign.mean(), 0.0, 3.0 * sign.stderr_mean());
  for (int j = 0; j < 3; ++j)
    EXPECT_NEAR(cf[j].mean(), std::exp(-std::pow(xis[j], 1.5)), 4.0 * cf[j].stderr_mean())
        << xis[j];
}

TEST(StableMedian, ContinuousAcrossClosedFormCases) {
  EXPECT_NEAR(standard_stable_abs_median(1.999), standard_stable_abs_median(2.0), 2e-3);
  EXPECT_NEAR(standard_stable_abs_median(1.001), 1.0, 2e-3);
  RngStream rng(4, StreamDomain::property_tests, 0);
  std::vector<double> x(200000);
  for (auto& v : x) v = std::abs(stable_increment(1.5, 0.5, 1.0, rng));
  std::nth_element(x.begin(), x.begin() + 100000, x.end());
  EXPECT_NEAR(x[100000] / standard_stable_abs_median(1.5), 1.0, 0.01);
}

TEST(PathConfig, Validation) {
  PathConfig cfg;
  cfg.beta = 1.0;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg.beta = 1.5;
  cfg.dt = 0.0;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg.dt = 1e-3;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_DOUBLE_EQ(cfg.bandwidth(), std::pow(1e-3, 1.0 / 1.5));
}

TEST(Bandwidth, RejectsOverAndUnderSmoothing) {
  PathConfig cfg{2.0, 1.0, 1e-4};
  const double m = median_abs_increment(cfg);
  EXPECT_NEAR(m, std::sqrt(4e-4) * 0.67448975019608171, 1e-12);
  EXPECT_THROW(validate_bandwidth(cfg, 2.0 * m), DomainError);
  EXPECT_THROW(validate_bandwidth(cfg, m / 9.0), DomainError);
  EXPECT_NO_THROW(validate_bandwidth(cfg, cfg.bandwidth()));
}

TEST(LocalTime, ConstantAndDistantPaths) {
  PathConfig cfg{2.0, 1.0, 1e-2, 1.0};
  const double eps = 0.1;
  Path still{cfg, 0, std::vector<double>(101, 0.3), 1.0};
  EXPECT_NEAR(local_time(still, 0.3, eps).value, 1.0 / (2.0 * eps), 1e-12);
  const auto p = simulate_path(cfg, 5);
  EXPECT_EQ(p.x.size(), 101u);
  EXPECT_NEAR(p.horizon(), 1.0, 1e-12);
  EXPECT_EQ(local_time(p, 1e6, eps).value, 0.0);
}

TEST(LocalTime, AdditiveAndMonotoneInHorizon) {
  PathConfig cfg{1.5, 0.5, 1e-3, 4.0};
  const auto p = simulate_path(cfg, 2);
  const double eps = cfg.bandwidth();
  const std::size_t n = p.x.size() - 1;
  for (double y : {0.0, 0.2, -0.5}) {
    const double whole = local_time(p, y, eps).value;
    const double parts = local_time(p, y, eps, 0, n / 2).value + local_time(p, y, eps, n / 2).value;
    EXPECT_NEAR(whole, parts, 1e-12 * std::max(1.0, whole));
    double prev = 0.0;
    for (std::size_t m = 0; m <= n; m += n / 8) {
      const double v = local_time(p, y, eps, 0, m).value;
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(LocalTime, FractionalLastStep) {
  PathConfig cfg{2.0, 1.0, 0.1, 0.25};
  const auto p = simulate_path(cfg, 0);
  EXPECT_EQ(p.x.size(), 4u);
  EXPECT_NEAR(p.last_weight, 0.5, 1e-12);
  EXPECT_NEAR(p.horizon(), 0.25, 1e-12);
}

TEST(Resolvent, StableMatchesPotential) {
  PathConfig cfg{1.5, 0.5, 2e-3};
  cfg.seed = 11;
  const auto r = resolvent_check(cfg, 1.0, 0.0, 0.0, 20000);
  // (1/π)∫₀^∞ dξ/(1 + ξ^{1.5}) = (2/3)/sin(2π/3)
  EXPECT_NEAR(r.exact, (2.0 / 3.0) / std::sin(2.0 * pi / 3.0), 1e-8);
  EXPECT_NEAR(r.estimate, r.exact, 0.05 * r.exact + 3.0 * r.stderr_value);
  EXPECT_LT(r.eps_bias, 0.0);
  EXPECT_GT(r.dt_bias, 0.0);
}

TEST(Resolvent, BrownianFarApartAndMonotoneInAlpha) {
  PathConfig cfg{2.0, 1.0, 1e-3};
  cfg.seed = 12;
  const auto far = resolvent_check(cfg, 2.0, 0.0, 3.0, 20000);
  EXPECT_NEAR(far.exact, std::exp(-3.0) / 4.0, 1e-8);
  EXPECT_NEAR(far.estimate, far.exact, 3.0 * far.stderr_value + std::abs(far.eps_bias) + 1e-3);
  const auto slow = resolvent_check(cfg, 1.0, 0.0, 0.0, 5000);
  const auto fast = resolvent_check(cfg, 4.0, 0.0, 0.0, 5000);
  EXPECT_GT(slow.estimate, fast.estimate);
}

TEST(Resolvent, DeterministicForSeed) {
  PathConfig cfg{1.5, 0.5, 5e-3};
  cfg.seed = 99;
  const auto a = resolvent_check(cfg, 1.0, 0.0, 0.0, 300);
  const auto b = resolvent_check(cfg, 1.0, 0.0, 0.0, 300);
  EXPECT_EQ(a.estimate, b.estimate);
}

TEST(ExitTimeComparison, IdenticalLevelsGiveZero) {
  PathConfig cfg{1.5, 0.5, 5e-3};
  const auto r = corollary_test(cfg, 1.0, 0.0, 0.0, std::log(2.0), 1200);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(ExitTimeComparison, AccumulatedLocalTimeOrdering) {
  // s ↦ E^a[L^a_s − L^b_s] is nondecreasing, so late exits carry the larger mean.
  PathConfig cfg{1.5, 0.5, 2e-3};
  cfg.seed = 5;
  const auto r = corollary_test(cfg, 1.0, 0.0, 1.0, std::log(2.0), 4000);
  EXPECT_GE(r.n_late, 500u);
  EXPECT_GE(r.n_early, 500u);
  EXPECT_EQ(r.n_late + r.n_early, 4000u);
  EXPECT_GT(r.lhs, r.rhs + 2.0 * std::hypot(r.lhs_se, r.rhs_se));
  EXPECT_FALSE(r.pass);

  std::ostringstream os;
  write_corollary_csv(os, csv::Header{}, {r});
  EXPECT_EQ(os.str().rfind("alpha,t,a,b,lhs,rhs,lhs_se,rhs_se,paths,eps,dt,verdict\n1,", 0), 0u);
  EXPECT_NE(os.str().find(",fail\n"), std::string::npos);
}

TEST(ExitTimeComparison, DensityFormHoldsForBrownian) {
  // g(s) = 2(p̄_s(0) − p̄_s(r)) with p̄_s Gaussian of variance 4s; s = u² removes the 1/√s.
  for (double r : {0.5, 1.0, 3.0})
    for (double alpha : {0.5, 2.0})
      for (double t : {0.1, 1.0, 5.0}) {
        auto weighted = [&](double u) {
          const double s = u * u;
          const double g = 2.0 * (1.0 - std::exp(-r * r / (8.0 * s))) / std::sqrt(8.0 * pi * s);
          return 2.0 * u * alpha * std::exp(-alpha * s) * g;
        };
        const double sq = std::sqrt(t);
        const double early = quad::adaptive(weighted, 0.0, sq).value;
        const double late = quad::adaptive(weighted, sq, sq + 40.0 / std::sqrt(alpha)).value;
        EXPECT_LE(late / std::exp(-alpha * t), early / (1.0 - std::exp(-alpha * t)))
            << r << ' ' << alpha << ' ' << t;
      }
}

TEST(ExitTimeComparison, SparseBinIsAnError) {
  PathConfig cfg{2.0, 1.0, 1e-3};
  try {
    corollary_test(cfg, 2.0, 0.0, 0.5, 1e-4, 2000);
    FAIL() << "expected sparse-bin error";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("increase paths"), std::string::npos);
  }
}

TEST(LocalTimeProperties, DominationAndGrowth) {
  PathConfig cfg{1.5, 0.5, 2e-3};
  cfg.seed = 8;
  const auto at_y = expected_local_time(cfg, 0.0, 0.0, 1.0, 3000);
  const auto off_y = expected_local_time(cfg, 0.7, 0.0, 1.0, 3000);
  EXPECT_LE(off_y.value, at_y.value + 3.0 * std::hypot(at_y.stderr_value, off_y.stderr_value));
  for (double t : {1.0, 2.0, 4.0}) {
    const auto e = expected_local_time(cfg, 0.7, 0.0, t, 1000);
    EXPECT_LE(e.value, 2.0 * t * at_y.value + 3.0 * std::hypot(e.stderr_value, 2 * t * at_y.stderr_value));
  }
}

}  // namespace
}  // namespace dynkin
