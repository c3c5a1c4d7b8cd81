#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "dynkin/core/quadrature.hpp"

namespace dynkin::quad {
namespace {

using std::numbers::pi;

TEST(GaussLegendre16, ExactForDegree31) {
  // ∫_{-1}^{2} x^31 dx = (2^32 - 1)/32
  const double v = gauss_legendre16([](double x) { return std::pow(x, 31); }, -1.0, 2.0);
  EXPECT_NEAR(v, (std::pow(2.0, 32) - 1.0) / 32.0, 1e-12 * std::pow(2.0, 27));
}

TEST(Adaptive, HandlesEndpointSingularity) {
  const auto r = adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0,
                          {{1e-12, 1e-12}, 60, 10000});
  EXPECT_NEAR(r.value, 2.0, 1e-9);
}

TEST(Adaptive, BreakpointsAroundJump) {
  auto step = [](double x) { return x < 0.3 ? 1.0 : 2.0; };
  const auto r = adaptive_with_breaks(step, 0.0, 1.0, {0.3});
  EXPECT_NEAR(r.value, 0.3 + 1.4, 1e-14);
}

TEST(Geometric, PowerLawTailAndSingularity) {
  EXPECT_NEAR(integrate_to_infinity([](double x) { return 1.0 / (x * x); }, 1.0).value, 1.0, 1e-9);
  EXPECT_NEAR(integrate_to_zero([](double x) { return 1.0 / std::sqrt(x); }, 1.0).value, 2.0, 1e-9);
  // slow but exactly geometric: ∫_1^∞ x^{-1.01} = 100
  EXPECT_NEAR(integrate_to_infinity([](double x) { return std::pow(x, -1.01); }, 1.0).value, 100.0,
              1e-6);
}

TEST(Geometric, DivergenceIsReported) {
  EXPECT_THROW(integrate_to_infinity([](double x) { return 1.0 / x; }, 1.0), NonConvergenceError);
  EXPECT_THROW(integrate_to_zero([](double x) { return 1.0 / (x * x); }, 1.0), NonConvergenceError);
}

TEST(Cutoff, LorentzianWithAnalyticTail) {
  auto f = [](double x) { return 1.0 / (1.0 + x * x); };
  auto tail = [](double c) { return 1.0 / c; };
  const auto r = integrate_with_cutoff(f, tail, {{1e-8, 0.0}, 1024.0, 0x1.0p60});
  EXPECT_NEAR(r.value, pi / 2, 2e-8);
  EXPECT_LE(r.tail_bound, 1e-8);
  EXPECT_GE(r.cutoff, 1e8);
}

TEST(Cutoff, HardCapRaises) {
  auto f = [](double x) { return 1.0 / (1.0 + x); };
  auto tail = [](double) { return std::numeric_limits<double>::infinity(); };
  try {
    (void)integrate_with_cutoff(f, tail, {{1e-8, 0.0}, 1024.0, 4096.0});
    FAIL() << "expected NonConvergenceError";
  } catch (const NonConvergenceError& e) {
    EXPECT_NEAR(e.partial_value(), std::log(4097.0), 1e-8);
  }
}

TEST(Oscillatory, CosineOfLorentzian) {
  auto g = [](double x) { return 1.0 / (1.0 + x * x); };
  auto tail = [](double c) { return 1.0 / c; };
  for (double r : {0.01, 0.5, 1.0, 3.0, 10.0}) {
    const auto res = oscillatory_transform(g, r, Trig::cosine, 0.0, tail);
    EXPECT_NEAR(res.value, pi / 2 * std::exp(-r), 1e-8) << "r=" << r;
  }
}

TEST(Oscillatory, SlowlyDecayingEnvelopes) {
  // ∫_0^∞ sin(x)/x = π/2 ; ∫_0^∞ cos(x)/sqrt(x) = sqrt(π/2)
  auto none = [](double) { return std::numeric_limits<double>::infinity(); };
  EXPECT_NEAR(oscillatory_transform([](double x) { return x == 0 ? 1.0 : 1.0 / x; }, 1.0,
                                    Trig::sine, 0.0, none)
                      .value /
                  1.0,
              pi / 2, 1e-8);
  auto inv_sqrt = [](double x) { return 1.0 / std::sqrt(x); };
  EXPECT_NEAR(oscillatory_transform(inv_sqrt, 1.0, Trig::cosine, 0.0, none,
                                    {{1e-9, 0.0}, 200000, 12})
                  .value,
              std::sqrt(pi / 2), 1e-7);
}

TEST(Oscillatory, NonzeroLowerLimit) {
  // ∫_2^∞ cos(3x) e^{-x} dx = e^{-2}(cos6 - 3 sin6)/10 ... computed as Re ∫ e^{(-1+3i)x}
  auto g = [](double x) { return std::exp(-x); };
  auto tail = [](double c) { return std::exp(-c); };
  const double expect = std::exp(-2.0) * (std::cos(6.0) - 3.0 * std::sin(6.0)) / 10.0;
  EXPECT_NEAR(oscillatory_transform(g, 3.0, Trig::cosine, 2.0, tail, {{1e-12, 0.0}, 200000, 12}).value,
              expect, 1e-10);
}

}  // namespace
}  // namespace dynkin::quad
