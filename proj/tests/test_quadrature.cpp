#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "robincol/quadrature.hpp"

using namespace robincol;

TEST(Quadrature, PolynomialIsExact) {
  // G10/K21 integrates degree <= 31 exactly on one panel.
  const double v = integrate([](double x) { return std::pow(x, 9) - 3 * x * x; }, -1.0, 2.0);
  EXPECT_NEAR(v, (std::pow(2.0, 10) - 1.0) / 10.0 - (8.0 + 1.0), 1e-12);
}

TEST(Quadrature, ExponentialAndReversedLimits) {
  auto f = [](double x) { return std::exp(2 * x); };
  EXPECT_NEAR(integrate(f, 0.0, 1.0), std::expm1(2.0) / 2.0, 1e-12);
  EXPECT_NEAR(integrate(f, 1.0, 0.0), -std::expm1(2.0) / 2.0, 1e-12);
  EXPECT_EQ(integrate(f, 0.5, 0.5), 0.0);
}

TEST(Quadrature, OrthogonalSinesGiveZero) {
  const double v = integrate(
      [](double x) { return std::sin(std::numbers::pi * x) * std::sin(2 * std::numbers::pi * x); },
      0.0, 1.0);
  EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Quadrature, KinkHandledWithBreakpoint) {
  const double cut[] = {1.0 / 3.0};
  auto f = [](double x) { return std::abs(x - 1.0 / 3.0); };
  const auto r = integrate_adaptive(f, 0.0, 1.0, {}, cut);
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, (1.0 / 9.0 + 4.0 / 9.0) / 2.0, 1e-14);
  EXPECT_EQ(r.intervals, 2);
}

TEST(Quadrature, EndpointSingularityConverges) {
  const auto r = integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0,
                                    {1e-9, 1e-9, 4000});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, 2.0, 1e-8);
}

TEST(Quadrature, NonConvergenceThrows) {
  QuadratureOptions tight{1e-14, 1e-14, 3};
  auto f = [](double x) { return std::sin(200.0 * x); };
  EXPECT_FALSE(integrate_adaptive(f, 0.0, 10.0, tight).converged);
  EXPECT_THROW(integrate(f, 0.0, 10.0, tight), QuadratureError);
}

TEST(Quadrature, UniformBreakpoints) {
  EXPECT_TRUE(uniform_breakpoints(0.0, 1.0, 1).empty());
  const auto p = uniform_breakpoints(0.0, 2.0, 4);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_DOUBLE_EQ(p[1], 1.0);
}
