#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "robincol/smooth_fn.hpp"

using namespace robincol;

namespace {
double central(const SmoothFn& f, double t, double h) { return (f(t + h) - f(t - h)) / (2 * h); }
}  // namespace

TEST(SmoothFn, ConstantAndPolynomial) {
  const auto c = SmoothFn::constant(2.5);
  EXPECT_EQ(c(7.0), 2.5);
  EXPECT_EQ(c.deriv(7.0), 0.0);
  ASSERT_TRUE(c.constant_value());

  const auto p = SmoothFn::polynomial({1.0, -2.0, 3.0});  // 1 - 2t + 3t^2
  EXPECT_DOUBLE_EQ(p(2.0), 9.0);
  EXPECT_DOUBLE_EQ(p.deriv(2.0), 10.0);
  EXPECT_FALSE(p.constant_value());
  EXPECT_TRUE(SmoothFn::polynomial({4.0, 0.0}).constant_value());
}

TEST(SmoothFn, ClosedFormDerivativesMatchDifferences) {
  const SmoothFn fs[] = {SmoothFn::exponential(2.0, -0.7, 0.3), SmoothFn::gaussian_pulse(1.5, 2.0, 0.4),
                         SmoothFn::sinusoid(1.0, 0.5, 3.0, 0.2)};
  for (const auto& f : fs) {
    for (double t : {0.1, 1.3, 2.2, 4.0}) EXPECT_NEAR(f.deriv(t), central(f, t, 1e-5), 1e-7);
  }
}

TEST(SmoothFn, SmoothPulseIsC1) {
  const auto f = SmoothFn::smooth_pulse(2.0, 1.0, 3.0, 0.5);
  EXPECT_EQ(f(0.5), 0.0);
  EXPECT_EQ(f(2.0), 2.0);
  EXPECT_EQ(f(4.0), 0.0);
  EXPECT_DOUBLE_EQ(f(1.25), 1.0);
  for (double t : {1.0, 1.5, 3.0, 3.5}) {
    EXPECT_NEAR(f.deriv(t), 0.0, 1e-12);
    EXPECT_NEAR(f(t + 1e-7), f(t - 1e-7), 1e-6);
  }
  EXPECT_THROW(SmoothFn::smooth_pulse(1.0, 1.0, 1.2, 0.5), DomainError);
}

TEST(SmoothFn, TabulatedPassesThroughKnots) {
  std::vector<double> xs{0.0, 0.3, 1.0, 1.7, 2.0, 3.5};
  std::vector<double> ys{0.0, 0.2, 0.9, 1.0, 0.4, 0.1};
  const auto f = SmoothFn::tabulated(xs, ys);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_EQ(f(xs[i]), ys[i]);
  // held flat beyond the table
  EXPECT_EQ(f(-1.0), 0.0);
  EXPECT_EQ(f(9.0), 0.1);
}

TEST(SmoothFn, TabulatedIsMonotoneOnMonotoneData) {
  std::vector<double> xs{0, 1, 2, 3, 4, 5}, ys{0, 0, 0.1, 5, 5.01, 6};
  const auto f = SmoothFn::tabulated(xs, ys);
  double prev = f(0.0);
  for (int i = 1; i <= 5000; ++i) {
    const double t = 5.0 * i / 5000;
    const double y = f(t);
    EXPECT_GE(y, prev - 1e-14);
    EXPECT_GE(f.deriv(t), -1e-14);
    prev = y;
  }
}

TEST(SmoothFn, TabulatedDerivativeIsSecondOrderAwayFromKnots) {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 40; ++i) {
    xs.push_back(0.1 * i);
    ys.push_back(std::sin(0.1 * i));
  }
  const auto f = SmoothFn::tabulated(xs, ys);
  const double t = 1.234;
  const double e1 = std::abs(f.deriv(t) - central(f, t, 1e-3));
  const double e2 = std::abs(f.deriv(t) - central(f, t, 5e-4));
  EXPECT_LT(e2, 1e-6);
  EXPECT_LT(e2, 0.3 * e1 + 1e-12);  // ~4x drop when h halves
  // C1 across an interior knot
  EXPECT_NEAR(f.deriv(2.0 - 1e-9), f.deriv(2.0 + 1e-9), 1e-6);
}

TEST(SmoothFn, RejectsBadTables) {
  EXPECT_THROW(SmoothFn::tabulated({0.0, 0.0}, {1.0, 2.0}), DomainError);
  EXPECT_THROW(SmoothFn::tabulated({0.0, 1.0}, {1.0}), DomainError);
  EXPECT_THROW(SmoothFn::tabulated({}, {}), DomainError);
  EXPECT_THROW(SmoothFn::tabulated({0.0, 1.0}, {1.0, NAN}), DomainError);
}

TEST(SmoothFn, HermiteReproducesCubic) {
  auto y = [](double t) { return t * t * t - t; };
  auto dy = [](double t) { return 3 * t * t - 1; };
  std::vector<double> xs{0.0, 0.5, 2.0}, ys, ds;
  for (double x : xs) {
    ys.push_back(y(x));
    ds.push_back(dy(x));
  }
  const auto f = SmoothFn::hermite(xs, ys, ds);
  for (double t : {0.1, 0.7, 1.9}) {
    EXPECT_NEAR(f(t), y(t), 1e-13);
    EXPECT_NEAR(f.deriv(t), dy(t), 1e-12);
  }
}

TEST(SmoothFn, SampledSup) {
  const auto f = SmoothFn::sinusoid(0.0, 2.0, 1.0);
  const auto [sv, sd] = f.sampled_sup(0.0, 1.0);
  EXPECT_NEAR(sv, 2.0, 1e-3);
  EXPECT_NEAR(sd, 4.0 * std::numbers::pi, 1e-9);
}
