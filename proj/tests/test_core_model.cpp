#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "robincol/core_model.hpp"

using namespace robincol;

namespace {

ProblemData make_data(double R, double D, double v, double mu, double gamma, double ell) {
  ProblemData d;
  d.params = {R, D, v, mu, gamma, ell};
  d.g = SmoothFn::sinusoid(1.0, 0.3, 2.0, 0.4);
  d.phi = SmoothFn::polynomial({0.2, 0.1});
  d.exit = MeasuredExit{SmoothFn::exponential(0.8, -0.5)};
  return d;
}

}  // namespace

TEST(DeriveParams, Examples) {
  auto dp = derive_params({1, 1, 2, 0, 0, 1});
  EXPECT_DOUBLE_EQ(dp.r, 1.0);
  EXPECT_DOUBLE_EQ(dp.s, 1.0);
  dp = derive_params({1, 0.5, 1, 0, 0, 1});
  EXPECT_DOUBLE_EQ(dp.r, 1.0);
  EXPECT_DOUBLE_EQ(dp.s, 0.5);
  // v^2/(4D) = 2.5, (2.5 + 0.05)/2
  dp = derive_params({2, 0.1, 1, 0.05, 0, 1});
  EXPECT_NEAR(dp.r, 5.0, 1e-15);
  EXPECT_NEAR(dp.s, 1.275, 1e-15);
}

TEST(DeriveParams, Rejections) {
  EXPECT_THROW(derive_params({1, 0, 1, 0, 0, 1}), DomainError);
  EXPECT_THROW(derive_params({0, 1, 1, 0, 0, 1}), DomainError);
  EXPECT_THROW(derive_params({1, 1, -1, 0, 0, 1}), DomainError);
  EXPECT_THROW(derive_params({1, 1, 1, -0.1, 0, 1}), DomainError);
  EXPECT_THROW(derive_params({1, 1, 1, 0, 0, NAN}), DomainError);
}

TEST(TransportParams, Equilibrium) {
  EXPECT_DOUBLE_EQ(*TransportParams({1, 1, 1, 0.1, 0.2, 1}).equilibrium(), 2.0);
  EXPECT_EQ(*TransportParams({1, 1, 1, 0, 0, 1}).equilibrium(), 0.0);
  const TransportParams bad{1, 1, 1, 0, 0.2, 1};
  EXPECT_FALSE(bad.equilibrium());
  EXPECT_TRUE(bad.unbalanced_production());
}

TEST(Lift, EndpointExamples) {
  ProblemData d;
  d.params = {1, 1, 2, 0, 0, 1};
  d.g = SmoothFn::constant(1.0);
  d.exit = MeasuredExit{SmoothFn::constant(0.0)};
  EXPECT_DOUBLE_EQ(lift_H(d, 0.3, 0.0).H, 2.0);
  EXPECT_NEAR(lift_H(d, 0.3, 1.0).H, 0.0, 1e-15);
  const auto mid = lift_H(d, 0.3, 0.5);
  EXPECT_NEAR(mid.H, 1.0, 1e-15);
  EXPECT_NEAR(mid.H_xx, 0.0, 1e-14);
  EXPECT_THROW(lift_H(d, 0.3, 1.0001), DomainError);
  EXPECT_THROW(lift_H(d, 0.3, -0.1), DomainError);
}

TEST(Lift, EndpointIdentitiesAndFlatEnds) {
  const auto d = make_data(1.7, 0.3, 0.9, 0.05, 0.1, 2.0);
  const auto dp = derive_params(d.params);
  const double ell = d.params.ell;
  for (double t : {0.0, 0.4, 1.1, 3.7}) {
    EXPECT_NEAR(lift_H(d, t, 0.0).H - 2.0 * d.g(t), 0.0, 1e-15);
    EXPECT_NEAR(lift_H(d, t, ell).H - 2.0 * std::exp(-dp.r * ell) * d.exit_fn()(t), 0.0, 1e-15);
    EXPECT_EQ(lift_H(d, t, 0.0).H_x, 0.0);
    EXPECT_NEAR(lift_H(d, t, ell).H_x, 0.0, 1e-15);
    // one-sided difference estimates of H_x shrink as O(h^2)
    double prev = 1.0;
    for (double h : {1e-2, 5e-3, 2.5e-3}) {
      const double est = (lift_H(d, t, h).H - lift_H(d, t, 0.0).H) / h;
      EXPECT_LT(std::abs(est), prev);
      prev = std::abs(est);
    }
  }
}

TEST(Lift, TimeDerivativeMatchesDifference) {
  const auto d = make_data(1.0, 0.5, 1.0, 0.0, 0.0, 1.0);
  const double h = 1e-5;
  for (double x : {0.0, 0.3, 1.0}) {
    const double fd = (lift_H(d, 1.0 + h, x).H - lift_H(d, 1.0 - h, x).H) / (2 * h);
    EXPECT_NEAR(lift_H(d, 1.0, x).H_t, fd, 1e-8);
  }
}

TEST(Lift, ComputedExitMustBeResolved) {
  ProblemData d;
  d.exit = ComputedExit{};
  EXPECT_FALSE(d.exit_resolved());
  EXPECT_THROW(lift_H(d, 0.0, 0.5), DomainError);
  EXPECT_NO_THROW(lift_H(d, 0.0, 0.5, LiftKind::danckwerts));
}

TEST(Forcing, ZeroData) {
  ProblemData d;
  d.params = {1.3, 0.2, 1.0, 0.1, 0.0, 1.5};
  d.exit = MeasuredExit{SmoothFn::constant(0.0)};
  for (double x : {0.0, 0.7, 1.5}) EXPECT_EQ(forcing_F(d, x, 2.0).F, 0.0);
}

TEST(Forcing, ConstantInputAtInlet) {
  ProblemData d;
  d.params = {1.3, 0.2, 1.0, 0.1, 0.0, 1.5};
  d.g = SmoothFn::constant(1.0);
  d.exit = MeasuredExit{SmoothFn::constant(0.0)};
  const auto dp = derive_params(d.params);
  const double pk = std::numbers::pi / 1.5;
  const auto f = forcing_F(d, 0.0, 0.5);
  EXPECT_NEAR(f.F, -((pk * pk * 0.2 / 1.3 + dp.s) + dp.s), 1e-14);
  EXPECT_EQ(f.F2, 0.0);
}

TEST(Forcing, SplitAndCompactFormsAgree) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = make_data(0.5 + 3 * u(rng), 0.05 + u(rng), 0.1 + 2 * u(rng), 0.2 * u(rng),
                             0.3 * u(rng), 0.5 + 2 * u(rng));
    const auto dp = derive_params(d.params);
    for (int k = 0; k < 50; ++k) {
      const double x = d.params.ell * u(rng), t = 5 * u(rng);
      const auto f = forcing_F(d, x, t);
      const auto H = lift_H(d, t, x);
      const double compact = d.params.gamma / d.params.R * std::exp(-dp.r * x) - (dp.s * H.H + H.H_t) +
                             d.params.D / d.params.R * H.H_xx;
      EXPECT_LE(std::abs(f.F1 + f.F2 - compact), 1e-12 * (1 + std::abs(f.F)));
      // shape decomposition gives the same value
      const auto k3 = forcing_coefficients(d, t);
      const double shaped = k3.ke * std::exp(-dp.r * x) +
                            k3.kc * std::cos(std::numbers::pi * x / d.params.ell) + k3.k1;
      EXPECT_LE(std::abs(shaped - f.F), 1e-12 * (1 + std::abs(f.F)));
    }
  }
}

TEST(Forcing, DanckwertsHasNoExitPart) {
  const auto d = make_data(1.0, 0.3, 1.0, 0.1, 0.2, 1.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(forcing_F(d, u(rng), 3 * u(rng), LiftKind::danckwerts).F2, 0.0);
}

TEST(InitialW, Examples) {
  ProblemData d;
  d.params = {1, 0.5, 1, 0, 0, 1};
  d.exit = MeasuredExit{SmoothFn::constant(0.0)};
  EXPECT_EQ(initial_w(d, 0.4), 0.0);

  d.phi = SmoothFn::constant(1.0);
  d.g = SmoothFn::constant(1.0);
  EXPECT_DOUBLE_EQ(initial_w(d, 0.0), -1.0);

  // phi matched to e^{rx} H(x, 0) cancels exactly
  const auto base = d;
  const double r = derive_params(d.params).r;
  d.phi = SmoothFn::from_callables([base, r](double x) { return std::exp(r * x) * lift_H(base, 0.0, x).H; },
                                   [](double) { return 0.0; });
  for (double x : {0.0, 0.25, 0.9}) EXPECT_NEAR(initial_w(d, x), 0.0, 1e-15);
  EXPECT_THROW(initial_w(d, 1.5), DomainError);
}

TEST(Invert, FormsAgree) {
  EXPECT_EQ(invert(0, 0, 0.3, 1.0, 1.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(invert(0, 2.0 * 0.7, 0.0, 1.0, 1.0, 2.0), 1.4);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double w = u(rng), H = u(rng), x = 1 + u(rng), t = 2 + u(rng), r = 1.5 + u(rng), s = 1 + u(rng);
    const double a = invert(w, H, x, t, r, s), b = invert_factored(w, H, x, t, r, s);
    EXPECT_LE(std::abs(a - b), 1e-14 * (std::abs(w * std::exp(r * x - s * t)) + std::abs(H * std::exp(r * x))));
  }
}

TEST(Invert, RoundTrip) {
  const DerivedParams dp{2.0, 1.5};
  for (double x : {0.0, 0.3, 1.0})
    for (double t : {0.0, 0.7, 4.0}) {
      const double u = std::sin(x + t) + 2.0;
      EXPECT_NEAR(from_concentration(to_concentration(u, x, t, dp), x, t, dp), u, 4e-16 * u);
    }
}
