#ifndef ROBINCOL_SMOOTH_FN_HPP
#define ROBINCOL_SMOOTH_FN_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "robincol/error.hpp"

namespace robincol {

/// Value and first derivative of a scalar function at one point.
struct Jet {
  double value = 0.0;
  double deriv = 0.0;
};

/// An immutable, continuously differentiable scalar function of one variable.
///
/// Used for the input concentration g(t), the initial profile phi(x), measured
/// exit concentrations, and memoized series. Evaluation is defined everywhere;
/// `breakpoints()` lists abscissae where higher derivatives may jump, which
/// quadrature uses to seed its partition.
class SmoothFn {
 public:
  class Impl {
   public:
    virtual ~Impl() = default;
    virtual Jet jet(double t) const = 0;
    virtual std::vector<double> breakpoints() const { return {}; }
    virtual std::optional<double> constant_value() const { return std::nullopt; }
  };

  SmoothFn() : SmoothFn(constant(0.0)) {}
  explicit SmoothFn(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  double operator()(double t) const { return impl_->jet(t).value; }
  double eval(double t) const { return impl_->jet(t).value; }
  double deriv(double t) const { return impl_->jet(t).deriv; }
  Jet jet(double t) const { return impl_->jet(t); }
  std::vector<double> breakpoints() const { return impl_->breakpoints(); }
  /// Set when the function is identically constant, which enables closed forms.
  std::optional<double> constant_value() const { return impl_->constant_value(); }

  /// Largest |value| and |derivative| over [a, b], sampled on a dense grid plus breakpoints.
  std::pair<double, double> sampled_sup(double a, double b, int samples = 513) const {
    double sv = 0.0, sd = 0.0;
    auto visit = [&](double t) {
      const Jet j = jet(t);
      sv = std::max(sv, std::abs(j.value));
      sd = std::max(sd, std::abs(j.deriv));
    };
    if (b < a) std::swap(a, b);
    for (int i = 0; i < samples; ++i) visit(a + (b - a) * i / std::max(1, samples - 1));
    for (double p : breakpoints()) {
      if (p >= a && p <= b) visit(p);
    }
    return {sv, sd};
  }

  static SmoothFn constant(double c);
  static SmoothFn polynomial(std::vector<double> coeffs);
  static SmoothFn exponential(double amplitude, double rate, double shift = 0.0);
  static SmoothFn gaussian_pulse(double level, double center, double width);
  static SmoothFn sinusoid(double mean, double amplitude, double period, double phase = 0.0);
  static SmoothFn smooth_pulse(double level, double start, double stop, double ramp);
  static SmoothFn tabulated(std::vector<double> xs, std::vector<double> ys);
  static SmoothFn hermite(std::vector<double> xs, std::vector<double> ys, std::vector<double> dys);
  static SmoothFn from_callables(std::function<double(double)> f, std::function<double(double)> df,
                                 std::vector<double> breakpoints = {});

 private:
  std::shared_ptr<const Impl> impl_;
};

namespace detail {

class ConstantFn final : public SmoothFn::Impl {
 public:
  explicit ConstantFn(double c) : c_(c) {}
  Jet jet(double) const override { return {c_, 0.0}; }
  std::optional<double> constant_value() const override { return c_; }

 private:
  double c_;
};

class PolynomialFn final : public SmoothFn::Impl {
 public:
  explicit PolynomialFn(std::vector<double> c) : c_(std::move(c)) {}
  Jet jet(double t) const override {
    double p = 0.0, dp = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) {
      dp = dp * t + p;
      p = p * t + *it;
    }
    return {p, dp};
  }
  std::optional<double> constant_value() const override {
    if (std::all_of(c_.begin() + std::min<std::ptrdiff_t>(1, std::ssize(c_)), c_.end(),
                    [](double v) { return v == 0.0; }))
      return c_.empty() ? 0.0 : c_.front();
    return std::nullopt;
  }

 private:
  std::vector<double> c_;  // ascending powers
};

class CallableFn final : public SmoothFn::Impl {
 public:
  CallableFn(std::function<double(double)> f, std::function<double(double)> df,
             std::vector<double> bp)
      : f_(std::move(f)), df_(std::move(df)), bp_(std::move(bp)) {}
  Jet jet(double t) const override { return {f_(t), df_(t)}; }
  std::vector<double> breakpoints() const override { return bp_; }

 private:
  std::function<double(double)> f_, df_;
  std::vector<double> bp_;
};

/// Piecewise cubic Hermite interpolant; held constant outside the knot range.
class HermiteFn final : public SmoothFn::Impl {
 public:
  HermiteFn(std::vector<double> xs, std::vector<double> ys, std::vector<double> ds)
      : x_(std::move(xs)), y_(std::move(ys)), d_(std::move(ds)) {}

  Jet jet(double t) const override {
    if (x_.size() == 1) return {y_[0], 0.0};
    if (t <= x_.front()) return {y_.front(), t == x_.front() ? d_.front() : 0.0};
    if (t >= x_.back()) return {y_.back(), t == x_.back() ? d_.back() : 0.0};
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double u = (t - x_[i]) / h;
    const double u2 = u * u, u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
    const double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
    const double value = h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
    const double dh00 = (6 * u2 - 6 * u) / h, dh10 = 3 * u2 - 4 * u + 1;
    const double dh01 = (-6 * u2 + 6 * u) / h, dh11 = 3 * u2 - 2 * u;
    const double deriv = dh00 * y_[i] + dh10 * d_[i] + dh01 * y_[i + 1] + dh11 * d_[i + 1];
    return {value, deriv};
  }
  std::vector<double> breakpoints() const override { return x_; }

 private:
  std::vector<double> x_, y_, d_;
};

inline void check_knots(const std::vector<double>& xs, std::size_t ny) {
  if (xs.empty() || xs.size() != ny) throw DomainError("table needs matching, non-empty columns");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i])) throw DomainError("table abscissa is not finite");
    if (i > 0 && !(xs[i] > xs[i - 1]))
      throw DomainError("table abscissae must be strictly increasing");
  }
}

/// Fritsch-Carlson slopes: C1 and shape preserving (no new extrema between knots).
inline std::vector<double> monotone_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    delta[i] = (y[i + 1] - y[i]) / h[i];
  }
  if (n == 2) {
    d[0] = d[1] = delta[0];
    return d;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      d[i] = 0.0;
    } else {
      const double w1 = 2 * h[i] + h[i - 1], w2 = h[i] + 2 * h[i - 1];
      d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
  // Three-point end slopes, clipped to keep the end intervals monotone.
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double s = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0) s = 0.0;
    else if (d0 * d1 <= 0.0 && std::abs(s) > std::abs(3 * d0)) s = 3 * d0;
    return s;
  };
  d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  return d;
}

}  // namespace detail

inline SmoothFn SmoothFn::constant(double c) {
  return SmoothFn(std::make_shared<detail::ConstantFn>(c));
}

inline SmoothFn SmoothFn::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) coeffs.push_back(0.0);
  return SmoothFn(std::make_shared<detail::PolynomialFn>(std::move(coeffs)));
}

inline SmoothFn SmoothFn::exponential(double amplitude, double rate, double shift) {
  return from_callables([=](double t) { return amplitude * std::exp(rate * (t - shift)); },
                        [=](double t) { return amplitude * rate * std::exp(rate * (t - shift)); });
}

inline SmoothFn SmoothFn::gaussian_pulse(double level, double center, double width) {
  if (!(width > 0.0)) throw DomainError("gaussian pulse width must be positive");
  return from_callables(
      [=](double t) {
        const double z = (t - center) / width;
        return level * std::exp(-0.5 * z * z);
      },
      [=](double t) {
        const double z = (t - center) / width;
        return -level * z / width * std::exp(-0.5 * z * z);
      },
      {center});
}

inline SmoothFn SmoothFn::sinusoid(double mean, double amplitude, double period, double phase) {
  if (!(period > 0.0)) throw DomainError("sinusoid period must be positive");
  const double w = 2.0 * std::numbers::pi / period;
  return from_callables([=](double t) { return mean + amplitude * std::sin(w * t + phase); },
                        [=](double t) { return amplitude * w * std::cos(w * t + phase); });
}

/// `level` on [start + ramp, stop], zero before start and after stop + ramp,
/// joined by cubic smoothsteps of width `ramp` so the pulse stays C1.
inline SmoothFn SmoothFn::smooth_pulse(double level, double start, double stop, double ramp) {
  if (!(ramp > 0.0)) throw DomainError("pulse ramp must be positive");
  if (!(stop >= start + ramp)) throw DomainError("pulse stop must be at least start + ramp");
  auto step = [ramp](double t) -> Jet {  // rises 0 -> 1 over [0, ramp]
    if (t <= 0.0) return {0.0, 0.0};
    if (t >= ramp) return {1.0, 0.0};
    const double u = t / ramp;
    return {u * u * (3.0 - 2.0 * u), 6.0 * u * (1.0 - u) / ramp};
  };
  auto jet = [=](double t) {
    const Jet up = step(t - start), down = step(t - stop);
    return Jet{level * (up.value - down.value), level * (up.deriv - down.deriv)};
  };
  return from_callables([=](double t) { return jet(t).value; },
                        [=](double t) { return jet(t).deriv; },
                        {start, start + ramp, stop, stop + ramp});
}

inline SmoothFn SmoothFn::tabulated(std::vector<double> xs, std::vector<double> ys) {
  detail::check_knots(xs, ys.size());
  for (double y : ys) {
    if (!std::isfinite(y)) throw DomainError("table value is not finite");
  }
  auto d = detail::monotone_slopes(xs, ys);
  return SmoothFn(std::make_shared<detail::HermiteFn>(std::move(xs), std::move(ys), std::move(d)));
}

inline SmoothFn SmoothFn::hermite(std::vector<double> xs, std::vector<double> ys,
                                  std::vector<double> dys) {
  detail::check_knots(xs, ys.size());
  if (dys.size() != xs.size()) throw DomainError("hermite table needs one slope per knot");
  return SmoothFn(std::make_shared<detail::HermiteFn>(std::move(xs), std::move(ys), std::move(dys)));
}

inline SmoothFn SmoothFn::from_callables(std::function<double(double)> f,
                                         std::function<double(double)> df,
                                         std::vector<double> breakpoints) {
  return SmoothFn(
      std::make_shared<detail::CallableFn>(std::move(f), std::move(df), std::move(breakpoints)));
}

}  // namespace robincol

#endif  // ROBINCOL_SMOOTH_FN_HPP
