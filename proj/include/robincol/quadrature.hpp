#ifndef ROBINCOL_QUADRATURE_HPP
#define ROBINCOL_QUADRATURE_HPP

// Globally adaptive Gauss-Kronrod (10/21) integration with QUADPACK-style
// bisection of the worst interval. Node and weight tables come from Boost.Math.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "robincol/error.hpp"

namespace robincol {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int max_intervals = 4000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;  ///< integral of |f|, used to judge rounding-limited panels
  int intervals = 0;
  bool converged = true;
};

namespace detail {

struct Panel {
  double a, b, value, error, l1;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gauss_kronrod_panel(F& f, double a, double b) {
  using kronrod = boost::math::quadrature::gauss_kronrod<double, 21>;
  using gauss = boost::math::quadrature::gauss<double, 10>;
  const auto& xk = kronrod::abscissa();
  const auto& wk = kronrod::weights();
  const auto& wg = gauss::weights();

  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  // 21-point Kronrod; Gauss nodes sit at odd indices of the Kronrod table.
  double fc = f(mid);
  double k = fc * wk[0];
  double g = 0.0;
  double l1 = std::abs(fc) * wk[0];
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double dx = half * xk[i];
    const double fp = f(mid + dx);
    const double fm = f(mid - dx);
    k += (fp + fm) * wk[i];
    l1 += (std::abs(fp) + std::abs(fm)) * wk[i];
    if (i % 2 == 1) g += (fp + fm) * wg[i / 2];
  }
  k *= half;
  g *= half;
  l1 *= std::abs(half);
  double err = std::abs(k - g);
  // QUADPACK's heuristic sharpening of the raw |K - G| difference.
  if (l1 > 0.0 && err > 0.0) {
    err = l1 * std::min(1.0, std::pow(200.0 * err / l1, 1.5));
  }
  err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * l1);
  if (!std::isfinite(k)) err = std::numeric_limits<double>::infinity();
  return Panel{a, b, k, err, l1};
}

}  // namespace detail

/// Adaptive integral of f over [a, b]. `breakpoints` inside (a, b) seed the
/// initial partition (kinks, known zeros of an oscillatory integrand, ...).
/// Never throws; check `converged`.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b,
                                    const QuadratureOptions& opts = {},
                                    std::span<const double> breakpoints = {}) {
  QuadratureResult out;
  if (a == b) return out;
  if (a > b) {
    out = integrate_adaptive(f, b, a, opts, breakpoints);
    out.value = -out.value;
    return out;
  }

  std::vector<double> cuts{a};
  for (double p : breakpoints) {
    if (p > a && p < b) cuts.push_back(p);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<detail::Panel> heap;
  double value = 0.0, error = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto p = detail::gauss_kronrod_panel(f, cuts[i], cuts[i + 1]);
    value += p.value;
    error += p.error;
    l1 += p.l1;
    heap.push(p);
  }

  const double eps = std::numeric_limits<double>::epsilon();
  auto target = [&] {
    return std::max({opts.abs_tol, opts.rel_tol * std::abs(value), 100.0 * eps * l1});
  };

  while (error > target() && static_cast<int>(heap.size()) < opts.max_intervals) {
    auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // interval exhausted in floating point
    heap.pop();
    auto left = detail::gauss_kronrod_panel(f, worst.a, mid);
    auto right = detail::gauss_kronrod_panel(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    l1 += left.l1 + right.l1 - worst.l1;
    heap.push(left);
    heap.push(right);
  }

  // Re-sum to shed the drift of the running updates.
  value = error = l1 = 0.0;
  out.intervals = static_cast<int>(heap.size());
  while (!heap.empty()) {
    const auto& p = heap.top();
    value += p.value;
    error += p.error;
    l1 += p.l1;
    heap.pop();
  }
  out.value = value;
  out.error = error;
  out.l1 = l1;
  out.converged = std::isfinite(value) && error <= 1.5 * target();
  return out;
}

/// As integrate_adaptive, but throws QuadratureError when the tolerance is not met.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureOptions& opts = {},
                 std::span<const double> breakpoints = {}) {
  auto r = integrate_adaptive(f, a, b, opts, breakpoints);
  if (!r.converged) {
    std::ostringstream msg;
    msg << "adaptive quadrature on [" << a << ", " << b << "] did not converge: estimate "
        << r.value << ", error " << r.error << " after " << r.intervals << " intervals";
    throw QuadratureError(msg.str(), r.value, r.error);
  }
  return r.value;
}

/// Breakpoints splitting [a, b] into `panels` equal pieces.
inline std::vector<double> uniform_breakpoints(double a, double b, int panels) {
  std::vector<double> pts;
  if (panels < 2) return pts;
  pts.reserve(static_cast<std::size_t>(panels - 1));
  for (int i = 1; i < panels; ++i) pts.push_back(a + (b - a) * i / panels);
  return pts;
}

}  // namespace robincol

#endif  // ROBINCOL_QUADRATURE_HPP
