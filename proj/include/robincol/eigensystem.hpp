#ifndef ROBINCOL_EIGENSYSTEM_HPP
#define ROBINCOL_EIGENSYSTEM_HPP

// Eigenpairs of phi'' = -lambda phi on (0, ell) under two boundary systems:
//   robin:      phi' - r phi = 0 at both ends
//   danckwerts: phi' - r phi = 0 at x = 0, phi' + r phi = 0 at x = ell
// Robin has one negative pair (lambda = -r^2, phi = e^{rx}) and the closed-form
// family lambda_n = (n pi / ell)^2. Danckwerts eigenvalues are all positive and
// come from a transcendental equation, one root per interval (n pi/ell, (n+1) pi/ell).

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <sstream>
#include <utility>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "robincol/core_model.hpp"
#include "robincol/error.hpp"
#include "robincol/quadrature.hpp"

namespace robincol {

enum class EigenKind { robin, danckwerts };

struct EigenPair {
  int n = 0;
  double lambda = 0.0;  ///< eigenvalue (1/L^2)
  double kappa = 0.0;   ///< sqrt(|lambda|)
  double norm = 0.0;    ///< normalizing constant, integral of phi^2 over [0, ell]
  EigenKind kind = EigenKind::robin;

  /// True for the Robin n = 0 pair, whose eigenfunction is e^{rx}.
  bool exponential() const { return lambda < 0.0; }
};

namespace detail {

inline double sinc(double z) {
  if (std::abs(z) < 1e-4) return 1.0 - z * z / 6.0 + z * z * z * z / 120.0;
  return std::sin(z) / z;
}

/// Integral over [0, ell] of sin(q x).
inline double int_sin(double q, double ell) {
  const double s = sinc(0.5 * q * ell);
  return 0.5 * q * ell * ell * s * s;
}

/// Integral over [0, ell] of cos(q x).
inline double int_cos(double q, double ell) { return ell * sinc(q * ell); }

}  // namespace detail

/// Integral of (cos(kx) + (r/k) sin(kx))^2 over [0, ell], valid for any k > 0.
inline double positive_norm(double kappa, double r, double ell) {
  const double a = r / kappa;
  const double sn = std::sin(kappa * ell);
  return (1.0 + a * a) * ell / 2.0 + (1.0 - a * a) * std::sin(2.0 * kappa * ell) / (4.0 * kappa) +
         a * sn * sn / kappa;
}

inline EigenPair robin_eigenpair(int n, const TransportParams& params) {
  if (n < 0) throw DomainError("robin_eigenpair: index must be >= 0");
  const auto dp = derive_params(params);
  const double r = dp.r, ell = params.ell;
  if (n == 0) return {0, -r * r, r, std::expm1(2.0 * r * ell) / (2.0 * r), EigenKind::robin};
  const double kappa = n * std::numbers::pi / ell;
  const double lambda = kappa * kappa;
  return {n, lambda, kappa, (r * r + lambda) * ell / (2.0 * lambda), EigenKind::robin};
}

/// Eigenfunction value and slope.
inline Jet eval_phi(const EigenPair& pair, double x, double r) {
  if (pair.exponential()) {
    const double e = std::exp(r * x);
    return {e, r * e};
  }
  const double k = pair.kappa;
  const double c = std::cos(k * x), s = std::sin(k * x);
  return {c + r / k * s, -k * s + r * c};
}

/// Left side of the Danckwerts root condition written without the tangent pole:
/// sin(ell k) (k^2 - r^2) - 2 r k cos(ell k).
inline double danckwerts_characteristic(double kappa, double r, double ell) {
  return std::sin(ell * kappa) * (kappa * kappa - r * r) - 2.0 * r * kappa * std::cos(ell * kappa);
}

/// Exit boundary form phi'(ell) + r phi(ell), scaled by the size of its terms.
inline double danckwerts_residual(const EigenPair& pair, double r, double ell) {
  const double k = pair.kappa;
  const double value = (r * r / k - k) * std::sin(k * ell) + 2.0 * r * std::cos(k * ell);
  return value / (k + r * r / k + 2.0 * r);
}

/// The Danckwerts pair whose eigenvalue lies in (n^2 pi^2/ell^2, (n+1)^2 pi^2/ell^2).
inline EigenPair danckwerts_eigenvalue(int n, const TransportParams& params) {
  if (n < 0) throw DomainError("danckwerts_eigenvalue: index must be >= 0");
  const auto dp = derive_params(params);
  const double r = dp.r, ell = params.ell;
  const double step = std::numbers::pi / ell;
  auto f = [&](double k) { return danckwerts_characteristic(k, r, ell); };

  double lo = n * step;
  const double hi = (n + 1) * step;
  if (n == 0) {
    // f(0) = 0 is the trivial solution; f < 0 just to its right.
    lo = 1e-3 * step;
    while (f(lo) >= 0.0 && lo > 1e-12 * step) lo *= 0.5;
  }
  const double flo = f(lo), fhi = f(hi);
  if (!(flo * fhi < 0.0)) {
    std::ostringstream msg;
    msg << "danckwerts_eigenvalue: no sign change for n=" << n << " (r=" << r << ", ell=" << ell << ")";
    throw RootError(msg.str());
  }
  std::uintmax_t iters = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(48), iters);
  if (iters >= 200) throw RootError("danckwerts_eigenvalue: root refinement did not converge");
  const double kappa = 0.5 * (bracket.first + bracket.second);
  const double lambda = kappa * kappa;
  if (!(lambda > n * n * step * step && lambda < (n + 1) * (n + 1) * step * step)) {
    throw RootError("danckwerts_eigenvalue: root escaped its bracket");
  }
  return {n, lambda, kappa, positive_norm(kappa, r, ell), EigenKind::danckwerts};
}

/// Integral of f h over [a, b] by adaptive quadrature. `panels` > 1 seeds an
/// equal partition, used to place cuts near the zeros of oscillatory factors.
inline double inner_product(const std::function<double(double)>& f,
                            const std::function<double(double)>& h, double a, double b,
                            const QuadratureOptions& opts = {}, int panels = 1) {
  const auto cuts = uniform_breakpoints(a, b, panels);
  return integrate([&](double x) { return f(x) * h(x); }, a, b, opts, cuts);
}

/// Inner product of two eigenfunctions over [0, ell], by quadrature.
inline double eigen_inner_product(const EigenPair& p, const EigenPair& q, const TransportParams& params,
                                  const QuadratureOptions& opts = {}) {
  const double r = derive_params(params).r;
  const int top = std::max(p.n, q.n);
  // Above 50 modes the integrand is cut at the half-periods of its fastest factor.
  const int panels = top > 50 ? top + 1 : 1;
  return inner_product([&](double x) { return eval_phi(p, x, r).value; },
                       [&](double x) { return eval_phi(q, x, r).value; }, 0.0, params.ell, opts,
                       panels);
}

/// Closed-form integrals over [0, ell] of an eigenfunction against the three
/// spatial shapes that make up the forcing and the lift: e^{-rx}, cos(pi x/ell), 1.
struct ShapeIntegrals {
  double exp_decay = 0.0;
  double cosine = 0.0;
  double one = 0.0;
};

inline ShapeIntegrals shape_integrals(const EigenPair& pair, double r, double ell) {
  const double p = std::numbers::pi / ell;
  if (pair.exponential()) {
    return {ell, -r * (std::exp(r * ell) + 1.0) / (r * r + p * p), std::expm1(r * ell) / r};
  }
  const double k = pair.kappa;
  const double a = r / k;
  const double sk = std::sin(k * ell), ck = std::cos(k * ell);
  const double e = std::exp(-r * ell);
  ShapeIntegrals out;
  out.exp_decay = (2.0 * r + e * ((k - r * r / k) * sk - 2.0 * r * ck)) / (r * r + k * k);
  out.cosine = 0.5 * (detail::int_cos(k - p, ell) + detail::int_cos(k + p, ell)) +
               0.5 * a * (detail::int_sin(k + p, ell) + detail::int_sin(k - p, ell));
  out.one = detail::int_cos(k, ell) + a * detail::int_sin(k, ell);
  return out;
}

}  // namespace robincol

#endif  // ROBINCOL_EIGENSYSTEM_HPP
