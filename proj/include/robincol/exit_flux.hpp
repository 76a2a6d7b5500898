#ifndef ROBINCOL_EXIT_FLUX_HPP
#define ROBINCOL_EXIT_FLUX_HPP

// Exit concentration from the flux-concentration problem on the half line.
//
// C_F = u e^{rx - st} + gamma/mu where u solves u_t = (D/R) u_xx on x > 0 with
// u(0, t) = G(t) and u(x, t0) = Phi(x). The solution is the odd-image heat
// kernel integral plus a Duhamel boundary term. Both are evaluated directly in
// concentration units with the exponentials fused, so nothing overflows for
// large s t.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "robincol/core_model.hpp"
#include "robincol/error.hpp"
#include "robincol/quadrature.hpp"
#include "robincol/smooth_fn.hpp"

namespace robincol {

/// How phi, given on [0, ell], is continued to the half line.
enum class PhiExtension {
  blend,    ///< phi(ell) + phi'(ell) ell xi (1 - xi)^2 on xi = (x - ell)/ell in [0, 1], then phi(ell)
  natural,  ///< evaluate the supplied phi beyond ell as is
};

/// The blend rule above; C1 at x = ell and at x = 2 ell.
inline SmoothFn extend_phi(const SmoothFn& phi, double ell, PhiExtension rule = PhiExtension::blend) {
  if (rule == PhiExtension::natural) return phi;
  const Jet end = phi.jet(ell);
  auto jet = [phi, ell, end](double x) -> Jet {
    if (x <= ell) return phi.jet(x);
    const double xi = (x - ell) / ell;
    if (xi >= 1.0) return {end.value, 0.0};
    return {end.value + end.deriv * ell * xi * (1 - xi) * (1 - xi), end.deriv * (1 - xi) * (1 - 3 * xi)};
  };
  auto bp = phi.breakpoints();
  bp.push_back(ell);
  bp.push_back(2 * ell);
  return SmoothFn::from_callables([jet](double x) { return jet(x).value; },
                                  [jet](double x) { return jet(x).deriv; }, std::move(bp));
}

/// Data of the half-line problem, stored in concentration-like form:
///   Phi(x) = psi(x) e^{-rx + s t0},  G(t) = gin(t) e^{st}
/// with psi = phi - (D/v) phi' - gamma/mu and gin = g - gamma/mu for a column.
struct HalfLineProblem {
  TransportParams params;
  DerivedParams dp;
  SmoothFn psi;
  SmoothFn gin;
  double equilibrium = 0.0;
  double t0 = 0.0;
  QuadratureOptions quad{1e-12, 1e-10, 4000};

  double k() const { return params.D / params.R; }
};

/// Half-line problem for a column's data. Throws DomainError when mu = 0 and gamma > 0.
inline HalfLineProblem make_half_line(const ProblemData& data, PhiExtension rule = PhiExtension::blend) {
  const auto& p = data.params;
  const auto dp = derive_params(p);
  const auto eq = p.equilibrium();
  if (!eq) {
    throw DomainError(
        "flux transform undefined for mu = 0 with gamma > 0; set a small positive mu explicitly");
  }
  const double e = *eq;
  const SmoothFn phi = extend_phi(data.phi, p.ell, rule);
  const double dv = p.D / p.v;
  auto psi = SmoothFn::from_callables(
      [phi, dv, e](double x) {
        const Jet j = phi.jet(x);
        return j.value - dv * j.deriv - e;
      },
      [phi, dv](double x) {
        // psi' needs phi''; a central difference of phi' is enough since it only
        // feeds diagnostics, never the integrals below.
        const double h = 1e-6 * std::max(1.0, std::abs(x));
        return phi.deriv(x) - dv * (phi.deriv(x + h) - phi.deriv(x - h)) / (2 * h);
      },
      phi.breakpoints());
  const SmoothFn g = data.g;
  auto gin = SmoothFn::from_callables([g, e](double t) { return g(t) - e; },
                                      [g](double t) { return g.deriv(t); }, g.breakpoints());
  return {p, dp, psi, gin, e, data.t0};
}

/// Half-line problem from raw heat-equation data Phi(x) and G(t) (u-units).
inline HalfLineProblem make_half_line_raw(const TransportParams& p, const SmoothFn& Phi, const SmoothFn& G,
                                          double t0) {
  const auto dp = derive_params(p);
  auto psi = SmoothFn::from_callables(
      [Phi, dp, t0](double x) { return Phi(x) * std::exp(dp.r * x - dp.s * t0); },
      [Phi, dp, t0](double x) {
        const Jet j = Phi.jet(x);
        return (j.deriv + dp.r * j.value) * std::exp(dp.r * x - dp.s * t0);
      },
      Phi.breakpoints());
  auto gin = SmoothFn::from_callables([G, dp](double t) { return G(t) * std::exp(-dp.s * t); },
                                      [G, dp](double t) {
                                        const Jet j = G.jet(t);
                                        return (j.deriv - dp.s * j.value) * std::exp(-dp.s * t);
                                      },
                                      G.breakpoints());
  return {p, dp, psi, gin, 0.0, t0};
}

/// Heat kernel K(x, t) = e^{-x^2/4t} / sqrt(4 pi t) and K_x.
inline Jet heat_kernel(double x, double t) {
  if (!(t > 0.0)) throw DomainError("heat_kernel: time must be > 0");
  const double K = std::exp(-x * x / (4 * t)) / std::sqrt(4 * std::numbers::pi * t);
  return {K, -x / (2 * t) * K};
}

namespace detail {

inline void check_half_line_point(const HalfLineProblem& hp, double x, double t, const char* op) {
  if (!(x >= 0.0) || !std::isfinite(x) || !(t >= hp.t0) || !std::isfinite(t)) {
    std::ostringstream msg;
    msg << op << ": need x >= 0 and t >= t0 (got x=" << x << ", t=" << t << ", t0=" << hp.t0 << ")";
    throw DomainError(msg.str());
  }
}

/// e^{rx - st} times the image-kernel integral of Phi.
inline double initial_part(const HalfLineProblem& hp, double x, double t) {
  const double theta = hp.k() * (t - hp.t0);
  const double r = hp.dp.r;
  const double decay = hp.dp.s * (t - hp.t0);
  const double width = 12.0 * std::sqrt(2.0 * theta);
  const double lo = std::max(0.0, x - 2 * r * theta - width);
  const double hi = x + width;
  if (!(hi > lo)) return 0.0;
  const double norm = 1.0 / std::sqrt(4 * std::numbers::pi * theta);
  auto f = [&](double z) {
    const double a = r * (x - z) - decay;
    const double direct = std::exp(a - (x - z) * (x - z) / (4 * theta));
    const double image = std::exp(a - (x + z) * (x + z) / (4 * theta));
    return norm * (direct - image) * hp.psi(z);
  };
  std::vector<double> cuts = hp.psi.breakpoints();
  const double c = x - 2 * r * theta, sd = std::sqrt(2 * theta);
  for (double m : {-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0}) {
    cuts.push_back(c + m * sd);
    cuts.push_back(x + m * sd);
  }
  return integrate(f, lo, hi, hp.quad, cuts);
}

/// e^{rx - st} times the Duhamel term, with tau = t - q^2.
inline double boundary_part(const HalfLineProblem& hp, double x, double t) {
  const double k = hp.k(), r = hp.dp.r, s = hp.dp.s;
  const double qmax = std::sqrt(t - hp.t0);
  const double pref = 2 * x / std::sqrt(4 * std::numbers::pi * k);
  auto f = [&](double q) {
    if (q <= 0.0) return 0.0;
    const double q2 = q * q;
    const double expo = r * x - x * x / (4 * k * q2) - s * q2;
    if (expo < -745.0) return 0.0;
    return pref / q2 * std::exp(expo) * hp.gin(t - q2);
  };
  std::vector<double> cuts;
  const double qstar = std::pow(x * x / (4 * k * s), 0.25);
  for (double m : {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0}) cuts.push_back(m * qstar);
  std::vector<double> inside;
  for (double tk : hp.gin.breakpoints()) {
    if (tk > hp.t0 && tk < t) inside.push_back(std::sqrt(t - tk));
  }
  // a densely tabulated input (say a memo from an upstream column) is smooth enough without them
  if (inside.size() <= 64) cuts.insert(cuts.end(), inside.begin(), inside.end());
  return integrate(f, 0.0, qmax, hp.quad, cuts);
}

}  // namespace detail

/// C_F - gamma/mu, i.e. u e^{rx - st}.
inline double scaled_flux(const HalfLineProblem& hp, double x, double t) {
  detail::check_half_line_point(hp, x, t, "flux_concentration");
  if (t == hp.t0) return hp.psi(x);
  if (x == 0.0) return hp.gin(t);
  return detail::initial_part(hp, x, t) + detail::boundary_part(hp, x, t);
}

/// The heat-equation solution u itself; overflows for large s t, intended for checks.
inline double eval_u(const HalfLineProblem& hp, double x, double t) {
  return scaled_flux(hp, x, t) * std::exp(hp.dp.s * t - hp.dp.r * x);
}

/// Flux concentration C_F(x, t).
inline double flux_concentration(const HalfLineProblem& hp, double x, double t) {
  return scaled_flux(hp, x, t) + hp.equilibrium;
}

/// C_E(t) = C_F(ell, t).
inline double exit_concentration(const HalfLineProblem& hp, double t) {
  return flux_concentration(hp, hp.params.ell, t);
}

struct ExitMemo {
  SmoothFn fn;
  std::vector<double> times;
  std::vector<double> values;
  double max_interp_defect = 0.0;  ///< largest |memo - direct| at the grid midpoints
};

/// Slopes of uniformly sampled data by fourth-order differences (one-sided at the ends).
inline std::vector<double> uniform_slopes(const std::vector<double>& y, double h) {
  const std::size_t n = y.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  if (n < 5) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == n ? n - 1 : i + 1;
      d[i] = (y[b] - y[a]) / (h * static_cast<double>(b - a));
    }
    return d;
  }
  for (std::size_t i = 2; i + 2 < n; ++i) d[i] = (y[i - 2] - 8 * y[i - 1] + 8 * y[i + 1] - y[i + 2]) / (12 * h);
  d[0] = (-25 * y[0] + 48 * y[1] - 36 * y[2] + 16 * y[3] - 3 * y[4]) / (12 * h);
  d[1] = (-3 * y[0] - 10 * y[1] + 18 * y[2] - 6 * y[3] + y[4]) / (12 * h);
  const std::size_t m = n - 1;
  d[m] = (25 * y[m] - 48 * y[m - 1] + 36 * y[m - 2] - 16 * y[m - 3] + 3 * y[m - 4]) / (12 * h);
  d[m - 1] = (3 * y[m] + 10 * y[m - 1] - 18 * y[m - 2] + 6 * y[m - 3] - y[m - 4]) / (12 * h);
  return d;
}

/// C_E on `points` uniform times over [t0, t_end], joined by cubic Hermite pieces.
inline ExitMemo build_exit_memo(const HalfLineProblem& hp, double t_end, int points = 512,
                                bool check_midpoints = true) {
  if (!(t_end > hp.t0)) throw DomainError("exit memo: t_end must exceed t0");
  if (points < 2) throw DomainError("exit memo: need at least 2 grid points");
  ExitMemo memo;
  const double h = (t_end - hp.t0) / (points - 1);
  memo.times.resize(static_cast<std::size_t>(points));
  memo.values.resize(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double t = i + 1 == points ? t_end : hp.t0 + h * i;
    memo.times[static_cast<std::size_t>(i)] = t;
    memo.values[static_cast<std::size_t>(i)] = exit_concentration(hp, t);
  }
  auto slopes = uniform_slopes(memo.values, h);
  memo.fn = SmoothFn::hermite(memo.times, memo.values, slopes);
  if (check_midpoints) {
    for (int i = 0; i + 1 < points; ++i) {
      const double t = hp.t0 + h * (i + 0.5);
      memo.max_interp_defect = std::max(memo.max_interp_defect, std::abs(memo.fn(t) - exit_concentration(hp, t)));
    }
  }
  return memo;
}

/// Fills a Computed exit with its memo. A Measured exit is left alone.
/// Starting from `points`, the grid is doubled until the midpoint defect is at
/// most `defect_tol` or `max_points` is reached; the defect is recorded either way.
inline void resolve_exit(ProblemData& data, double t_end, int points = 512,
                         PhiExtension rule = PhiExtension::blend, double defect_tol = 1e-6,
                         int max_points = 16384) {
  auto* c = std::get_if<ComputedExit>(&data.exit);
  if (!c) return;
  const auto hp = make_half_line(data, rule);
  auto memo = build_exit_memo(hp, t_end, points);
  while (memo.max_interp_defect > defect_tol && 2 * points - 1 <= max_points) {
    points = 2 * points - 1;
    memo = build_exit_memo(hp, t_end, points);
  }
  c->memo = memo.fn;
  c->grid_points = points;
  c->t_end = t_end;
  c->max_interp_defect = memo.max_interp_defect;
}

}  // namespace robincol

#endif  // ROBINCOL_EXIT_FLUX_HPP
