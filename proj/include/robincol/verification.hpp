#ifndef ROBINCOL_VERIFICATION_HPP
#define ROBINCOL_VERIFICATION_HPP

// Independent checks on the series: a Crank-Nicolson finite-difference solver,
// the integral mass balance, the Danckwerts-exit variant and its exit error.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <vector>

#include "robincol/core_model.hpp"
#include "robincol/error.hpp"
#include "robincol/quadrature.hpp"
#include "robincol/series.hpp"

namespace robincol {

enum class ExitClosure { robin, neumann };

struct FdGrid {
  int nx = 400;  ///< spatial intervals
  int nt = 400;  ///< time steps
  double t_end = 1.0;
  ExitClosure exit = ExitClosure::robin;
  int rannacher_steps = 2;  ///< leading CN steps replaced by pairs of implicit Euler half steps

  void validate(double t0) const {
    if (nx < 10) throw DomainError("fd grid: need at least 11 spatial points");
    if (nt < 10) throw DomainError("fd grid: need at least 10 time steps");
    if (!(t_end > t0)) throw DomainError("fd grid: t_end must exceed t0");
    if (rannacher_steps < 0) throw DomainError("fd grid: rannacher_steps must be >= 0");
  }
};

struct FdResult {
  std::vector<double> x;
  std::vector<double> t;
  std::vector<double> c;  ///< c[n * x.size() + i] = C(x_i, t_n)

  double at(int n, int i) const { return c[static_cast<std::size_t>(n) * x.size() + static_cast<std::size_t>(i)]; }

  /// Bilinear interpolation between grid nodes.
  double sample(double xq, double tq) const {
    auto locate = [](const std::vector<double>& g, double q) {
      if (q <= g.front()) return std::pair<std::size_t, double>{0, 0.0};
      if (q >= g.back()) return std::pair<std::size_t, double>{g.size() - 2, 1.0};
      const std::size_t i = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), q) - g.begin()) - 1;
      return std::pair<std::size_t, double>{i, (q - g[i]) / (g[i + 1] - g[i])};
    };
    const auto [i, u] = locate(x, xq);
    const auto [n, w] = locate(t, tq);
    const std::size_t nx = x.size();
    auto v = [&](std::size_t nn, std::size_t ii) { return c[nn * nx + ii]; };
    return (1 - w) * ((1 - u) * v(n, i) + u * v(n, i + 1)) + w * ((1 - u) * v(n + 1, i) + u * v(n + 1, i + 1));
  }
};

namespace detail {

/// Tridiagonal solve (Thomas); lower[0] and upper[n-1] are ignored.
inline void thomas(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper,
                   std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (diag[i - 1] == 0.0 || !std::isfinite(diag[i - 1])) throw NumericError("tridiagonal solve: zero pivot");
    const double m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  if (diag[n - 1] == 0.0 || !std::isfinite(diag[n - 1])) throw NumericError("tridiagonal solve: zero pivot");
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

}  // namespace detail

/// Crank-Nicolson on a uniform grid. Both flux boundaries are closed with a
/// ghost node eliminated through the boundary equation itself, so the
/// closure stays second order.
inline FdResult fd_solve(const ProblemData& data, const FdGrid& grid) {
  const auto& p = data.params;
  p.validate();
  grid.validate(data.t0);
  if (grid.exit == ExitClosure::robin && !data.exit_resolved()) {
    throw DomainError("fd_solve: the exit concentration must be Measured or resolved");
  }
  const int nx = grid.nx;
  const std::size_t m = static_cast<std::size_t>(nx) + 1;
  const double h = p.ell / nx;
  const double dt = (grid.t_end - data.t0) / grid.nt;

  const double a = p.D / (h * h) + p.v / (2 * h);
  const double b = -2 * p.D / (h * h) - p.mu;
  const double c = p.D / (h * h) - p.v / (2 * h);
  const double q = 2 * h * p.v / p.D;

  // semi-discrete R dC/dt = L C + s(t), stored as tridiagonal rows
  std::vector<double> lo(m, a), di(m, b), up(m, c);
  di[0] = b - a * q;
  up[0] = c + a;
  lo[m - 1] = a + c;
  if (grid.exit == ExitClosure::robin) di[m - 1] = b + c * q;
  auto source = [&](double t) {
    std::vector<double> s(m, p.gamma);
    s[0] += a * q * data.g(t);
    if (grid.exit == ExitClosure::robin) s[m - 1] -= c * q * data.exit_fn()(t);
    return s;
  };
  auto apply = [&](const std::vector<double>& u) {
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
      double v = di[i] * u[i];
      if (i > 0) v += lo[i] * u[i - 1];
      if (i + 1 < m) v += up[i] * u[i + 1];
      out[i] = v;
    }
    return out;
  };

  FdResult res;
  res.x.resize(m);
  for (std::size_t i = 0; i < m; ++i) res.x[i] = i + 1 == m ? p.ell : h * static_cast<double>(i);
  res.t.resize(static_cast<std::size_t>(grid.nt) + 1);
  for (int n = 0; n <= grid.nt; ++n) res.t[static_cast<std::size_t>(n)] = n == grid.nt ? grid.t_end : data.t0 + dt * n;
  res.c.resize(m * res.t.size());

  std::vector<double> u(m);
  for (std::size_t i = 0; i < m; ++i) u[i] = data.phi(res.x[i]);
  std::copy(u.begin(), u.end(), res.c.begin());

  // theta-step: (R - theta k L) u1 = (R + (1-theta) k L) u0 + k ((1-theta) s0 + theta s1)
  auto step = [&](double t, double k, double theta) {
    const auto s0 = source(t), s1 = source(t + k);
    std::vector<double> rhs(m);
    const auto Lu = apply(u);
    for (std::size_t i = 0; i < m; ++i)
      rhs[i] = p.R * u[i] + (1 - theta) * k * Lu[i] + k * ((1 - theta) * s0[i] + theta * s1[i]);
    std::vector<double> l2(m), d2(m), u2(m);
    for (std::size_t i = 0; i < m; ++i) {
      l2[i] = -theta * k * lo[i];
      d2[i] = p.R - theta * k * di[i];
      u2[i] = -theta * k * up[i];
    }
    detail::thomas(l2, d2, u2, rhs);
    u = std::move(rhs);
  };

  for (int n = 0; n < grid.nt; ++n) {
    const double t = res.t[static_cast<std::size_t>(n)];
    const double k = res.t[static_cast<std::size_t>(n) + 1] - t;
    if (n < grid.rannacher_steps) {
      step(t, 0.5 * k, 1.0);
      step(t + 0.5 * k, 0.5 * k, 1.0);
    } else {
      step(t, k, 0.5);
    }
    for (double v : u)
      if (!std::isfinite(v)) throw NumericError("fd_solve: non-finite value");
    std::copy(u.begin(), u.end(), res.c.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(n) + 1) * m));
  }
  return res;
}

/// Richardson order estimate from three grids refined by 2 in both x and t,
/// measured in the max norm over the coarse grid's nodes.
inline double fd_richardson_order(const ProblemData& data, FdGrid coarse) {
  FdGrid mid = coarse, fine = coarse;
  mid.nx *= 2;
  mid.nt *= 2;
  fine.nx *= 4;
  fine.nt *= 4;
  mid.rannacher_steps *= 2;
  fine.rannacher_steps *= 4;
  const auto a = fd_solve(data, coarse), b = fd_solve(data, mid), c = fd_solve(data, fine);
  double e1 = 0.0, e2 = 0.0;
  for (int n = 0; n <= coarse.nt; ++n)
    for (int i = 0; i <= coarse.nx; ++i) {
      e1 = std::max(e1, std::abs(a.at(n, i) - b.at(2 * n, 2 * i)));
      e2 = std::max(e2, std::abs(b.at(2 * n, 2 * i) - c.at(4 * n, 4 * i)));
    }
  return std::log2(e1 / e2);
}

/// Relative L2 difference of two fields over an (nx x nt) sample grid on [0, ell] x [t_a, t_b].
inline double relative_l2(const std::function<double(double, double)>& test,
                          const std::function<double(double, double)>& reference, double ell, double t_a,
                          double t_b, int nx = 101, int nt = 101) {
  double num = 0.0, den = 0.0;
  for (int n = 0; n < nt; ++n) {
    const double t = t_a + (t_b - t_a) * n / (nt - 1);
    for (int i = 0; i < nx; ++i) {
      const double x = ell * i / (nx - 1);
      const double r = reference(x, t);
      const double d = test(x, t) - r;
      num += d * d;
      den += r * r;
    }
  }
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

/// Series vs finite differences on a 101 x 101 sample grid of [0, ell] x [t0, t_end].
inline double series_vs_fd(const SeriesSolution& sol, const FdResult& fd, int nx = 101, int nt = 101) {
  const auto& d = sol.data();
  const double t_end = fd.t.back();
  std::vector<Snapshot> snaps;
  snaps.reserve(static_cast<std::size_t>(nt));
  for (int n = 0; n < nt; ++n) snaps.push_back(sol.snapshot(d.t0 + (t_end - d.t0) * n / (nt - 1)));
  auto series = [&](double x, double t) {
    const auto n = static_cast<std::size_t>(std::lround((t - d.t0) / (t_end - d.t0) * (nt - 1)));
    return snaps[n].C(x);
  };
  auto grid = [&](double x, double t) { return fd.sample(x, t); };
  return relative_l2(series, grid, d.params.ell, d.t0, t_end, nx, nt);
}

struct BalanceSample {
  double t = 0.0;
  double accumulation = 0.0;  ///< R d/dt of the column inventory
  double inflow = 0.0;        ///< v g(t)
  double outflow = 0.0;       ///< v C_E(t)
  double reaction = 0.0;      ///< integral of (gamma - mu C)
  double residual = 0.0;      ///< accumulation - (inflow - outflow + reaction)
  double relative_residual = 0.0;
};

struct BalanceReport {
  std::vector<BalanceSample> samples;
  double integrated_relative_residual = 0.0;  ///< time integral of |residual| over that of the term scale
  double max_relative_residual = 0.0;
};

/// Concentration field evaluated on a whole profile at once.
using ProfileFn = std::function<std::function<double(double)>(double)>;

/// Conservation audit. `profile(t)` returns x -> C(x, t). The inventory is
/// integrated in x by adaptive quadrature, and differentiated in t with a
/// five-point stencil of step dt_fd.
inline BalanceReport mass_balance(const ProfileFn& profile, const ProblemData& data,
                                  const std::vector<double>& times, double dt_fd,
                                  const std::function<double(double)>& outlet_conc = {}) {
  const auto& p = data.params;
  QuadratureOptions o{1e-13, 1e-12, 4000};
  auto inventory = [&](const std::function<double(double)>& c) { return integrate(c, 0.0, p.ell, o); };
  BalanceReport rep;
  double num = 0.0, den = 0.0;
  double prev_t = 0.0, prev_res = 0.0, prev_scale = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    BalanceSample s;
    s.t = t;
    const double m2 = inventory(profile(t - 2 * dt_fd)), m1 = inventory(profile(t - dt_fd));
    const double p1 = inventory(profile(t + dt_fd)), p2 = inventory(profile(t + 2 * dt_fd));
    s.accumulation = p.R * (m2 - 8 * m1 + 8 * p1 - p2) / (12 * dt_fd);
    const auto c = profile(t);
    s.reaction = p.gamma * p.ell - p.mu * inventory(c);
    s.inflow = p.v * data.g(t);
    s.outflow = p.v * (outlet_conc ? outlet_conc(t) : data.exit_fn()(t));
    s.residual = s.accumulation - (s.inflow - s.outflow + s.reaction);
    const double scale = std::abs(s.accumulation) + std::abs(s.inflow) + std::abs(s.outflow) + std::abs(s.reaction);
    s.relative_residual = scale > 0.0 ? std::abs(s.residual) / scale : 0.0;
    rep.max_relative_residual = std::max(rep.max_relative_residual, s.relative_residual);
    if (k > 0) {
      num += 0.5 * (t - prev_t) * (std::abs(s.residual) + std::abs(prev_res));
      den += 0.5 * (t - prev_t) * (scale + prev_scale);
    }
    prev_t = t;
    prev_res = s.residual;
    prev_scale = scale;
    rep.samples.push_back(s);
  }
  if (times.size() == 1) {
    num = std::abs(prev_res);
    den = prev_scale;
  }
  rep.integrated_relative_residual = den > 0.0 ? num / den : 0.0;
  return rep;
}

/// Mass balance of a series solution at the given times (all strictly after t0 + 2 dt_fd).
inline BalanceReport mass_balance(const SeriesSolution& sol, const std::vector<double>& times,
                                  double dt_fd = 1e-4) {
  ProfileFn prof = [&sol](double t) {
    auto s = std::make_shared<Snapshot>(sol.snapshot(t));
    return std::function<double(double)>([s](double x) { return s->C(x); });
  };
  if (sol.kind() == EigenKind::robin) return mass_balance(prof, sol.data(), times, dt_fd);
  // the Danckwerts variant carries no exit data of its own; audit it against its own outlet value
  return mass_balance(prof, sol.data(), times, dt_fd, [&sol](double t) { return sol.eval_C(sol.data().params.ell, t); });
}

/// Mass balance of a finite-difference run, sampled at its own time levels.
/// The inventory uses the trapezoid rule; the time derivative central differences.
inline BalanceReport mass_balance(const FdResult& fd, const ProblemData& data, ExitClosure exit = ExitClosure::robin) {
  const auto& p = data.params;
  const std::size_t m = fd.x.size();
  const double h = fd.x[1] - fd.x[0];
  auto inventory = [&](std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += (i == 0 || i + 1 == m ? 0.5 : 1.0) * fd.c[n * m + i];
    return s * h;
  };
  BalanceReport rep;
  double num = 0.0, den = 0.0;
  for (std::size_t n = 1; n + 1 < fd.t.size(); ++n) {
    BalanceSample s;
    s.t = fd.t[n];
    s.accumulation = p.R * (inventory(n + 1) - inventory(n - 1)) / (fd.t[n + 1] - fd.t[n - 1]);
    s.reaction = p.gamma * p.ell - p.mu * inventory(n);
    s.inflow = p.v * data.g(s.t);
    s.outflow = p.v * (exit == ExitClosure::robin ? data.exit_fn()(s.t) : fd.c[n * m + m - 1]);
    s.residual = s.accumulation - (s.inflow - s.outflow + s.reaction);
    const double scale = std::abs(s.accumulation) + std::abs(s.inflow) + std::abs(s.outflow) + std::abs(s.reaction);
    s.relative_residual = scale > 0.0 ? std::abs(s.residual) / scale : 0.0;
    rep.max_relative_residual = std::max(rep.max_relative_residual, s.relative_residual);
    num += std::abs(s.residual);
    den += scale;
    rep.samples.push_back(s);
  }
  rep.integrated_relative_residual = den > 0.0 ? num / den : 0.0;
  return rep;
}

struct BoundaryResiduals {
  double inlet = 0.0;     ///< vC(0) - D C_x(0) - v g
  double outlet = 0.0;    ///< vC(ell) - D C_x(ell) - v C_E
  double identity = 0.0;  ///< inlet - outlet
};

inline BoundaryResiduals boundary_residuals(const SeriesSolution& sol, double t) {
  const auto& d = sol.data();
  const auto& p = d.params;
  const auto s = sol.snapshot(t);
  const Jet in = s.C_jet(0.0), out = s.C_jet(p.ell);
  BoundaryResiduals r;
  r.inlet = p.v * in.value - p.D * in.deriv - p.v * d.g(t);
  const double ce = sol.kind() == EigenKind::robin ? d.exit_fn()(t) : 0.0;
  r.outlet = p.v * out.value - p.D * out.deriv - p.v * ce;
  r.identity = r.inlet - r.outlet;
  return r;
}

/// Series with a homogeneous Neumann exit: Danckwerts eigenpairs and the lift
/// (1 + cos(pi x/ell)) g, which has no exit part.
inline SeriesSolution danckwerts_solve(ProblemData data, TruncationPolicy policy = {}) {
  return SeriesSolution(std::move(data), EigenKind::danckwerts, policy);
}

struct DanckwertsError {
  double robin_exit = 0.0;       ///< C(ell, t)
  double danckwerts_exit = 0.0;  ///< C_D(ell, t)
  double error = 0.0;            ///< E_D = |C - C_D| at x = ell
  std::optional<double> lower_bound;  ///< gamma/mu, unset when mu = 0
  bool meets_bound = false;      ///< E_D >= lower_bound (1 - tol)
};

inline DanckwertsError danckwerts_error(const SeriesSolution& robin, const SeriesSolution& danck, double t,
                                        double tol = 0.2) {
  const double ell = robin.data().params.ell;
  DanckwertsError out;
  out.robin_exit = robin.eval_C(ell, t);
  out.danckwerts_exit = danck.eval_C(ell, t);
  out.error = std::abs(out.robin_exit - out.danckwerts_exit);
  const auto& p = robin.data().params;
  if (p.mu > 0.0) {
    out.lower_bound = p.gamma / p.mu;
    out.meets_bound = out.error >= *out.lower_bound * (1 - tol);
  }
  return out;
}

}  // namespace robincol

#endif  // ROBINCOL_VERIFICATION_HPP
