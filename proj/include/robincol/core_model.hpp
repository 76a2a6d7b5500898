#ifndef ROBINCOL_CORE_MODEL_HPP
#define ROBINCOL_CORE_MODEL_HPP

// Physical parameters, boundary/initial data, and the exact change of
// variables C = (w + e^{st} H) e^{rx - st} that turns the transport equation
// into a forced diffusion equation for w with homogeneous Robin ends.

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>

#include "robincol/error.hpp"
#include "robincol/smooth_fn.hpp"

namespace robincol {

/// Column transport constants.
struct TransportParams {
  double R = 1.0;      ///< retardation factor
  double D = 1.0;      ///< hydrodynamic dispersion (L^2/T)
  double v = 1.0;      ///< interstitial velocity (L/T)
  double mu = 0.0;     ///< first-order decay rate (1/T)
  double gamma = 0.0;  ///< zero-order production rate (M/L^3/T)
  double ell = 1.0;    ///< column length (L)

  /// Throws DomainError naming the first violated constraint.
  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw DomainError(std::string("invalid transport parameters: ") + what);
    };
    require(std::isfinite(R) && std::isfinite(D) && std::isfinite(v) && std::isfinite(mu) &&
                std::isfinite(gamma) && std::isfinite(ell),
            "all constants must be finite");
    require(D > 0.0, "D must be > 0");
    require(R > 0.0, "R must be > 0");
    require(v > 0.0, "v must be > 0");
    require(ell > 0.0, "ell must be > 0");
    require(mu >= 0.0, "mu must be >= 0");
    require(gamma >= 0.0, "gamma must be >= 0");
  }

  /// D / R, the diffusivity of the transformed equation.
  double diffusivity() const { return D / R; }

  /// gamma / mu, the far-field equilibrium; defined as 0 when gamma = mu = 0.
  /// Unset when mu = 0 and gamma > 0.
  std::optional<double> equilibrium() const {
    if (mu > 0.0) return gamma / mu;
    if (gamma == 0.0) return 0.0;
    return std::nullopt;
  }

  /// Production with no decay to balance it (accepted here, rejected by the exit-flux transform).
  bool unbalanced_production() const { return mu == 0.0 && gamma > 0.0; }
};

/// Transform parameters r = v/(2D) and s = (v^2/(4D) + mu)/R.
struct DerivedParams {
  double r = 0.0;
  double s = 0.0;
};

inline DerivedParams derive_params(const TransportParams& p) {
  if (p.D == 0.0) throw DomainError("derive_params: D = 0 (division by zero in r)");
  if (p.R == 0.0) throw DomainError("derive_params: R = 0 (division by zero in s)");
  p.validate();
  return {p.v / (2.0 * p.D), (p.v * p.v / (4.0 * p.D) + p.mu) / p.R};
}

struct MeasuredExit {
  SmoothFn c_exit;
};

/// Exit concentration to be produced by the half-line flux problem.
/// `memo` is filled by resolve_exit() (exit_flux.hpp).
struct ComputedExit {
  std::optional<SmoothFn> memo;
  int grid_points = 512;
  double t_end = 0.0;
  double max_interp_defect = 0.0;
};

using ExitSpec = std::variant<MeasuredExit, ComputedExit>;

/// Everything that defines one column run.
struct ProblemData {
  TransportParams params;
  SmoothFn phi = SmoothFn::constant(0.0);  ///< initial concentration over [0, ell]
  SmoothFn g = SmoothFn::constant(0.0);    ///< input concentration for t >= t0
  ExitSpec exit = ComputedExit{};
  double t0 = 0.0;

  bool exit_is_computed() const { return std::holds_alternative<ComputedExit>(exit); }

  bool exit_resolved() const {
    if (auto* c = std::get_if<ComputedExit>(&exit)) return c->memo.has_value();
    return true;
  }

  /// C_E(t) and its time derivative.
  Jet exit_jet(double t) const {
    if (auto* m = std::get_if<MeasuredExit>(&exit)) return m->c_exit.jet(t);
    const auto& c = std::get<ComputedExit>(exit);
    if (!c.memo) throw DomainError("exit concentration is Computed but has not been resolved");
    return c.memo->jet(t);
  }

  const SmoothFn& exit_fn() const {
    if (auto* m = std::get_if<MeasuredExit>(&exit)) return m->c_exit;
    const auto& c = std::get<ComputedExit>(exit);
    if (!c.memo) throw DomainError("exit concentration is Computed but has not been resolved");
    return *c.memo;
  }
};

/// Which boundary-homogenizing lift is in use. The Danckwerts lift drops the
/// exit term: H_D = (1 + cos(pi x / ell)) g.
enum class LiftKind { robin, danckwerts };

/// H = h1 + hc cos(pi x / ell), with time derivatives of both coefficients.
struct LiftCoefficients {
  double h1 = 0.0, h1_dot = 0.0;
  double hc = 0.0, hc_dot = 0.0;
};

inline LiftCoefficients lift_coefficients(const ProblemData& data, double t,
                                          LiftKind kind = LiftKind::robin) {
  const auto dp = derive_params(data.params);
  const Jet g = data.g.jet(t);
  if (kind == LiftKind::danckwerts) return {g.value, g.deriv, g.value, g.deriv};
  const Jet ce = data.exit_jet(t);
  const double e = std::exp(-dp.r * data.params.ell);
  return {g.value + e * ce.value, g.deriv + e * ce.deriv, g.value - e * ce.value,
          g.deriv - e * ce.deriv};
}

/// F = ke * e^{-rx} + kc * cos(pi x / ell) + k1: the forcing decomposed on the
/// three spatial shapes it is built from.
struct ForcingCoefficients {
  double ke = 0.0;
  double kc = 0.0;
  double k1 = 0.0;
};

inline ForcingCoefficients forcing_coefficients(const TransportParams& p, const DerivedParams& dp,
                                                const LiftCoefficients& h) {
  const double pk = std::numbers::pi / p.ell;
  const double a = pk * pk * p.D / p.R + dp.s;
  return {p.gamma / p.R, -(a * h.hc + h.hc_dot), -(dp.s * h.h1 + h.h1_dot)};
}

inline ForcingCoefficients forcing_coefficients(const ProblemData& data, double t,
                                                LiftKind kind = LiftKind::robin) {
  const auto dp = derive_params(data.params);
  return forcing_coefficients(data.params, dp, lift_coefficients(data, t, kind));
}

namespace detail {
inline void check_position(const TransportParams& p, double x, const char* op) {
  if (!(x >= 0.0 && x <= p.ell)) {
    std::ostringstream msg;
    msg << op << ": position " << x << " outside [0, " << p.ell << "]";
    throw DomainError(msg.str());
  }
}
}  // namespace detail

struct LiftValue {
  double H = 0.0;
  double H_t = 0.0;
  double H_x = 0.0;
  double H_xx = 0.0;
};

/// The lifting function and the partials the transformed equation needs.
inline LiftValue lift_H(const ProblemData& data, double t, double x, LiftKind kind = LiftKind::robin) {
  detail::check_position(data.params, x, "lift_H");
  const auto h = lift_coefficients(data, t, kind);
  const double pk = std::numbers::pi / data.params.ell;
  const double c = std::cos(pk * x), sn = std::sin(pk * x);
  return {h.h1 + h.hc * c, h.h1_dot + h.hc_dot * c, -pk * h.hc * sn, -pk * pk * h.hc * c};
}

struct ForcingValue {
  double F = 0.0;
  double F1 = 0.0;  ///< part carried by the input concentration (and production)
  double F2 = 0.0;  ///< part carried by the exit concentration
};

/// Forcing of the transformed equation, split into input and exit parts.
///
/// Both the split form and the compact (gamma/R) e^{-rx} - (sH + H_t) + (D/R) H_xx
/// are evaluated; a disagreement beyond rounding raises NumericError.
inline ForcingValue forcing_F(const ProblemData& data, double x, double t,
                              LiftKind kind = LiftKind::robin) {
  detail::check_position(data.params, x, "forcing_F");
  const auto& p = data.params;
  const auto dp = derive_params(p);
  const double pk = std::numbers::pi / p.ell;
  const double c = std::cos(pk * x);
  const double a = pk * pk * p.D / p.R + dp.s;
  const Jet g = data.g.jet(t);

  const double f1 = p.gamma / p.R * std::exp(-dp.r * x) - (a * c + dp.s) * g.value - (1.0 + c) * g.deriv;
  double f2 = 0.0;
  double exit_scale = 0.0;
  if (kind == LiftKind::robin) {
    const Jet ce = data.exit_jet(t);
    const double e = std::exp(-dp.r * p.ell);
    f2 = (a * c - dp.s) * e * ce.value - (1.0 - c) * e * ce.deriv;
    exit_scale = e * (std::abs(ce.value) * (a + dp.s) + 2.0 * std::abs(ce.deriv));
  }
  const double f = f1 + f2;

  const LiftValue H = lift_H(data, t, x, kind);
  const double compact = p.gamma / p.R * std::exp(-dp.r * x) - (dp.s * H.H + H.H_t) + p.D / p.R * H.H_xx;
  const double scale = 1.0 + std::abs(f) + p.gamma / p.R + std::abs(g.value) * (a + dp.s) +
                       2.0 * std::abs(g.deriv) + exit_scale;
  if (!(std::abs(f - compact) <= 1e-12 * scale)) {
    std::ostringstream msg;
    msg << "forcing_F: split and compact forms disagree at x=" << x << ", t=" << t << " ("
        << f << " vs " << compact << ")";
    throw NumericError(msg.str());
  }
  return {f, f1, f2};
}

/// Initial value of w: e^{s t0} (e^{-rx} phi(x) - H(x, t0)).
inline double initial_w(const ProblemData& data, double x, LiftKind kind = LiftKind::robin) {
  detail::check_position(data.params, x, "initial_w");
  const auto dp = derive_params(data.params);
  const double H = lift_H(data, data.t0, x, kind).H;
  return std::exp(dp.s * data.t0) * (std::exp(-dp.r * x) * data.phi(x) - H);
}

/// Inverse change of variables: C = (w + e^{st} H) e^{rx - st}.
inline double invert(double w, double H, double x, double t, double r, double s) {
  return w * std::exp(r * x - s * t) + H * std::exp(r * x);
}

/// Same map written in the factored form (w + e^{st} H) e^{rx - st}.
inline double invert_factored(double w, double H, double x, double t, double r, double s) {
  return (w + std::exp(s * t) * H) * std::exp(r * x - s * t);
}

/// Forward substitution C = u e^{rx - st}, and its inverse.
inline double to_concentration(double u, double x, double t, const DerivedParams& dp) {
  return u * std::exp(dp.r * x - dp.s * t);
}
inline double from_concentration(double C, double x, double t, const DerivedParams& dp) {
  return C * std::exp(-dp.r * x + dp.s * t);
}

}  // namespace robincol

#endif  // ROBINCOL_CORE_MODEL_HPP
