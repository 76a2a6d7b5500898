#ifndef ROBINCOL_SERIES_HPP
#define ROBINCOL_SERIES_HPP

// Truncated eigenexpansion of the transformed problem.
//
// Internally everything is carried in scaled form W = e^{-st} w, so that
//   C(x, t) = e^{rx} (W(x, t) + H(x, t)),   W = sum_n Wn(t) phi_n(x),
//   Wn' = -rho_n Wn + f_n(t),   rho_n = s + (D/R) lambda_n.
// The unscaled coefficient is Tn(t) = e^{st} Wn(t); it is only formed on request.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "robincol/core_model.hpp"
#include "robincol/eigensystem.hpp"
#include "robincol/error.hpp"
#include "robincol/exit_flux.hpp"
#include "robincol/quadrature.hpp"

namespace robincol {

struct TruncationPolicy {
  int n_max = 200;             ///< hard cap on the highest mode index
  double tail_tol = 1e-8;      ///< target for the concentration-unit tail bound
  double time_quad_tol = 1e-10;
  int fixed_modes = 0;         ///< > 0 forces this highest index instead of choosing one

  void validate() const {
    if (n_max < 1) throw DomainError("truncation policy: n_max must be >= 1");
    if (!(tail_tol > 0.0) || !(time_quad_tol > 0.0))
      throw DomainError("truncation policy: tolerances must be > 0");
    if (fixed_modes < 0) throw DomainError("truncation policy: fixed_modes must be >= 0");
  }
};

struct CoefficientBound {
  double value = 0.0;     ///< bound on |Wn(t)| (scaled units)
  bool fallback = false;  ///< rho = 0: the direct (t - t0) sup|f| bound was used
};

/// Coefficients and lift at one time, enough to evaluate the profile anywhere.
class Snapshot {
 public:
  double t = 0.0;
  int modes = 0;             ///< highest index kept
  double tail = 0.0;         ///< reported bound on the discarded part of C
  bool tail_met = true;      ///< tail <= policy.tail_tol
  std::vector<double> coeffs;  ///< Wn(t), n = 0..modes
  LiftCoefficients lift;

  double scaled_w(double x) const {
    double w = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) w += coeffs[i] * eval_phi(pairs_[i], x, r_).value;
    return w;
  }

  double C(double x) const {
    detail::check_position(params_, x, "eval_C");
    return std::exp(r_ * x) * (scaled_w(x) + lift.h1 + lift.hc * std::cos(p_ * x));
  }

  /// (C, C_x)
  Jet C_jet(double x) const {
    detail::check_position(params_, x, "eval_C");
    double w = 0.0, wx = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      const Jet j = eval_phi(pairs_[i], x, r_);
      w += coeffs[i] * j.value;
      wx += coeffs[i] * j.deriv;
    }
    const double H = lift.h1 + lift.hc * std::cos(p_ * x);
    const double Hx = -p_ * lift.hc * std::sin(p_ * x);
    const double e = std::exp(r_ * x);
    return {e * (w + H), e * (r_ * (w + H) + wx + Hx)};
  }

 private:
  friend class SeriesSolution;
  std::vector<EigenPair> pairs_;
  TransportParams params_;
  double r_ = 0.0, s_ = 0.0, p_ = 0.0;
};

struct LargeTValue {
  double C = 0.0;
  double tau_min = 0.0;
  bool fallback = false;  ///< the horizon came from the caller because rho_0 = 0
};

class SeriesSolution {
 public:
  /// Builds eigenpairs and initial coefficients. A Robin solution needs the
  /// exit concentration available (Measured, or Computed and resolved).
  SeriesSolution(ProblemData data, EigenKind kind, TruncationPolicy policy = {})
      : data_(std::move(data)), kind_(kind), policy_(policy) {
    policy_.validate();
    dp_ = derive_params(data_.params);
    if (kind_ == EigenKind::robin && !data_.exit_resolved()) {
      throw DomainError("Robin series needs the exit concentration; resolve the Computed exit first");
    }
    const auto& p = data_.params;
    pk_ = std::numbers::pi / p.ell;
    k_ = p.D / p.R;
    e_ = std::exp(-dp_.r * p.ell);
    ke_ = p.gamma / p.R;
    const int top = 2 * std::max(policy_.n_max, policy_.fixed_modes);
    pairs_.reserve(static_cast<std::size_t>(top + 1));
    for (int n = 0; n <= top; ++n) {
      pairs_.push_back(kind_ == EigenKind::robin ? robin_eigenpair(n, p) : danckwerts_eigenvalue(n, p));
      shapes_.push_back(shape_integrals(pairs_.back(), dp_.r, p.ell));
      rho_.push_back(pairs_.back().exponential() ? p.mu / p.R : dp_.s + k_ * pairs_.back().lambda);
    }
    constant_forcing_ = data_.g.constant_value().has_value() &&
                        (kind_ == EigenKind::danckwerts || data_.exit_fn().constant_value().has_value());
    compute_initial();
  }

  const ProblemData& data() const { return data_; }
  EigenKind kind() const { return kind_; }
  LiftKind lift_kind() const { return kind_ == EigenKind::robin ? LiftKind::robin : LiftKind::danckwerts; }
  const TruncationPolicy& policy() const { return policy_; }
  const DerivedParams& derived() const { return dp_; }
  const std::vector<EigenPair>& pairs() const { return pairs_; }
  int highest_index() const { return static_cast<int>(pairs_.size()) - 1; }
  double rho(int n) const { return rho_.at(static_cast<std::size_t>(n)); }
  double t0() const { return data_.t0; }

  /// h1, hc and the forcing coefficients at time t.
  LiftCoefficients lift(double t) const {
    const Jet g = data_.g.jet(t);
    if (kind_ == EigenKind::danckwerts) return {g.value, g.deriv, g.value, g.deriv};
    const Jet ce = data_.exit_jet(t);
    return {g.value + e_ * ce.value, g.deriv + e_ * ce.deriv, g.value - e_ * ce.value, g.deriv - e_ * ce.deriv};
  }
  ForcingCoefficients forcing(double t) const { return forcing_coefficients(data_.params, dp_, lift(t)); }

  /// f_n(tau) = (F(., tau), phi_n) / (phi_n, phi_n), from closed-form shape integrals.
  double project_forcing(int n, double tau) const {
    check_time(tau, "project_forcing");
    const auto k = forcing(tau);
    const auto& sh = shape(n);
    return (k.ke * sh.exp_decay + k.kc * sh.cosine + k.k1 * sh.one) / pair(n).norm;
  }

  /// Same projection by quadrature of F phi_n (independent path).
  double project_forcing_quadrature(int n, double tau, const QuadratureOptions& opts = {}) const {
    check_time(tau, "project_forcing");
    const auto& pr = pair(n);
    const int panels = n > 50 ? n + 1 : 1;
    const double ip = inner_product([&](double x) { return forcing_F(data_, x, tau, lift_kind()).F; },
                                    [&](double x) { return eval_phi(pr, x, dp_.r).value; }, 0.0,
                                    data_.params.ell, opts, panels);
    return ip / pr.norm;
  }

  /// Wn(t0) = e^{-s t0} Tn(t0).
  double scaled_initial_coefficient(int n) const { return w0_.at(static_cast<std::size_t>(n)); }

  /// Tn(t0), unscaled.
  double initial_coefficient(int n) const { return unscale(scaled_initial_coefficient(n), data_.t0); }

  /// Wn(t).
  double scaled_coefficient(int n, double t) const {
    check_time(t, "coefficient");
    const double d = t - data_.t0;
    return std::exp(-rho(n) * d) * scaled_initial_coefficient(n) + forced_response(n, t, data_.t0);
  }

  /// Tn(t) = e^{st} Wn(t); NumericError when e^{st} overflows.
  double coefficient(int n, double t) const { return unscale(scaled_coefficient(n, t), t); }

  /// Integral over [t0, t] of the squared L2 norm of F, from the 3x3 Gram matrix of its shapes.
  double forcing_energy(double t) const {
    check_time(t, "forcing_energy");
    if (t == data_.t0) return 0.0;
    auto f = [&](double tau) { return forcing_norm2(forcing(tau)); };
    QuadratureOptions o{policy_.time_quad_tol, policy_.time_quad_tol, 4000};
    return integrate(f, data_.t0, t, o, time_cuts(data_.t0, t));
  }

  /// Schwarz-type bound on |Wn(t)|:
  ///   e^{-rho d} |Wn(t0)| + sqrt((1 - e^{-2 rho d}) / (2 rho) * energy / norm_n).
  /// Pass `energy` to reuse forcing_energy(t) across modes.
  CoefficientBound coefficient_bound(int n, double t, std::optional<double> energy = {}) const {
    check_time(t, "coefficient_bound");
    const double d = t - data_.t0;
    const double rh = rho(n);
    CoefficientBound out;
    const double homog = std::exp(-rh * d) * std::abs(scaled_initial_coefficient(n));
    if (rh == 0.0) {
      // no decay to integrate against: bound the Duhamel part by d * sup|f_0|
      out.fallback = true;
      double sup = 0.0;
      for (int i = 0; i <= 256; ++i) sup = std::max(sup, std::abs(project_forcing(n, data_.t0 + d * i / 256)));
      for (double b : data_.g.breakpoints())
        if (b >= data_.t0 && b <= t) sup = std::max(sup, std::abs(project_forcing(n, b)));
      out.value = homog + d * sup;
      return out;
    }
    const double en = energy ? *energy : forcing_energy(t);
    const double weight = -std::expm1(-2.0 * rh * d) / (2.0 * rh);
    out.value = homog + std::sqrt(weight * en / pair(n).norm);
    return out;
  }

  /// Bound on the concentration carried by modes above `modes` at time t:
  /// e^{r ell} sum_{n > modes} Bn (1 + r/kappa_n), with Bn an a priori bound on |Wn(t)|.
  double tail_bound(int modes, double t, bool include_initial = true) const {
    const auto b = mode_bounds(t, include_initial);
    return tail_from(b, modes);
  }

  Snapshot snapshot(double t) const { return snapshot_impl(t, std::nullopt); }
  Snapshot snapshot(double t, int modes) const { return snapshot_impl(t, modes); }

  double eval_C(double x, double t) const { return snapshot(t).C(x); }
  Jet eval_C_jet(double x, double t) const { return snapshot(t).C_jet(x); }
  /// w(x, t) unscaled (e^{st} W); NumericError on overflow.
  double eval_w(double x, double t) const {
    detail::check_position(data_.params, x, "eval_w");
    return unscale(snapshot(t).scaled_w(x), t);
  }

  /// Large-time solution: initial data dropped, forcing integrated from a finite
  /// horizon tau_min where every kept mode's kernel e^{-rho (t - tau)} is below
  /// time_quad_tol. With rho_0 = 0 the caller's horizon is used instead.
  LargeTValue eval_large_t(double x, double t, std::optional<double> tau_min = {}) const {
    detail::check_position(data_.params, x, "eval_large_t");
    LargeTValue out;
    double rho_min = std::numeric_limits<double>::infinity();
    for (double r : rho_) rho_min = std::min(rho_min, r);
    if (rho_min > 0.0) {
      out.tau_min = t - std::log(1.0 / policy_.time_quad_tol) / rho_min;
      if (tau_min) out.tau_min = std::min(out.tau_min, *tau_min);
    } else {
      if (!tau_min) {
        throw DomainError(
            "eval_large_t: the n = 0 mode does not decay (mu = 0); supply an explicit tau_min");
      }
      out.tau_min = *tau_min;
      out.fallback = true;
    }
    if (data_.exit_is_computed() && kind_ == EigenKind::robin && out.tau_min < data_.t0) {
      throw DomainError("eval_large_t: horizon starts before the computed exit memo; build it from an earlier t0");
    }
    const int modes = choose_modes(mode_bounds_from(t, out.tau_min, false));
    double w = 0.0;
    for (int n = 0; n <= modes; ++n) w += forced_response(n, t, out.tau_min) * eval_phi(pair(n), x, dp_.r).value;
    const auto h = lift(t);
    out.C = std::exp(dp_.r * x) * (w + h.h1 + h.hc * std::cos(pk_ * x));
    return out;
  }

 private:
  const EigenPair& pair(int n) const {
    if (n < 0 || n > highest_index()) {
      std::ostringstream msg;
      msg << "mode index " << n << " outside [0, " << highest_index() << "]";
      throw DomainError(msg.str());
    }
    return pairs_[static_cast<std::size_t>(n)];
  }
  const ShapeIntegrals& shape(int n) const {
    pair(n);
    return shapes_[static_cast<std::size_t>(n)];
  }

  void check_time(double t, const char* op) const {
    if (!(t >= data_.t0) || !std::isfinite(t)) {
      std::ostringstream msg;
      msg << op << ": time " << t << " is before t0 = " << data_.t0;
      throw DomainError(msg.str());
    }
  }

  double unscale(double w, double t) const {
    const double st = dp_.s * t;
    if (st > 709.0) {
      std::ostringstream msg;
      msg << "e^{s t} overflows at s t = " << st << "; use the scaled coefficient";
      throw NumericError(msg.str());
    }
    return w * std::exp(st);
  }

  double forcing_norm2(const ForcingCoefficients& c) const {
    const double r = dp_.r, ell = data_.params.ell, p = pk_;
    const double gee = -std::expm1(-2 * r * ell) / (2 * r);
    const double gec = r * (1 + e_) / (r * r + p * p);
    const double ge1 = -std::expm1(-r * ell) / r;
    return c.ke * c.ke * gee + c.kc * c.kc * ell / 2 + c.k1 * c.k1 * ell + 2 * c.ke * c.kc * gec +
           2 * c.ke * c.k1 * ge1;
  }

  std::vector<double> time_cuts(double a, double b) const {
    std::vector<double> cuts;
    auto add = [&](const std::vector<double>& pts) {
      std::size_t inside = 0;
      for (double p : pts) inside += (p > a && p < b);
      if (inside > 64) return;  // dense tables: let the adaptive driver find them
      for (double p : pts)
        if (p > a && p < b) cuts.push_back(p);
    };
    add(data_.g.breakpoints());
    if (kind_ == EigenKind::robin) add(data_.exit_fn().breakpoints());
    return cuts;
  }

  /// Integral over [start, t] of e^{-rho_n (t - tau)} f_n(tau).
  double forced_response(int n, double t, double start) const {
    if (t <= start) return 0.0;
    const auto& pr = pair(n);
    const auto& sh = shape(n);
    const double rh = rho(n);
    auto weight = [&](double d) { return rh == 0.0 ? d : -std::expm1(-rh * d) / rh; };
    double out = ke_ * sh.exp_decay / pr.norm * weight(t - start);
    if (constant_forcing_) {
      const auto k = forcing(start);
      return out + (k.kc * sh.cosine + k.k1 * sh.one) / pr.norm * weight(t - start);
    }
    const double a = rh > 0.0 ? std::max(start, t - 40.0 / rh) : start;
    auto f = [&](double tau) {
      const auto k = forcing(tau);
      return std::exp(-rh * (t - tau)) * (k.kc * sh.cosine + k.k1 * sh.one);
    };
    auto cuts = time_cuts(a, t);
    if (rh > 0.0) {
      for (double m : {1.0, 4.0, 12.0})
        if (t - m / rh > a) cuts.push_back(t - m / rh);
    }
    QuadratureOptions o{policy_.time_quad_tol * pr.norm, policy_.time_quad_tol, 4000};
    return out + integrate(f, a, t, o, cuts) / pr.norm;
  }

  void compute_initial() {
    const auto& p = data_.params;
    const double r = dp_.r;
    const auto h = lift(data_.t0);
    const auto c = data_.phi.constant_value();
    QuadratureOptions o{1e-13, 1e-12, 20000};
    const auto phi_cuts = data_.phi.breakpoints();
    w0_.resize(pairs_.size());
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const auto& pr = pairs_[i];
      const auto& sh = shapes_[i];
      double q;
      if (c) {
        q = *c * sh.exp_decay;
      } else {
        auto cuts = uniform_breakpoints(0.0, p.ell, pr.n > 50 ? pr.n + 1 : 1);
        cuts.insert(cuts.end(), phi_cuts.begin(), phi_cuts.end());
        q = integrate([&](double x) { return std::exp(-r * x) * data_.phi(x) * eval_phi(pr, x, r).value; }, 0.0,
                      p.ell, o, cuts);
      }
      w0_[i] = (q - h.h1 * sh.one - h.hc * sh.cosine) / pr.norm;
      if (!std::isfinite(w0_[i])) throw NumericError("initial coefficient is not finite");
    }
    w0_norm2_ = integrate(
        [&](double x) {
          const double v = std::exp(-r * x) * data_.phi(x) - h.h1 - h.hc * std::cos(pk_ * x);
          return v * v;
        },
        0.0, p.ell, o, phi_cuts);
  }

  struct Bounds {
    std::vector<double> terms;  ///< Bn (1 + r/kappa_n), n = 0..top
    double remainder = 0.0;     ///< estimate for n > top
  };

  Bounds mode_bounds(double t, bool include_initial) const {
    return mode_bounds_from(t, data_.t0, include_initial);
  }

  /// Bn = e^{-rho d}|Wn(start)| + (1 - e^{-rho d})/rho * sum_k |P_k| sup|k_k| / norm_n.
  Bounds mode_bounds_from(double t, double start, bool include_initial) const {
    const double d = t - start;
    double sup_c = 0.0, sup_1 = 0.0;
    auto visit = [&](double tau) {
      const auto k = forcing(tau);
      sup_c = std::max(sup_c, std::abs(k.kc));
      sup_1 = std::max(sup_1, std::abs(k.k1));
    };
    if (constant_forcing_) {
      visit(start);
    } else {
      for (int i = 0; i <= 256; ++i) visit(start + d * i / 256);
      for (double b : time_cuts(start, t)) visit(b);
    }
    const double r = dp_.r;
    Bounds out;
    out.terms.resize(pairs_.size());
    double last_forced = 0.0;
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const auto& pr = pairs_[i];
      const auto& sh = shapes_[i];
      const double rh = rho_[i];
      const double decay = std::isinf(d) ? 0.0 : std::exp(-rh * d);
      const double weight = rh == 0.0 ? d : (std::isinf(d) ? 1.0 / rh : -std::expm1(-rh * d) / rh);
      const double forced =
          weight * (std::abs(ke_ * sh.exp_decay) + sup_c * std::abs(sh.cosine) + sup_1 * std::abs(sh.one)) / pr.norm;
      const double homog = include_initial ? decay * std::abs(w0_[i]) : 0.0;
      const double amp = pr.exponential() ? std::exp(r * data_.params.ell) : 1.0 + r / pr.kappa;
      out.terms[i] = (homog + forced) * amp;
      last_forced = forced * amp;
    }
    // Beyond the stored pairs: forcing terms fall off like n^{-4}; initial
    // terms are bounded by Bessel, ||W(t0)|| / sqrt(norm_n), times a Gaussian in n.
    const double top = static_cast<double>(pairs_.size() - 1);
    out.remainder = last_forced * top / 3.0;
    if (include_initial) {
      const double a = k_ * std::numbers::pi * std::numbers::pi / (data_.params.ell * data_.params.ell) * d;
      const double bessel = std::sqrt(w0_norm2_ / (0.5 * data_.params.ell));
      const double amp = 1.0 + r * data_.params.ell / (std::numbers::pi * top);
      double gauss_sum;
      if (a <= 0.0) gauss_sum = std::numeric_limits<double>::infinity();
      else gauss_sum = std::exp(-dp_.s * d) * 0.5 * std::sqrt(std::numbers::pi / a) * std::erfc(top * std::sqrt(a));
      out.remainder += (bessel == 0.0 ? 0.0 : bessel * amp * gauss_sum);
    }
    return out;
  }

  double tail_from(const Bounds& b, int modes) const {
    double tail = b.remainder;
    for (std::size_t i = static_cast<std::size_t>(modes) + 1; i < b.terms.size(); ++i) tail += b.terms[i];
    return std::exp(dp_.r * data_.params.ell) * tail;
  }

  int choose_modes(const Bounds& b) const {
    if (policy_.fixed_modes > 0) return policy_.fixed_modes;
    // suffix sums, smallest N meeting the target
    std::vector<double> suffix(b.terms.size() + 1, b.remainder);
    for (std::size_t i = b.terms.size(); i-- > 0;) suffix[i] = suffix[i + 1] + b.terms[i];
    const double scale = std::exp(dp_.r * data_.params.ell);
    for (int n = 0; n < policy_.n_max; ++n) {
      if (scale * suffix[static_cast<std::size_t>(n) + 1] <= policy_.tail_tol) return std::max(n, 1);
    }
    return policy_.n_max;
  }

  Snapshot snapshot_impl(double t, std::optional<int> modes) const {
    check_time(t, "snapshot");
    Snapshot s;
    s.t = t;
    const auto b = mode_bounds(t, true);
    s.modes = modes ? *modes : choose_modes(b);
    if (s.modes < 0 || s.modes > highest_index()) throw DomainError("snapshot: mode count out of range");
    s.tail = tail_from(b, s.modes);
    s.tail_met = s.tail <= policy_.tail_tol;
    s.coeffs.resize(static_cast<std::size_t>(s.modes) + 1);
    for (int n = 0; n <= s.modes; ++n) s.coeffs[static_cast<std::size_t>(n)] = scaled_coefficient(n, t);
    s.lift = lift(t);
    s.pairs_.assign(pairs_.begin(), pairs_.begin() + s.modes + 1);
    s.params_ = data_.params;
    s.r_ = dp_.r;
    s.s_ = dp_.s;
    s.p_ = pk_;
    return s;
  }

  ProblemData data_;
  EigenKind kind_;
  TruncationPolicy policy_;
  DerivedParams dp_;
  double pk_ = 0.0, k_ = 0.0, e_ = 0.0, ke_ = 0.0;
  bool constant_forcing_ = false;
  std::vector<EigenPair> pairs_;
  std::vector<ShapeIntegrals> shapes_;
  std::vector<double> rho_;
  std::vector<double> w0_;
  double w0_norm2_ = 0.0;
};

/// Robin series with a Computed exit resolved over [t0, t_end] first.
inline SeriesSolution robin_solve(ProblemData data, double t_end, TruncationPolicy policy = {},
                                  int exit_points = 512) {
  resolve_exit(data, t_end, exit_points);
  return SeriesSolution(std::move(data), EigenKind::robin, policy);
}

}  // namespace robincol

#endif  // ROBINCOL_SERIES_HPP
