#pragma once

#include <memory>
#include <vector>

#include <json.hpp>

namespace dgpe {

/// Positive radial profile sampled on a uniform mesh r_i = i * dr.
///
/// Inside the integrated region the values come from the shooting solve;
/// past the matching radius they come from the decaying solution integrated
/// inward from r_max. Beyond r_max the asymptote A exp(-k r) / r is used.
struct RadialProfile {
  double p = 0.0;
  double dr = 0.0;
  double r_max = 0.0;
  double r_match = 0.0;
  double decay_rate = 0.0;
  std::vector<double> r;
  std::vector<double> w;
  std::vector<double> dw;

  double w0() const { return w.front(); }
  /// Cubic Hermite interpolation on the mesh; exponential tail beyond r_max.
  double value(double radius) const;
  double derivative(double radius) const;
};

struct RadialNorms {
  double mass = 0.0;     // ||w||_2
  double grad = 0.0;     // ||grad w||_2
  double lp_pow = 0.0;   // ||w||_p^p
};

/// Coefficients of -Delta W + omega W = alpha W^{p-1} for a given p.
struct WpEquation {
  double p;
  double delta;
  double omega;
  double alpha;

  explicit WpEquation(double p);
  double decay_rate() const;
};

/// Shoots on W'' + (2/r) W' - omega W + alpha W^{p-1} = 0, W'(0) = 0,
/// bisecting W(0) between undershoot (W' turns positive) and overshoot
/// (W crosses zero). r_max is doubled until the tail is below 1e-12 W(0).
/// Throws std::invalid_argument for p outside (2, 6), std::runtime_error
/// if no bracket is found or the residual exceeds tol.
RadialProfile solve_wp(double p, double r_max = 30.0, double tol = 1e-6);

/// Classification used by the shooting: +1 overshoot, -1 undershoot.
int shooting_class(const WpEquation& eq, double w0);

/// Bracket [lo, hi] of W(0) found by the bisection for a given start.
std::pair<double, double> shooting_bracket(double p, double lo_start, double hi_start);

/// Max |W'' + (2/r)W' - omega W + alpha W^{p-1}| over the mesh, relative
/// to W(0). W'' is obtained by differencing the stored derivative.
double ode_residual(const RadialProfile& profile);

/// Composite Simpson on the profile mesh (4 pi r^2 weights).
RadialNorms radial_norms(const RadialProfile& profile, double p);

/// Gagliardo-Nirenberg constant C_p = (p / (2 ||W_p||_2^{p-2}))^{1/p}.
double gn_constant(const RadialProfile& profile, double p);

/// Profiles and constants are computed once per exponent and shared.
std::shared_ptr<const RadialProfile> wp_profile_cached(double p);
double gn_constant_cached(double p);

void to_json(nlohmann::json& j, const RadialProfile& profile);

}  // namespace dgpe
