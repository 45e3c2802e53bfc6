#include "dgpe/reference_state.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dgpe {

ReferenceState v_c_profile(const ModelParams& params, const WellGeometry& geometry,
                           double mass_tol) {
  const double p = params.p;
  const double delta = geometry.delta_p;
  const double l3 = std::abs(params.lambda3);
  if (!(params.lambda3 < 0.0)) throw std::invalid_argument("v_c_profile: lambda3 must be negative");

  ReferenceState s;
  s.profile = wp_profile_cached(p);
  s.p = p;
  s.beta = geometry.beta_c;
  s.amplitude = std::pow(2.0 * s.beta / (p * (1.0 - delta) * l3), 1.0 / (p - 2.0));
  s.inv_width = std::sqrt(2.0 * delta * s.beta / (1.0 - delta));
  s.m0 = -geometry.kappa * std::pow(params.c, (6.0 - p) / (2.0 - p * delta));

  const RadialNorms w = radial_norms(*s.profile, p);
  const double b3 = std::pow(s.inv_width, 3.0);
  s.mass = s.amplitude * w.mass / std::sqrt(b3);
  s.grad = s.amplitude * s.inv_width * w.grad / std::sqrt(b3);
  s.lp_pow = std::pow(s.amplitude, p) * w.lp_pow / b3;
  s.level = 0.5 * s.grad * s.grad + 2.0 * params.lambda3 / p * s.lp_pow;

  if (!(std::abs(s.mass / params.c - 1.0) <= mass_tol)) {
    throw std::runtime_error("v_c_profile: mass self-check failed, ||v_c|| / c - 1 = " +
                             std::to_string(s.mass / params.c - 1.0));
  }
  return s;
}

double v_c_gradient_norm(const ModelParams& params, const WellGeometry& geometry) {
  const double p = params.p;
  const double delta = geometry.delta_p;
  const double q = 2.0 - p * delta;
  return std::pow(2.0 * delta * std::pow(geometry.C_p, p) * std::abs(params.lambda3), 1.0 / q) *
         std::pow(params.c, (6.0 - p) / (10.0 - 3.0 * p));
}

double scalar_dilation_derivative(const ReferenceState& state, double lambda3) {
  const double p = state.p;
  const double delta = gn_exponent(p);
  return state.grad * state.grad + 2.0 * lambda3 * delta * state.lp_pow;
}

}  // namespace dgpe
