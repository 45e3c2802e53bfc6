#pragma once

#include <memory>

#include "dgpe/params.hpp"
#include "dgpe/wp_oracle.hpp"

namespace dgpe {

/// Closed-form minimizer v_c(x) = a W_p(b x) of the scalar problem
///   I(v) = 1/2 ||grad v||^2 + (2 lambda3 / p) ||v||_p^p  on ||v||_2 = c.
struct ReferenceState {
  std::shared_ptr<const RadialProfile> profile;
  double p = 0.0;
  double amplitude = 0.0;  // a
  double inv_width = 0.0;  // b
  double beta = 0.0;       // multiplier of the scalar problem
  double m0 = 0.0;         // closed-form level -kappa c^{(6-p)/(2-p delta_p)}
  double mass = 0.0;       // ||v_c||_2 by radial quadrature
  double grad = 0.0;       // ||grad v_c||_2
  double lp_pow = 0.0;     // ||v_c||_p^p
  double level = 0.0;      // I(v_c) from the quadrature

  double value(double radius) const { return amplitude * profile->value(inv_width * radius); }
};

/// Builds v_c from the cached W_p profile. Throws std::runtime_error when
/// the quadrature mass differs from c by more than mass_tol (relative).
ReferenceState v_c_profile(const ModelParams& params, const WellGeometry& geometry,
                           double mass_tol = 1e-6);

/// Closed form of ||grad v_c||_2.
double v_c_gradient_norm(const ModelParams& params, const WellGeometry& geometry);

/// Derivative of s -> I((v)_s) at s = 1 for (v)_s = s^{3/2} v(s x).
double scalar_dilation_derivative(const ReferenceState& state, double lambda3);

}  // namespace dgpe
