#pragma once

#include <json.hpp>

#include "dgpe/params.hpp"
#include "dgpe/spectral.hpp"

namespace dgpe {

/// The scalar building blocks of every functional:
/// M = ||u||^2, G = ||grad u||^2, B = B(u), L = ||u||_p^p.
struct Components {
  double mass_sq = 0.0;
  double grad_sq = 0.0;
  double b_pair = 0.0;
  double lp_pow = 0.0;
};

struct EnergyBreakdown {
  double kinetic = 0.0;     // G / 2
  double b_pair = 0.0;      // B / 2
  double attractive = 0.0;  // (2 lambda3 / p) L
  double total = 0.0;
  double p_value = 0.0;     // Pohozaev functional
  double mu_est = 0.0;      // multiplier estimate
};

/// int lambda1 |u|^4 + lambda2 (K * |u|^2) |u|^2 by grid quadrature.
double b_pair_direct(const Field& u, const ModelParams& params, Spectral& spectral);

/// The same pairing through its Fourier multiplier lambda1 + lambda2 khat.
double b_pair_fourier(const Field& u, const ModelParams& params, Spectral& spectral);

Components components(const Field& u, const ModelParams& params, Spectral& spectral);

double energy_value(const Components& comp, const ModelParams& params);
double pohozaev_value(const Components& comp, const ModelParams& params);
/// mu with mu c^2 = -(G/2 + B + lambda3 L), c^2 = M.
double multiplier_value(const Components& comp, const ModelParams& params);
EnergyBreakdown breakdown(const Components& comp, const ModelParams& params);

EnergyBreakdown energy(const Field& u, const ModelParams& params, Spectral& spectral);
double pohozaev(const Field& u, const ModelParams& params, Spectral& spectral);
double multiplier_estimate(const Field& u, const ModelParams& params, Spectral& spectral);

struct FiberValue {
  double value = 0.0;
  double derivative = 0.0;
};

/// Energy along the mass-preserving dilation s^{3/2} u(s x), evaluated from
/// the components of u. Throws std::invalid_argument for s <= 0.
FiberValue fiber_map(const Components& comp, double s, const ModelParams& params);

/// -1/2 Lap u + lambda1 |u|^2 u + lambda2 (K * |u|^2) u + lambda3 |u|^{p-2} u + mu u.
///
/// With <f, g> = h^3 sum conj(f) g the Gateaux derivative of the energy is
///   dE(u)[phi] = 2 Re <el_residual(u, 0), phi>.
Field el_residual(const Field& u, double mu, const ModelParams& params, Spectral& spectral);

/// Components and the mu = 0 residual from one pass (shares the transforms).
struct Evaluation {
  Components comp;
  Field residual;
};
Evaluation evaluate(const Field& u, const ModelParams& params, Spectral& spectral,
                    bool with_residual = true);

void to_json(nlohmann::json& j, const Components& comp);
void to_json(nlohmann::json& j, const EnergyBreakdown& e);

}  // namespace dgpe
