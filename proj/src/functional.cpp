#include "dgpe/functional.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace dgpe {

namespace {

void check_workspace(const Field& u, const Spectral& spectral) {
  if (!(u.grid == spectral.grid())) {
    throw std::invalid_argument("field and spectral workspace use different grids");
  }
}

std::vector<double> density(const Field& u) {
  std::vector<double> rho(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) rho[i] = std::norm(u[i]);
  return rho;
}

double pairing_from_potential(const std::vector<double>& rho, const std::vector<double>* phi,
                              const ModelParams& params, double h3) {
  std::vector<double> t(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    t[i] = params.lambda1 * rho[i] * rho[i];
    if (phi) t[i] += params.lambda2 * (*phi)[i] * rho[i];
  }
  return h3 * pairwise_sum(t);
}

}  // namespace

double b_pair_direct(const Field& u, const ModelParams& params, Spectral& spectral) {
  check_workspace(u, spectral);
  const std::vector<double> rho = density(u);
  if (params.lambda2 == 0.0) {
    return pairing_from_potential(rho, nullptr, params, u.grid.cell_volume());
  }
  const std::vector<double> phi = dipolar_potential_of_density(rho, spectral);
  return pairing_from_potential(rho, &phi, params, u.grid.cell_volume());
}

double b_pair_fourier(const Field& u, const ModelParams& params, Spectral& spectral) {
  check_workspace(u, spectral);
  std::vector<cplx> hat(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) hat[i] = std::norm(u[i]);
  spectral.forward(hat);
  const auto& kh = spectral.khat_table();
  std::vector<double> t(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    t[i] = (params.lambda1 + params.lambda2 * kh[i]) * std::norm(hat[i]);
  }
  return u.grid.cell_volume() / static_cast<double>(u.size()) * pairwise_sum(t);
}

Evaluation evaluate(const Field& u, const ModelParams& params, Spectral& spectral,
                    bool with_residual) {
  check_workspace(u, spectral);
  const std::size_t n = u.size();
  const double h3 = u.grid.cell_volume();
  const double p = params.p;
  Evaluation ev;

  const std::vector<double> rho = density(u);
  std::vector<double> phi;
  if (params.lambda2 != 0.0) phi = dipolar_potential_of_density(rho, spectral);

  ev.comp.mass_sq = h3 * pairwise_sum(rho);
  ev.comp.b_pair = pairing_from_potential(rho, phi.empty() ? nullptr : &phi, params, h3);
  {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::pow(rho[i], 0.5 * p);
    ev.comp.lp_pow = h3 * pairwise_sum(t);
  }

  std::vector<cplx> hat(n);
  spectral.forward(u.values.data(), hat.data());
  const auto& xi2 = spectral.xi2();
  {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = xi2[i] * std::norm(hat[i]);
    ev.comp.grad_sq = h3 / static_cast<double>(n) * pairwise_sum(t);
  }
  if (!with_residual) return ev;

  for (std::size_t i = 0; i < n; ++i) hat[i] *= 0.5 * xi2[i];
  spectral.inverse(hat);
  ev.residual = Field(u.grid);
  ev.residual.real = u.real;
  for (std::size_t i = 0; i < n; ++i) {
    double pot = params.lambda1 * rho[i];
    if (!phi.empty()) pot += params.lambda2 * phi[i];
    if (rho[i] > 0.0) pot += params.lambda3 * std::pow(rho[i], 0.5 * (p - 2.0));
    cplx r = hat[i] + pot * u[i];
    if (u.real) r = r.real();
    ev.residual[i] = r;
  }
  return ev;
}

Components components(const Field& u, const ModelParams& params, Spectral& spectral) {
  return evaluate(u, params, spectral, false).comp;
}

double energy_value(const Components& comp, const ModelParams& params) {
  return 0.5 * comp.grad_sq + 0.5 * comp.b_pair + 2.0 * params.lambda3 / params.p * comp.lp_pow;
}

double pohozaev_value(const Components& comp, const ModelParams& params) {
  return 2.0 * comp.grad_sq + 3.0 * comp.b_pair +
         4.0 * params.lambda3 * gn_exponent(params.p) * comp.lp_pow;
}

double multiplier_value(const Components& comp, const ModelParams& params) {
  if (comp.mass_sq == 0.0) return 0.0;
  return -(0.5 * comp.grad_sq + comp.b_pair + params.lambda3 * comp.lp_pow) / comp.mass_sq;
}

EnergyBreakdown breakdown(const Components& comp, const ModelParams& params) {
  EnergyBreakdown e;
  e.kinetic = 0.5 * comp.grad_sq;
  e.b_pair = 0.5 * comp.b_pair;
  e.attractive = 2.0 * params.lambda3 / params.p * comp.lp_pow;
  e.total = e.kinetic + e.b_pair + e.attractive;
  e.p_value = pohozaev_value(comp, params);
  e.mu_est = multiplier_value(comp, params);
  return e;
}

EnergyBreakdown energy(const Field& u, const ModelParams& params, Spectral& spectral) {
  return breakdown(components(u, params, spectral), params);
}

double pohozaev(const Field& u, const ModelParams& params, Spectral& spectral) {
  return pohozaev_value(components(u, params, spectral), params);
}

double multiplier_estimate(const Field& u, const ModelParams& params, Spectral& spectral) {
  return multiplier_value(components(u, params, spectral), params);
}

FiberValue fiber_map(const Components& comp, double s, const ModelParams& params) {
  if (!(s > 0.0)) throw std::invalid_argument("fiber_map: dilation must be positive");
  const double pd = params.p * gn_exponent(params.p);
  const double l3 = std::abs(params.lambda3);
  FiberValue f;
  f.value = 0.5 * s * s * comp.grad_sq + 0.5 * s * s * s * comp.b_pair -
            2.0 * l3 * std::pow(s, pd) / params.p * comp.lp_pow;
  f.derivative = s * comp.grad_sq + 1.5 * s * s * comp.b_pair -
                 2.0 * l3 * pd * std::pow(s, pd - 1.0) / params.p * comp.lp_pow;
  return f;
}

Field el_residual(const Field& u, double mu, const ModelParams& params, Spectral& spectral) {
  Evaluation ev = evaluate(u, params, spectral, true);
  for (std::size_t i = 0; i < u.size(); ++i) ev.residual[i] += mu * u[i];
  return std::move(ev.residual);
}

void to_json(nlohmann::json& j, const Components& comp) {
  j = nlohmann::json{{"mass_sq", comp.mass_sq},
                     {"grad_sq", comp.grad_sq},
                     {"b_pair", comp.b_pair},
                     {"lp_pow", comp.lp_pow}};
}

void to_json(nlohmann::json& j, const EnergyBreakdown& e) {
  j = nlohmann::json{{"kinetic", e.kinetic}, {"b_pair", e.b_pair},   {"attractive", e.attractive},
                     {"total", e.total},     {"p_value", e.p_value}, {"mu_est", e.mu_est}};
}

}  // namespace dgpe
