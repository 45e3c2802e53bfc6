#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "dgpe/params.hpp"
#include "dgpe/spectral.hpp"

namespace dgpe {

/// Distance from psi to the orbit {e^{i theta} u(. - y)} in the H^1 norm
/// with Fourier weight (1 + |xi|^2). The lattice translation is found by
/// cross-correlation and refined continuously; theta is optimal in closed form.
struct OrbitDistance {
  double distance = 0.0;
  std::array<double, 3> shift{};
  double phase = 0.0;
};
OrbitDistance orbit_distance(const Field& psi, const Field& u, Spectral& spectral);

struct EvolutionOptions {
  int sample_every = 10;  // steps between diagnostics
  // Abort once ||grad psi|| exceeds this value.
  double blowup_cap = std::numeric_limits<double>::infinity();
  const Field* reference = nullptr;  // orbit distance and overlap target
  std::function<void(double t, const Field&)> on_sample;
};

struct EvolutionStats {
  std::vector<double> times;
  std::vector<double> mass;
  std::vector<double> energy;
  std::vector<double> h1_dist_track;
  std::vector<double> overlap_track;  // |<psi, u>| / c^2
  double mass_drift = 0.0;
  double energy_drift = 0.0;
  double max_h1_dist = 0.0;
  int steps = 0;
  bool blew_up = false;
  std::string diagnostic;
  Field final_state;
};

/// Strang splitting for i psi_t = -1/2 Lap psi + lambda1 |psi|^2 psi
///   + lambda2 (K * |psi|^2) psi + lambda3 |psi|^{p-2} psi:
/// half step of the nonlinear phase (density frozen, exact), full kinetic
/// step exp(-i |xi|^2 dt / 2), half nonlinear step.
EvolutionStats splitstep_evolve(const Field& psi0, double T, double dt, const ModelParams& params,
                                const EvolutionOptions& options = {});

/// Seeded band-limited complex perturbation, localized by a Gaussian of the
/// given width, with H^1 norm exactly h1_size.
Field random_perturbation(const Grid3& grid, double h1_size, double width, std::uint64_t seed);

struct StabilityTrial {
  double eps = 0.0;
  double delta = 0.0;
  double initial_distance = 0.0;
  double max_excursion = 0.0;
  bool blew_up = false;
  bool pass = false;
};

struct StabilityReport {
  std::vector<StabilityTrial> trials;
  bool all_pass = false;
};

/// For each eps, random H^1 perturbations of size delta = eps / 4 (mass
/// projected back to c) are evolved over [0, T]; a trial passes when the
/// orbit distance stays below eps.
StabilityReport stability_probe(const Field& u_c, const std::vector<double>& eps_list, double T,
                                double dt, const ModelParams& params, int trials,
                                std::uint64_t seed = 1, int sample_every = 10,
                                double blowup_cap = std::numeric_limits<double>::infinity());

void to_json(nlohmann::json& j, const EvolutionStats& s);
void to_json(nlohmann::json& j, const StabilityTrial& t);
void to_json(nlohmann::json& j, const StabilityReport& r);

}  // namespace dgpe
