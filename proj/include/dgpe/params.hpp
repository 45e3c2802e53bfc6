#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace dgpe {

/// Problem instance: couplings of the contact, dipolar and p-power terms,
/// the exponent p and the mass c (square root of the L2 mass).
struct ModelParams {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = -1.0;
  double p = 3.0;
  double c = 1.0;
};

/// True when (lambda1, lambda2) lies in the unstable coupling region
/// lambda1 < (4pi/3) lambda2 <= 0  or  lambda1 < -(8pi/3) lambda2 <= 0.
bool in_unstable_region(double lambda1, double lambda2);

/// Contact plus dipolar couplings vanish: B(u) == 0 identically.
bool is_scalar_reference(const ModelParams& params);

/// Exponent delta_p = 3(p-2)/(2p) of the Gagliardo-Nirenberg inequality.
double gn_exponent(double p);

/// Largest |lambda1 + lambda2 * khat(xi)| over all frequencies.
double pairing_bound_constant(double lambda1, double lambda2);

/// Closed-form constants and radii of the energy landscape on the mass
/// sphere. Infinite entries are used when the pairing B vanishes.
struct WellGeometry {
  double delta_p = 0.0;
  double Lambda = 0.0;
  double C_p = 0.0;
  double C_4 = 0.0;
  double c_star = 0.0;
  double c_upper = 0.0;
  double t_cstar = 0.0;
  double t_c = 0.0;
  double t_bar_c = 0.0;
  double R0 = 0.0;
  double R1 = 0.0;
  // Logarithms of bar-t_c and R0, finite even where those underflow near p = 10/3.
  double log_t_bar_c = 0.0;
  double log_R0 = 0.0;
  double kappa = 0.0;
  double beta_c = 0.0;
  double gamma_c = 0.0;
  bool ordering_holds = false;
};

struct RegimeReport {
  bool pass = true;
  std::vector<std::string> reasons;
};

/// Computes every derived constant. Throws std::invalid_argument when p is
/// outside (2, 10/3) (or within 1e-6 of 10/3), lambda3 >= 0, c <= 0 or the
/// GN constants are not positive. R0/R1 are NaN when c exceeds c_star.
WellGeometry derive_geometry(const ModelParams& params, double C_p, double C_4);

/// Same, with C_p and C_4 taken from the cached W_p oracle.
WellGeometry derive_geometry(const ModelParams& params);

RegimeReport validate_regime(const ModelParams& params, double C_p, double C_4);
RegimeReport validate_regime(const ModelParams& params);

/// Scalar lower envelope h_c(t) of E on S_c as a function of ||grad u||_2.
double h_c(double t, const ModelParams& params, const WellGeometry& geometry);

/// Derivative of h_c.
double h_c_prime(double t, const ModelParams& params, const WellGeometry& geometry);

/// Zeros R0 <= R1 of h_c. Throws std::domain_error when c > c_star.
std::pair<double, double> well_radii(const ModelParams& params, const WellGeometry& geometry);

/// Ordering chain 0 < bar-t_c < R0 < (c/c*) t_{c*} < t_{c*} < t_c < R1,
/// each link checked up to the relative root tolerance rel_tol.
bool ordering_chain_holds(const ModelParams& params, const WellGeometry& geometry,
                          double rel_tol = 1e-10);

struct AuxStructureReport {
  int critical_points = 0;
  double local_min_location = 0.0;
  double global_max_location = 0.0;
  // max phi_c over t against the attractive coefficient: positive region exists
  bool positive_region = false;
  // max psi_c over t against its threshold: two critical points expected
  bool two_critical_expected = false;
  bool ok = false;
};

/// Sampled self-test of the shape of h_c: counts sign changes of h_c' on a
/// logarithmic scan and compares with the analytic phi_c / psi_c criteria.
AuxStructureReport aux_structure_check(const ModelParams& params, const WellGeometry& geometry);

void to_json(nlohmann::json& j, const ModelParams& params);
void from_json(const nlohmann::json& j, ModelParams& params);
void to_json(nlohmann::json& j, const WellGeometry& geometry);
void to_json(nlohmann::json& j, const RegimeReport& report);

}  // namespace dgpe
