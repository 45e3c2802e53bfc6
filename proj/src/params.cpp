#include "dgpe/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "dgpe/wp_oracle.hpp"

namespace dgpe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = std::numbers::pi;

// Exponents within this distance of 10/3 make 1/(2 - p delta_p) blow up.
constexpr double kCriticalGap = 1e-6;

double attractive_coefficient(const ModelParams& params, const WellGeometry& g) {
  const double delta = g.delta_p;
  return 2.0 * std::abs(params.lambda3) * std::pow(g.C_p, params.p) *
         std::pow(params.c, params.p * (1.0 - delta)) / params.p;
}

double cubic_coefficient(const ModelParams& params, const WellGeometry& g) {
  return 0.5 * g.Lambda * std::pow(g.C_4, 4) * params.c;
}

// Logarithms of the zeros R0 <= R1 of h_c.
std::pair<double, double> log_well_radii(const ModelParams& params, const WellGeometry& g) {
  const double c = params.c;
  auto h = [&](double t) { return h_c(t, params, g); };

  if (!std::isfinite(g.c_star)) {
    // No cubic term: h_c reduces to g_c, whose only positive zero is bar-t_c.
    return {g.log_t_bar_c, kInf};
  }
  if (c > g.c_star * (1.0 + 1e-12)) {
    throw std::domain_error("well_radii: mass above c_star, h_c has no positive region");
  }
  if (c >= g.c_star * (1.0 - 4.0 * std::numeric_limits<double>::epsilon())) {
    return {std::log(g.t_cstar), std::log(g.t_cstar)};
  }
  if (!(h(g.t_c) > 0.0)) {
    // Below resolution of the double root at the maximum.
    return {std::log(g.t_c), std::log(g.t_c)};
  }

  // h_c / t^{p delta} as a function of s = log t; R0 can sit far below the
  // range where t^2 is representable.
  const double pd = params.p * g.delta_p;
  const double a = attractive_coefficient(params, g);
  const double cubic = cubic_coefficient(params, g);
  auto scaled = [&](double s) { return 0.5 * std::exp((2.0 - pd) * s) - a - cubic * std::exp((3.0 - pd) * s); };
  auto root = [&](double lo, double hi) {
    const bool rising = scaled(lo) < 0.0;
    for (int it = 0; it < 400; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if ((scaled(mid) < 0.0) == rising) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };

  const double r0 = root(g.log_t_bar_c - 1.0, std::log(g.t_c));

  double upper = 2.0 * g.t_c;
  while (h(upper) >= 0.0) upper *= 2.0;
  const double r1 = root(std::log(g.t_c), std::log(upper));
  return {r0, r1};
}

}  // namespace

bool in_unstable_region(double lambda1, double lambda2) {
  const double a = 4.0 * kPi / 3.0 * lambda2;
  const double b = -8.0 * kPi / 3.0 * lambda2;
  return (lambda1 < a && a <= 0.0) || (lambda1 < b && b <= 0.0);
}

bool is_scalar_reference(const ModelParams& params) {
  return params.lambda1 == 0.0 && params.lambda2 == 0.0;
}

double gn_exponent(double p) { return 3.0 * (p - 2.0) / (2.0 * p); }

double pairing_bound_constant(double lambda1, double lambda2) {
  return std::max(std::abs(lambda1 - 4.0 * kPi / 3.0 * lambda2),
                  std::abs(lambda1 + 8.0 * kPi / 3.0 * lambda2));
}

WellGeometry derive_geometry(const ModelParams& params, double C_p, double C_4) {
  const double p = params.p;
  if (!(p > 2.0 && p < 10.0 / 3.0 - kCriticalGap)) {
    throw std::invalid_argument("derive_geometry: p must lie in (2, 10/3)");
  }
  if (!(params.lambda3 < 0.0)) {
    throw std::invalid_argument("derive_geometry: lambda3 must be negative");
  }
  if (!(params.c > 0.0)) {
    throw std::invalid_argument("derive_geometry: mass must be positive");
  }
  if (!(C_p > 0.0) || !(C_4 > 0.0)) {
    throw std::invalid_argument("derive_geometry: GN constants must be positive");
  }

  WellGeometry g;
  g.C_p = C_p;
  g.C_4 = C_4;
  g.delta_p = gn_exponent(p);
  g.Lambda = pairing_bound_constant(params.lambda1, params.lambda2);

  const double pd = p * g.delta_p;
  const double q = 2.0 - pd;
  const double l3 = std::abs(params.lambda3);
  const double cpp = std::pow(C_p, p);
  const double lc4 = g.Lambda * std::pow(C_4, 4);
  const double c = params.c;

  if (lc4 > 0.0) {
    const double base = q / ((3.0 - pd) * lc4);
    g.c_star = std::pow(p / (4.0 * (3.0 - pd) * l3 * cpp) * std::pow(base, q),
                        1.0 / (2.0 * (4.0 - p)));
    g.t_cstar = base / g.c_star;
    g.t_c = base / c;
    const double base_hat = 2.0 * q / (3.0 * (3.0 - pd) * lc4);
    g.c_upper = std::pow(std::pow(base_hat, q) / (2.0 * l3 * g.delta_p * (3.0 - pd) * cpp),
                         1.0 / (2.0 * (4.0 - p)));
  } else {
    g.c_star = kInf;
    g.t_cstar = kInf;
    g.t_c = kInf;
    g.c_upper = kInf;
  }

  g.log_t_bar_c = (std::log(4.0 * l3 * cpp / p) + p * (1.0 - g.delta_p) * std::log(c)) / q;
  g.t_bar_c = std::exp(g.log_t_bar_c);
  g.kappa = (10.0 - 3.0 * p) / (6.0 * (p - 2.0)) * std::pow(2.0 * g.delta_p * cpp * l3, 2.0 / q);
  g.gamma_c = std::pow(2.0 * g.delta_p, pd / q) * std::pow(cpp * l3, 2.0 / q) *
              std::pow(c, 2.0 * (p - 2.0) / q);
  g.beta_c = (1.0 - g.delta_p) * g.gamma_c;

  if (c <= g.c_star) {
    const auto [r0, r1] = log_well_radii(params, g);
    g.log_R0 = r0;
    g.R0 = std::exp(r0);
    g.R1 = std::exp(r1);
  } else {
    g.log_R0 = kNaN;
    g.R0 = kNaN;
    g.R1 = kNaN;
  }
  g.ordering_holds = ordering_chain_holds(params, g);
  return g;
}

WellGeometry derive_geometry(const ModelParams& params) {
  if (!(params.p > 2.0 && params.p < 10.0 / 3.0 - kCriticalGap)) {
    throw std::invalid_argument("derive_geometry: p must lie in (2, 10/3)");
  }
  return derive_geometry(params, gn_constant_cached(params.p), gn_constant_cached(4.0));
}

RegimeReport validate_regime(const ModelParams& params, double C_p, double C_4) {
  RegimeReport report;
  auto fail = [&](std::string reason) {
    report.pass = false;
    report.reasons.push_back(std::move(reason));
  };
  if (!(params.lambda3 < 0.0)) fail("lambda3 must be negative");
  if (!(params.p > 2.0 && params.p < 10.0 / 3.0 - kCriticalGap)) fail("p outside (2, 10/3)");
  if (!(params.c > 0.0)) fail("mass must be positive");
  if (!in_unstable_region(params.lambda1, params.lambda2)) fail("(lambda1, lambda2) outside D0");
  if (report.pass) {
    const WellGeometry g = derive_geometry(params, C_p, C_4);
    if (params.c > g.c_star) fail("mass above threshold c_star");
  }
  return report;
}

RegimeReport validate_regime(const ModelParams& params) {
  const bool p_ok = params.p > 2.0 && params.p < 10.0 / 3.0 - kCriticalGap;
  const double C_p = p_ok ? gn_constant_cached(params.p) : 1.0;
  return validate_regime(params, C_p, gn_constant_cached(4.0));
}

double h_c(double t, const ModelParams& params, const WellGeometry& g) {
  if (t <= 0.0) return 0.0;
  const double pd = params.p * g.delta_p;
  double value = 0.5 * t * t - attractive_coefficient(params, g) * std::pow(t, pd);
  const double cubic = cubic_coefficient(params, g);
  if (cubic > 0.0) value -= cubic * t * t * t;
  return value;
}

double h_c_prime(double t, const ModelParams& params, const WellGeometry& g) {
  if (t <= 0.0) return -kInf;
  const double pd = params.p * g.delta_p;
  double value = t - pd * attractive_coefficient(params, g) * std::pow(t, pd - 1.0);
  const double cubic = cubic_coefficient(params, g);
  if (cubic > 0.0) value -= 3.0 * cubic * t * t;
  return value;
}

std::pair<double, double> well_radii(const ModelParams& params, const WellGeometry& g) {
  const auto [r0, r1] = log_well_radii(params, g);
  return {std::exp(r0), std::exp(r1)};
}

bool ordering_chain_holds(const ModelParams& params, const WellGeometry& g, double rel_tol) {
  if (!std::isfinite(g.c_star) || !std::isfinite(g.log_R0) || !std::isfinite(g.R1)) return false;
  // Ties within the root tolerance pass.
  auto less = [&](double a, double b) { return a < b + rel_tol * std::abs(b); };
  // The lowest links are compared through logarithms, which stay finite when
  // bar-t_c and R0 underflow.
  auto log_less = [&](double a, double b) {
    return a < b + std::max(rel_tol, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(b));
  };
  const bool low = std::isfinite(g.log_t_bar_c) && log_less(g.log_t_bar_c, g.log_R0);
  if (params.c < g.c_star) {
    const double scaled = params.c / g.c_star * g.t_cstar;
    return low && log_less(g.log_R0, std::log(scaled)) && less(scaled, g.t_cstar) &&
           less(g.t_cstar, g.t_c) && less(g.t_c, g.R1);
  }
  return low &&
         std::abs(g.R0 - g.t_cstar) <= rel_tol * g.t_cstar &&
         std::abs(g.R1 - g.t_cstar) <= rel_tol * g.t_cstar;
}

AuxStructureReport aux_structure_check(const ModelParams& params, const WellGeometry& g) {
  AuxStructureReport report;
  const double p = params.p;
  const double pd = p * g.delta_p;
  const double lc4 = g.Lambda * std::pow(g.C_4, 4);
  const double c = params.c;
  const double cpp = std::pow(g.C_p, p);
  const double l3 = std::abs(params.lambda3);
  const double c_pow = std::pow(c, p * (1.0 - g.delta_p));

  if (lc4 > 0.0) {
    const double t_hat = 2.0 * (2.0 - pd) / (3.0 * (3.0 - pd) * lc4 * c);
    const double psi_max = std::pow(t_hat, 2.0 - pd) / (3.0 - pd);
    report.two_critical_expected = psi_max > 2.0 * l3 * g.delta_p * cpp * c_pow;
    const double phi_max = std::pow(g.t_c, 2.0 - pd) / (2.0 * (3.0 - pd));
    report.positive_region = phi_max > 2.0 * l3 * cpp * c_pow / p;
  }

  // Logarithmic scan around the natural scales of both competing terms.
  const double t_lo = 1e-4 * g.t_bar_c;
  const double t_hi = std::isfinite(g.t_c) ? 1e3 * g.t_c : 1e4 * g.t_bar_c;
  constexpr int kSamples = 20000;
  const double ratio = std::log(t_hi / t_lo) / (kSamples - 1);
  double prev_t = t_lo;
  double prev = h_c_prime(t_lo, params, g);
  std::vector<double> roots;
  std::vector<int> kinds;  // +1: derivative goes - to + (min), -1: + to - (max)
  for (int i = 1; i < kSamples; ++i) {
    const double t = t_lo * std::exp(ratio * i);
    const double d = h_c_prime(t, params, g);
    if ((d > 0.0) != (prev > 0.0)) {
      roots.push_back(std::sqrt(prev_t * t));
      kinds.push_back(d > 0.0 ? 1 : -1);
    }
    prev = d;
    prev_t = t;
  }
  report.critical_points = static_cast<int>(roots.size());
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (kinds[i] > 0 && report.local_min_location == 0.0) report.local_min_location = roots[i];
    if (kinds[i] < 0) report.global_max_location = roots[i];
  }
  report.ok = report.critical_points == 2 && report.two_critical_expected &&
              report.local_min_location < report.global_max_location;
  return report;
}

void to_json(nlohmann::json& j, const ModelParams& params) {
  j = nlohmann::json{{"lambda1", params.lambda1},
                     {"lambda2", params.lambda2},
                     {"lambda3", params.lambda3},
                     {"p", params.p},
                     {"c", params.c}};
}

void from_json(const nlohmann::json& j, ModelParams& params) {
  params.lambda1 = j.value("lambda1", params.lambda1);
  params.lambda2 = j.value("lambda2", params.lambda2);
  params.lambda3 = j.value("lambda3", params.lambda3);
  params.p = j.value("p", params.p);
  params.c = j.value("c", params.c);
}

void to_json(nlohmann::json& j, const WellGeometry& g) {
  j = nlohmann::json{{"delta_p", g.delta_p},   {"Lambda", g.Lambda},   {"C_p", g.C_p},
                     {"C_4", g.C_4},           {"c_star", g.c_star},   {"c_upper", g.c_upper},
                     {"t_cstar", g.t_cstar},   {"t_c", g.t_c},         {"t_bar_c", g.t_bar_c},
                     {"R0", g.R0},             {"R1", g.R1},           {"log_t_bar_c", g.log_t_bar_c},
                     {"log_R0", g.log_R0},     {"kappa", g.kappa},
                     {"beta_c", g.beta_c},     {"gamma_c", g.gamma_c},
                     {"ordering_holds", g.ordering_holds}};
}

void to_json(nlohmann::json& j, const RegimeReport& report) {
  j = nlohmann::json{{"pass", report.pass}, {"reasons", report.reasons}};
}

}  // namespace dgpe
