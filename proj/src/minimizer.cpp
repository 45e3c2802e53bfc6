#include "dgpe/minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dgpe/reference_state.hpp"

namespace dgpe {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct State {
  Field field;
  Components comp;
  Field residual;  // r(u, 0)
  double energy = 0.0;
  double mu = 0.0;
};

State make_state(Field u, const ModelParams& params, Spectral& spectral) {
  Evaluation ev = evaluate(u, params, spectral, true);
  State s;
  s.field = std::move(u);
  s.comp = ev.comp;
  s.residual = std::move(ev.residual);
  s.energy = energy_value(s.comp, params);
  s.mu = multiplier_value(s.comp, params);
  return s;
}

double residual_scale(const Components& comp, double mu) {
  return std::sqrt(comp.mass_sq) * (std::abs(mu) + 0.5 * comp.grad_sq / comp.mass_sq);
}

// Tangent gradient g = r(u, mu) with mu the multiplier estimate.
Field tangent_gradient(const State& s) {
  Field g = s.residual;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += s.mu * s.field[i];
  return g;
}

double roundoff_guard(const Components& comp, const ModelParams& params) {
  const double scale = 0.5 * comp.grad_sq + 0.5 * std::abs(comp.b_pair) +
                       2.0 * std::abs(params.lambda3) / params.p * comp.lp_pow;
  return 64.0 * kEps * scale;
}

// P^{-1} g with P = sigma + |xi|^2 / 2, then projected onto the tangent space.
Field preconditioned_direction(const State& s, const Field& g, Spectral& spectral) {
  const double sigma = std::max(s.mu, 0.5 * s.comp.grad_sq / s.comp.mass_sq);
  Field d(g.grid);
  d.real = g.real;
  spectral.forward(g.values.data(), d.values.data());
  const auto& xi2 = spectral.xi2();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] /= sigma + 0.5 * xi2[i];
  spectral.inverse(d.values);
  if (d.real) {
    for (auto& v : d.values) v = v.real();
  }
  const cplx proj = inner(s.field, d) / s.comp.mass_sq;
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= proj.real() * s.field[i];
  return d;
}

struct StepResult {
  State state;
  double step = 0.0;
  int backtracks = 0;
};

StepResult line_search(const State& s, double step, const ModelParams& params, Spectral& spectral,
                       const SolverConfig& config, double well_cap) {
  const Field g = tangent_gradient(s);
  const Field d = preconditioned_direction(s, g, spectral);
  const double slope = 2.0 * inner(g, d).real();
  const double guard = roundoff_guard(s.comp, params);
  const double g_norm = mass_norm(g);
  const double c = std::sqrt(s.comp.mass_sq);
  for (int bt = 0; bt <= config.max_backtrack; ++bt) {
    Field trial(s.field.grid);
    trial.real = s.field.real;
    for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = s.field[i] - step * d[i];
    trial = project_mass(trial, c);
    State t = make_state(std::move(trial), params, spectral);
    if (std::sqrt(t.comp.grad_sq) >= well_cap) {
      throw SolverError(SolverErrorKind::WellEscape,
                        "gradient norm reached the well cap " + std::to_string(well_cap));
    }
    if (t.energy <= s.energy - config.armijo * step * slope) {
      return {std::move(t), step, bt};
    }
    // Once the energy is flat to roundoff, only a smaller residual counts as progress.
    if (t.energy <= s.energy + guard && mass_norm(tangent_gradient(t)) < g_norm) {
      return {std::move(t), step, bt};
    }
    step *= config.backtrack;
  }
  throw SolverError(SolverErrorKind::StepUnderflow, "energy backtracking exhausted");
}

double min_real_relative(const Field& u) {
  std::size_t peak = 0;
  for (std::size_t i = 1; i < u.size(); ++i) {
    if (std::abs(u[i]) > std::abs(u[peak])) peak = i;
  }
  const double amp = std::abs(u[peak]);
  if (amp == 0.0) return 0.0;
  const cplx phase = std::conj(u[peak]) / amp;
  double lowest = std::numeric_limits<double>::infinity();
  for (const cplx& z : u.values) lowest = std::min(lowest, (phase * z).real());
  return lowest / amp;
}

}  // namespace

std::string to_string(SolverErrorKind kind) {
  switch (kind) {
    case SolverErrorKind::Regime: return "regime";
    case SolverErrorKind::ZeroField: return "zero_field";
    case SolverErrorKind::WellEscape: return "well_escape";
    case SolverErrorKind::SupportOverflow: return "support_overflow";
    case SolverErrorKind::StepUnderflow: return "step_underflow";
  }
  return "unknown";
}

Field project_mass(const Field& u, double c) {
  const double m = mass_norm(u);
  if (m == 0.0) throw SolverError(SolverErrorKind::ZeroField, "cannot normalize the zero field");
  Field out = u;
  const double s = c / m;
  for (auto& v : out.values) v *= s;
  return out;
}

double central_mass_fraction(const Field& u) {
  const Grid3& g = u.grid;
  std::vector<double> inside(u.size(), 0.0);
  std::vector<double> total(u.size());
  for (int i = 0; i < g.n[0]; ++i) {
    const bool in0 = std::abs(g.coord(0, i)) < 0.25 * g.box[0];
    for (int j = 0; j < g.n[1]; ++j) {
      const bool in1 = std::abs(g.coord(1, j)) < 0.25 * g.box[1];
      for (int k = 0; k < g.n[2]; ++k) {
        const bool in2 = std::abs(g.coord(2, k)) < 0.25 * g.box[2];
        const std::size_t idx = g.index(i, j, k);
        total[idx] = std::norm(u[idx]);
        if (in0 && in1 && in2) inside[idx] = total[idx];
      }
    }
  }
  const double t = pairwise_sum(total);
  return t > 0.0 ? pairwise_sum(inside) / t : 0.0;
}

double suggested_box(const ModelParams& params, const WellGeometry& geometry, double half_width) {
  const double b = std::sqrt(2.0 * geometry.delta_p * geometry.gamma_c);
  const double decay = std::sqrt(1.0 / gn_exponent(params.p) - 1.0);
  return 2.0 * half_width / (b * decay);
}

Field initial_vc(const ModelParams& params, const WellGeometry& geometry, const Grid3& grid) {
  const ReferenceState ref = v_c_profile(params, geometry);
  Field u = sample(
      grid, [&](double x, double y, double z) { return cplx(ref.value(std::sqrt(x * x + y * y + z * z))); },
      true);
  return project_mass(u, params.c);
}

Field initial_random(const Grid3& grid, double c, std::uint64_t seed, double width) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Field noise(grid);
  for (auto& v : noise.values) v = normal(rng);
  // Band-limit to the lowest quarter of the frequencies.
  Spectral spectral(grid);
  spectral.forward(noise.values);
  double kmax = 0.0;
  for (int a = 0; a < 3; ++a) kmax = std::max(kmax, std::abs(grid.frequency(a, grid.n[a] / 2)));
  const auto& xi2 = spectral.xi2();
  for (std::size_t i = 0; i < noise.size(); ++i) {
    if (xi2[i] > 0.0625 * kmax * kmax) noise[i] = 0.0;
  }
  spectral.inverse(noise.values);
  Field u = sample(grid, [&](double x, double y, double z) {
    return cplx(std::exp(-(x * x + y * y + z * z) / (2.0 * width * width)));
  });
  u.real = true;
  for (std::size_t i = 0; i < u.size(); ++i) u[i] *= 1.0 + 0.3 * noise[i].real();
  return project_mass(u, c);
}

DescentOutcome descent_step(const Field& u, double step, const ModelParams& params,
                            Spectral& spectral, const SolverConfig& config, double well_cap) {
  const State s = make_state(u, params, spectral);
  StepResult r = line_search(s, step, params, spectral, config, well_cap);
  return {std::move(r.state.field), r.step, r.backtracks};
}

GroundStateResult minimize(const ModelParams& params, const Grid3& grid, const SolverConfig& config,
                           const Field* init) {
  grid.validate();
  const WellGeometry geometry = derive_geometry(params);
  if (!is_scalar_reference(params)) {
    const RegimeReport regime = validate_regime(params, geometry.C_p, geometry.C_4);
    if (!regime.pass) {
      std::string why;
      for (const auto& r : regime.reasons) why += (why.empty() ? "" : "; ") + r;
      throw SolverError(SolverErrorKind::Regime, "instance outside the regime: " + why);
    }
  }
  const double well_cap = std::isnan(config.well_cap) ? geometry.t_cstar
                                                      : std::min(config.well_cap, geometry.t_cstar);
  const auto [R0, R1] = well_radii(params, geometry);
  (void)R1;

  Spectral spectral(grid);
  Field start;
  if (init) {
    if (!(init->grid == grid)) throw std::invalid_argument("minimize: init lives on another grid");
    start = project_mass(*init, params.c);
  } else {
    start = initial_vc(params, geometry, grid);
  }
  if (config.check_support && central_mass_fraction(start) < config.support_fraction) {
    throw SolverError(SolverErrorKind::SupportOverflow, "initial state not supported in the box");
  }

  State s = make_state(std::move(start), params, spectral);
  if (std::sqrt(s.comp.grad_sq) >= well_cap) {
    throw SolverError(SolverErrorKind::WellEscape, "initial state outside the well");
  }

  GroundStateResult result;
  result.R0 = R0;
  result.well_cap = well_cap;
  double step = config.step;
  int iter = 0;
  for (;; ++iter) {
    const Field g = tangent_gradient(s);
    const double res_rel = mass_norm(g) / residual_scale(s.comp, s.mu);
    const double p_rel =
        std::abs(pohozaev_value(s.comp, params)) / (s.comp.grad_sq + 1.0);
    IterationRecord rec{iter, s.energy, pohozaev_value(s.comp, params), s.mu,
                        std::sqrt(s.comp.grad_sq), res_rel, step};
    result.log.push_back(rec);
    if (config.on_iteration) config.on_iteration(rec);
    result.p_rel = p_rel;
    result.residual_rel = res_rel;
    if (p_rel < config.tol_p && res_rel < config.tol_grad) {
      result.converged = true;
      break;
    }
    if (iter >= config.max_iter) break;
    StepResult r = line_search(s, step, params, spectral, config, well_cap);
    step = r.backtracks == 0 ? std::min(config.max_step, r.step * config.growth) : r.step;
    s = std::move(r.state);
  }

  result.support_fraction = central_mass_fraction(s.field);
  if (config.check_support && result.support_fraction < config.support_fraction) {
    throw SolverError(SolverErrorKind::SupportOverflow,
                      "mass leaked toward the box boundary (central fraction " +
                          std::to_string(result.support_fraction) + ")");
  }
  result.iterations = iter;
  result.comp = s.comp;
  result.breakdown = breakdown(s.comp, params);
  result.mu = s.mu;
  result.grad_l2 = std::sqrt(s.comp.grad_sq);
  result.well_ok = result.grad_l2 < R0;
  result.min_real_rel = min_real_relative(s.field);
  result.field = std::move(s.field);
  return result;
}

GroundStateBounds ground_state_bounds(const ModelParams& params, const WellGeometry& g) {
  const double p = params.p;
  const double pd = p * g.delta_p;
  const double q = 2.0 - pd;
  const double c = params.c;
  const double level = std::pow(c, (6.0 - p) / q);
  const double mu_scale = std::pow(c, 2.0 * (p - 2.0) / q);
  const double upper_base = std::pow(
      4.0 * (3.0 - pd) * std::abs(params.lambda3) * std::pow(g.C_p, p) / p, 2.0 / q);
  GroundStateBounds b;
  b.energy_upper = -g.kappa * level;
  b.mu_lower = g.kappa * mu_scale;
  b.mu_upper = (1.0 - g.delta_p) / (2.0 * g.delta_p) * upper_base * mu_scale;
  b.grad_sq_lower = 2.0 * pd / q * g.kappa * level;
  b.grad_sq_upper = upper_base * level;
  return b;
}

ClaimsReport verify_claims(const GroundStateResult& result, const WellGeometry& geometry,
                           const ModelParams& params, const ClaimTolerances& tol) {
  ClaimsReport report;
  report.scalar_mode = is_scalar_reference(params);
  const GroundStateBounds b = ground_state_bounds(params, geometry);
  const double inf = std::numeric_limits<double>::infinity();
  auto add = [&](std::string name, double observed, double lower, double upper, bool pass) {
    report.checks.push_back({std::move(name), observed, lower, upper, pass});
  };
  auto around = [](double target, double rel) {
    const double w = std::abs(target) * rel;
    return std::pair{target - w, target + w};
  };

  add("converged", result.converged ? 1.0 : 0.0, 1.0, 1.0, result.converged);
  const double mass = std::sqrt(result.comp.mass_sq);
  {
    const auto [lo, hi] = around(params.c, tol.mass);
    add("mass", mass, lo, hi, mass >= lo && mass <= hi);
  }
  const double e = result.breakdown.total;
  const double gsq = result.comp.grad_sq;
  if (report.scalar_mode) {
    const auto [elo, ehi] = around(b.energy_upper, tol.scalar);
    add("energy_equals_m0", e, elo, ehi, e >= elo && e <= ehi);
    const auto [mlo, mhi] = around(geometry.beta_c, tol.scalar);
    add("mu_equals_beta_c", result.mu, mlo, mhi, result.mu >= mlo && result.mu <= mhi);
    const auto [glo, ghi] = around(b.grad_sq_lower, tol.scalar);
    add("grad_sq_equals_window_floor", gsq, glo, ghi, gsq >= glo && gsq <= ghi);
  } else {
    add("energy_below_m0_bound", e, -inf, b.energy_upper, e < b.energy_upper);
    add("grad_sq_window", gsq, b.grad_sq_lower, b.grad_sq_upper,
        gsq > b.grad_sq_lower && gsq < b.grad_sq_upper);
  }
  add("mu_interval", result.mu, b.mu_lower, b.mu_upper,
      result.mu > b.mu_lower && result.mu < b.mu_upper);
  add("pohozaev", result.p_rel, 0.0, tol.pohozaev, result.p_rel < tol.pohozaev);
  add("positivity", result.min_real_rel, -tol.positivity, 1.0,
      result.min_real_rel > -tol.positivity);
  add("inside_well", result.grad_l2, 0.0, result.R0, result.grad_l2 < result.R0);
  add("negative_level", e, -inf, 0.0, e < 0.0);

  report.all_pass = std::all_of(report.checks.begin(), report.checks.end(),
                                [](const ClaimCheck& c) { return c.pass; });
  return report;
}

void to_json(nlohmann::json& j, const IterationRecord& r) {
  j = nlohmann::json{{"iteration", r.iteration}, {"energy", r.energy},     {"pohozaev", r.pohozaev},
                     {"mu", r.mu},               {"grad_norm", r.grad_norm}, {"residual", r.residual},
                     {"step", r.step}};
}

void to_json(nlohmann::json& j, const GroundStateResult& r) {
  j = nlohmann::json{{"grid", r.field.grid},
                     {"components", r.comp},
                     {"breakdown", r.breakdown},
                     {"mu", r.mu},
                     {"grad_l2", r.grad_l2},
                     {"p_rel", r.p_rel},
                     {"residual_rel", r.residual_rel},
                     {"min_real_rel", r.min_real_rel},
                     {"support_fraction", r.support_fraction},
                     {"iterations", r.iterations},
                     {"converged", r.converged},
                     {"well_ok", r.well_ok},
                     {"R0", r.R0},
                     {"well_cap", r.well_cap}};
}

void to_json(nlohmann::json& j, const ClaimCheck& c) {
  j = nlohmann::json{{"name", c.name}, {"observed", c.observed}, {"lower", c.lower},
                     {"upper", c.upper}, {"pass", c.pass}};
}

void to_json(nlohmann::json& j, const ClaimsReport& r) {
  j = nlohmann::json{{"checks", r.checks}, {"all_pass", r.all_pass}, {"scalar_mode", r.scalar_mode}};
}

void to_json(nlohmann::json& j, const SolverConfig& c) {
  j = nlohmann::json{{"step", c.step},         {"max_step", c.max_step},
                     {"growth", c.growth},     {"backtrack", c.backtrack},
                     {"max_backtrack", c.max_backtrack}, {"armijo", c.armijo},
                     {"tol_grad", c.tol_grad}, {"tol_p", c.tol_p},
                     {"max_iter", c.max_iter}, {"support_fraction", c.support_fraction},
                     {"check_support", c.check_support}};
  if (std::isnan(c.well_cap)) {
    j["well_cap"] = nullptr;
  } else {
    j["well_cap"] = c.well_cap;
  }
}

void from_json(const nlohmann::json& j, SolverConfig& c) {
  c.step = j.value("step", c.step);
  c.max_step = j.value("max_step", c.max_step);
  c.growth = j.value("growth", c.growth);
  c.backtrack = j.value("backtrack", c.backtrack);
  c.max_backtrack = j.value("max_backtrack", c.max_backtrack);
  c.armijo = j.value("armijo", c.armijo);
  c.tol_grad = j.value("tol_grad", c.tol_grad);
  c.tol_p = j.value("tol_p", c.tol_p);
  c.max_iter = j.value("max_iter", c.max_iter);
  c.support_fraction = j.value("support_fraction", c.support_fraction);
  c.check_support = j.value("check_support", c.check_support);
  if (j.contains("well_cap") && !j.at("well_cap").is_null()) c.well_cap = j.at("well_cap").get<double>();
}

}  // namespace dgpe
