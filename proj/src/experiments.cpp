#include "dgpe/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "dgpe/functional.hpp"
#include "dgpe/wp_oracle.hpp"

namespace dgpe {

double RescaledFrame::lp_factor() const { return std::pow(a, physical.p) / (b * b * b); }

RescaledFrame rescaled_frame(const ModelParams& params, const WellGeometry& g) {
  const double p = params.p;
  RescaledFrame f;
  f.physical = params;
  f.a = std::pow(2.0 * g.gamma_c / (p * std::abs(params.lambda3)), 1.0 / (p - 2.0));
  f.b = std::sqrt(2.0 * g.delta_p * g.gamma_c);
  const double k = f.a * f.a / (f.b * f.b);
  f.scaled = params;
  f.scaled.lambda1 = params.lambda1 * k;
  f.scaled.lambda2 = params.lambda2 * k;
  f.scaled.lambda3 = params.lambda3 * std::pow(f.a, p - 2.0) / (f.b * f.b);
  f.scaled.c = params.c * std::pow(f.b, 1.5) / f.a;
  return f;
}

double rescaled_coupling_factor(const ModelParams& params, const WellGeometry& g) {
  const RescaledFrame f = rescaled_frame(params, g);
  return f.a * f.a / (f.b * f.b);
}

RescaledSolve solve_rescaled(const ModelParams& params, int n, double box_v,
                             const SolverConfig& config) {
  const WellGeometry g = derive_geometry(params);
  if (!is_scalar_reference(params)) {
    const RegimeReport regime = validate_regime(params, g.C_p, g.C_4);
    if (!regime.pass) {
      throw SolverError(SolverErrorKind::Regime, "instance outside the regime");
    }
  }
  RescaledSolve out;
  out.frame = rescaled_frame(params, g);
  const Grid3 grid = Grid3::cube(n, box_v);
  out.result = minimize(out.frame.scaled, grid, config);
  return out;
}

Field sample_wp(double p, const Grid3& grid) {
  const auto profile = wp_profile_cached(p);
  return sample(
      grid,
      [&](double x, double y, double z) { return cplx(profile->value(std::sqrt(x * x + y * y + z * z))); },
      true);
}

RecenterResult recenter(const Field& u) {
  const Grid3& g = u.grid;
  std::size_t peak = 0;
  double lo = std::norm(u[0]);
  for (std::size_t i = 1; i < u.size(); ++i) {
    const double d = std::norm(u[i]);
    if (d > std::norm(u[peak])) peak = i;
    lo = std::min(lo, d);
  }
  const double hi = std::norm(u[peak]);
  if (!(hi - lo > 1e-12 * hi)) throw std::runtime_error("recenter: density has no dominant peak");

  const int pk = static_cast<int>(peak % g.n[2]);
  const int pj = static_cast<int>((peak / g.n[2]) % g.n[1]);
  const int pi = static_cast<int>(peak / (static_cast<std::size_t>(g.n[1]) * g.n[2]));
  RecenterResult r;
  r.index_shift = {g.n[0] / 2 - pi, g.n[1] / 2 - pj, g.n[2] / 2 - pk};
  for (int a = 0; a < 3; ++a) r.shift[a] = r.index_shift[a] * g.spacing(a);
  r.field = Field(g);
  r.field.real = u.real;
  auto wrap = [](int v, int n) { return ((v % n) + n) % n; };
  for (int i = 0; i < g.n[0]; ++i) {
    const int ti = wrap(i + r.index_shift[0], g.n[0]);
    for (int j = 0; j < g.n[1]; ++j) {
      const int tj = wrap(j + r.index_shift[1], g.n[1]);
      for (int k = 0; k < g.n[2]; ++k) {
        r.field[g.index(ti, tj, wrap(k + r.index_shift[2], g.n[2]))] = u[g.index(i, j, k)];
      }
    }
  }
  return r;
}

Field rescale_to_limit(const Field& u, const ModelParams& params, const WellGeometry& geometry) {
  const RescaledFrame f = rescaled_frame(params, geometry);
  Field v = u;
  for (int a = 0; a < 3; ++a) v.grid.box[a] *= f.b;
  for (auto& z : v.values) z /= f.a;
  return recenter(v).field;
}

SweepTargets sweep_targets(const ModelParams& params, const WellGeometry& g) {
  const double p = params.p;
  const double pd = p * g.delta_p;
  const double q = 2.0 - pd;
  SweepTargets t;
  t.energy = -g.kappa;
  t.mu = p * (1.0 - g.delta_p) / q * g.kappa;
  t.b = 0.0;
  t.grad = 2.0 * pd / q * g.kappa;
  t.lp = p / (q * std::abs(params.lambda3)) * g.kappa;
  return t;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::abs(y[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

SweepRecord sweep_one(const ModelParams& base, double c, const SweepConfig& config) {
  SweepRecord rec;
  rec.c = c;
  ModelParams params = base;
  params.c = c;
  try {
    const RescaledSolve solve = solve_rescaled(params, config.n, config.box_v, config.solver);
    const RescaledFrame& f = solve.frame;
    const GroundStateResult& r = solve.result;
    const double p = params.p;
    const double q = 2.0 - p * gn_exponent(p);
    const double level = std::pow(c, (6.0 - p) / q);
    const double mu_level = std::pow(c, 2.0 * (p - 2.0) / q);
    rec.energy_ratio = f.energy_factor() * r.breakdown.total / level;
    rec.mu_ratio = f.mu_factor() * r.mu / mu_level;
    rec.b_ratio = std::abs(f.pairing_factor() * r.comp.b_pair) / level;
    rec.grad_ratio = f.grad_sq_factor() * r.comp.grad_sq / level;
    rec.lp_ratio = f.lp_factor() * r.comp.lp_pow / level;

    const Field vk = recenter(r.field).field;
    const Field w = sample_wp(p, vk.grid);
    Spectral spectral(vk.grid);
    Field diff = vk;
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= w[i];
    rec.h1_dist_to_Wp = h1_norm(diff, spectral);
    rec.h1_rel_dist = rec.h1_dist_to_Wp / h1_norm(w, spectral);
    const RadialNorms wn = radial_norms(*wp_profile_cached(p), p);
    rec.mass_identity = r.comp.mass_sq / (wn.mass * wn.mass);
    rec.converged = r.converged;
    rec.iterations = r.iterations;
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

SweepResult asymptotic_sweep(const ModelParams& base, const std::vector<double>& c_list,
                             const SweepConfig& config) {
  if (c_list.size() < 3) throw std::invalid_argument("asymptotic_sweep: need at least 3 masses");
  SweepResult out;
  out.records.resize(c_list.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < c_list.size(); i = next++) {
      out.records[i] = sweep_one(base, c_list[i], config);
    }
  };
  const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(c_list.size())));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
  }

  ModelParams first = base;
  first.c = c_list.front();
  const WellGeometry g = derive_geometry(first);
  out.targets = sweep_targets(first, g);
  const double p = base.p;
  out.b_ratio_slope_expected = 4.0 * (4.0 - p) / (10.0 - 3.0 * p);

  std::vector<double> cs, bs, es;
  out.all_converged = true;
  for (const auto& r : out.records) {
    if (!r.error.empty() || !r.converged) {
      out.all_converged = false;
      continue;
    }
    cs.push_back(r.c);
    bs.push_back(r.b_ratio);
    es.push_back(r.energy_ratio * std::pow(r.c, (6.0 - p) / (2.0 - p * gn_exponent(p))));
  }
  const bool dipolar = !is_scalar_reference(base);
  if (cs.size() >= 2) {
    out.b_ratio_slope = dipolar ? loglog_slope(cs, bs) : 0.0;
    out.energy_slope = loglog_slope(cs, es);
  }
  return out;
}

void to_json(nlohmann::json& j, const SweepRecord& r) {
  j = nlohmann::json{{"c", r.c},
                     {"energy_ratio", r.energy_ratio},
                     {"mu_ratio", r.mu_ratio},
                     {"b_ratio", r.b_ratio},
                     {"grad_ratio", r.grad_ratio},
                     {"lp_ratio", r.lp_ratio},
                     {"h1_dist_to_Wp", r.h1_dist_to_Wp},
                     {"h1_rel_dist", r.h1_rel_dist},
                     {"mass_identity", r.mass_identity},
                     {"converged", r.converged},
                     {"iterations", r.iterations},
                     {"error", r.error}};
}

void to_json(nlohmann::json& j, const SweepTargets& t) {
  j = nlohmann::json{{"energy", t.energy}, {"mu", t.mu}, {"b", t.b}, {"grad", t.grad}, {"lp", t.lp}};
}

void to_json(nlohmann::json& j, const SweepResult& r) {
  j = nlohmann::json{{"records", r.records},
                     {"targets", r.targets},
                     {"b_ratio_slope", r.b_ratio_slope},
                     {"b_ratio_slope_expected", r.b_ratio_slope_expected},
                     {"energy_slope", r.energy_slope},
                     {"all_converged", r.all_converged}};
}

}  // namespace dgpe
