#include "dgpe/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "dgpe/functional.hpp"

namespace dgpe {

namespace {

struct ShiftSums {
  cplx s;
  std::array<cplx, 3> d;
  std::array<std::array<cplx, 3>, 3> dd;
};

// S(y) = sum_k w_k exp(-i xi_k . y) and its first two derivatives.
ShiftSums shift_sums(const std::vector<cplx>& w, const Grid3& g, const std::array<double, 3>& y) {
  std::array<std::vector<cplx>, 3> phase;
  std::array<std::vector<double>, 3> freq;
  for (int a = 0; a < 3; ++a) {
    phase[a].resize(g.n[a]);
    freq[a].resize(g.n[a]);
    for (int j = 0; j < g.n[a]; ++j) {
      freq[a][j] = g.frequency(a, j);
      phase[a][j] = std::polar(1.0, -freq[a][j] * y[a]);
    }
  }
  ShiftSums out{};
  for (int i = 0; i < g.n[0]; ++i) {
    for (int j = 0; j < g.n[1]; ++j) {
      const cplx pij = phase[0][i] * phase[1][j];
      for (int k = 0; k < g.n[2]; ++k) {
        const cplx term = w[g.index(i, j, k)] * pij * phase[2][k];
        const std::array<double, 3> xi{freq[0][i], freq[1][j], freq[2][k]};
        out.s += term;
        for (int a = 0; a < 3; ++a) {
          out.d[a] += cplx(0.0, -xi[a]) * term;
          for (int b = a; b < 3; ++b) out.dd[a][b] -= xi[a] * xi[b] * term;
        }
      }
    }
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < a; ++b) out.dd[a][b] = out.dd[b][a];
  }
  return out;
}

// H^1 distance between psi and e^{i theta} u(. - y), both given by their DFTs.
double shifted_distance_sq(const std::vector<cplx>& ph, const std::vector<cplx>& uh,
                           const std::vector<double>& xi2, const Grid3& g,
                           const std::array<double, 3>& y, double theta, double scale) {
  std::array<std::vector<cplx>, 3> phase;
  for (int a = 0; a < 3; ++a) {
    phase[a].resize(g.n[a]);
    for (int j = 0; j < g.n[a]; ++j) phase[a][j] = std::polar(1.0, -g.frequency(a, j) * y[a]);
  }
  const cplx rot = std::polar(1.0, theta);
  std::vector<double> t(ph.size());
  for (int i = 0; i < g.n[0]; ++i) {
    for (int j = 0; j < g.n[1]; ++j) {
      const cplx pij = rot * phase[0][i] * phase[1][j];
      for (int k = 0; k < g.n[2]; ++k) {
        const std::size_t idx = g.index(i, j, k);
        t[idx] = (1.0 + xi2[idx]) * std::norm(ph[idx] - pij * phase[2][k] * uh[idx]);
      }
    }
  }
  return scale * pairwise_sum(t);
}

bool solve3(const std::array<std::array<double, 3>, 3>& m, const std::array<double, 3>& rhs,
            std::array<double, 3>& x) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  if (det == 0.0 || !std::isfinite(det)) return false;
  for (int c = 0; c < 3; ++c) {
    auto t = m;
    for (int r = 0; r < 3; ++r) t[r][c] = rhs[r];
    x[c] = (t[0][0] * (t[1][1] * t[2][2] - t[1][2] * t[2][1]) -
            t[0][1] * (t[1][0] * t[2][2] - t[1][2] * t[2][0]) +
            t[0][2] * (t[1][0] * t[2][1] - t[1][1] * t[2][0])) / det;
  }
  return true;
}

}  // namespace

OrbitDistance orbit_distance(const Field& psi, const Field& u, Spectral& spectral) {
  check_same_grid(psi, u);
  const Grid3& g = psi.grid;
  const std::size_t n = psi.size();
  const double scale = g.cell_volume() / static_cast<double>(n);
  std::vector<cplx> ph(n), uh(n);
  spectral.forward(psi.values.data(), ph.data());
  spectral.forward(u.values.data(), uh.data());
  const auto& xi2 = spectral.xi2();

  std::vector<cplx> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = scale * (1.0 + xi2[i]) * std::conj(ph[i]) * uh[i];

  // Lattice shifts y = m h give S(m) = forward DFT of w.
  std::vector<cplx> corr = w;
  spectral.forward(corr);
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(corr[i]) > std::abs(corr[best])) best = i;
  }
  std::array<int, 3> m{static_cast<int>(best / (static_cast<std::size_t>(g.n[1]) * g.n[2])),
                       static_cast<int>((best / g.n[2]) % g.n[1]), static_cast<int>(best % g.n[2])};
  std::array<double, 3> y{};
  for (int a = 0; a < 3; ++a) {
    const int signed_m = m[a] < g.n[a] / 2 ? m[a] : m[a] - g.n[a];
    y[a] = signed_m * g.spacing(a);
  }

  // Newton refinement of |S(y)|^2 within one cell.
  ShiftSums cur = shift_sums(w, g, y);
  const std::array<double, 3> y0 = y;
  for (int it = 0; it < 8; ++it) {
    std::array<double, 3> grad{};
    std::array<std::array<double, 3>, 3> hess{};
    for (int a = 0; a < 3; ++a) {
      grad[a] = 2.0 * (std::conj(cur.s) * cur.d[a]).real();
      for (int b = 0; b < 3; ++b) {
        hess[a][b] = 2.0 * (std::conj(cur.d[a]) * cur.d[b] + std::conj(cur.s) * cur.dd[a][b]).real();
      }
    }
    std::array<double, 3> step{};
    if (!solve3(hess, grad, step)) break;
    std::array<double, 3> trial{};
    for (int a = 0; a < 3; ++a) {
      trial[a] = std::clamp(y[a] - step[a], y0[a] - g.spacing(a), y0[a] + g.spacing(a));
    }
    const ShiftSums next = shift_sums(w, g, trial);
    if (std::abs(next.s) <= std::abs(cur.s)) break;
    y = trial;
    cur = next;
  }

  OrbitDistance out;
  out.shift = y;
  out.phase = -std::arg(cur.s);
  out.distance = std::sqrt(shifted_distance_sq(ph, uh, xi2, g, y, out.phase, scale));
  return out;
}

EvolutionStats splitstep_evolve(const Field& psi0, double T, double dt, const ModelParams& params,
                                const EvolutionOptions& options) {
  if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("splitstep_evolve: need T > 0 and dt > 0");
  const Grid3& g = psi0.grid;
  const std::size_t n = psi0.size();
  Spectral spectral(g);
  if (options.reference) check_same_grid(psi0, *options.reference);

  Field psi = psi0;
  psi.real = false;
  const auto& xi2 = spectral.xi2();
  std::vector<cplx> kinetic(n);
  for (std::size_t i = 0; i < n; ++i) kinetic[i] = std::polar(1.0, -0.5 * xi2[i] * dt);

  const double p = params.p;
  auto nonlinear = [&](double tau) {
    std::vector<double> rho(n);
    for (std::size_t i = 0; i < n; ++i) rho[i] = std::norm(psi[i]);
    std::vector<double> phi;
    if (params.lambda2 != 0.0) phi = dipolar_potential_of_density(rho, spectral);
    for (std::size_t i = 0; i < n; ++i) {
      double v = params.lambda1 * rho[i];
      if (!phi.empty()) v += params.lambda2 * phi[i];
      if (rho[i] > 0.0) v += params.lambda3 * std::pow(rho[i], 0.5 * (p - 2.0));
      psi[i] *= std::polar(1.0, -v * tau);
    }
  };
  auto kinetic_step = [&] {
    spectral.forward(psi.values);
    for (std::size_t i = 0; i < n; ++i) psi[i] *= kinetic[i];
    spectral.inverse(psi.values);
  };

  EvolutionStats stats;
  const double c = mass_norm(psi0);
  double ref_mass_sq = 0.0;
  if (options.reference) ref_mass_sq = std::norm(mass_norm(*options.reference));
  double e0 = 0.0;
  auto record = [&](double t) {
    const Components comp = components(psi, params, spectral);
    const double e = energy_value(comp, params);
    if (stats.times.empty()) e0 = e;
    stats.times.push_back(t);
    stats.mass.push_back(std::sqrt(comp.mass_sq));
    stats.energy.push_back(e);
    stats.mass_drift = std::max(stats.mass_drift, std::abs(std::sqrt(comp.mass_sq) - c) / c);
    stats.energy_drift = std::max(stats.energy_drift, std::abs(e - e0) / std::abs(e0));
    if (options.reference) {
      const double d = orbit_distance(psi, *options.reference, spectral).distance;
      stats.h1_dist_track.push_back(d);
      stats.max_h1_dist = std::max(stats.max_h1_dist, d);
      stats.overlap_track.push_back(std::abs(inner(psi, *options.reference)) / ref_mass_sq);
    }
    if (options.on_sample) options.on_sample(t, psi);
    if (std::sqrt(comp.grad_sq) > options.blowup_cap) {
      stats.blew_up = true;
      stats.diagnostic = "left the well: gradient norm " + std::to_string(std::sqrt(comp.grad_sq)) +
                         " above " + std::to_string(options.blowup_cap) + " at t = " + std::to_string(t);
      return false;
    }
    return true;
  };

  const int steps = static_cast<int>(std::llround(T / dt));
  const int every = std::max(1, options.sample_every);
  if (record(0.0)) {
    nonlinear(0.5 * dt);
    for (int s = 1; s <= steps; ++s) {
      kinetic_step();
      stats.steps = s;
      const bool sample_now = s == steps || s % every == 0;
      if (sample_now) {
        nonlinear(0.5 * dt);
        if (!record(s * dt)) break;
        if (s < steps) nonlinear(0.5 * dt);
      } else {
        nonlinear(dt);
      }
    }
  }
  stats.final_state = std::move(psi);
  return stats;
}

Field random_perturbation(const Grid3& grid, double h1_size, double width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Field eta(grid);
  for (auto& v : eta.values) v = cplx(normal(rng), normal(rng));
  Spectral spectral(grid);
  spectral.forward(eta.values);
  double kmax = 0.0;
  for (int a = 0; a < 3; ++a) kmax = std::max(kmax, std::abs(grid.frequency(a, grid.n[a] / 2)));
  const auto& xi2 = spectral.xi2();
  for (std::size_t i = 0; i < eta.size(); ++i) {
    if (xi2[i] > 0.0625 * kmax * kmax) eta[i] = 0.0;
  }
  spectral.inverse(eta.values);
  for (int i = 0; i < grid.n[0]; ++i) {
    const double x = grid.coord(0, i);
    for (int j = 0; j < grid.n[1]; ++j) {
      const double y = grid.coord(1, j);
      for (int k = 0; k < grid.n[2]; ++k) {
        const double z = grid.coord(2, k);
        eta[grid.index(i, j, k)] *= std::exp(-(x * x + y * y + z * z) / (2.0 * width * width));
      }
    }
  }
  const double norm = h1_norm(eta, spectral);
  for (auto& v : eta.values) v *= h1_size / norm;
  return eta;
}

StabilityReport stability_probe(const Field& u_c, const std::vector<double>& eps_list, double T,
                                double dt, const ModelParams& params, int trials,
                                std::uint64_t seed, int sample_every, double blowup_cap) {
  StabilityReport report;
  Spectral spectral(u_c.grid);
  const double c = mass_norm(u_c);
  // Perturbations live on the scale of the state itself.
  const double width = std::sqrt(0.5 * c * c / std::max(grad_norm_sq(u_c, spectral), 1e-300)) * 2.0;
  for (double eps : eps_list) {
    for (int t = 0; t < trials; ++t) {
      StabilityTrial trial;
      trial.eps = eps;
      trial.delta = 0.25 * eps;
      Field psi0 = u_c;
      psi0.real = false;
      if (trial.delta > 0.0) {
        const Field eta = random_perturbation(u_c.grid, trial.delta, width, seed + 7919u * t);
        for (std::size_t i = 0; i < psi0.size(); ++i) psi0[i] += eta[i];
        const double m = mass_norm(psi0);
        for (auto& v : psi0.values) v *= c / m;
      }
      trial.initial_distance = orbit_distance(psi0, u_c, spectral).distance;
      EvolutionOptions opt;
      opt.sample_every = sample_every;
      opt.reference = &u_c;
      opt.blowup_cap = blowup_cap;
      const EvolutionStats stats = splitstep_evolve(psi0, T, dt, params, opt);
      trial.max_excursion = stats.max_h1_dist;
      trial.blew_up = stats.blew_up;
      trial.pass = !stats.blew_up && stats.max_h1_dist < eps;
      report.trials.push_back(trial);
    }
  }
  report.all_pass = !report.trials.empty() &&
                    std::all_of(report.trials.begin(), report.trials.end(),
                                [](const StabilityTrial& t) { return t.pass; });
  return report;
}

void to_json(nlohmann::json& j, const EvolutionStats& s) {
  j = nlohmann::json{{"times", s.times},
                     {"mass", s.mass},
                     {"energy", s.energy},
                     {"h1_dist_track", s.h1_dist_track},
                     {"overlap_track", s.overlap_track},
                     {"mass_drift", s.mass_drift},
                     {"energy_drift", s.energy_drift},
                     {"max_h1_dist", s.max_h1_dist},
                     {"steps", s.steps},
                     {"blew_up", s.blew_up},
                     {"diagnostic", s.diagnostic}};
}

void to_json(nlohmann::json& j, const StabilityTrial& t) {
  j = nlohmann::json{{"eps", t.eps},
                     {"delta", t.delta},
                     {"initial_distance", t.initial_distance},
                     {"max_excursion", t.max_excursion},
                     {"blew_up", t.blew_up},
                     {"pass", t.pass}};
}

void to_json(nlohmann::json& j, const StabilityReport& r) {
  j = nlohmann::json{{"trials", r.trials}, {"all_pass", r.all_pass}};
}

}  // namespace dgpe
