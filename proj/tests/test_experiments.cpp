#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "dgpe/evolution.hpp"
#include "dgpe/experiments.hpp"
#include "dgpe/functional.hpp"
#include "dgpe/reference_state.hpp"
#include "dgpe/wp_oracle.hpp"
#include "support.hpp"

using namespace dgpe;

namespace {

ModelParams dipolar_instance(double p = 3.0) {
  ModelParams m{-1.0, -0.05, -1.0, p, 1.0};
  m.c = 0.5 * derive_geometry(m).c_star;
  return m;
}

double wp_mass(double p) { return radial_norms(*wp_profile_cached(p), p).mass; }

Field anisotropic_blob(const Grid3& g, double s1, double s2, double s3, std::array<double, 3> y = {}) {
  return sample(g, [&](double x1, double x2, double x3) {
    const double a = (x1 - y[0]) / s1, b = (x2 - y[1]) / s2, c = (x3 - y[2]) / s3;
    return std::exp(-0.5 * (a * a + b * b + c * c)) * std::polar(1.0, 0.3 * (x1 - y[0]));
  });
}

Field normalized_gaussian(const Grid3& g, double c) {
  const Field f = sample(g, [](double x, double y, double z) { return cplx(std::exp(-(x * x + y * y + z * z) / 4.0)); }, true);
  return project_mass(f, c);
}

}  // namespace

TEST_CASE("rescaled frame") {
  testing::InstanceGen gen(11);
  for (int trial = 0; trial < 40; ++trial) {
    const ModelParams m = gen.instance(gen.uniform(0.0, 1.0) < 0.5 ? 3.0 : 2.5);
    const WellGeometry g = derive_geometry(m);
    const RescaledFrame f = rescaled_frame(m, g);
    CAPTURE(m.p);
    CHECK(f.scaled.lambda3 == doctest::Approx(-1.0 / (m.p * g.delta_p)).epsilon(1e-12));
    CHECK(f.scaled.c == doctest::Approx(wp_mass(m.p)).epsilon(1e-8));
    CHECK(f.scaled.lambda1 / m.lambda1 == doctest::Approx(rescaled_coupling_factor(m, g)));
    CHECK(f.scaled.lambda2 / m.lambda2 == doctest::Approx(f.a * f.a / (f.b * f.b)));
    CHECK(f.scaled.p == m.p);
  }
}

TEST_CASE("rescaled coupling factor vanishes as a power of c") {
  for (double p : {2.5, 3.0, 3.2}) {
    ModelParams m = dipolar_instance(p);
    const double expected = 2.0 * (4.0 - p) / (2.0 - p * gn_exponent(p));
    std::vector<double> cs, ks;
    for (double c : {1e-3, 1e-2, 1e-1}) {
      m.c = c;
      cs.push_back(c);
      ks.push_back(rescaled_coupling_factor(m, derive_geometry(m)));
    }
    CHECK(loglog_slope(cs, ks) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("energy transforms with the frame factors") {
  const ModelParams m = dipolar_instance();
  const WellGeometry geo = derive_geometry(m);
  const RescaledFrame f = rescaled_frame(m, geo);
  const Grid3 gu = Grid3::cube(32, 12.0);
  const Field u = anisotropic_blob(gu, 1.0, 1.3, 0.7);
  const Grid3 gv = Grid3::cube(32, 12.0 * f.b);
  const Field v = sample(gv, [&](double y1, double y2, double y3) {
    const double a = y1 / f.b / 1.0, b = y2 / f.b / 1.3, c = y3 / f.b / 0.7;
    return std::exp(-0.5 * (a * a + b * b + c * c)) * cplx(std::cos(0.3 * y1 / f.b), std::sin(0.3 * y1 / f.b)) / f.a;
  });
  Spectral su(gu), sv(gv);
  const Components cu = components(u, m, su);
  const Components cv = components(v, f.scaled, sv);
  CHECK(energy_value(cu, m) == doctest::Approx(f.energy_factor() * energy_value(cv, f.scaled)).epsilon(1e-11));
  CHECK(cu.grad_sq == doctest::Approx(f.grad_sq_factor() * cv.grad_sq).epsilon(1e-11));
  CHECK(cu.lp_pow == doctest::Approx(f.lp_factor() * cv.lp_pow).epsilon(1e-11));
  CHECK(cu.mass_sq == doctest::Approx(f.a * f.a / (f.b * f.b * f.b) * cv.mass_sq).epsilon(1e-12));
  CHECK(multiplier_value(cu, m) == doctest::Approx(f.mu_factor() * multiplier_value(cv, f.scaled)).epsilon(1e-11));
}

TEST_CASE("sampled W_p") {
  const Grid3 g = Grid3::cube(64, 24.0);
  const Field w = sample_wp(3.0, g);
  const std::size_t origin = g.index(32, 32, 32);
  CHECK(w[origin].real() == doctest::Approx(3.14376222).epsilon(1e-7));
  CHECK(mass_norm(w) == doctest::Approx(wp_mass(3.0)).epsilon(1e-6));
  double peak = 0.0;
  for (const auto& z : w.values) peak = std::max(peak, std::abs(z));
  CHECK(peak == std::abs(w[origin]));
}

TEST_CASE("recenter") {
  const Grid3 g = Grid3::cube(48, 16.0);
  const double h = g.spacing(0);
  const Field shifted = anisotropic_blob(g, 0.9, 1.0, 0.7, {3.0 * h, -5.0 * h, 7.0 * h});
  const RecenterResult r = recenter(shifted);
  const Field centered = anisotropic_blob(g, 0.9, 1.0, 0.7);
  CHECK(r.index_shift[0] == -3);
  CHECK(r.index_shift[1] == 5);
  CHECK(r.index_shift[2] == -7);
  CHECK(r.shift[0] == doctest::Approx(-3.0 * h));
  double worst = 0.0;
  for (std::size_t i = 0; i < centered.size(); ++i) worst = std::max(worst, std::abs(r.field[i] - centered[i]));
  // Residual is the periodic wrap of the Gaussian tail, about exp(-20).
  CHECK(worst < 1e-8);
  CHECK_THROWS_AS(recenter(Field(g)), std::runtime_error);
}

TEST_CASE("scalar state rescales onto W_p") {
  const ModelParams m{0.0, 0.0, -1.0, 3.0, 1.0};
  const WellGeometry geo = derive_geometry(m);
  const Grid3 g = Grid3::cube(64, suggested_box(m, geo));
  const GroundStateResult r = minimize(m, g, SolverConfig{});
  REQUIRE(r.converged);
  const Field v = rescale_to_limit(r.field, m, geo);
  CHECK(v.grid.box[0] == doctest::Approx(24.0 / std::sqrt(1.0 / gn_exponent(3.0) - 1.0)));
  const Field w = sample_wp(3.0, v.grid);
  Spectral sp(v.grid);
  Field diff = v;
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= w[i];
  CHECK(h1_norm(diff, sp) / h1_norm(w, sp) < 1e-3);
}

TEST_CASE("scalar sweep sits on the targets") {
  const ModelParams m{0.0, 0.0, -1.0, 3.0, 1.0};
  const WellGeometry geo = derive_geometry(m);
  SweepConfig cfg;
  cfg.n = 64;
  const SweepResult s = asymptotic_sweep(m, {1.0, 0.5, 0.25}, cfg);
  REQUIRE(s.all_converged);
  const SweepTargets t = sweep_targets(m, geo);
  for (const auto& rec : s.records) {
    CAPTURE(rec.c);
    CHECK(rec.energy_ratio == doctest::Approx(t.energy).epsilon(1e-6));
    CHECK(rec.mu_ratio == doctest::Approx(t.mu).epsilon(1e-6));
    CHECK(rec.grad_ratio == doctest::Approx(t.grad).epsilon(1e-6));
    CHECK(rec.lp_ratio == doctest::Approx(t.lp).epsilon(1e-6));
    CHECK(rec.b_ratio == 0.0);
    CHECK(rec.mass_identity == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rec.h1_rel_dist < 1e-4);
  }
  CHECK(s.energy_slope == doctest::Approx(6.0).epsilon(1e-6));
  CHECK(s.b_ratio_slope_expected == doctest::Approx(4.0));
  const nlohmann::json j = s;
  CHECK(j.at("records").size() == 3);
}

TEST_CASE("sweep keeps failures per record") {
  ModelParams m = dipolar_instance();
  SweepConfig cfg;
  cfg.n = 16;
  cfg.box_v = 2.0;
  const SweepResult s = asymptotic_sweep(m, {0.1, 0.05, 0.025}, cfg);
  REQUIRE(s.records.size() == 3);
  CHECK_FALSE(s.all_converged);
  for (const auto& rec : s.records) CHECK_FALSE(rec.error.empty());
  CHECK_THROWS_AS(asymptotic_sweep(m, {0.1, 0.05}, cfg), std::invalid_argument);
}

TEST_CASE("loglog slope") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double k = u(rng), amp = std::exp(u(rng));
    std::vector<double> x, y;
    for (int i = 1; i <= 6; ++i) {
      x.push_back(0.3 * i);
      y.push_back(-amp * std::pow(0.3 * i, k));
    }
    CHECK(loglog_slope(x, y) == doctest::Approx(k).epsilon(1e-10));
  }
  CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(loglog_slope({1.0, 2.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("orbit distance") {
  const Grid3 g = Grid3::cube(48, 16.0);
  Spectral sp(g);
  const Field u = anisotropic_blob(g, 0.9, 1.0, 0.7);
  const double scale = h1_norm(u, sp);
  const double h = g.spacing(0);
  SUBCASE("lattice shift and phase") {
    Field psi = anisotropic_blob(g, 0.9, 1.0, 0.7, {2.0 * h, -3.0 * h, h});
    for (auto& z : psi.values) z *= std::polar(1.0, 0.7);
    const OrbitDistance d = orbit_distance(psi, u, sp);
    CHECK(d.distance < 1e-8 * scale);
    CHECK(std::abs(std::remainder(d.phase - 0.7, 2.0 * testing::kPi)) < 1e-8);
  }
  SUBCASE("off-lattice shift") {
    const Field psi = anisotropic_blob(g, 0.9, 1.0, 0.7, {0.37 * h, -1.6 * h, 0.21 * h});
    const OrbitDistance d = orbit_distance(psi, u, sp);
    CHECK(d.distance < 1e-6 * scale);
    CHECK(d.shift[0] == doctest::Approx(0.37 * h).epsilon(1e-4));
    CHECK(d.shift[1] == doctest::Approx(-1.6 * h).epsilon(1e-4));
  }
  SUBCASE("different shapes stay apart") {
    const Field psi = anisotropic_blob(g, 1.3, 1.0, 0.7);
    CHECK(orbit_distance(psi, u, sp).distance > 1e-2 * scale);
  }
}

TEST_CASE("random perturbation") {
  const Grid3 g = Grid3::cube(32, 16.0);
  Spectral sp(g);
  const Field a = random_perturbation(g, 0.05, 3.0, 9);
  const Field b = random_perturbation(g, 0.05, 3.0, 9);
  const Field c = random_perturbation(g, 0.05, 3.0, 10);
  CHECK(h1_norm(a, sp) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
}

TEST_CASE("split-step evolution") {
  const ModelParams m = dipolar_instance();
  const RescaledFrame f = rescaled_frame(m, derive_geometry(m));
  const ModelParams& v = f.scaled;
  const Grid3 g = Grid3::cube(64, 24.0);
  const Field psi0 = normalized_gaussian(g, v.c);

  SUBCASE("mass is conserved") {
    EvolutionOptions opt;
    opt.sample_every = 50;
    const EvolutionStats s = splitstep_evolve(psi0, 4.0, 0.01, v, opt);
    CHECK(s.steps == 400);
    CHECK(s.mass_drift < 1e-12);
    CHECK(std::abs(mass_norm(s.final_state) / v.c - 1.0) < 1e-12);
    CHECK(s.times.front() == 0.0);
    CHECK(s.times.back() == doctest::Approx(4.0));
  }
  SUBCASE("energy error is second order") {
    std::vector<double> drift;
    for (double dt : {0.04, 0.02, 0.01}) {
      EvolutionOptions opt;
      opt.sample_every = 1000;
      drift.push_back(splitstep_evolve(psi0, 1.0, dt, v, opt).energy_drift);
    }
    CHECK(drift[0] / drift[1] == doctest::Approx(4.0).epsilon(0.05));
    CHECK(drift[1] / drift[2] == doctest::Approx(4.0).epsilon(0.05));
  }
  SUBCASE("a ground state only rotates its phase") {
    SolverConfig cfg;
    const RescaledSolve sol = solve_rescaled(m, 64, 24.0, cfg);
    REQUIRE(sol.result.converged);
    const Field& u = sol.result.field;
    EvolutionOptions opt;
    opt.reference = &u;
    opt.sample_every = 10;
    const EvolutionStats coarse = splitstep_evolve(u, 1.0, 0.02, v, opt);
    opt.sample_every = 20;
    const EvolutionStats fine = splitstep_evolve(u, 1.0, 0.01, v, opt);
    CHECK(fine.overlap_track.back() > 1.0 - 1e-6);
    CHECK_FALSE(fine.blew_up);
    // The splitting moves the standing wave by O(dt^2).
    CHECK(coarse.max_h1_dist / fine.max_h1_dist == doctest::Approx(4.0).epsilon(0.25));
    CHECK(fine.max_h1_dist < 1e-3 * v.c);
    const StabilityReport rep = stability_probe(u, {0.04 * v.c}, 1.0, 0.02, v, 2, 3, 10);
    REQUIRE(rep.trials.size() == 2);
    for (const auto& t : rep.trials) {
      CHECK(t.delta == doctest::Approx(0.01 * v.c));
      CHECK(t.initial_distance <= t.delta * (1.0 + 1e-9));
      CHECK(t.pass);
    }
    CHECK(rep.all_pass);
  }
  SUBCASE("blow-up cap stops the run") {
    EvolutionOptions opt;
    opt.sample_every = 1;
    Spectral sp(g);
    opt.blowup_cap = 0.5 * std::sqrt(grad_norm_sq(psi0, sp));
    const EvolutionStats s = splitstep_evolve(psi0, 1.0, 0.01, v, opt);
    CHECK(s.blew_up);
    CHECK(s.steps < 100);
    CHECK_FALSE(s.diagnostic.empty());
  }
  SUBCASE("invalid arguments") {
    CHECK_THROWS_AS(splitstep_evolve(psi0, 1.0, 0.0, v), std::invalid_argument);
    CHECK_THROWS_AS(splitstep_evolve(psi0, -1.0, 0.01, v), std::invalid_argument);
  }
}
