#include <doctest.h>

#include <cmath>
#include <random>

#include "dgpe/minimizer.hpp"
#include "dgpe/reference_state.hpp"
#include "support.hpp"

using namespace dgpe;

namespace {

ModelParams scalar_instance() { return {0.0, 0.0, -1.0, 3.0, 1.0}; }

ModelParams dipolar_instance() {
  ModelParams m{-1.0, -0.05, -1.0, 3.0, 1.0};
  m.c = 0.5 * derive_geometry(m).c_star;
  return m;
}

Grid3 grid_for(const ModelParams& m, int n) { return Grid3::cube(n, suggested_box(m, derive_geometry(m))); }

Field roll(const Field& u, int di, int dj, int dk) {
  Field out(u.grid);
  out.real = u.real;
  const auto& n = u.grid.n;
  for (int i = 0; i < n[0]; ++i)
    for (int j = 0; j < n[1]; ++j)
      for (int k = 0; k < n[2]; ++k)
        out[u.grid.index((i + di) % n[0], (j + dj) % n[1], (k + dk) % n[2])] = u[u.grid.index(i, j, k)];
  return out;
}

}  // namespace

TEST_CASE("project_mass") {
  const Grid3 g = Grid3::cube(16, 8.0);
  std::mt19937_64 rng(1);
  const Field u = testing::random_blob_field(g, rng, true);
  const Field a = project_mass(u, 1.7);
  CHECK(std::abs(mass_norm(a) / 1.7 - 1.0) < 1e-14);
  const Field b = project_mass(a, 1.7);
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(std::abs(a[i] - b[i]) <= 1e-15 * std::abs(a[i]) + 1e-300);
  Field scaled = u;
  for (auto& v : scaled.values) v *= cplx(0.0, 3.0);
  const Field c = project_mass(scaled, 1.7);
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(std::abs(c[i] - cplx(0.0, 1.0) * a[i]) < 1e-14);
  try {
    project_mass(Field(g), 1.0);
    FAIL("expected a zero-field error");
  } catch (const SolverError& e) {
    CHECK(e.kind() == SolverErrorKind::ZeroField);
  }
}

TEST_CASE("central mass fraction") {
  const Grid3 g = Grid3::cube(32, 16.0);
  const Field centered = sample(g, [](double x, double y, double z) { return cplx(std::exp(-(x * x + y * y + z * z))); });
  CHECK(central_mass_fraction(centered) > 0.999999);
  const Field corner = sample(g, [](double x, double y, double z) {
    const double s = x + 7.0, t = y + 7.0, r = z + 7.0;
    return cplx(std::exp(-(s * s + t * t + r * r)));
  });
  CHECK(central_mass_fraction(corner) < 0.01);
}

TEST_CASE("suggested box counts decay lengths of v_c") {
  const ModelParams m = scalar_instance();
  const WellGeometry geo = derive_geometry(m);
  const ReferenceState v = v_c_profile(m, geo);
  const double decay = v.inv_width * WpEquation(m.p).decay_rate();
  CHECK(suggested_box(m, geo) * decay == doctest::Approx(24.0));
  CHECK(suggested_box(m, geo, 5.0) * decay == doctest::Approx(10.0));
}

TEST_CASE("ground state bounds") {
  const ModelParams m = scalar_instance();
  const WellGeometry geo = derive_geometry(m);
  const GroundStateBounds b = ground_state_bounds(m, geo);
  const ReferenceState v = v_c_profile(m, geo);
  CHECK(b.energy_upper == doctest::Approx(v.m0));
  CHECK(b.mu_lower < geo.beta_c);
  CHECK(geo.beta_c < b.mu_upper);
  // In the scalar case the gradient floor is attained by v_c.
  CHECK(b.grad_sq_lower == doctest::Approx(v.grad * v.grad).epsilon(1e-6));
  CHECK(b.grad_sq_lower < b.grad_sq_upper);
  // p = 3: beta_c = 3 kappa c^{2(p-2)/q}.
  CHECK(geo.beta_c == doctest::Approx(3.0 * b.mu_lower));
}

TEST_CASE("scalar minimization reproduces v_c") {
  const ModelParams m = scalar_instance();
  const WellGeometry geo = derive_geometry(m);
  const Grid3 g = grid_for(m, 64);
  SolverConfig cfg;
  int calls = 0;
  cfg.on_iteration = [&](const IterationRecord&) { ++calls; };
  std::mt19937_64 rng(2);
  const Field init = initial_random(g, m.c, 7, g.box[0] / 16.0);
  const GroundStateResult r = minimize(m, g, cfg, &init);
  CHECK(r.converged);
  CHECK(calls == r.iterations + 1);
  CHECK(r.breakdown.total == doctest::Approx(v_c_profile(m, geo).m0).epsilon(1e-6));
  CHECK(r.mu == doctest::Approx(geo.beta_c).epsilon(1e-6));
  CHECK(r.p_rel < cfg.tol_p);
  CHECK(r.residual_rel < cfg.tol_grad);
  const ClaimsReport claims = verify_claims(r, geo, m);
  CHECK(claims.scalar_mode);
  CHECK(claims.all_pass);

  GroundStateResult heavy = r;
  for (auto& v : heavy.field.values) v *= 1.1;
  heavy.comp.mass_sq *= 1.21;
  const ClaimsReport bad = verify_claims(heavy, geo, m);
  CHECK_FALSE(bad.all_pass);
  for (const auto& c : bad.checks) {
    if (c.name == "mass") CHECK_FALSE(c.pass);
  }
  const nlohmann::json j = claims;
  CHECK(j.at("checks").size() == claims.checks.size());
}

TEST_CASE("dipolar minimization") {
  const ModelParams m = dipolar_instance();
  const WellGeometry geo = derive_geometry(m);
  const Grid3 g = grid_for(m, 64);
  SolverConfig cfg;
  const GroundStateResult r = minimize(m, g, cfg);
  REQUIRE(r.converged);
  SUBCASE("claims hold") {
    const ClaimsReport claims = verify_claims(r, geo, m);
    CHECK_FALSE(claims.scalar_mode);
    for (const auto& c : claims.checks) {
      CAPTURE(c.name);
      CHECK(c.pass);
    }
  }
  SUBCASE("iterates stay inside the well") {
    for (const auto& rec : r.log) CHECK(rec.grad_norm < geo.t_cstar);
    CHECK(r.well_ok);
    CHECK(r.grad_l2 < r.R0);
  }
  SUBCASE("lattice translations do not change the minimum") {
    const Field shifted = roll(initial_vc(m, geo, g), 2, 0, 1);
    const GroundStateResult t = minimize(m, g, cfg, &shifted);
    REQUIRE(t.converged);
    CHECK(t.breakdown.total == doctest::Approx(r.breakdown.total).epsilon(1e-8));
  }
}

TEST_CASE("descent steps decrease the energy and keep the mass") {
  const ModelParams m = dipolar_instance();
  const WellGeometry geo = derive_geometry(m);
  const Grid3 g = grid_for(m, 32);
  Spectral sp(g);
  SolverConfig cfg;
  Field u = initial_random(g, m.c, 3, g.box[0] / 10.0);
  double e = energy(u, m, sp).total;
  double step = cfg.step;
  for (int it = 0; it < 100; ++it) {
    DescentOutcome d = descent_step(u, step, m, sp, cfg, geo.t_cstar);
    const double e_next = energy(d.field, m, sp).total;
    REQUIRE(e_next <= e + 1e-12 * std::abs(e));
    REQUIRE(std::abs(mass_norm(d.field) / m.c - 1.0) < 1e-12);
    REQUIRE(std::sqrt(grad_norm_sq(d.field, sp)) < geo.t_cstar);
    step = std::min(cfg.max_step, d.step * cfg.growth);
    u = std::move(d.field);
    e = e_next;
  }
}

TEST_CASE("solver errors") {
  SUBCASE("outside the coupling region") {
    const ModelParams m{1.0, 1.0, -1.0, 3.0, 0.5};
    try {
      minimize(m, Grid3::cube(16, 10.0), SolverConfig{});
      FAIL("expected a regime error");
    } catch (const SolverError& e) {
      CHECK(e.kind() == SolverErrorKind::Regime);
      CHECK(std::string(e.what()).find("D0") != std::string::npos);
    }
  }
  SUBCASE("a start outside the well") {
    const ModelParams m = dipolar_instance();
    const WellGeometry geo = derive_geometry(m);
    const double t = 4.0 * geo.t_cstar;
    const double sigma = std::sqrt(1.5 * m.c * m.c) / t;
    const Grid3 g = Grid3::cube(32, 16.0 * sigma);
    const Field narrow = sample(g, [&](double x, double y, double z) {
      return cplx(std::exp(-(x * x + y * y + z * z) / (2.0 * sigma * sigma)));
    });
    try {
      minimize(m, g, SolverConfig{}, &narrow);
      FAIL("expected a well escape");
    } catch (const SolverError& e) {
      CHECK(e.kind() == SolverErrorKind::WellEscape);
    }
  }
  SUBCASE("a box too small for the state") {
    const ModelParams m = scalar_instance();
    const WellGeometry geo = derive_geometry(m);
    const Grid3 g = Grid3::cube(16, 0.1 * suggested_box(m, geo));
    try {
      minimize(m, g, SolverConfig{});
      FAIL("expected a support overflow");
    } catch (const SolverError& e) {
      CHECK(e.kind() == SolverErrorKind::SupportOverflow);
    }
  }
  SUBCASE("iteration budget exhausted") {
    const ModelParams m = dipolar_instance();
    SolverConfig cfg;
    cfg.max_iter = 1;
    const GroundStateResult r = minimize(m, grid_for(m, 32), cfg);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 1);
    CHECK_FALSE(verify_claims(r, derive_geometry(m), m).all_pass);
  }
  CHECK(to_string(SolverErrorKind::WellEscape).size() > 0);
}

TEST_CASE("solver config json round trip") {
  SolverConfig cfg;
  cfg.tol_grad = 3e-9;
  cfg.max_iter = 77;
  cfg.well_cap = 2.5;
  const nlohmann::json j = cfg;
  const SolverConfig back = j.get<SolverConfig>();
  CHECK(back.tol_grad == 3e-9);
  CHECK(back.max_iter == 77);
  CHECK(back.well_cap == 2.5);
  CHECK(back.armijo == cfg.armijo);
}
