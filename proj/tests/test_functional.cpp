#include <doctest.h>

#include <cmath>
#include <random>

#include "dgpe/functional.hpp"
#include "dgpe/minimizer.hpp"
#include "dgpe/reference_state.hpp"
#include "support.hpp"

using namespace dgpe;
using testing::kPi;

namespace {

ModelParams dipolar(double c = 1.0) { return {-1.0, -0.05, -1.0, 3.0, c}; }

// Normalized isotropic Gaussian of mass c and unit width.
Field normalized_gaussian(const Grid3& g, double c) {
  const double a = c * std::pow(kPi, -0.75);
  return sample(g, [&](double x, double y, double z) { return cplx(a * std::exp(-0.5 * (x * x + y * y + z * z))); });
}

// Anisotropic Gaussian with widths (sx, sy, sz) and a linear phase, dilated by s.
Field dilated_blob(const Grid3& g, double s) {
  return sample(g, [&](double x, double y, double z) {
    x *= s;
    y *= s;
    z *= s;
    const double env = std::exp(-0.5 * (x * x / 1.2 + y * y / 0.8 + z * z / 1.5));
    return std::pow(s, 1.5) * 0.9 * env * std::polar(1.0, 0.3 * x - 0.2 * z);
  });
}

Field axpy(const Field& u, double a, const Field& v) {
  Field out = u;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * v[i];
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("pairing of an isotropic Gaussian") {
  const Grid3 g = Grid3::cube(48, 20.0);
  Spectral sp(g);
  const double c = 1.7;
  const Field u = normalized_gaussian(g, c);
  const double l4 = c * c * c * c * std::pow(2.0, -1.5) * std::pow(kPi, -1.5);
  SUBCASE("contact only") {
    const ModelParams m{-1.3, 0.0, -1.0, 3.0, c};
    CHECK(b_pair_direct(u, m, sp) == doctest::Approx(-1.3 * l4).epsilon(1e-9));
    CHECK(b_pair_fourier(u, m, sp) == doctest::Approx(-1.3 * l4).epsilon(1e-9));
  }
  SUBCASE("the dipolar part averages out on isotropic densities") {
    const ModelParams m{-1.3, 0.4, -1.0, 3.0, c};
    CHECK(b_pair_fourier(u, m, sp) == doctest::Approx(-1.3 * l4).epsilon(1e-6));
  }
  SUBCASE("pairing constant is sharp and unscaled") {
    const ModelParams m{-1.0, 0.0, -1.0, 3.0, c};
    const double B = b_pair_fourier(u, m, sp);
    const double quartic = std::pow(norms(u, 3.0, sp).l4, 4);
    const double Lambda = pairing_bound_constant(m.lambda1, m.lambda2);
    CHECK(std::abs(B) <= Lambda * quartic * (1.0 + 1e-12));
    CHECK(std::abs(B) == doctest::Approx(Lambda * quartic).epsilon(1e-12));
    // A constant carrying an extra (2 pi)^{-3} would be violated.
    CHECK(std::abs(B) > Lambda * std::pow(2.0 * kPi, -3.0) * quartic);
  }
}

TEST_CASE("dipolar pairing sign follows the shape") {
  const Grid3 g = Grid3::cube(64, 24.0);
  Spectral sp(g);
  const ModelParams m{0.0, 1.0, -1.0, 3.0, 1.0};
  auto shaped = [&](double sz) {
    return sample(g, [&](double x, double y, double z) { return cplx(std::exp(-0.5 * (x * x + y * y + z * z / (sz * sz)))); });
  };
  CHECK(b_pair_fourier(shaped(2.0), m, sp) < 0.0);  // elongated along the axis
  CHECK(b_pair_fourier(shaped(0.5), m, sp) > 0.0);  // flattened
  const Field iso = shaped(1.0);
  CHECK(std::abs(b_pair_fourier(iso, m, sp)) < 1e-8 * std::pow(norms(iso, 3.0, sp).l4, 4));
}

TEST_CASE("zero field") {
  const Grid3 g = Grid3::cube(16, 8.0);
  Spectral sp(g);
  const Field u(g);
  const Components comp = components(u, dipolar(), sp);
  CHECK(comp.mass_sq == 0.0);
  CHECK(comp.grad_sq == 0.0);
  CHECK(comp.b_pair == 0.0);
  CHECK(comp.lp_pow == 0.0);
  CHECK(energy(u, dipolar(), sp).total == 0.0);
  CHECK(pohozaev(u, dipolar(), sp) == 0.0);
  for (const cplx& v : el_residual(u, 0.0, dipolar(), sp).values) REQUIRE(v == cplx(0.0));
}

TEST_CASE("property: pairing on random fields") {
  const Grid3 g = Grid3::cube(32, 16.0);
  Spectral sp(g);
  std::mt19937_64 rng(17);
  testing::InstanceGen gen(18);
  for (int trial = 0; trial < 30; ++trial) {
    const auto [l1, l2] = gen.couplings();
    const ModelParams m{l1, l2, -1.0, 3.0, 1.0};
    const Field u = testing::random_blob_field(g, rng, trial % 2 == 1);
    const double direct = b_pair_direct(u, m, sp);
    const double fourier = b_pair_fourier(u, m, sp);
    CHECK(rel(direct, fourier) < 1e-10);
    CHECK(fourier < 0.0);
    CHECK(std::abs(fourier) <= pairing_bound_constant(l1, l2) * std::pow(norms(u, 3.0, sp).l4, 4));
  }
}

TEST_CASE("pairing with only the dipolar coupling is bounded") {
  const Grid3 g = Grid3::cube(32, 16.0);
  Spectral sp(g);
  std::mt19937_64 rng(19);
  for (double l2 : {-0.7, 0.7}) {
    const ModelParams m{0.0, l2, -1.0, 3.0, 1.0};
    CHECK(pairing_bound_constant(0.0, l2) == doctest::Approx(8.0 * kPi / 3.0 * 0.7));
    for (int trial = 0; trial < 10; ++trial) {
      const Field u = testing::random_blob_field(g, rng, false);
      CHECK(std::abs(b_pair_fourier(u, m, sp)) <= pairing_bound_constant(0.0, l2) * std::pow(norms(u, 3.0, sp).l4, 4));
    }
  }
}

TEST_CASE("functionals from components") {
  const Components comp{2.0, 3.0, -0.5, 1.5};
  const ModelParams m{-1.0, 0.0, -0.8, 3.0, std::sqrt(2.0)};
  const double d = gn_exponent(3.0);
  CHECK(energy_value(comp, m) == doctest::Approx(1.5 - 0.25 + 2.0 * -0.8 / 3.0 * 1.5));
  CHECK(pohozaev_value(comp, m) == doctest::Approx(6.0 - 1.5 + 4.0 * -0.8 * d * 1.5));
  CHECK(multiplier_value(comp, m) == doctest::Approx(-(1.5 - 0.5 - 0.8 * 1.5) / 2.0));
  const EnergyBreakdown e = breakdown(comp, m);
  CHECK(e.kinetic + e.b_pair + e.attractive == doctest::Approx(e.total));
  const nlohmann::json j = e;
  CHECK(j.at("total").get<double>() == doctest::Approx(e.total));
  const nlohmann::json jc = comp;
  CHECK(jc.at("lp_pow").get<double>() == 1.5);
}

TEST_CASE("scalar reference state is stationary") {
  const ModelParams m{0.0, 0.0, -1.0, 3.0, 1.0};
  const WellGeometry geo = derive_geometry(m);
  const Grid3 g = Grid3::cube(64, suggested_box(m, geo));
  Spectral sp(g);
  const ReferenceState v = v_c_profile(m, geo);
  const Field u = sample(g, [&](double x, double y, double z) { return cplx(v.value(std::sqrt(x * x + y * y + z * z))); }, true);
  const Components comp = components(u, m, sp);
  CHECK(std::sqrt(comp.mass_sq) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(energy_value(comp, m) == doctest::Approx(v.m0).epsilon(1e-6));
  CHECK(std::abs(pohozaev_value(comp, m)) < 1e-6 * comp.grad_sq);
  CHECK(multiplier_value(comp, m) == doctest::Approx(geo.beta_c).epsilon(1e-6));
  const Field r = el_residual(u, geo.beta_c, m, sp);
  CHECK(mass_norm(r) < 1e-5 * mass_norm(u));
}

TEST_CASE("constant field has a finite multiplier") {
  const Grid3 g = Grid3::cube(16, 4.0);
  Spectral sp(g);
  const Field u = sample(g, [](double, double, double) { return cplx(0.5); });
  const double mu = multiplier_estimate(u, dipolar(), sp);
  CHECK(std::isfinite(mu));
  // No gradient and no dipolar contribution: mu = -(lambda1 |u|^2 + lambda3 |u|).
  CHECK(mu == doctest::Approx(-(-1.0 * 0.25 - 1.0 * 0.5)).epsilon(1e-12));
}

TEST_CASE("fiber map") {
  const Grid3 g = Grid3::cube(64, 24.0);
  Spectral sp(g);
  const ModelParams m = dipolar();
  const Field u = dilated_blob(g, 1.0);
  const Components comp = components(u, m, sp);
  SUBCASE("value at s = 1 is the energy") {
    CHECK(fiber_map(comp, 1.0, m).value == doctest::Approx(energy_value(comp, m)).epsilon(1e-14));
    CHECK(fiber_map(comp, 1.0, m).derivative == doctest::Approx(0.5 * pohozaev_value(comp, m)).epsilon(1e-12));
  }
  SUBCASE("matches sampled dilations") {
    // Contact pairing scales exactly; the dipolar one only up to torus images.
    const ModelParams contact{-1.0, 0.0, -1.0, 3.0, 1.0};
    const Components cc = components(u, contact, sp);
    for (double s : {0.8, 0.9, 1.1, 1.25}) {
      CAPTURE(s);
      const Field us = dilated_blob(g, s);
      CHECK(fiber_map(cc, s, contact).value == doctest::Approx(energy(us, contact, sp).total).epsilon(1e-7));
      CHECK(fiber_map(comp, s, m).value == doctest::Approx(energy(us, m, sp).total).epsilon(1e-5));
    }
  }
  SUBCASE("dilation derivative is half the Pohozaev functional") {
    const double h = 1e-3;
    const double fd = (energy(dilated_blob(g, 1.0 + h), m, sp).total - energy(dilated_blob(g, 1.0 - h), m, sp).total) / (2 * h);
    CHECK(fd == doctest::Approx(0.5 * pohozaev_value(comp, m)).epsilon(1e-5));
  }
  SUBCASE("derivative matches finite differences") {
    for (double s : {0.3, 1.0, 2.7}) {
      const double h = 1e-5 * s;
      const double fd = (fiber_map(comp, s + h, m).value - fiber_map(comp, s - h, m).value) / (2 * h);
      CHECK(fiber_map(comp, s, m).derivative == doctest::Approx(fd).epsilon(1e-7));
    }
  }
  SUBCASE("negative for large dilations and two critical points") {
    const Components small{1.0, 2.0, -0.05, 0.3};
    CHECK(fiber_map(small, 1e3, m).value < 0.0);
    CHECK(fiber_map(small, 1e-4, m).value < 0.0);
    int changes = 0;
    double prev = fiber_map(small, 1e-4, m).derivative;
    for (int i = 1; i <= 20000; ++i) {
      const double d = fiber_map(small, 1e-4 * std::pow(1e8, i / 20000.0), m).derivative;
      if ((d > 0) != (prev > 0)) ++changes;
      prev = d;
    }
    CHECK(changes == 2);
  }
  SUBCASE("non-positive s throws") {
    CHECK_THROWS_AS(fiber_map(comp, 0.0, m), std::invalid_argument);
    CHECK_THROWS_AS(fiber_map(comp, -1.0, m), std::invalid_argument);
  }
}

TEST_CASE("property: gradient matches finite differences") {
  const Grid3 g = Grid3::cube(32, 12.0);
  Spectral sp(g);
  std::mt19937_64 rng(23);
  for (double p : {3.0, 2.5}) {
    ModelParams m = dipolar();
    m.p = p;
    for (int trial = 0; trial < 10; ++trial) {
      const Field u = testing::random_blob_field(g, rng, true);
      const Field phi = testing::random_blob_field(g, rng, true);
      const double eps = 1e-5;
      const double fd = (energy(axpy(u, eps, phi), m, sp).total - energy(axpy(u, -eps, phi), m, sp).total) / (2 * eps);
      const double analytic = 2.0 * inner(el_residual(u, 0.0, m, sp), phi).real();
      CHECK(rel(fd, analytic) < 1e-6);
    }
  }
}

TEST_CASE("evaluate agrees with the separate entry points") {
  const Grid3 g = Grid3::cube(16, 8.0);
  Spectral sp(g);
  std::mt19937_64 rng(29);
  const Field u = testing::random_blob_field(g, rng, true);
  const Evaluation ev = evaluate(u, dipolar(), sp);
  const Components comp = components(u, dipolar(), sp);
  CHECK(ev.comp.b_pair == doctest::Approx(comp.b_pair).epsilon(1e-14));
  CHECK(ev.comp.grad_sq == doctest::Approx(comp.grad_sq).epsilon(1e-14));
  const Field r = el_residual(u, 0.0, dipolar(), sp);
  for (std::size_t i = 0; i < r.size(); ++i) REQUIRE(std::abs(r[i] - ev.residual[i]) < 1e-12);
  const Field shifted = el_residual(u, 0.7, dipolar(), sp);
  for (std::size_t i = 0; i < r.size(); ++i) REQUIRE(std::abs(shifted[i] - r[i] - 0.7 * u[i]) < 1e-12);
  CHECK(evaluate(u, dipolar(), sp, false).residual.size() == 0);
}

TEST_CASE("property: energy stays above the envelope") {
  const Grid3 g = Grid3::cube(48, 24.0);
  Spectral sp(g);
  std::mt19937_64 rng(31);
  testing::InstanceGen gen(32);
  for (int trial = 0; trial < 20; ++trial) {
    const auto [l1, l2] = gen.couplings();
    ModelParams m{l1, l2, -gen.uniform(0.1, 2.0), 3.0, gen.uniform(0.2, 3.0)};
    const WellGeometry geo = derive_geometry(m);
    const Field u = project_mass(testing::random_blob_field(g, rng, trial % 2 == 0), m.c);
    const Components comp = components(u, m, sp);
    const double d = geo.delta_p;
    // Gagliardo-Nirenberg with the sharp constant.
    CHECK(comp.lp_pow <= std::pow(geo.C_p, m.p) * std::pow(comp.grad_sq, m.p * d / 2.0) *
                             std::pow(comp.mass_sq, m.p * (1.0 - d) / 2.0) * (1.0 + 1e-9));
    CHECK(energy_value(comp, m) >= h_c(std::sqrt(comp.grad_sq), m, geo));
  }
}
