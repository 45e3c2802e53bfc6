#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "dgpe/params.hpp"
#include "dgpe/spectral.hpp"

namespace testing {

inline constexpr double kPi = 3.14159265358979323846;

/// Uniform sampler over the parameter regime used by property tests.
struct InstanceGen {
  std::mt19937_64 rng;
  explicit InstanceGen(std::uint64_t seed) : rng(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

  // (lambda1, lambda2) inside the unstable region, either branch.
  std::pair<double, double> couplings() {
    const double l2 = uniform(-0.3, 0.3);
    const double edge = l2 <= 0.0 ? 4.0 * kPi / 3.0 * l2 : -8.0 * kPi / 3.0 * l2;
    return {edge - uniform(0.05, 3.0), l2};
  }

  dgpe::ModelParams instance(double p) {
    const auto [l1, l2] = couplings();
    return {l1, l2, -uniform(0.05, 3.0), p, 1.0};
  }
};

/// Sum of randomly placed anisotropic Gaussians, optionally with a phase.
inline dgpe::Field random_blob_field(const dgpe::Grid3& grid, std::mt19937_64& rng, bool complex_phase) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double L = grid.box[0];
  struct Blob {
    double x, y, z, sx, sy, sz, amp, kx, kz;
  };
  std::vector<Blob> blobs(3);
  for (auto& b : blobs) {
    b = {(u(rng) - 0.5) * 0.2 * L, (u(rng) - 0.5) * 0.2 * L, (u(rng) - 0.5) * 0.2 * L,
         (0.05 + 0.06 * u(rng)) * L, (0.05 + 0.06 * u(rng)) * L, (0.05 + 0.06 * u(rng)) * L,
         0.5 + u(rng), complex_phase ? (u(rng) - 0.5) * 4.0 / L : 0.0,
         complex_phase ? (u(rng) - 0.5) * 4.0 / L : 0.0};
  }
  return dgpe::sample(grid, [&](double x, double y, double z) {
    dgpe::cplx s = 0.0;
    for (const auto& b : blobs) {
      const double e = std::exp(-0.5 * (std::pow((x - b.x) / b.sx, 2) + std::pow((y - b.y) / b.sy, 2) +
                                        std::pow((z - b.z) / b.sz, 2)));
      s += b.amp * e * std::polar(1.0, b.kx * x + b.kz * z);
    }
    return s;
  });
}

}  // namespace testing
