#include "dgpe/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>

namespace dgpe {

namespace {

// The FFTW planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::size_t Grid3::size() const {
  return static_cast<std::size_t>(n[0]) * n[1] * n[2];
}

double Grid3::cell_volume() const { return spacing(0) * spacing(1) * spacing(2); }

double Grid3::frequency(int axis, int j) const {
  const int m = j < n[axis] / 2 ? j : j - n[axis];
  return 2.0 * std::numbers::pi / box[axis] * m;
}

void Grid3::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (n[a] < 8 || n[a] % 2 != 0) {
      throw std::invalid_argument("grid: points per axis must be even and at least 8");
    }
    if (!(box[a] > 0.0)) throw std::invalid_argument("grid: box lengths must be positive");
  }
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 64) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double khat(const std::array<double, 3>& xi) {
  const double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
  if (r2 == 0.0) return 0.0;
  const double v = 4.0 * std::numbers::pi / 3.0 * (3.0 * xi[2] * xi[2] / r2 - 1.0);
  return std::clamp(v, -4.0 * std::numbers::pi / 3.0, 8.0 * std::numbers::pi / 3.0);
}

Spectral::Spectral(const Grid3& grid) : grid_(grid) {
  grid_.validate();
  const std::size_t n = grid_.size();
  std::vector<cplx> scratch(n);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  {
    std::lock_guard lock(planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_plan_ = fftw_plan_dft_3d(grid_.n[0], grid_.n[1], grid_.n[2], buf, buf, FFTW_FORWARD, flags);
    inverse_plan_ = fftw_plan_dft_3d(grid_.n[0], grid_.n[1], grid_.n[2], buf, buf, FFTW_BACKWARD, flags);
  }
  if (!forward_plan_ || !inverse_plan_) throw std::runtime_error("Spectral: FFTW planning failed");

  xi2_.resize(n);
  khat_.resize(n);
  for (int i = 0; i < grid_.n[0]; ++i) {
    const double k0 = grid_.frequency(0, i);
    for (int j = 0; j < grid_.n[1]; ++j) {
      const double k1 = grid_.frequency(1, j);
      for (int k = 0; k < grid_.n[2]; ++k) {
        const double k2 = grid_.frequency(2, k);
        const std::size_t idx = grid_.index(i, j, k);
        xi2_[idx] = k0 * k0 + k1 * k1 + k2 * k2;
        khat_[idx] = khat({k0, k1, k2});
      }
    }
  }
}

Spectral::~Spectral() {
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void Spectral::forward(const cplx* in, cplx* out) {
  if (in != out) std::copy(in, in + grid_.size(), out);
  auto* buf = reinterpret_cast<fftw_complex*>(out);
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), buf, buf);
}

void Spectral::inverse(const cplx* in, cplx* out) {
  const std::size_t n = grid_.size();
  if (in != out) std::copy(in, in + n, out);
  auto* buf = reinterpret_cast<fftw_complex*>(out);
  fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_), buf, buf);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) out[i] *= scale;
}

void check_same_grid(const Field& a, const Field& b) {
  if (!(a.grid == b.grid) || a.size() != b.size()) {
    throw std::invalid_argument("fields live on different grids");
  }
}

static void check_workspace(const Field& u, const Spectral& spectral) {
  if (!(u.grid == spectral.grid()) || u.size() != spectral.grid().size()) {
    throw std::invalid_argument("field and spectral workspace use different grids");
  }
}

std::vector<double> dipolar_potential_of_density(std::span<const double> density,
                                                 Spectral& spectral) {
  const std::size_t n = spectral.grid().size();
  if (density.size() != n) throw std::invalid_argument("density size does not match grid");
  std::vector<cplx> work(density.begin(), density.end());
  spectral.forward(work);
  const auto& kh = spectral.khat_table();
  for (std::size_t i = 0; i < n; ++i) work[i] *= kh[i];
  spectral.inverse(work);
  std::vector<double> out(n);
  double peak = 0.0;
  double imag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = work[i].real();
    peak = std::max(peak, std::abs(work[i]));
    imag = std::max(imag, std::abs(work[i].imag()));
  }
  if (imag > 1e-12 * peak && imag > 0.0) {
    throw std::runtime_error("dipolar_potential: imaginary residual above roundoff");
  }
  return out;
}

std::vector<double> dipolar_potential(const Field& u, Spectral& spectral) {
  check_workspace(u, spectral);
  std::vector<double> rho(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) rho[i] = std::norm(u[i]);
  return dipolar_potential_of_density(rho, spectral);
}

double mass_norm(const Field& u) {
  std::vector<double> t(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) t[i] = std::norm(u[i]);
  return std::sqrt(u.grid.cell_volume() * pairwise_sum(t));
}

double lp_pow(const Field& u, double p) {
  std::vector<double> t(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) t[i] = std::pow(std::abs(u[i]), p);
  return u.grid.cell_volume() * pairwise_sum(t);
}

double grad_norm_sq(const Field& u, Spectral& spectral) {
  check_workspace(u, spectral);
  std::vector<cplx> hat(u.size());
  spectral.forward(u.values.data(), hat.data());
  const auto& xi2 = spectral.xi2();
  std::vector<double> t(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) t[i] = xi2[i] * std::norm(hat[i]);
  return u.grid.cell_volume() / static_cast<double>(u.size()) * pairwise_sum(t);
}

FieldNorms norms(const Field& u, double p, Spectral& spectral) {
  FieldNorms out;
  out.mass = mass_norm(u);
  out.grad = std::sqrt(grad_norm_sq(u, spectral));
  out.lp = std::pow(lp_pow(u, p), 1.0 / p);
  out.l4 = std::pow(lp_pow(u, 4.0), 0.25);
  return out;
}

Field laplacian_apply(const Field& u, Spectral& spectral) {
  check_workspace(u, spectral);
  Field out(u.grid);
  out.real = u.real;
  spectral.forward(u.values.data(), out.values.data());
  const auto& xi2 = spectral.xi2();
  for (std::size_t i = 0; i < u.size(); ++i) out[i] *= -xi2[i];
  spectral.inverse(out.values);
  if (u.real) {
    for (auto& v : out.values) v = v.real();
  }
  return out;
}

cplx inner(const Field& f, const Field& g) {
  check_same_grid(f, g);
  std::vector<double> re(f.size());
  std::vector<double> im(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const cplx z = std::conj(f[i]) * g[i];
    re[i] = z.real();
    im[i] = z.imag();
  }
  const double h3 = f.grid.cell_volume();
  return {h3 * pairwise_sum(re), h3 * pairwise_sum(im)};
}

double h1_norm(const Field& u, Spectral& spectral) {
  check_workspace(u, spectral);
  std::vector<cplx> hat(u.size());
  spectral.forward(u.values.data(), hat.data());
  const auto& xi2 = spectral.xi2();
  std::vector<double> t(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) t[i] = (1.0 + xi2[i]) * std::norm(hat[i]);
  return std::sqrt(u.grid.cell_volume() / static_cast<double>(u.size()) * pairwise_sum(t));
}

void to_json(nlohmann::json& j, const Grid3& grid) {
  j = nlohmann::json{{"n", grid.n}, {"box", grid.box}};
}

void from_json(const nlohmann::json& j, Grid3& grid) {
  grid.n = j.at("n").get<std::array<int, 3>>();
  grid.box = j.at("box").get<std::array<double, 3>>();
}

}  // namespace dgpe
