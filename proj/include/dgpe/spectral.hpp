#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

namespace dgpe {

using cplx = std::complex<double>;

/// Periodic grid on [-L/2, L/2)^3. Node j on an axis sits at -L/2 + j h, so
/// the origin is node n/2. Storage is row-major with axis 2 fastest.
struct Grid3 {
  std::array<int, 3> n{64, 64, 64};
  std::array<double, 3> box{20.0, 20.0, 20.0};

  std::size_t size() const;
  double spacing(int axis) const { return box[axis] / n[axis]; }
  double cell_volume() const;
  double coord(int axis, int j) const { return -0.5 * box[axis] + j * spacing(axis); }
  /// Symmetric integer multiple of 2 pi / L for node j (Nyquist mode negative).
  double frequency(int axis, int j) const;
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n[1] + j) * n[2] + k;
  }
  /// Throws std::invalid_argument unless every n is even and >= 8 and box > 0.
  void validate() const;

  static Grid3 cube(int n, double box) { return Grid3{{n, n, n}, {box, box, box}}; }
  bool operator==(const Grid3&) const = default;
};

struct Field {
  Grid3 grid;
  std::vector<cplx> values;
  bool real = false;

  Field() = default;
  explicit Field(const Grid3& g) : grid(g), values(g.size()) {}

  std::size_t size() const { return values.size(); }
  cplx& operator[](std::size_t i) { return values[i]; }
  const cplx& operator[](std::size_t i) const { return values[i]; }
};

/// Samples f(x, y, z) on the grid nodes.
template <class F>
Field sample(const Grid3& grid, F&& f, bool real = false) {
  Field u(grid);
  u.real = real;
  for (int i = 0; i < grid.n[0]; ++i) {
    const double x = grid.coord(0, i);
    for (int j = 0; j < grid.n[1]; ++j) {
      const double y = grid.coord(1, j);
      for (int k = 0; k < grid.n[2]; ++k) {
        u.values[grid.index(i, j, k)] = f(x, y, grid.coord(2, k));
      }
    }
  }
  return u;
}

/// Pairwise (cascade) summation; fixed order for a given length.
double pairwise_sum(std::span<const double> values);

/// (4 pi / 3)(3 xi_3^2 / |xi|^2 - 1), and 0 at the origin.
double khat(const std::array<double, 3>& xi);

/// FFT workspace bound to one grid. Forward transforms are unnormalized and
/// the inverse carries 1/N. Each worker owns its own instance.
class Spectral {
 public:
  explicit Spectral(const Grid3& grid);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  const Grid3& grid() const { return grid_; }
  void forward(const cplx* in, cplx* out);
  void inverse(const cplx* in, cplx* out);
  void forward(std::vector<cplx>& data) { forward(data.data(), data.data()); }
  void inverse(std::vector<cplx>& data) { inverse(data.data(), data.data()); }

  /// |xi|^2 and khat(xi) in transform order.
  const std::vector<double>& xi2() const { return xi2_; }
  const std::vector<double>& khat_table() const { return khat_; }

 private:
  Grid3 grid_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
  std::vector<double> xi2_;
  std::vector<double> khat_;
};

/// Real field K * |u|^2 computed spectrally. Throws std::runtime_error if the
/// imaginary part exceeds 1e-12 of the maximum magnitude.
std::vector<double> dipolar_potential(const Field& u, Spectral& spectral);

/// Same from an explicit density.
std::vector<double> dipolar_potential_of_density(std::span<const double> density,
                                                 Spectral& spectral);

struct FieldNorms {
  double mass = 0.0;       // ||u||_2
  double grad = 0.0;       // ||grad u||_2
  double lp = 0.0;         // ||u||_p
  double l4 = 0.0;         // ||u||_4
};

FieldNorms norms(const Field& u, double p, Spectral& spectral);
double mass_norm(const Field& u);
double lp_pow(const Field& u, double p);
double grad_norm_sq(const Field& u, Spectral& spectral);

/// Spectral Laplacian (multiplier -|xi|^2).
Field laplacian_apply(const Field& u, Spectral& spectral);

/// Discrete L2 inner product h^3 sum conj(f) g.
cplx inner(const Field& f, const Field& g);

/// H^1 norm with weight (1 + |xi|^2) in Fourier space.
double h1_norm(const Field& u, Spectral& spectral);

void check_same_grid(const Field& a, const Field& b);

void to_json(nlohmann::json& j, const Grid3& grid);
void from_json(const nlohmann::json& j, Grid3& grid);

}  // namespace dgpe
