#pragma once

// Staggered (MAC) grid on a rectangle [0,lx] x [0,ly].
//
// Pressure lives at cell centres p(i,j), i < nx, j < ny.
// ux lives on x-faces ux(i,j) at (i*hx, (j+1/2)*hy), i <= nx, j < ny.
// uy lives on y-faces uy(i,j) at ((i+1/2)*hx, j*hy), i < nx, j <= ny.
// All arrays are row-major (row = j).
//
// Periodic: face nx (resp. row ny) duplicates face 0 and is not a native
// site; operators read through a wrap and rewrite the duplicate.
// NoSlip: boundary-normal faces are zero; tangential velocity at walls is
// imposed through an odd (reflected) ghost value.

#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "acflow/errors.hpp"

namespace acflow {

enum class Boundary { Periodic, NoSlip };

inline std::string to_string(Boundary bc) {
  return bc == Boundary::Periodic ? "periodic" : "noslip";
}

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "periodic") return Boundary::Periodic;
  if (s == "noslip") return Boundary::NoSlip;
  throw ContractViolation("unknown boundary condition '" + s + "'");
}

struct GridSpec {
  int nx = 0;
  int ny = 0;
  double lx = 1.0;
  double ly = 1.0;
  Boundary bc = Boundary::Periodic;

  GridSpec() = default;
  GridSpec(int nx_, int ny_, double lx_, double ly_, Boundary bc_)
      : nx(nx_), ny(ny_), lx(lx_), ly(ly_), bc(bc_) {
    require(nx >= 4 && ny >= 4, "GridSpec: nx, ny must be >= 4");
    require(lx > 0.0 && ly > 0.0, "GridSpec: domain lengths must be positive");
  }

  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
  double cell_area() const { return hx() * hy(); }
  bool periodic() const { return bc == Boundary::Periodic; }

  std::size_t cells() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t x_faces() const { return static_cast<std::size_t>(nx + 1) * ny; }
  std::size_t y_faces() const { return static_cast<std::size_t>(nx) * (ny + 1); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline GridSpec unit_square(int n, Boundary bc) { return GridSpec(n, n, 1.0, 1.0, bc); }

struct ScalarField {
  GridSpec grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g) : grid(g), values(g.cells(), 0.0) {}

  double& operator()(int i, int j) { return values[static_cast<std::size_t>(j) * grid.nx + i]; }
  double operator()(int i, int j) const {
    return values[static_cast<std::size_t>(j) * grid.nx + i];
  }
};

struct VectorField {
  GridSpec grid;
  std::vector<double> ux;
  std::vector<double> uy;

  VectorField() = default;
  explicit VectorField(const GridSpec& g) : grid(g), ux(g.x_faces(), 0.0), uy(g.y_faces(), 0.0) {}

  double& x(int i, int j) { return ux[static_cast<std::size_t>(j) * (grid.nx + 1) + i]; }
  double x(int i, int j) const { return ux[static_cast<std::size_t>(j) * (grid.nx + 1) + i]; }
  double& y(int i, int j) { return uy[static_cast<std::size_t>(j) * grid.nx + i]; }
  double y(int i, int j) const { return uy[static_cast<std::size_t>(j) * grid.nx + i]; }
};

inline void check_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
  if (!(a == b)) throw ContractViolation(std::string(where) + ": grid mismatch");
}

inline bool all_finite(const ScalarField& p) {
  for (double v : p.values)
    if (!std::isfinite(v)) return false;
  return true;
}

inline bool all_finite(const VectorField& u) {
  for (double v : u.ux)
    if (!std::isfinite(v)) return false;
  for (double v : u.uy)
    if (!std::isfinite(v)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Boundary handling

/// Copy the periodic duplicates (face nx <- face 0, row ny <- row 0).
inline void sync_periodic(VectorField& u) {
  if (!u.grid.periodic()) return;
  const int nx = u.grid.nx, ny = u.grid.ny;
  for (int j = 0; j < ny; ++j) u.x(nx, j) = u.x(0, j);
  for (int i = 0; i < nx; ++i) u.y(i, ny) = u.y(i, 0);
}

inline void zero_normal_boundary(VectorField& u) {
  if (u.grid.periodic()) return;
  const int nx = u.grid.nx, ny = u.grid.ny;
  for (int j = 0; j < ny; ++j) {
    u.x(0, j) = 0.0;
    u.x(nx, j) = 0.0;
  }
  for (int i = 0; i < nx; ++i) {
    u.y(i, 0) = 0.0;
    u.y(i, ny) = 0.0;
  }
}

inline void apply_bc_inplace(VectorField& u) {
  if (u.grid.periodic())
    sync_periodic(u);
  else
    zero_normal_boundary(u);
}

/// Impose the velocity boundary condition. Tangential no-slip is carried by
/// the reflected ghost inside each stencil, so only normal faces are touched.
inline VectorField apply_bc(VectorField u) {
  apply_bc_inplace(u);
  return u;
}

// ---------------------------------------------------------------------------
// Inner products. Fixed reduction order (four interleaved partial sums, then
// combined left to right), so results are reproducible bit for bit.

namespace detail {
inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}
}  // namespace detail

inline double inner(const ScalarField& a, const ScalarField& b) {
  check_same_grid(a.grid, b.grid, "inner");
  return detail::dot(a.values.data(), b.values.data(), a.values.size()) * a.grid.cell_area();
}

inline double inner(const VectorField& a, const VectorField& b) {
  check_same_grid(a.grid, b.grid, "inner");
  const GridSpec& g = a.grid;
  const int nx = g.nx, ny = g.ny;
  // Native x-faces: i < nx when periodic, every face otherwise.
  const int xi_end = g.periodic() ? nx : nx + 1;
  const int yj_end = g.periodic() ? ny : ny + 1;
  double s = 0.0;
  if (xi_end == nx + 1) {
    s = detail::dot(a.ux.data(), b.ux.data(), a.ux.size());
  } else {
    for (int j = 0; j < ny; ++j) {
      const std::size_t off = static_cast<std::size_t>(j) * (nx + 1);
      s += detail::dot(a.ux.data() + off, b.ux.data() + off, static_cast<std::size_t>(xi_end));
    }
  }
  const std::size_t ny_sites = static_cast<std::size_t>(yj_end) * nx;
  s += detail::dot(a.uy.data(), b.uy.data(), ny_sites);
  return s * g.cell_area();
}

template <class Field>
double l2norm(const Field& a) {
  return std::sqrt(inner(a, a));
}

// Linear-algebra helpers used by the Krylov solver and steppers.

inline void axpy(double alpha, const ScalarField& x, ScalarField& y) {
  for (std::size_t k = 0; k < y.values.size(); ++k) y.values[k] += alpha * x.values[k];
}

inline void axpy(double alpha, const VectorField& x, VectorField& y) {
  for (std::size_t k = 0; k < y.ux.size(); ++k) y.ux[k] += alpha * x.ux[k];
  for (std::size_t k = 0; k < y.uy.size(); ++k) y.uy[k] += alpha * x.uy[k];
}

/// y = x + beta * y
inline void xpby(const ScalarField& x, double beta, ScalarField& y) {
  for (std::size_t k = 0; k < y.values.size(); ++k) y.values[k] = x.values[k] + beta * y.values[k];
}

inline void xpby(const VectorField& x, double beta, VectorField& y) {
  for (std::size_t k = 0; k < y.ux.size(); ++k) y.ux[k] = x.ux[k] + beta * y.ux[k];
  for (std::size_t k = 0; k < y.uy.size(); ++k) y.uy[k] = x.uy[k] + beta * y.uy[k];
}

inline void scale(double alpha, ScalarField& x) {
  for (double& v : x.values) v *= alpha;
}

inline void scale(double alpha, VectorField& x) {
  for (double& v : x.ux) v *= alpha;
  for (double& v : x.uy) v *= alpha;
}

template <class Field>
Field linear_combination(double a, const Field& x, double b, const Field& y) {
  Field out = x;
  scale(a, out);
  axpy(b, y, out);
  return out;
}

// ---------------------------------------------------------------------------
// Discrete operators

inline void divergence_into(const VectorField& u, ScalarField& out) {
  const GridSpec& g = u.grid;
  const int nx = g.nx, ny = g.ny;
  const double rhx = 1.0 / g.hx(), rhy = 1.0 / g.hy();
  const bool per = g.periodic();
  for (int j = 0; j < ny; ++j) {
    const int jp = (per && j + 1 == ny) ? 0 : j + 1;
    for (int i = 0; i < nx; ++i) {
      const int ip = (per && i + 1 == nx) ? 0 : i + 1;
      out(i, j) = (u.x(ip, j) - u.x(i, j)) * rhx + (u.y(i, jp) - u.y(i, j)) * rhy;
    }
  }
}

inline ScalarField divergence(const VectorField& u) {
  ScalarField out(u.grid);
  divergence_into(u, out);
  return out;
}

inline void gradient_into(const ScalarField& p, VectorField& out) {
  const GridSpec& g = p.grid;
  const int nx = g.nx, ny = g.ny;
  const double rhx = 1.0 / g.hx(), rhy = 1.0 / g.hy();
  if (g.periodic()) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const int im = i == 0 ? nx - 1 : i - 1;
        out.x(i, j) = (p(i, j) - p(im, j)) * rhx;
      }
    for (int j = 0; j < ny; ++j) {
      const int jm = j == 0 ? ny - 1 : j - 1;
      for (int i = 0; i < nx; ++i) out.y(i, j) = (p(i, j) - p(i, jm)) * rhy;
    }
    sync_periodic(out);
    return;
  }
  for (int j = 0; j < ny; ++j) {
    out.x(0, j) = 0.0;
    for (int i = 1; i < nx; ++i) out.x(i, j) = (p(i, j) - p(i - 1, j)) * rhx;
    out.x(nx, j) = 0.0;
  }
  for (int i = 0; i < nx; ++i) {
    out.y(i, 0) = 0.0;
    out.y(i, ny) = 0.0;
  }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) out.y(i, j) = (p(i, j) - p(i, j - 1)) * rhy;
}

inline VectorField gradient(const ScalarField& p) {
  VectorField out(p.grid);
  gradient_into(p, out);
  return out;
}

/// 5-point Laplacian of each component on its own face set. Under NoSlip the
/// boundary-normal faces are treated as zero and output zero, which keeps the
/// operator symmetric on the interior unknowns.
inline void laplacian_into(const VectorField& u, VectorField& out) {
  const GridSpec& g = u.grid;
  const int nx = g.nx, ny = g.ny;
  const double cx = 1.0 / (g.hx() * g.hx()), cy = 1.0 / (g.hy() * g.hy());
  if (g.periodic()) {
    for (int j = 0; j < ny; ++j) {
      const int jm = j == 0 ? ny - 1 : j - 1, jp = j + 1 == ny ? 0 : j + 1;
      for (int i = 0; i < nx; ++i) {
        const int im = i == 0 ? nx - 1 : i - 1, ip = i + 1 == nx ? 0 : i + 1;
        const double c = u.x(i, j);
        out.x(i, j) = (u.x(ip, j) - 2.0 * c + u.x(im, j)) * cx + (u.x(i, jp) - 2.0 * c + u.x(i, jm)) * cy;
        const double d = u.y(i, j);
        out.y(i, j) = (u.y(ip, j) - 2.0 * d + u.y(im, j)) * cx + (u.y(i, jp) - 2.0 * d + u.y(i, jm)) * cy;
      }
    }
    sync_periodic(out);
    return;
  }
  // ux: interior faces 1..nx-1, walls at y = 0, ly via odd ghosts.
  for (int j = 0; j < ny; ++j) {
    out.x(0, j) = 0.0;
    out.x(nx, j) = 0.0;
    for (int i = 1; i < nx; ++i) {
      const double c = u.x(i, j);
      const double w = i - 1 == 0 ? 0.0 : u.x(i - 1, j);
      const double e = i + 1 == nx ? 0.0 : u.x(i + 1, j);
      const double s = j == 0 ? -c : u.x(i, j - 1);
      const double n = j + 1 == ny ? -c : u.x(i, j + 1);
      out.x(i, j) = (e - 2.0 * c + w) * cx + (n - 2.0 * c + s) * cy;
    }
  }
  for (int i = 0; i < nx; ++i) {
    out.y(i, 0) = 0.0;
    out.y(i, ny) = 0.0;
  }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double c = u.y(i, j);
      const double s = j - 1 == 0 ? 0.0 : u.y(i, j - 1);
      const double n = j + 1 == ny ? 0.0 : u.y(i, j + 1);
      const double w = i == 0 ? -c : u.y(i - 1, j);
      const double e = i + 1 == nx ? -c : u.y(i + 1, j);
      out.y(i, j) = (e - 2.0 * c + w) * cx + (n - 2.0 * c + s) * cy;
    }
}

inline VectorField laplacian(const VectorField& u) {
  VectorField out(u.grid);
  laplacian_into(u, out);
  return out;
}

inline VectorField grad_div(const VectorField& u) { return gradient(divergence(u)); }

/// Discrete Dirichlet energy int |grad u|^2, consistent with laplacian():
/// grad_norm_sq(u) == -inner(laplacian(u), u) for admissible u.
inline double grad_norm_sq(const VectorField& u) {
  const GridSpec& g = u.grid;
  const int nx = g.nx, ny = g.ny;
  const double cx = 1.0 / (g.hx() * g.hx()), cy = 1.0 / (g.hy() * g.hy());
  double sx = 0.0, sy = 0.0;
  auto sq = [](double v) { return v * v; };
  if (g.periodic()) {
    for (int j = 0; j < ny; ++j) {
      const int jp = j + 1 == ny ? 0 : j + 1;
      for (int i = 0; i < nx; ++i) {
        const int ip = i + 1 == nx ? 0 : i + 1;
        sx += sq(u.x(ip, j) - u.x(i, j)) + sq(u.y(ip, j) - u.y(i, j));
        sy += sq(u.x(i, jp) - u.x(i, j)) + sq(u.y(i, jp) - u.y(i, j));
      }
    }
    return (sx * cx + sy * cy) * g.cell_area();
  }
  // ux: x-differences between all faces (boundary faces are zero), y-differences
  // between rows plus the wall contribution 2*u^2 from the odd ghost.
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double a = i == 0 ? 0.0 : u.x(i, j);
      const double b = i + 1 == nx ? 0.0 : u.x(i + 1, j);
      sx += sq(b - a);
    }
  for (int i = 1; i < nx; ++i) {
    for (int j = 0; j + 1 < ny; ++j) sy += sq(u.x(i, j + 1) - u.x(i, j));
    sy += 2.0 * sq(u.x(i, 0)) + 2.0 * sq(u.x(i, ny - 1));
  }
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const double a = j == 0 ? 0.0 : u.y(i, j);
      const double b = j + 1 == ny ? 0.0 : u.y(i, j + 1);
      sy += sq(b - a);
    }
  for (int j = 1; j < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) sx += sq(u.y(i + 1, j) - u.y(i, j));
    sx += 2.0 * sq(u.y(0, j)) + 2.0 * sq(u.y(nx - 1, j));
  }
  return (sx * cx + sy * cy) * g.cell_area();
}

// ---------------------------------------------------------------------------
// Sampling closed-form functions at native sites

using ScalarFn = std::function<double(double x, double y)>;

inline ScalarField sample_scalar(const GridSpec& g, const ScalarFn& f) {
  ScalarField p(g);
  const double hx = g.hx(), hy = g.hy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) p(i, j) = f((i + 0.5) * hx, (j + 0.5) * hy);
  return p;
}

inline VectorField sample_vector(const GridSpec& g, const ScalarFn& fx, const ScalarFn& fy) {
  VectorField u(g);
  const double hx = g.hx(), hy = g.hy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) u.x(i, j) = fx(i * hx, (j + 0.5) * hy);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) u.y(i, j) = fy((i + 0.5) * hx, j * hy);
  apply_bc_inplace(u);
  return u;
}

// ---------------------------------------------------------------------------
// Snapshot format:
//   FIELD <scalar|vector> <nx> <ny> <lx> <ly> <periodic|noslip>
// then one value per line (vector: all ux, then all uy), 17 significant digits.

namespace detail {
inline void write_header(std::ostream& os, const char* kind, const GridSpec& g) {
  os.precision(17);
  os << "FIELD " << kind << ' ' << g.nx << ' ' << g.ny << ' ' << g.lx << ' ' << g.ly << ' '
     << to_string(g.bc) << '\n';
}

inline GridSpec read_header(std::istream& is, const std::string& expected_kind) {
  std::string tag, kind, bc;
  int nx = 0, ny = 0;
  double lx = 0, ly = 0;
  if (!(is >> tag >> kind >> nx >> ny >> lx >> ly >> bc) || tag != "FIELD")
    throw ContractViolation("snapshot: malformed header");
  if (kind != expected_kind) throw ContractViolation("snapshot: expected " + expected_kind + ", got " + kind);
  return GridSpec(nx, ny, lx, ly, boundary_from_string(bc));
}

inline void read_values(std::istream& is, std::span<double> out) {
  for (double& v : out)
    if (!(is >> v)) throw ContractViolation("snapshot: truncated value list");
}
}  // namespace detail

inline void write_snapshot(std::ostream& os, const ScalarField& p) {
  detail::write_header(os, "scalar", p.grid);
  for (double v : p.values) os << v << '\n';
}

inline void write_snapshot(std::ostream& os, const VectorField& u) {
  detail::write_header(os, "vector", u.grid);
  for (double v : u.ux) os << v << '\n';
  for (double v : u.uy) os << v << '\n';
}

inline ScalarField read_scalar_snapshot(std::istream& is) {
  ScalarField p(detail::read_header(is, "scalar"));
  detail::read_values(is, p.values);
  return p;
}

inline VectorField read_vector_snapshot(std::istream& is) {
  VectorField u(detail::read_header(is, "vector"));
  detail::read_values(is, u.ux);
  detail::read_values(is, u.uy);
  return u;
}

}  // namespace acflow
