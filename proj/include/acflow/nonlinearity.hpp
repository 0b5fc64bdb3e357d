#pragma once

#include <string>

#include "acflow/grid.hpp"

namespace acflow {

enum class NonlinearityForm { Skew, Rotational, Emac };

inline std::string to_string(NonlinearityForm f) {
  switch (f) {
    case NonlinearityForm::Skew: return "skew";
    case NonlinearityForm::Rotational: return "rotational";
    case NonlinearityForm::Emac: return "emac";
  }
  return "?";
}

inline NonlinearityForm nonlinearity_from_string(const std::string& s) {
  if (s == "skew") return NonlinearityForm::Skew;
  if (s == "rotational") return NonlinearityForm::Rotational;
  if (s == "emac") return NonlinearityForm::Emac;
  throw ContractViolation("unknown nonlinearity form '" + s + "'");
}

namespace detail {

// Skew form (w.grad)u + 1/2 (div w) u as the antisymmetric part of the
// flux-form advection operator. Each pair of neighbouring unknowns a, b of the
// same component shares one transport coefficient c_ab (the advecting
// velocity interpolated to the point between them), and
//   (K u)_a = sum_b s_ab c_ab u_b / (2h),   s_ab = +1 on the plus side, -1 otherwise,
// so K^T = -K and <K u, u> = 0 for any w. Wall edges (no-slip) carry no flux.
inline void skew_into(const VectorField& w, const VectorField& u, VectorField& out) {
  const GridSpec& g = u.grid;
  const int nx = g.nx, ny = g.ny;
  const double ax = 0.25 / g.hx(), ay = 0.25 / g.hy();  // (1/2 interpolation) * 1/(2h)
  if (g.periodic()) {
    for (int j = 0; j < ny; ++j) {
      const int jm = j == 0 ? ny - 1 : j - 1, jp = j + 1 == ny ? 0 : j + 1;
      for (int i = 0; i < nx; ++i) {
        const int im = i == 0 ? nx - 1 : i - 1, ip = i + 1 == nx ? 0 : i + 1;
        // ux(i,j): cell centres (i,j), (i-1,j); nodes (i,j+1), (i,j).
        const double cxp = w.x(i, j) + w.x(ip, j);
        const double cxm = w.x(im, j) + w.x(i, j);
        const double cyp = w.y(im, jp) + w.y(i, jp);
        const double cym = w.y(im, j) + w.y(i, j);
        out.x(i, j) = ax * (cxp * u.x(ip, j) - cxm * u.x(im, j)) + ay * (cyp * u.x(i, jp) - cym * u.x(i, jm));
        // uy(i,j): nodes (i+1,j), (i,j); cell centres (i,j), (i,j-1).
        const double dxp = w.x(ip, jm) + w.x(ip, j);
        const double dxm = w.x(i, jm) + w.x(i, j);
        const double dyp = w.y(i, j) + w.y(i, jp);
        const double dym = w.y(i, jm) + w.y(i, j);
        out.y(i, j) = ax * (dxp * u.y(ip, j) - dxm * u.y(im, j)) + ay * (dyp * u.y(i, jp) - dym * u.y(i, jm));
      }
    }
    sync_periodic(out);
    return;
  }
  for (int j = 0; j < ny; ++j) {
    out.x(0, j) = 0.0;
    out.x(nx, j) = 0.0;
    for (int i = 1; i < nx; ++i) {
      const double cxp = w.x(i, j) + w.x(i + 1, j);
      const double cxm = w.x(i - 1, j) + w.x(i, j);
      const double cyp = j + 1 == ny ? 0.0 : w.y(i - 1, j + 1) + w.y(i, j + 1);
      const double cym = j == 0 ? 0.0 : w.y(i - 1, j) + w.y(i, j);
      const double ue = i + 1 == nx ? 0.0 : u.x(i + 1, j);
      const double uw = i - 1 == 0 ? 0.0 : u.x(i - 1, j);
      const double un = j + 1 == ny ? 0.0 : u.x(i, j + 1);
      const double us = j == 0 ? 0.0 : u.x(i, j - 1);
      out.x(i, j) = ax * (cxp * ue - cxm * uw) + ay * (cyp * un - cym * us);
    }
  }
  for (int i = 0; i < nx; ++i) {
    out.y(i, 0) = 0.0;
    out.y(i, ny) = 0.0;
  }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double dxp = i + 1 == nx ? 0.0 : w.x(i + 1, j - 1) + w.x(i + 1, j);
      const double dxm = i == 0 ? 0.0 : w.x(i, j - 1) + w.x(i, j);
      const double dyp = w.y(i, j) + w.y(i, j + 1);
      const double dym = w.y(i, j - 1) + w.y(i, j);
      const double ve = i + 1 == nx ? 0.0 : u.y(i + 1, j);
      const double vw = i == 0 ? 0.0 : u.y(i - 1, j);
      const double vn = j + 1 == ny ? 0.0 : u.y(i, j + 1);
      const double vs = j - 1 == 0 ? 0.0 : u.y(i, j - 1);
      out.y(i, j) = ax * (dxp * ve - dxm * vw) + ay * (dyp * vn - dym * vs);
    }
}

// Node-centred helpers for the rotational and EMAC forms. Nodes (i,j) sit at
// (i*hx, j*hy), 0 <= i <= nx, 0 <= j <= ny; wall ghosts are odd reflections.
struct NodeStencil {
  const VectorField& u;
  int nx, ny;
  bool per;

  double ux_at(int i, int j) const {  // j may be -1 or ny (ghost rows)
    if (per) return u.x((i % nx + nx) % nx, (j % ny + ny) % ny);
    if (j < 0) return -u.x(i, 0);
    if (j >= ny) return -u.x(i, ny - 1);
    return u.x(i, j);
  }
  double uy_at(int i, int j) const {  // i may be -1 or nx (ghost columns)
    if (per) return u.y((i % nx + nx) % nx, (j % ny + ny) % ny);
    if (i < 0) return -u.y(0, j);
    if (i >= nx) return -u.y(nx - 1, j);
    return u.y(i, j);
  }
  double dvdx(int i, int j, double hx) const { return (uy_at(i, j) - uy_at(i - 1, j)) / hx; }
  double dudy(int i, int j, double hy) const { return (ux_at(i, j) - ux_at(i, j - 1)) / hy; }
};

inline void rotational_into(const VectorField& w, const VectorField& u, VectorField& out) {
  const GridSpec& g = u.grid;
  const int nx = g.nx, ny = g.ny;
  const double hx = g.hx(), hy = g.hy();
  const NodeStencil ws{w, nx, ny, g.periodic()};
  const NodeStencil us{u, nx, ny, g.periodic()};
  auto omega = [&](int i, int j) { return ws.dvdx(i, j, hx) - ws.dudy(i, j, hy); };
  const int x_lo = g.periodic() ? 0 : 1;
  const int y_lo = g.periodic() ? 0 : 1;
  out = VectorField(g);
  for (int j = 0; j < ny; ++j)
    for (int i = x_lo; i < nx; ++i) {
      const double om = 0.5 * (omega(i, j) + omega(i, j + 1));
      const double v = 0.25 * (us.uy_at(i - 1, j) + us.uy_at(i, j) + us.uy_at(i - 1, j + 1) + us.uy_at(i, j + 1));
      out.x(i, j) = -om * v;
    }
  for (int j = y_lo; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double om = 0.5 * (omega(i, j) + omega(i + 1, j));
      const double v = 0.25 * (us.ux_at(i, j - 1) + us.ux_at(i + 1, j - 1) + us.ux_at(i, j) + us.ux_at(i + 1, j));
      out.y(i, j) = om * v;
    }
  apply_bc_inplace(out);
}

inline void emac_into(const VectorField& w, const VectorField& u, VectorField& out) {
  const GridSpec& g = u.grid;
  const int nx = g.nx, ny = g.ny;
  const double hx = g.hx(), hy = g.hy();
  const bool per = g.periodic();
  const NodeStencil ws{w, nx, ny, per};
  const NodeStencil us{u, nx, ny, per};
  const ScalarField div = divergence(u);
  auto divc = [&](int i, int j) { return div(per ? (i + nx) % nx : i, per ? (j + ny) % ny : j); };
  auto shear = [&](int i, int j) { return us.dudy(i, j, hy) + us.dvdx(i, j, hx); };
  const int x_lo = per ? 0 : 1, y_lo = per ? 0 : 1;
  out = VectorField(g);
  for (int j = 0; j < ny; ++j)
    for (int i = x_lo; i < nx; ++i) {
      const double dudx = (us.ux_at(i + 1, j) - us.ux_at(i - 1, j)) / (2.0 * hx);
      const double s = 0.5 * (shear(i, j) + shear(i, j + 1));
      const double d = 0.5 * (divc(i - 1, j) + divc(i, j));
      const double wx = w.x(i, j);
      const double wy = 0.25 * (ws.uy_at(i - 1, j) + ws.uy_at(i, j) + ws.uy_at(i - 1, j + 1) + ws.uy_at(i, j + 1));
      out.x(i, j) = 2.0 * dudx * wx + s * wy + d * wx;
    }
  for (int j = y_lo; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double dvdy = (us.uy_at(i, j + 1) - us.uy_at(i, j - 1)) / (2.0 * hy);
      const double s = 0.5 * (shear(i, j) + shear(i + 1, j));
      const double d = 0.5 * (divc(i, j - 1) + divc(i, j));
      const double wy = w.y(i, j);
      const double wx = 0.25 * (ws.ux_at(i, j - 1) + ws.ux_at(i + 1, j - 1) + ws.ux_at(i, j) + ws.ux_at(i + 1, j));
      out.y(i, j) = s * wx + 2.0 * dvdy * wy + d * wy;
    }
  apply_bc_inplace(out);
}

}  // namespace detail

/// Convective term N(w; u) with advecting field w. Bilinear in (w, u).
inline void convective_into(NonlinearityForm form, const VectorField& w, const VectorField& u, VectorField& out) {
  check_same_grid(w.grid, u.grid, "convective");
  if (!(out.grid == u.grid)) out = VectorField(u.grid);
  switch (form) {
    case NonlinearityForm::Skew: detail::skew_into(w, u, out); break;
    case NonlinearityForm::Rotational: detail::rotational_into(w, u, out); break;
    case NonlinearityForm::Emac: detail::emac_into(w, u, out); break;
  }
}

inline VectorField convective(NonlinearityForm form, const VectorField& w, const VectorField& u) {
  VectorField out(u.grid);
  convective_into(form, w, u, out);
  return out;
}

}  // namespace acflow
