#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "acflow/errors.hpp"
#include "acflow/grid.hpp"

namespace acflow {

namespace detail {
inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}
}  // namespace detail

struct CgReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Conjugate gradients for a symmetric positive-definite operator.
///
/// `apply(x, out)` writes A x into out. Fields must support inner, axpy and
/// xpby (see grid.hpp). `x` holds the initial guess on entry and the solution
/// on exit. Stops when ||b - A x|| <= tol * ||b||; throws KrylovBreakdown if
/// that is not reached within max_iter iterations or the operator loses
/// positivity.
template <class Field, class Apply>
CgReport conjugate_gradient(Apply&& apply, const Field& b, Field& x, double tol, int max_iter) {
  CgReport rep;
  const double bnorm2 = inner(b, b);
  if (bnorm2 == 0.0) {
    scale(0.0, x);
    return rep;
  }
  Field r = b;
  Field q = b;
  apply(x, q);
  axpy(-1.0, q, r);  // r = b - A x
  Field d = r;
  double rr = inner(r, r);
  const double target = tol * tol * bnorm2;
  while (rr > target) {
    if (rep.iterations >= max_iter) {
      rep.relative_residual = std::sqrt(rr / bnorm2);
      throw KrylovBreakdown("CG: no convergence after " + std::to_string(max_iter) +
                            " iterations (relative residual " + detail::sci(rep.relative_residual) + ")");
    }
    apply(d, q);
    const double dq = inner(d, q);
    if (!(dq > 0.0)) throw KrylovBreakdown("CG: operator is not positive definite on the search direction");
    const double alpha = rr / dq;
    axpy(alpha, d, x);
    axpy(-alpha, q, r);
    const double rr_new = inner(r, r);
    xpby(r, rr_new / rr, d);
    rr = rr_new;
    ++rep.iterations;
  }
  rep.relative_residual = std::sqrt(rr / bnorm2);
  return rep;
}

/// Restarted GMRES(m) with modified Gram-Schmidt and Givens rotations, for
/// general (nonsymmetric) operators. Same contract as conjugate_gradient.
template <class Field, class Apply>
CgReport gmres(Apply&& apply, const Field& b, Field& x, double tol, int max_iter, int restart = 20) {
  CgReport rep;
  const double bnorm = std::sqrt(inner(b, b));
  if (bnorm == 0.0) {
    scale(0.0, x);
    return rep;
  }
  const int m = std::max(1, restart);
  std::vector<Field> v(m + 1, b);
  std::vector<std::vector<double>> h(m + 1, std::vector<double>(m, 0.0));
  std::vector<double> cs(m), sn(m), g(m + 1);
  Field w = b;
  while (true) {
    apply(x, w);
    Field& r = v[0];
    r = b;
    axpy(-1.0, w, r);
    double beta = std::sqrt(inner(r, r));
    rep.relative_residual = beta / bnorm;
    if (rep.relative_residual <= tol) return rep;
    if (rep.iterations >= max_iter)
      throw KrylovBreakdown("GMRES: no convergence after " + std::to_string(max_iter) +
                            " iterations (relative residual " + detail::sci(rep.relative_residual) + ")");
    scale(1.0 / beta, r);
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int j = 0;
    for (; j < m && rep.iterations < max_iter; ++j) {
      apply(v[j], w);
      for (int i = 0; i <= j; ++i) {
        h[i][j] = inner(w, v[i]);
        axpy(-h[i][j], v[i], w);
      }
      const double hn = std::sqrt(inner(w, w));
      h[j + 1][j] = hn;
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
        h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
        h[i][j] = t;
      }
      const double den = std::hypot(h[j][j], h[j + 1][j]);
      if (!(den > 0.0)) throw KrylovBreakdown("GMRES: singular Hessenberg column");
      cs[j] = h[j][j] / den;
      sn[j] = h[j + 1][j] / den;
      h[j][j] = den;
      h[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      ++rep.iterations;
      const bool done = std::abs(g[j + 1]) <= tol * bnorm;
      if (hn > 0.0 && !done) {
        v[j + 1] = w;
        scale(1.0 / hn, v[j + 1]);
      }
      if (done || !(hn > 0.0)) {
        ++j;
        break;
      }
    }
    // Back-substitute the j x j triangular system and update x.
    std::vector<double> y(j);
    for (int i = j - 1; i >= 0; --i) {
      double s = g[i];
      for (int l = i + 1; l < j; ++l) s -= h[i][l] * y[l];
      y[i] = s / h[i][i];
    }
    for (int i = 0; i < j; ++i) axpy(y[i], v[i], x);
  }
}

}  // namespace acflow
