#include "mgno/pdegen/darcy.hpp"

#include <cmath>
#include <string>

namespace mgno::pde {

namespace {

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

// Face coefficients of the interior operator, stored per interior node.
struct Stencil {
  std::size_t m = 0;  // interior nodes per side
  std::vector<double> west, east, south, north, diag;

  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t p = i * m + j;
        double v = diag[p] * x[p];
        if (i > 0) v -= west[p] * x[p - m];
        if (i + 1 < m) v -= east[p] * x[p + m];
        if (j > 0) v -= south[p] * x[p - 1];
        if (j + 1 < m) v -= north[p] * x[p + 1];
        y[p] = v;
      }
    }
  }
};

Stencil build_stencil(const std::vector<double>& a, std::size_t s) {
  Stencil st;
  st.m = s - 2;
  const std::size_t n = st.m * st.m;
  st.west.resize(n);
  st.east.resize(n);
  st.south.resize(n);
  st.north.resize(n);
  st.diag.resize(n);
  const double inv_h2 = double(s - 1) * double(s - 1);
  for (std::size_t i = 1; i + 1 < s; ++i) {
    for (std::size_t j = 1; j + 1 < s; ++j) {
      const std::size_t p = (i - 1) * st.m + (j - 1);
      const double c = a[i * s + j];
      st.west[p] = harmonic(c, a[(i - 1) * s + j]) * inv_h2;
      st.east[p] = harmonic(c, a[(i + 1) * s + j]) * inv_h2;
      st.south[p] = harmonic(c, a[i * s + j - 1]) * inv_h2;
      st.north[p] = harmonic(c, a[i * s + j + 1]) * inv_h2;
      st.diag[p] = st.west[p] + st.east[p] + st.south[p] + st.north[p];
    }
  }
  return st;
}

double dot(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

}  // namespace

DarcySolution darcy_solve(const std::vector<double>& a, const std::vector<double>& f,
                          std::size_t s, const DarcyOptions& opts) {
  if (s < 3) throw std::invalid_argument("darcy_solve: grid needs at least 3 nodes per side");
  if (a.size() != s * s || f.size() != s * s) {
    throw std::invalid_argument("darcy_solve: a and f must be " + std::to_string(s) + "x" +
                                std::to_string(s) + " grids");
  }
  for (double v : a) {
    if (!(v > 0.0)) throw std::invalid_argument("darcy_solve: coefficient must be positive");
  }
  const Stencil st = build_stencil(a, s);
  const std::size_t m = st.m, n = m * m;
  std::vector<double> b(n), x(n, 0.0), r(n), z(n), p(n), q(n);
  for (std::size_t i = 1; i + 1 < s; ++i)
    for (std::size_t j = 1; j + 1 < s; ++j) b[(i - 1) * m + (j - 1)] = f[i * s + j];

  DarcySolution out;
  out.u.assign(s * s, 0.0);
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) return out;

  r = b;
  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / st.diag[i];
  p = z;
  double rz = dot(r, z);
  double rel = 1.0;
  std::size_t it = 0;
  for (; it < opts.max_iterations; ++it) {
    rel = std::sqrt(dot(r, r)) / bnorm;
    if (rel <= opts.tolerance) break;
    st.apply(p, q);
    const double alpha = rz / dot(p, q);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / st.diag[i];
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  if (!(rel <= opts.tolerance)) {
    throw SolverError("darcy_solve: CG did not converge in " + std::to_string(opts.max_iterations) +
                          " iterations, relative residual " + std::to_string(rel),
                      rel);
  }
  for (std::size_t i = 1; i + 1 < s; ++i)
    for (std::size_t j = 1; j + 1 < s; ++j) out.u[i * s + j] = x[(i - 1) * m + (j - 1)];
  out.iterations = it;
  out.residual = rel;
  return out;
}

DarcySolution darcy_solve(const std::vector<double>& a, double f, std::size_t s,
                          const DarcyOptions& opts) {
  return darcy_solve(a, std::vector<double>(s * s, f), s, opts);
}

std::vector<double> grid_gradient(const std::vector<double>& a, std::size_t s) {
  if (a.size() != s * s || s < 2) throw std::invalid_argument("grid_gradient: bad grid");
  const double h = 1.0 / double(s - 1);
  std::vector<double> g(2 * s * s);
  auto at = [&](std::size_t i, std::size_t j) { return a[i * s + j]; };
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      double dx, dy;
      if (i == 0) dx = (at(1, j) - at(0, j)) / h;
      else if (i + 1 == s) dx = (at(i, j) - at(i - 1, j)) / h;
      else dx = (at(i + 1, j) - at(i - 1, j)) / (2 * h);
      if (j == 0) dy = (at(i, 1) - at(i, 0)) / h;
      else if (j + 1 == s) dy = (at(i, j) - at(i, j - 1)) / h;
      else dy = (at(i, j + 1) - at(i, j - 1)) / (2 * h);
      g[i * s + j] = dx;
      g[s * s + i * s + j] = dy;
    }
  }
  return g;
}

}  // namespace mgno::pde
