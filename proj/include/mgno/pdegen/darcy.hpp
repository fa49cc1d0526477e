/// @file darcy.hpp
/// @brief Steady Darcy flow -div(a grad u) = f on the unit square with u = 0 on the boundary.
///
/// Grids are s x s nodes including the boundary, x_i = i h with h = 1/(s-1),
/// stored row-major with the x index slowest.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mgno::pde {

/// CG failed to reach the requested tolerance; carries the last relative residual.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct DarcyOptions {
  double tolerance = 1e-8;  // relative residual
  std::size_t max_iterations = 20000;
};

struct DarcySolution {
  std::vector<double> u;
  std::size_t iterations = 0;
  double residual = 0.0;
};

/// Five-point conservative scheme with harmonic-mean face coefficients, solved
/// with Jacobi-preconditioned conjugate gradients. `f` is a full s x s grid.
DarcySolution darcy_solve(const std::vector<double>& a, const std::vector<double>& f,
                          std::size_t s, const DarcyOptions& opts = {});

/// Constant forcing convenience overload.
DarcySolution darcy_solve(const std::vector<double>& a, double f, std::size_t s,
                          const DarcyOptions& opts = {});

/// Central differences in the interior, one-sided on the boundary.
/// Returns [da/dx1 grid, da/dx2 grid] concatenated (2 x s x s).
std::vector<double> grid_gradient(const std::vector<double>& a, std::size_t s);

}  // namespace mgno::pde
