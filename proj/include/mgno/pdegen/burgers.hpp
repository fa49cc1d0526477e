/// @file burgers.hpp
/// @brief Viscous Burgers u_t + (u^2/2)_x = nu u_xx on the periodic interval (0, 2 pi).

#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mgno::pde {

/// Non-finite state during time integration.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

struct BurgersOptions {
  double cfl = 0.5;      // dt <= cfl * h / max|u0|
  double max_dt = 1e-2;
};

struct BurgersSolution {
  std::vector<double> u;
  std::size_t steps = 0;
  double dt = 0.0;
};

/// Pseudospectral solve from u0 on x_j = 2 pi j / n to t_end: the diffusion term
/// through an exact integrating factor, the nonlinear term in physical space with
/// 2/3-rule dealiasing, classical RK4 in time.
BurgersSolution burgers_solve(const std::vector<double>& u0, double nu, double t_end = 1.0,
                              const BurgersOptions& opts = {});

}  // namespace mgno::pde
