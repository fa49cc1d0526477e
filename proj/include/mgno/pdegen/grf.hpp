/// @file grf.hpp
/// @brief Gaussian random fields by spectral synthesis.

#pragma once

#include <cstddef>
#include <vector>

#include "mgno/diffcore/rng.hpp"

namespace mgno::pde {

struct GrfSpec {
  double alpha = 2.0;
  double tau = 9.0;
  double sigma = 1.0;
  std::size_t resolution = 64;
};

/// Throws std::invalid_argument unless alpha > dim/2 and the resolution is a power of two.
void validate(const GrfSpec& spec, std::size_t dim);

/// Field on the s x s grid x_i = i/(s-1) of the unit square (row-major, x index slowest):
///   sigma * sum_k sqrt(lambda_k) z_k phi_k,  lambda_k = (pi^2 |k|^2 + tau^2)^-alpha,
/// with the Neumann cosine basis phi_k, 0 <= k1, k2 < s, and the constant mode omitted.
std::vector<double> sample_grf_2d(const GrfSpec& spec, diff::SeededRng& rng);

/// Pointwise variance sum_k sigma^2 lambda_k phi_k(x)^2 of sample_grf_2d at grid node (i, j).
double grf_2d_variance(const GrfSpec& spec, std::size_t i, std::size_t j);

/// Piecewise-constant coefficient: a_hi where field >= 0, a_lo elsewhere.
std::vector<double> threshold_coefficient(const std::vector<double>& field, double a_hi = 12.0,
                                          double a_lo = 3.0);

/// Variance sigma^2 (4 pi^2 k^2 + tau^2)^-alpha of Fourier coefficient k.
double grf_1d_mode_variance(const GrfSpec& spec, double k);

/// Real periodic field on x_j = 2 pi j / n, u(x) = sum_{0 < |k| <= n/2} c_k e^{ikx} with
/// E|c_k|^2 = grf_1d_mode_variance(k) and c_{-k} = conj(c_k); the Nyquist coefficient is real.
std::vector<double> sample_grf_1d_periodic(const GrfSpec& spec, diff::SeededRng& rng);

}  // namespace mgno::pde
