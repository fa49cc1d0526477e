#include "mgno/pdegen/grf.hpp"

#include "fftw_lock.hpp"
#include "mgno/diffcore/aligned.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mgno::pde {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double kPi = std::numbers::pi;

bool power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

double basis_norm(std::size_t k) { return k == 0 ? 1.0 : std::sqrt(2.0); }

double eigenvalue_2d(const GrfSpec& spec, std::size_t k1, std::size_t k2) {
  const double k2sum = double(k1 * k1 + k2 * k2);
  return std::pow(kPi * kPi * k2sum + spec.tau * spec.tau, -spec.alpha);
}

// C[i, k] = phi_k(x_i) for the 1-D Neumann cosine basis on the grid.
RowMat cosine_basis(std::size_t s) {
  RowMat c(s, s);
  const double h = 1.0 / double(s - 1);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t k = 0; k < s; ++k) c(i, k) = basis_norm(k) * std::cos(kPi * k * i * h);
  return c;
}

}  // namespace

std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

void validate(const GrfSpec& spec, std::size_t dim) {
  if (!(spec.alpha > 0.5 * double(dim))) {
    throw std::invalid_argument("grf: alpha must exceed dim/2 for a summable spectrum, got " +
                                std::to_string(spec.alpha));
  }
  if (!power_of_two(spec.resolution)) {
    throw std::invalid_argument("grf: resolution must be a power of two, got " +
                                std::to_string(spec.resolution));
  }
  if (spec.sigma < 0.0 || spec.tau < 0.0) throw std::invalid_argument("grf: negative sigma or tau");
}

std::vector<double> sample_grf_2d(const GrfSpec& spec, diff::SeededRng& rng) {
  validate(spec, 2);
  const std::size_t s = spec.resolution;
  RowMat coef(s, s);
  for (std::size_t k1 = 0; k1 < s; ++k1) {
    for (std::size_t k2 = 0; k2 < s; ++k2) {
      const double z = rng.normal();
      coef(k1, k2) = (k1 == 0 && k2 == 0) ? 0.0 : spec.sigma * std::sqrt(eigenvalue_2d(spec, k1, k2)) * z;
    }
  }
  const RowMat c = cosine_basis(s);
  const RowMat field = c * coef * c.transpose();
  return std::vector<double>(field.data(), field.data() + s * s);
}

double grf_2d_variance(const GrfSpec& spec, std::size_t i, std::size_t j) {
  const std::size_t s = spec.resolution;
  const double h = 1.0 / double(s - 1);
  double v = 0.0;
  for (std::size_t k1 = 0; k1 < s; ++k1) {
    const double p1 = basis_norm(k1) * std::cos(kPi * k1 * i * h);
    for (std::size_t k2 = 0; k2 < s; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      const double p2 = basis_norm(k2) * std::cos(kPi * k2 * j * h);
      v += eigenvalue_2d(spec, k1, k2) * p1 * p1 * p2 * p2;
    }
  }
  return spec.sigma * spec.sigma * v;
}

std::vector<double> threshold_coefficient(const std::vector<double>& field, double a_hi,
                                          double a_lo) {
  std::vector<double> a(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) a[i] = field[i] >= 0.0 ? a_hi : a_lo;
  return a;
}

double grf_1d_mode_variance(const GrfSpec& spec, double k) {
  return spec.sigma * spec.sigma * std::pow(4.0 * kPi * kPi * k * k + spec.tau * spec.tau, -spec.alpha);
}

std::vector<double> sample_grf_1d_periodic(const GrfSpec& spec, diff::SeededRng& rng) {
  validate(spec, 1);
  const std::size_t n = spec.resolution;
  // Aligned buffers keep FFTW's codelet choice, and so the result, independent of the heap.
  std::vector<std::complex<double>, diff::AlignedAllocator<std::complex<double>>> c(n / 2 + 1, 0.0);
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double var = grf_1d_mode_variance(spec, double(k));
    if (k == n / 2) {
      c[k] = std::sqrt(var) * rng.normal();
    } else {
      const double sd = std::sqrt(0.5 * var);
      const double re = rng.normal(), im = rng.normal();
      c[k] = {sd * re, sd * im};
    }
  }
  diff::Buffer out(n);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_plan_mutex());
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(c.data()),
                                out.data(), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
  return std::vector<double>(out.begin(), out.end());
}

}  // namespace mgno::pde
