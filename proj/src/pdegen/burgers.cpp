#include "mgno/pdegen/burgers.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "fftw_lock.hpp"
#include "mgno/diffcore/aligned.hpp"

namespace mgno::pde {

namespace {

using cplx = std::complex<double>;
using RealBuffer = diff::Buffer;
using SpecBuffer = std::vector<cplx, diff::AlignedAllocator<cplx>>;

// Owns one r2c/c2r pair of plans over private buffers. The buffers are aligned so
// FFTW picks the same codelets, and gives the same bits, on every run.
class SpectralPair {
 public:
  explicit SpectralPair(std::size_t n) : n_(n), real_(n), spec_(n / 2 + 1) {
    std::lock_guard lock(fftw_plan_mutex());
    fwd_ = fftw_plan_dft_r2c_1d(int(n), real_.data(), as_fftw(spec_.data()), FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(int(n), as_fftw(spec_.data()), real_.data(), FFTW_ESTIMATE);
  }
  ~SpectralPair() {
    std::lock_guard lock(fftw_plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }
  SpectralPair(const SpectralPair&) = delete;
  SpectralPair& operator=(const SpectralPair&) = delete;

  RealBuffer& real() { return real_; }
  SpecBuffer& spec() { return spec_; }
  void forward() { fftw_execute(fwd_); }
  /// Unnormalized inverse; callers divide by n.
  void inverse() { fftw_execute(inv_); }

 private:
  static fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }
  std::size_t n_;
  RealBuffer real_;
  SpecBuffer spec_;
  fftw_plan fwd_, inv_;
};

}  // namespace

BurgersSolution burgers_solve(const std::vector<double>& u0, double nu, double t_end,
                              const BurgersOptions& opts) {
  const std::size_t n = u0.size();
  if (n < 4 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("burgers_solve: grid size must be a power of two, got " +
                                std::to_string(n));
  }
  if (!(nu > 0.0)) throw std::invalid_argument("burgers_solve: viscosity must be positive");
  if (!(t_end >= 0.0)) throw std::invalid_argument("burgers_solve: negative end time");

  const double h = 2.0 * std::numbers::pi / double(n);
  double umax = 0.0;
  for (double v : u0) {
    if (!std::isfinite(v)) throw BlowUpError("burgers_solve: non-finite initial condition", 0.0);
    umax = std::max(umax, std::abs(v));
  }
  double dt_bound = opts.max_dt;
  if (umax > 0.0) dt_bound = std::min(dt_bound, opts.cfl * h / umax);
  const std::size_t steps = t_end == 0.0 ? 0 : std::size_t(std::ceil(t_end / dt_bound - 1e-12));
  const double dt = steps ? t_end / double(steps) : 0.0;

  const std::size_t nk = n / 2 + 1;
  const std::size_t k_cut = n / 3;  // keep |k| <= n/3 in the nonlinear term
  std::vector<double> e_half(nk), e_full(nk);
  std::vector<cplx> g(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    const double kk = double(k);
    e_half[k] = std::exp(-nu * kk * kk * dt / 2.0);
    e_full[k] = e_half[k] * e_half[k];
    // d/dx of the Nyquist mode is taken as zero; it is also dealiased away.
    g[k] = (k == n / 2 || k > k_cut) ? cplx(0.0) : cplx(0.0, -0.5 * dt * kk);
  }

  SpectralPair fft(n);
  SpecBuffer v(nk), a(nk), b(nk), c(nk), d(nk), tmp(nk);
  std::copy(u0.begin(), u0.end(), fft.real().begin());
  fft.forward();
  v = fft.spec();

  // out = g * FFT((IFFT(w))^2)
  auto nonlinear = [&](const SpecBuffer& w, SpecBuffer& out) {
    fft.spec() = w;
    fft.inverse();
    const double inv_n = 1.0 / double(n);
    for (auto& x : fft.real()) {
      x *= inv_n;
      x *= x;
    }
    fft.forward();
    for (std::size_t k = 0; k < nk; ++k) out[k] = g[k] * fft.spec()[k];
  };

  for (std::size_t step = 0; step < steps; ++step) {
    nonlinear(v, a);
    for (std::size_t k = 0; k < nk; ++k) tmp[k] = e_half[k] * (v[k] + 0.5 * a[k]);
    nonlinear(tmp, b);
    for (std::size_t k = 0; k < nk; ++k) tmp[k] = e_half[k] * v[k] + 0.5 * b[k];
    nonlinear(tmp, c);
    for (std::size_t k = 0; k < nk; ++k) tmp[k] = e_full[k] * v[k] + e_half[k] * c[k];
    nonlinear(tmp, d);
    bool finite = true;
    for (std::size_t k = 0; k < nk; ++k) {
      v[k] = e_full[k] * v[k] + (e_full[k] * a[k] + 2.0 * e_half[k] * (b[k] + c[k]) + d[k]) / 6.0;
      finite &= std::isfinite(v[k].real()) && std::isfinite(v[k].imag());
    }
    if (!finite) {
      const double t = double(step + 1) * dt;
      throw BlowUpError("burgers_solve: non-finite state at t = " + std::to_string(t), t);
    }
  }

  BurgersSolution out;
  fft.spec() = v;
  fft.inverse();
  out.u.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.u[j] = fft.real()[j] / double(n);
  out.steps = steps;
  out.dt = dt;
  return out;
}

}  // namespace mgno::pde
