#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include <fftw3.h>

#include "csv.hpp"
#include "errors.hpp"

namespace duowave {

enum class CovarianceFamily { gaussian, gaussian_derivative, band_limited };

inline const char* family_name(CovarianceFamily f)
{
  switch (f) {
  case CovarianceFamily::gaussian: return "gaussian";
  case CovarianceFamily::gaussian_derivative: return "gaussian_derivative";
  case CovarianceFamily::band_limited: return "band_limited";
  }
  return "?";
}

inline bool parse_family(const std::string& s, CovarianceFamily& out)
{
  if (s == "gaussian") out = CovarianceFamily::gaussian;
  else if (s == "gaussian_derivative") out = CovarianceFamily::gaussian_derivative;
  else if (s == "band_limited") out = CovarianceFamily::band_limited;
  else return false;
  return true;
}

// Stationary covariance R(z) and its transform Rhat(kappa) = int R(z) e^{i kappa z} dz.
//   gaussian             R = s2 exp(-z^2/2l^2)
//   gaussian_derivative  R = s2 (1 - z^2/l^2) exp(-z^2/2l^2)  (process is l times a derivative, Rhat(0) = 0)
//   band_limited         Rhat = (15 pi s2 l / 8)(1 - (kappa l)^2)^2 on |kappa| < 1/l
struct CovarianceModel {
  CovarianceFamily family = CovarianceFamily::gaussian;
  double sigma2 = 1.0;
  double ell = 1.0;

  void validate(const char* op = "validate") const
  {
    if (!(sigma2 >= 0.0) || !(ell > 0.0) || !std::isfinite(sigma2 + ell))
      throw Error(ErrorCode::DomainError, "random_media", op, "need sigma2 >= 0, ell > 0");
  }

  double R(double z) const
  {
    double u = z / ell;
    switch (family) {
    case CovarianceFamily::gaussian: return sigma2 * std::exp(-0.5 * u * u);
    case CovarianceFamily::gaussian_derivative: return sigma2 * (1.0 - u * u) * std::exp(-0.5 * u * u);
    case CovarianceFamily::band_limited: return sigma2 * 15.0 / 8.0 * band_kernel(std::abs(u));
    }
    return 0.0;
  }

  double R_hat(double kappa) const
  {
    double u = kappa * ell, c = sigma2 * ell * std::sqrt(2.0 * std::numbers::pi);
    switch (family) {
    case CovarianceFamily::gaussian: return c * std::exp(-0.5 * u * u);
    case CovarianceFamily::gaussian_derivative: return c * u * u * std::exp(-0.5 * u * u);
    case CovarianceFamily::band_limited: {
      if (std::abs(u) >= 1.0) return 0.0;
      double w = 1.0 - u * u;
      return 15.0 * std::numbers::pi * sigma2 * ell / 8.0 * w * w;
    }
    }
    return 0.0;
  }

  // Distance beyond which |R| < rel * R(0). Families with algebraic tails have none.
  bool has_fast_decay() const { return family != CovarianceFamily::band_limited; }

  double decay_length(double rel = 1e-14) const
  {
    if (!has_fast_decay())
      throw Error(ErrorCode::DomainError, "random_media", "decay_length",
                  "band_limited covariance decays algebraically");
    double L = std::log(1.0 / rel);
    double u = std::sqrt(2.0 * L);
    if (family == CovarianceFamily::gaussian_derivative)
      for (int i = 0; i < 20; ++i) u = std::sqrt(2.0 * (L + std::log(1.0 + u * u)));
    return u * ell;
  }

  // int_0^1 (1 - t^2)^2 cos(u t) dt
  static double band_kernel(double u)
  {
    if (u < 1.0) {
      double s = 0.0, term = 1.0;
      for (int m = 0; m < 14; ++m) {
        double mom = 1.0 / (2 * m + 1) - 2.0 / (2 * m + 3) + 1.0 / (2 * m + 5);
        s += term * mom;
        term *= -u * u / ((2.0 * m + 1) * (2.0 * m + 2));
      }
      return s;
    }
    double su = std::sin(u), cu = std::cos(u), u3 = u * u * u;
    return 24.0 * (su - u * cu) / (u3 * u * u) - 8.0 * su / u3;
  }
};

struct ForwardScatteringCheck {
  bool ok = false;
  double ratio = 0.0;    // sup_{|kappa| >= k} Rhat / Rhat(0)
  std::string diagnostic;
};

inline ForwardScatteringCheck check_forward_scattering(const CovarianceModel& cov, double k, double tol)
{
  double r0 = cov.R_hat(0.0);
  if (!(r0 > 0.0))
    throw Error(ErrorCode::FlatSpectrum, "random_media", "check_forward_scattering",
                "Rhat(0) = " + fmt(r0));
  // every family is nonincreasing in |kappa| for |kappa| l >= sqrt(2); scan up to that point
  double sup = cov.R_hat(k);
  double kmax = std::max(k, std::sqrt(2.0) / cov.ell);
  for (int i = 1; i <= 256 && kmax > k; ++i) sup = std::max(sup, cov.R_hat(k + (kmax - k) * i / 256.0));
  ForwardScatteringCheck c;
  c.ratio = sup / r0;
  c.ok = c.ratio <= tol;
  c.diagnostic = "sup_{|kappa|>=k} Rhat/Rhat(0) = " + fmt(c.ratio) + (c.ok ? " <= " : " > ") +
                 fmt(tol);
  return c;
}

// Counter based normals: each (seed, stream, index) maps to a fixed value regardless of order.
namespace rng {
inline std::uint64_t splitmix(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
inline std::uint64_t key(std::uint64_t seed, std::uint64_t stream, std::int64_t index)
{
  return splitmix(splitmix(seed ^ splitmix(stream + 0x632be59bd9b4e019ULL)) ^ static_cast<std::uint64_t>(index));
}
inline double unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }
// Standard complex normal pair (g1, g2), each N(0, 1).
inline std::complex<double> normal_pair(std::uint64_t seed, std::uint64_t stream, std::int64_t index)
{
  std::uint64_t h = key(seed, stream, index);
  double u1 = unit(h), u2 = unit(splitmix(h));
  double r = std::sqrt(-2.0 * std::log(u1)), a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}
inline std::uint64_t realization_seed(std::uint64_t seed, std::uint64_t r) { return seed ^ splitmix(r); }
} // namespace rng

struct ProcessRealization {
  double dz = 0.0;
  std::array<std::vector<double>, 4> values;
  std::uint64_t seed = 0;
  double nu_max = 0.0;
  std::size_t clamped = 0;
  std::size_t fft_size = 0;

  std::size_t size() const { return values[0].size(); }
  double clamp_rate() const { return size() ? double(clamped) / (4.0 * size()) : 0.0; }
};

namespace detail {
inline std::mutex& fftw_plan_mutex()
{
  static std::mutex m;
  return m;
}

inline std::size_t next_pow2(std::size_t n)
{
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

// Periodized spectrum at omega: (1/dz) sum_m Rhat(omega + 2 pi m / dz).
inline double folded_spectrum(const CovarianceModel& cov, double omega, double dz)
{
  double s = 0.0, w = 2.0 * std::numbers::pi / dz;
  for (int m = -2; m <= 2; ++m) s += cov.R_hat(omega + m * w);
  return std::max(0.0, s) / dz;
}
} // namespace detail

struct SynthesisOptions {
  double clamp_sigmas = 5.0;
  std::size_t fft_size = 0;  // 0: next power of two >= max(2N, 2048)
};

// Gaussian process on a periodic grid of M points: one complex FFT of spectrally weighted
// complex normals gives two independent real streams (real and imaginary parts), so two
// transforms cover the four interfaces. Coefficients are keyed by signed frequency index,
// so scaling the period keeps every shared Fourier coefficient. Spectrum and plan are built
// once; draw() is safe to call from several threads.
class SpectralSynthesizer {
public:
  SpectralSynthesizer(const CovarianceModel& cov, double dz, std::size_t N, const SynthesisOptions& opt = {})
      : dz_(dz), N_(N), nu_max_(opt.clamp_sigmas * std::sqrt(cov.sigma2)), zero_(cov.sigma2 == 0.0)
  {
    cov.validate("synthesize");
    if (!(dz > 0.0) || dz > cov.ell / 8.0 * (1 + 1e-12))
      throw Error(ErrorCode::GridTooCoarse, "random_media", "synthesize",
                  "dz = " + fmt(dz) + " exceeds ell/8 = " + fmt(cov.ell / 8.0));
    if (N * dz < 50.0 * cov.ell * (1 - 1e-12))
      throw Error(ErrorCode::DomainTooShort, "random_media", "synthesize",
                  "N dz = " + fmt(N * dz) + " < 50 ell");
    M_ = opt.fft_size ? opt.fft_size : detail::next_pow2(std::max<std::size_t>(2 * N, 2048));
    if (M_ < N)
      throw Error(ErrorCode::DomainTooShort, "random_media", "synthesize", "FFT size below sample count");
    if (zero_) return;
    amp_.resize(M_);
    const double dw = 2.0 * std::numbers::pi / (M_ * dz);
    for (std::size_t i = 0; i < M_; ++i)
      amp_[i] = std::sqrt(detail::folded_spectrum(cov, index(i) * dw, dz) / double(M_));
    fftw_complex* buf = fftw_alloc_complex(M_);
    {
      std::lock_guard<std::mutex> lk(detail::fftw_plan_mutex());
      plan_ = fftw_plan_dft_1d(int(M_), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    fftw_free(buf);
  }

  SpectralSynthesizer(const SpectralSynthesizer&) = delete;
  SpectralSynthesizer& operator=(const SpectralSynthesizer&) = delete;

  ~SpectralSynthesizer()
  {
    if (plan_) {
      std::lock_guard<std::mutex> lk(detail::fftw_plan_mutex());
      fftw_destroy_plan(plan_);
    }
  }

  std::size_t fft_size() const { return M_; }

  ProcessRealization draw(std::uint64_t seed) const
  {
    ProcessRealization p;
    p.dz = dz_;
    p.seed = seed;
    p.fft_size = M_;
    p.nu_max = nu_max_;
    for (auto& v : p.values) v.assign(N_, 0.0);
    if (zero_) return p;
    fftw_complex* buf = fftw_alloc_complex(M_);
    for (int pair = 0; pair < 2; ++pair) {
      for (std::size_t i = 0; i < M_; ++i) {
        if (amp_[i] == 0.0) { buf[i][0] = buf[i][1] = 0.0; continue; }
        auto w = rng::normal_pair(seed, std::uint64_t(pair), index(i));
        buf[i][0] = amp_[i] * w.real();
        buf[i][1] = amp_[i] * w.imag();
      }
      fftw_execute_dft(plan_, buf, buf);
      for (std::size_t j = 0; j < N_; ++j) {
        double re = buf[j][0], im = buf[j][1];
        if (std::abs(re) > nu_max_) { re = std::copysign(nu_max_, re); ++p.clamped; }
        if (std::abs(im) > nu_max_) { im = std::copysign(nu_max_, im); ++p.clamped; }
        p.values[2 * pair][j] = re;
        p.values[2 * pair + 1][j] = im;
      }
    }
    fftw_free(buf);
    return p;
  }

private:
  std::int64_t index(std::size_t i) const
  {
    return i <= M_ / 2 ? std::int64_t(i) : std::int64_t(i) - std::int64_t(M_);
  }

  double dz_;
  std::size_t N_, M_ = 0;
  double nu_max_;
  bool zero_;
  std::vector<double> amp_;
  fftw_plan plan_ = nullptr;
};

inline ProcessRealization synthesize(const CovarianceModel& cov, double dz, std::size_t N, std::uint64_t seed,
                                     const SynthesisOptions& opt = {})
{
  return SpectralSynthesizer(cov, dz, N, opt).draw(seed);
}

// Debug dump: z, nu1..nu4
inline void write_realization_csv(std::ostream& os, const ProcessRealization& p, std::size_t stride = 1)
{
  csv::header(os, {"z", "nu1", "nu2", "nu3", "nu4"});
  for (std::size_t j = 0; j < p.size(); j += stride)
    csv::row(os, {j * p.dz, p.values[0][j], p.values[1][j], p.values[2][j], p.values[3][j]});
}

} // namespace duowave
