#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "errors.hpp"
#include "mode_spectrum.hpp"
#include "quadrature.hpp"

namespace duowave {

using cplx = std::complex<double>;

enum class SourceKind { right_waveguide_fundamental, named_analytic, sampled };

// Transverse source profile f(x). Support [lo, hi]; kinks listed for quadrature splitting.
struct SourceProfile {
  SourceKind kind = SourceKind::named_analytic;
  std::string name;
  std::function<double(double)> f;
  double lo = 0.0, hi = 0.0;
  std::vector<double> kinks;

  double operator()(double x) const { return (x < lo || x > hi) ? 0.0 : f(x); }

  static SourceProfile right_waveguide(const SingleWaveguideMode& sm, const WaveguideGeometry& g)
  {
    SourceProfile s;
    s.kind = SourceKind::right_waveguide_fundamental;
    s.name = "right_waveguide_fundamental";
    s.f = [sm, g](double x) { return x > 0.0 ? single_eigenfunction(sm, g, x) : 0.0; };
    s.lo = 0.0;
    s.hi = 0.5 * g.d + g.D + 40.0 / sm.eta;
    s.kinks = {0.5 * g.d, 0.5 * g.d + g.D};
    return s;
  }

  static SourceProfile analytic(std::string name, std::function<double(double)> f, double lo, double hi,
                                std::vector<double> kinks = {})
  {
    SourceProfile s;
    s.kind = SourceKind::named_analytic;
    s.name = std::move(name);
    s.f = std::move(f);
    s.lo = lo;
    s.hi = hi;
    s.kinks = std::move(kinks);
    return s;
  }

  // Piecewise linear through (xs, fs), zero outside.
  static SourceProfile sampled(std::vector<double> xs, std::vector<double> fs)
  {
    if (xs.size() < 2 || xs.size() != fs.size() || !std::is_sorted(xs.begin(), xs.end()))
      throw Error(ErrorCode::DomainError, "ideal_coupler", "SourceProfile::sampled", "need sorted samples");
    SourceProfile s;
    s.kind = SourceKind::sampled;
    s.name = "sampled";
    s.lo = xs.front();
    s.hi = xs.back();
    s.kinks = xs;
    s.f = [xs = std::move(xs), fs = std::move(fs)](double x) {
      auto it = std::upper_bound(xs.begin(), xs.end(), x);
      if (it == xs.begin()) return fs.front();
      if (it == xs.end()) return fs.back();
      std::size_t i = std::size_t(it - xs.begin());
      double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
      return (1.0 - t) * fs[i - 1] + t * fs[i];
    };
    return s;
  }
};

namespace detail {
inline std::vector<double> projection_cuts(const SourceProfile& f, const WaveguideGeometry& g)
{
  std::vector<double> c{f.lo, f.hi};
  for (double x : {-0.5 * g.d - g.D, -0.5 * g.d, 0.0, 0.5 * g.d, 0.5 * g.d + g.D})
    if (x > f.lo && x < f.hi) c.push_back(x);
  if (f.kind != SourceKind::sampled)
    for (double x : f.kinks)
      if (x > f.lo && x < f.hi) c.push_back(x);
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

inline double integrate_profile(const SourceProfile& f, const WaveguideGeometry& g, const std::function<double(double)>& w,
                                const char* op)
{
  QuadOptions o;
  o.rel_tol = 1e-12;
  o.abs_floor = 1e-14;
  auto h = [&](double x) { return w(x) * f(x); };
  if (f.kind == SourceKind::sampled) {
    // linear pieces: integrate cell by cell
    auto cuts = projection_cuts(f, g);
    for (double x : f.kinks) cuts.push_back(x);
    return integrate_pieces(h, cuts, o, "ideal_coupler", op);
  }
  return integrate_pieces(h, projection_cuts(f, g), o, "ideal_coupler", op);
}
} // namespace detail

inline double source_norm2(const SourceProfile& f, const WaveguideGeometry& g)
{
  return detail::integrate_profile(f, g, [&](double x) { return f(x); }, "source_norm");
}

struct SourceAmplitudes {
  cplx a_e0, a_o0;
};

// a_t = (sqrt(beta_t)/2) (phi_t, f) for the fundamental even and odd modes.
inline SourceAmplitudes source_amplitudes(const SourceProfile& f, const CoupledSpectrum& modes, const WaveguideGeometry& g)
{
  double ne = source_norm2(f, g);
  if (!std::isfinite(ne))
    throw Error(ErrorCode::DomainError, "ideal_coupler", "source_amplitudes", "source has no finite L2 norm");
  const auto& me = modes.even.front();
  const auto& mo = modes.odd.front();
  double pe = detail::integrate_profile(f, g, [&](double x) { return guided_eigenfunction(me, g, x); }, "source_amplitudes");
  double po = detail::integrate_profile(f, g, [&](double x) { return guided_eigenfunction(mo, g, x); }, "source_amplitudes");
  return {0.5 * std::sqrt(me.beta) * pe, 0.5 * std::sqrt(mo.beta) * po};
}

// Radiation amplitudes |gamma|^{1/4}/2 (phi_{t,gamma}, f) on a gamma grid. Needs compact support.
inline std::vector<cplx> radiation_amplitudes(const SourceProfile& f, Parity p, const WaveguideGeometry& g,
                                              const std::vector<double>& gammas)
{
  std::vector<cplx> out;
  out.reserve(gammas.size());
  for (double gm : gammas) {
    auto c = make_continuum(p, g, gm);
    double v = detail::integrate_profile(f, g, [&](double x) { return continuum_eigenfunction(c, g, x); },
                                         "radiation_amplitudes");
    out.emplace_back(0.5 * std::pow(std::abs(gm), 0.25) * v, 0.0);
  }
  return out;
}

struct IdealAmplitudes {
  cplx a_e0, a_o0;
  std::vector<double> z;
  std::vector<cplx> u_plus, u_minus;
};

// u_pm(z) with the deterministic splitting beta' e^{-eta d}.
inline IdealAmplitudes ideal_u(const std::vector<double>& z, cplx a_e0, cplx a_o0, double beta_prime, double eta, double d)
{
  IdealAmplitudes r;
  r.a_e0 = a_e0;
  r.a_o0 = a_o0;
  r.z = z;
  double w = beta_prime * std::exp(-eta * d);
  const cplx I(0.0, 1.0);
  for (double zz : z) {
    double c = std::cos(w * zz), s = std::sin(w * zz);
    r.u_plus.push_back((a_e0 + a_o0) * c + I * (a_e0 - a_o0) * s);
    r.u_minus.push_back((a_e0 - a_o0) * c + I * (a_e0 + a_o0) * s);
  }
  return r;
}

// Guided part of the field: sum_t a_t/sqrt(beta_t) e^{i beta_t z} phi_t(x).
inline std::vector<cplx> synthesize_guided_field(double z, const std::vector<double>& xs, const CoupledSpectrum& modes,
                                                 const WaveguideGeometry& g, const SourceAmplitudes& a)
{
  const auto& me = modes.even.front();
  const auto& mo = modes.odd.front();
  cplx ce = a.a_e0 / std::sqrt(me.beta) * std::polar(1.0, me.beta * z);
  cplx co = a.a_o0 / std::sqrt(mo.beta) * std::polar(1.0, mo.beta * z);
  std::vector<cplx> p;
  p.reserve(xs.size());
  for (double x : xs) p.push_back(ce * guided_eigenfunction(me, g, x) + co * guided_eigenfunction(mo, g, x));
  return p;
}

// Debug only: radiating part on a uniform 256 point gamma grid over (0, k^2).
inline std::vector<cplx> synthesize_radiation_field_debug(double z, const std::vector<double>& xs, const SourceProfile& f,
                                                          const WaveguideGeometry& g, int ngamma = 256)
{
  double k2 = g.k * g.k, h = k2 / ngamma;
  std::vector<double> gs;
  for (int i = 0; i < ngamma; ++i) gs.push_back((i + 0.5) * h);
  std::vector<cplx> p(xs.size(), 0.0);
  for (Parity par : {Parity::even, Parity::odd}) {
    auto amp = radiation_amplitudes(f, par, g, gs);
    for (std::size_t i = 0; i < gs.size(); ++i) {
      auto c = make_continuum(par, g, gs[i]);
      cplx w = amp[i] / std::pow(gs[i], 0.25) * std::polar(1.0, std::sqrt(gs[i]) * z) * h;
      for (std::size_t j = 0; j < xs.size(); ++j) p[j] += w * continuum_eigenfunction(c, g, xs[j]);
    }
  }
  return p;
}

// x, Re p, Im p, |p|
inline void write_field_csv(std::ostream& os, const std::vector<double>& xs, const std::vector<cplx>& p)
{
  csv::header(os, {"x", "Re_p", "Im_p", "abs_p"});
  for (std::size_t i = 0; i < xs.size(); ++i) csv::row(os, {xs[i], p[i].real(), p[i].imag(), std::abs(p[i])});
}

} // namespace duowave
