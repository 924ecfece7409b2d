#pragma once

// Brute-force reference computations used by the tests and the validate experiment.
// They share no quadrature or root-finding code with the library paths they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "coefficients.hpp"
#include "errors.hpp"
#include "mode_spectrum.hpp"
#include "random_media.hpp"

namespace duowave::oracle {

namespace detail {
inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                          double whole, double tol, int depth)
{
  double m = 0.5 * (a + b), lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm), right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
} // namespace detail

// Adaptive Simpson with absolute tolerance tol on each of npanel initial panels.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int npanel = 16,
                               int depth = 40)
{
  double s = 0.0, h = (b - a) / npanel;
  for (int i = 0; i < npanel; ++i) {
    double lo = a + i * h, hi = lo + h, m = 0.5 * (lo + hi);
    double fa = f(lo), fm = f(m), fb = f(hi);
    s += detail::simpson_rec(f, lo, hi, fa, fm, fb, h / 6.0 * (fa + 4.0 * fm + fb), tol / npanel, depth);
  }
  return s;
}

// Single-guide beta from cos(q)/q = 2/V, V = k D sqrt(n^2-1), by plain bisection on (0, pi/2).
inline double single_beta_qstar(const WaveguideGeometry& g)
{
  double V = g.k * g.D * std::sqrt(g.n * g.n - 1.0), c = 2.0 / V;
  double lo = 0.0, hi = 0.5 * std::numbers::pi;
  for (int i = 0; i < 200 && hi - lo > 1e-17; ++i) {
    double m = 0.5 * (lo + hi);
    if (std::cos(m) / m > c) lo = m;
    else hi = m;
  }
  double q = 0.5 * (lo + hi), t = 2.0 * q / g.D;
  return std::sqrt(g.k * g.k * g.n * g.n - t * t);
}

// int f1 f2 dx over [-d/2-D-X, d/2+D+X], X = 40/eta, split at the interfaces.
inline double l2_inner(const std::function<double(double)>& f1, const std::function<double(double)>& f2,
                       const WaveguideGeometry& g, double eta, double tol = 1e-13)
{
  double X = 40.0 / eta, h = 0.5 * g.d;
  std::vector<double> cuts{-h - g.D - X, -h - g.D, -h, 0.0, h, h + g.D, h + g.D + X};
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i])
      s += adaptive_simpson([&](double x) { return f1(x) * f2(x); }, cuts[i], cuts[i + 1], tol);
  return s;
}

// Gamma^c_{e,o} from its definition with the full coupled eigenfunctions:
// dk^4/(2 beta_e beta_o) int_0^inf E[C_eo(0) C_eo(z)] cos((beta_e - beta_o) z) dz.
inline double gamma_finite_d(const WaveguideGeometry& g, const CovarianceModel& cov)
{
  auto s = solve_coupled_betas(g);
  const auto& me = s.even.front();
  const auto& mo = s.odd.front();
  auto p = [&](double x) { return guided_eigenfunction(me, g, x) * guided_eigenfunction(mo, g, x); };
  double p1 = p(0.5 * g.d), p2 = p(0.5 * g.d + g.D);
  double db = me.beta - mo.beta;
  double zmax = cov.decay_length(1e-15);
  double I = adaptive_simpson([&](double z) { return cov.R(z) * std::cos(db * z); }, 0.0, zmax,
                              1e-14 * cov.sigma2 * cov.ell, 64);
  return g.dk2() * g.dk2() / (2.0 * me.beta * mo.beta) * 2.0 * g.D * g.D * (p1 * p1 + p2 * p2) * I;
}

// Lambda^c for guided mode t with the finite-d continuum eigenfunctions of parity tp,
// gamma = k^2 sin^2(th).
inline double lambda_finite_d_term(const WaveguideGeometry& g, const GuidedMode& m, Parity tp, const CovarianceModel& cov)
{
  double p1 = guided_eigenfunction(m, g, 0.5 * g.d), p2 = guided_eigenfunction(m, g, 0.5 * g.d + g.D);
  p1 *= p1;
  p2 *= p2;
  double k = g.k, c = g.dk2() * g.dk2() / (2.0 * m.beta) * g.D * g.D;
  auto f = [&](double th) {
    double sn = std::sin(th), cs = std::cos(th);
    double gm = k * k * sn * sn;
    if (sn <= 0.0 || cs <= 0.0 || gm >= k * k) return 0.0;
    auto cm = make_continuum(tp, g, gm);
    double a = continuum_eigenfunction(cm, g, 0.5 * g.d), b = continuum_eigenfunction(cm, g, 0.5 * g.d + g.D);
    return c * cov.R_hat(m.beta - k * sn) * (p1 * a * a + p2 * b * b) * 2.0 * k * cs;
  };
  return adaptive_simpson(f, 0.0, 0.5 * std::numbers::pi, 1e-13 * (cov.R_hat(0.0) + cov.sigma2 * cov.ell), 256);
}

// Sum over both continuum parities, for the fundamental mode of parity t.
inline double lambda_finite_d(const WaveguideGeometry& g, Parity t, const CovarianceModel& cov)
{
  auto s = solve_coupled_betas(g);
  const auto& m = t == Parity::even ? s.even.front() : s.odd.front();
  return lambda_finite_d_term(g, m, Parity::even, cov) + lambda_finite_d_term(g, m, Parity::odd, cov);
}

struct NestedValue {
  double value = 0.0;       // at the finer resolution
  double coarse = 0.0;      // at half the resolution
};

// kappa^ev by composite Simpson in both variables: s = k tan(phi) outside, z inside.
inline NestedValue kappa_ev_nested(const SingleWaveguideMode& sm, const WaveguideGeometry& g, const CovarianceModel& cov,
                                   int n_outer = 400, int n_inner = 1600)
{
  double k = g.k, beta = sm.beta;
  double zcut = cov.decay_length(1e-14);
  auto bracket = [&](double gamma) {
    double xi = std::sqrt(k * k * g.n * g.n - gamma), eta = std::sqrt(k * k - gamma);
    double r2 = xi * xi / (eta * eta), s2 = std::pow(std::sin(xi * g.D), 2);
    return (2.0 * r2 + s2 * (1.0 - r2)) / (4.0 * r2 + s2 * (1.0 - r2) * (1.0 - r2));
  };
  auto simpson = [](auto&& f, double a, double b, int n) {
    double h = (b - a) / n, s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
  };
  auto run = [&](int no, int ni) {
    auto outer = [&](double phi) {
      double c = std::cos(phi);
      if (c <= 1e-300) {
        // s -> inf: inner integral ~ R(0)/s, sec(phi)/s -> 1/k, bracket -> 1/2
        return 1.0 / std::numbers::pi * cov.R(0.0) / k;
      }
      double s = k * std::tan(phi);
      double zmax = s > 0 ? std::min(zcut, std::log(1e12) / s) : zcut;
      double inner = simpson([&](double z) { return cov.R(z) * std::cos(beta * z) * std::exp(-s * z); }, 0.0, zmax, ni);
      return 2.0 / std::numbers::pi / c * bracket(-s * s) * inner;
    };
    double I = simpson(outer, 0.0, 0.5 * std::numbers::pi, no);
    double cq = std::cos(0.5 * sm.xi * g.D);
    double pref = g.dk2() * g.dk2() * g.D * g.D * cq * cq / (sm.beta * (2.0 / sm.eta + g.D));
    return 2.0 * pref * I;
  };
  return {run(2 * n_outer, 2 * n_inner), run(n_outer, n_inner)};
}

// (1/2pi) int_0^{2pi} (a1 + a2 cos s + a3 sin s)/(a4 + a5 cos s + a6 sin s) ds by the trapezoid rule.
inline double circle_average_trapezoid(const std::array<double, 6>& a, int n = 10000)
{
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double t = 2.0 * std::numbers::pi * i / n, c = std::cos(t), sn = std::sin(t);
    s += (a[0] + a[1] * c + a[2] * sn) / (a[3] + a[4] * c + a[5] * sn);
  }
  return s / n;
}

// Exact overlap (phi1, phi2 V) for interfaces moved to x_q + eps D nu_q, outer index step normalized to 1.
inline double overlap_exact(const GuidedMode& m1, const GuidedMode& m2, const WaveguideGeometry& g,
                            const std::array<double, 4>& nu, double eps)
{
  auto x = interface_positions(g);
  auto f = [&](double t) { return guided_eigenfunction(m1, g, t) * guided_eigenfunction(m2, g, t); };
  double s = 0.0;
  for (int q = 0; q < 4; ++q) {
    double a = x[q], b = x[q] + eps * g.D * nu[q];
    double v = adaptive_simpson(f, std::min(a, b), std::max(a, b), 1e-18, 4);
    s += interface_signs[q] * (b >= a ? v : -v);
  }
  return s;
}

struct MeanEstimate {
  double mean = 0.0, se = 0.0;
};

// E[c_tt] from antithetic pairs (ov(nu) + ov(-nu)) / (2 eps^2), nu_q iid N(0, sigma2) clamped at 5 sigma.
inline MeanEstimate second_order_phase_mc(const GuidedMode& m, const WaveguideGeometry& g, const CovarianceModel& cov,
                                          int draws, double eps, std::uint64_t seed)
{
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, std::sqrt(cov.sigma2));
  double cap = 5.0 * std::sqrt(cov.sigma2), s = 0.0, s2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    std::array<double, 4> nu, mnu;
    for (int q = 0; q < 4; ++q) {
      nu[q] = std::clamp(nd(gen), -cap, cap);
      mnu[q] = -nu[q];
    }
    double c = (overlap_exact(m, m, g, nu, eps) + overlap_exact(m, m, g, mnu, eps)) / (2.0 * eps * eps);
    s += c;
    s2 += c * c;
  }
  double mean = s / draws, var = (s2 - draws * mean * mean) / (draws - 1);
  return {mean, std::sqrt(std::max(var, 0.0) / draws)};
}

// 2 int_0^M |int phi_{t,gamma}(x) a(gamma) dgamma|^2 dx / int |a|^2 dgamma for a smooth bump a
// supported on (-k^2, k^2/2). Midpoint rules in both variables; the bump makes the gamma rule spectral.
inline double parseval_ratio(const WaveguideGeometry& g, Parity p, double M, int n_gamma = 4000, double dx = 0.01)
{
  double k2 = g.k * g.k, lo = -k2, hi = 0.5 * k2, hg = (hi - lo) / n_gamma;
  auto bump = [&](double gm) {
    double u = (2.0 * gm - lo - hi) / (hi - lo);
    return std::abs(u) >= 1.0 ? 0.0 : std::exp(-1.0 / (1.0 - u * u));
  };
  std::vector<ContinuumModeParams> cm;
  std::vector<double> w;
  double na = 0.0;
  for (int i = 0; i < n_gamma; ++i) {
    double gm = lo + (i + 0.5) * hg;
    cm.push_back(make_continuum(p, g, gm));
    double a = bump(gm);
    w.push_back(a * hg);
    na += a * a * hg;
  }
  int nx = int(std::ceil(M / dx));
  double hx = M / nx, s = 0.0;
  for (int j = 0; j < nx; ++j) {
    double x = (j + 0.5) * hx, v = 0.0;
    for (int i = 0; i < n_gamma; ++i) v += w[i] * continuum_eigenfunction(cm[i], g, x);
    s += v * v * hx;
  }
  return 2.0 * s / na;
}

} // namespace duowave::oracle
