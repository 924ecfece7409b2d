#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "errors.hpp"
#include "mode_spectrum.hpp"
#include "quadrature.hpp"
#include "random_media.hpp"

namespace duowave {

struct InterfaceDisplacement {
  std::array<double, 4> nu{0, 0, 0, 0};
};

// Interfaces x_1..x_4 and the sign each displacement carries in the overlap.
inline std::array<double, 4> interface_positions(const WaveguideGeometry& g)
{
  return {-0.5 * g.d - g.D, -0.5 * g.d, 0.5 * g.d, 0.5 * g.d + g.D};
}
inline constexpr std::array<double, 4> interface_signs{-1.0, 1.0, -1.0, 1.0};

// First order coupling D sum_q s_q nu_q [phi phi'](x_q).
inline double coupling_C_guided(const GuidedMode& m1, const GuidedMode& m2, const WaveguideGeometry& g,
                                const InterfaceDisplacement& disp)
{
  auto x = interface_positions(g);
  double s = 0.0;
  for (int q = 0; q < 4; ++q)
    s += interface_signs[q] * disp.nu[q] * guided_eigenfunction(m1, g, x[q]) * guided_eigenfunction(m2, g, x[q]);
  return g.D * s;
}

// Weights w_q with C = sum_q w_q nu_q, used by the integrator.
inline std::array<double, 4> coupling_weights(const GuidedMode& m1, const GuidedMode& m2, const WaveguideGeometry& g)
{
  auto x = interface_positions(g);
  std::array<double, 4> w{};
  for (int q = 0; q < 4; ++q)
    w[q] = g.D * interface_signs[q] * guided_eigenfunction(m1, g, x[q]) * guided_eigenfunction(m2, g, x[q]);
  return w;
}

// E[c_{t,t}] for a coupled guided mode: D^2 R(0) [ (phi^2)'(d/2+D) - (phi^2)'(d/2) ].
inline double expected_second_order_phase(const GuidedMode& m, const WaveguideGeometry& g, const CovarianceModel& cov)
{
  auto d2 = [&](double x) { return 2.0 * guided_eigenfunction(m, g, x) * guided_eigenfunction_dx(m, g, x); };
  return g.D * g.D * cov.R(0.0) * (d2(0.5 * g.d + g.D) - d2(0.5 * g.d));
}

// Large separation form of E[c].
inline double second_order_phase_c(const SingleWaveguideMode& sm, const WaveguideGeometry& g, const CovarianceModel& cov)
{
  return -2.0 * g.D * g.D * cov.R(0.0) * sm.xi * std::sin(sm.xi * g.D) / (2.0 / sm.eta + g.D);
}

inline double gamma_coeff(const SingleWaveguideMode& sm, const WaveguideGeometry& g, const CovarianceModel& cov)
{
  double c = std::cos(0.5 * sm.xi * g.D), c2 = c * c, w = 2.0 / sm.eta + g.D;
  return g.dk2() * g.dk2() * g.D * g.D * c2 * c2 * cov.R_hat(0.0) / (sm.beta * sm.beta * w * w);
}

// Weak limit in d of the continuum interface weights, as a function of gamma.
inline double spectral_bracket(const WaveguideGeometry& g, double gamma)
{
  double k2 = g.k * g.k;
  double xi = std::sqrt(k2 * g.n * g.n - gamma), eta = std::sqrt(k2 - gamma);
  double r2 = xi * xi / (eta * eta), s = std::sin(xi * g.D), s2 = s * s;
  return (2.0 * r2 + s2 * (1.0 - r2)) / (4.0 * r2 + s2 * (1.0 - r2) * (1.0 - r2));
}

namespace detail {

inline double leakage_prefactor(const SingleWaveguideMode& sm, const WaveguideGeometry& g)
{
  double c = std::cos(0.5 * sm.xi * g.D);
  return g.dk2() * g.dk2() * g.D * g.D * c * c / (sm.beta * (2.0 / sm.eta + g.D));
}

inline QuadOptions coeff_quad()
{
  QuadOptions o;
  o.rel_tol = 1e-10;
  o.accept_tol = 1e-6;
  o.max_depth = 16;
  return o;
}

// int_0^inf R(z) cos(kappa z) e^{-s z} dz (sine if use_sin), truncated where R or the
// exponential falls below its threshold. For s > 1 the integral runs in u = s z.
inline double half_line_transform(const CovarianceModel& cov, double kappa, double s, bool use_sin, const char* op)
{
  if (cov.sigma2 == 0.0) return 0.0;
  double zmax = cov.decay_length(1e-14);
  auto o = coeff_quad();
  o.abs_floor = 1e-15 * cov.sigma2 * cov.ell;
  if (s > 1.0) {
    double umax = std::min(s * zmax, std::log(1e12));
    auto f = [&](double u) {
      double z = u / s, t = kappa * z;
      return cov.R(z) * (use_sin ? std::sin(t) : std::cos(t)) * std::exp(-u);
    };
    o.abs_floor = 1e-15 * cov.sigma2;
    return integrate(f, 0.0, umax, o, "coefficients", op) / s;
  }
  if (s > 0.0) zmax = std::min(zmax, std::log(1e12) / s);
  auto f = [&](double z) {
    double t = kappa * z;
    return cov.R(z) * (use_sin ? std::sin(t) : std::cos(t)) * (s > 0.0 ? std::exp(-s * z) : 1.0);
  };
  return integrate(f, 0.0, zmax, o, "coefficients", op);
}

// dgamma/(pi eta_gamma sqrt(gamma)) over (0, k^2) with gamma = k^2 sin^2(th): measure 2 dth/pi.
template <class F>
double radiation_integral(const WaveguideGeometry& g, F&& inner, double scale, const char* op)
{
  auto f = [&](double th) {
    double sg = g.k * std::sin(th);
    return 2.0 / std::numbers::pi * spectral_bracket(g, sg * sg) * inner(sg);
  };
  auto o = coeff_quad();
  o.abs_floor = 1e-15 * scale;
  return integrate(f, 0.0, 0.5 * std::numbers::pi, o, "coefficients", op);
}

} // namespace detail

// Single parity continuum contribution to the leakage rate (the t' = e term of the sum).
inline double lambda_coeff_per_parity(const SingleWaveguideMode& sm, const WaveguideGeometry& g,
                                      const CovarianceModel& cov)
{
  double I = detail::radiation_integral(
      g, [&](double sg) { return cov.R_hat(sm.beta - sg); }, cov.R_hat(0.0) + cov.sigma2 * cov.ell, "lambda_coeff");
  return 0.5 * detail::leakage_prefactor(sm, g) * I;
}

// Leakage rate summed over both continuum parities.
inline double lambda_coeff(const SingleWaveguideMode& sm, const WaveguideGeometry& g, const CovarianceModel& cov)
{
  return 2.0 * lambda_coeff_per_parity(sm, g, cov);
}

inline double theta_coeff(const SingleWaveguideMode& sm, const WaveguideGeometry& g, const CovarianceModel& cov)
{
  if (cov.sigma2 == 0.0) return 0.0;
  double I = detail::radiation_integral(
      g, [&](double sg) { return detail::half_line_transform(cov, sg - sm.beta, 0.0, true, "theta_coeff"); },
      cov.sigma2 * cov.ell, "theta_coeff");
  return 2.0 * detail::leakage_prefactor(sm, g) * I;
}

struct KappaPair {
  double kappa = 0.0;
  double kappa_ev = 0.0;
};

inline double kappa_coeff(const SingleWaveguideMode& sm, const WaveguideGeometry& g, const CovarianceModel& cov)
{
  return -g.dk2() * g.D * g.D * sm.xi * cov.R(0.0) * std::sin(sm.xi * g.D) / (sm.beta * (2.0 / sm.eta + g.D));
}

// gamma = -s^2: dgamma/(eta sqrt|gamma|) = 2 ds / sqrt(k^2+s^2). The bracket oscillates in s
// with period ~ pi/D and amplitude ~ dk^2/s^2, so (0, S) is integrated period by period and
// the tail s > S with the bracket at its limit 1/2; the dropped part is below dk^2/(3 S^3).
inline double kappa_ev_coeff(const SingleWaveguideMode& sm, const WaveguideGeometry& g, const CovarianceModel& cov)
{
  if (cov.sigma2 == 0.0) return 0.0;
  const double k = g.k, S = 2000.0 / g.D;
  auto o = detail::coeff_quad();
  o.abs_floor = 1e-15 * cov.sigma2 * cov.ell;
  auto body = [&](double s, double bracket) {
    return 2.0 / std::numbers::pi / std::sqrt(k * k + s * s) * bracket *
           detail::half_line_transform(cov, sm.beta, s, false, "kappa_coeffs");
  };
  // nodes where xi(s) D = m pi
  std::vector<double> cuts{0.0};
  double kn = k * g.n;
  for (long m = long(std::ceil(kn * g.D / std::numbers::pi)); ; ++m) {
    double x = m * std::numbers::pi / g.D, sm2 = x * x - kn * kn;
    if (sm2 <= 0.0) continue;
    double sv = std::sqrt(sm2);
    if (sv >= S) break;
    if (sv > cuts.back()) cuts.push_back(sv);
  }
  cuts.push_back(S);
  double I = integrate_pieces([&](double s) { return body(s, spectral_bracket(g, -s * s)); }, cuts, o, "coefficients",
                              "kappa_coeffs");
  I += integrate(
      [&](double t) {
        double s = S + k * t / (1.0 - t), ds = k / ((1.0 - t) * (1.0 - t));
        return body(s, 0.5) * ds;
      },
      0.0, 1.0, o, "coefficients", "kappa_coeffs");
  return 2.0 * detail::leakage_prefactor(sm, g) * I;
}

inline KappaPair kappa_coeffs(const SingleWaveguideMode& sm, const WaveguideGeometry& g, const CovarianceModel& cov)
{
  return {kappa_coeff(sm, g, cov), kappa_ev_coeff(sm, g, cov)};
}

struct EffectiveCoefficients {
  double Gamma = 0, Lambda = 0, Theta = 0, kappa = 0, kappa_ev = 0, beta_prime = 0;
};

inline EffectiveCoefficients compute_effective_coefficients(const SingleWaveguideMode& sm, const WaveguideGeometry& g,
                                                            const CovarianceModel& cov, bool with_phases = true)
{
  EffectiveCoefficients c;
  c.beta_prime = sm.beta_prime;
  c.Gamma = gamma_coeff(sm, g, cov);
  c.Lambda = lambda_coeff(sm, g, cov);
  if (with_phases) {
    c.Theta = theta_coeff(sm, g, cov);
    c.kappa = kappa_coeff(sm, g, cov);
    c.kappa_ev = kappa_ev_coeff(sm, g, cov);
  }
  return c;
}

// Two-mode generator table, index 0 = even, 1 = odd.
struct TwoModeTable {
  double Gamma_c[2][2]{}, Gamma_s[2][2]{}, Gamma_1[2][2]{};
  double Lambda_c[2]{}, Lambda_s[2]{}, kappa[2]{}, kappa_ev[2]{};

  double max_row_sum() const
  {
    return std::max(std::abs(Gamma_c[0][0] + Gamma_c[0][1]), std::abs(Gamma_c[1][0] + Gamma_c[1][1]));
  }
};

inline TwoModeTable two_mode_table(const EffectiveCoefficients& c)
{
  TwoModeTable t;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      t.Gamma_c[a][b] = a == b ? -c.Gamma : c.Gamma;
      t.Gamma_1[a][b] = c.Gamma;
      t.Gamma_s[a][b] = 0.0;
    }
    t.Lambda_c[a] = c.Lambda;
    t.Lambda_s[a] = c.Theta;
    t.kappa[a] = c.kappa;
    t.kappa_ev[a] = c.kappa_ev;
  }
  return t;
}

// (1/2pi) int_0^{2pi} (a1 + a2 cos s + a3 sin s)/(a4 + a5 cos s + a6 sin s) ds
inline double circle_average(const std::array<double, 6>& a)
{
  double rho2 = a[4] * a[4] + a[5] * a[5];
  if (!(a[3] > std::sqrt(rho2)))
    throw Error(ErrorCode::DomainError, "coefficients", "circle_average", "need a4 > sqrt(a5^2 + a6^2)");
  double root = std::sqrt((a[3] - std::sqrt(rho2)) * (a[3] + std::sqrt(rho2)));
  // (root - a4)/rho2 = -1/(root + a4), finite as rho -> 0
  return (a[0] - (a[1] * a[4] + a[2] * a[5]) / (root + a[3])) / root;
}

} // namespace duowave
