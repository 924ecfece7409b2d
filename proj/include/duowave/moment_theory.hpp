#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "coefficients.hpp"
#include "errors.hpp"

namespace duowave {

using cplx = std::complex<double>;

struct MomentCurves {
  std::vector<double> z;
  std::vector<cplx> mean_ae, mean_ao;
  std::vector<double> Pe, Po;
  std::vector<cplx> cross;  // E[a_o conj(a_e)]
  std::vector<double> m4_e, m4_o, m22;
  std::vector<double> total, imbalance;
};

struct ModerateParams {
  double epsilon = 0.05;
  double delta_beta = 0.0;  // beta_e - beta_o, native units
};

inline MomentCurves moments_moderate(cplx a_e0, cplx a_o0, const EffectiveCoefficients& c, const std::vector<double>& z,
                                     const ModerateParams& mp)
{
  MomentCurves m;
  m.z = z;
  double A = std::norm(a_e0), B = std::norm(a_o0), P0 = A + B;
  double G = c.Gamma, L = c.Lambda;
  cplx rate(G + 0.5 * L, c.kappa_ev + c.kappa + 0.5 * c.Theta);
  for (double zz : z) {
    cplx dec = std::exp(-rate * zz);
    m.mean_ae.push_back(a_e0 * dec);
    m.mean_ao.push_back(a_o0 * dec);
    double eL = std::exp(-L * zz), e2 = std::exp(-(2.0 * G + L) * zz);
    m.Pe.push_back(0.5 * P0 * eL + 0.5 * (A - B) * e2);
    m.Po.push_back(0.5 * P0 * eL - 0.5 * (A - B) * e2);
    m.cross.push_back(a_o0 * std::conj(a_e0) * std::exp(-(G + L) * zz));
    double f0 = P0 * P0 / 3.0 * std::exp(-2.0 * L * zz);
    double f1 = 0.5 * (A * A - B * B) * std::exp(-(2.0 * L + 2.0 * G) * zz);
    double f2 = (A * A + B * B - 4.0 * A * B) / 6.0 * std::exp(-(2.0 * L + 6.0 * G) * zz);
    m.m4_e.push_back(f0 + f1 + f2);
    m.m4_o.push_back(f0 - f1 + f2);
    m.m22.push_back(0.5 * (f0 - 2.0 * f2));
    m.total.push_back(m.Pe.back() + m.Po.back());
    double ph = mp.delta_beta * zz / (mp.epsilon * mp.epsilon);
    double imb = P0 > 0 ? 2.0 * std::real(a_e0 * std::conj(a_o0) * std::polar(1.0, ph)) / P0 * std::exp(-G * zz) : 0.0;
    m.imbalance.push_back(imb);
  }
  return m;
}

// Var(P_e + P_o) from the fourth moments.
inline double total_power_variance(const MomentCurves& m, std::size_t i)
{
  double t = m.Pe[i] + m.Po[i];
  return m.m4_e[i] + m.m4_o[i] + 2.0 * m.m22[i] - t * t;
}

// p' = -w q, q' = -2G q + w p. Returns (p, q) at z, with a series near critical damping.
inline std::array<double, 2> damped_pair(double G, double w, double p0, double q0, double z)
{
  double disc = G * G - w * w, x = disc * z * z;
  double c, s;
  if (std::abs(x) < 1e-4) {
    c = 1.0 + x / 2.0 + x * x / 24.0 + x * x * x / 720.0;
    s = z * (1.0 + x / 6.0 + x * x / 120.0 + x * x * x / 5040.0);
  } else if (disc > 0) {
    double r = std::sqrt(disc);
    c = std::cosh(r * z);
    s = std::sinh(r * z) / r;
  } else {
    double r = std::sqrt(-disc);
    c = std::cos(r * z);
    s = std::sin(r * z) / r;
  }
  double e = std::exp(-G * z);
  double dp0 = -w * q0, dq0 = -2.0 * G * q0 + w * p0;
  return {e * (p0 * c + (dp0 + G * p0) * s), e * (q0 * c + (dq0 + G * q0) * s)};
}

enum class Damping { overdamped, critical, underdamped };

inline Damping damping_branch(double theta, double beta_prime, double Gamma, double rel = 1e-12)
{
  double w = 2.0 * theta * beta_prime, disc = Gamma * Gamma - w * w;
  double scale = std::max(Gamma * Gamma, w * w);
  if (std::abs(disc) <= rel * scale) return Damping::critical;
  return disc > 0 ? Damping::overdamped : Damping::underdamped;
}

// E[imbalance] solving [d^2 + 2G d + (2 theta beta')^2] P = 0, P(0) = P0, P'(0) = 0.
inline std::vector<double> imbalance_weak(double theta, double beta_prime, double Gamma, const std::vector<double>& z,
                                          double P0 = 1.0)
{
  if (!(theta >= 0.0) || !(Gamma >= 0.0))
    throw Error(ErrorCode::DomainError, "moment_theory", "imbalance_weak", "need theta >= 0, Gamma >= 0");
  double w = 2.0 * theta * beta_prime;
  std::vector<double> out;
  out.reserve(z.size());
  for (double zz : z) out.push_back(damped_pair(Gamma, w, P0, 0.0, zz)[0]);
  return out;
}

// E[a_o conj(a_e)] in the weak regime with Lambda = 0. In the rotating frame
// alpha_t = a_t e^{i dbeta_t z/eps^2} the real and imaginary parts of E[alpha_e conj(alpha_o)]
// follow the damped pair with w = 2 theta beta'; the magnitude is frame independent.
inline std::vector<cplx> cross_moment_weak(cplx a_e0, cplx a_o0, double theta, double beta_prime, double Gamma,
                                           const std::vector<double>& z)
{
  cplx m0 = a_e0 * std::conj(a_o0);
  double w = 2.0 * theta * beta_prime;
  std::vector<cplx> out;
  for (double zz : z) {
    auto pq = damped_pair(Gamma, w, m0.real(), m0.imag(), zz);
    out.push_back(cplx(pq[0], -pq[1]) * std::polar(1.0, w * zz));
  }
  return out;
}

namespace detail {
template <class Rhs, std::size_t N>
void rk4_step(Rhs&& f, std::array<double, N>& y, double h)
{
  std::array<double, N> k1, k2, k3, k4, t;
  f(y, k1);
  for (std::size_t i = 0; i < N; ++i) t[i] = y[i] + 0.5 * h * k1[i];
  f(t, k2);
  for (std::size_t i = 0; i < N; ++i) t[i] = y[i] + 0.5 * h * k2[i];
  f(t, k3);
  for (std::size_t i = 0; i < N; ++i) t[i] = y[i] + h * k3[i];
  f(t, k4);
  for (std::size_t i = 0; i < N; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

inline void check_grid(const std::vector<double>& z, const char* op)
{
  for (std::size_t i = 1; i < z.size(); ++i)
    if (!(z[i] >= z[i - 1]))
      throw Error(ErrorCode::DomainError, "moment_theory", op, "z grid must be nondecreasing");
  if (!z.empty() && z[0] < 0.0) throw Error(ErrorCode::DomainError, "moment_theory", op, "z grid must start at z >= 0");
}
} // namespace detail

// Integrates P' = -2 theta beta' I, I' = -2 G I + 2 theta beta' P with classical RK4.
// max_step = 0 picks h with h * max rate = 1/200.
inline std::vector<double> imbalance_ode_oracle(double theta, double beta_prime, double Gamma, const std::vector<double>& z,
                                                double max_step = 0.0)
{
  detail::check_grid(z, "imbalance_ode_oracle");
  double w = 2.0 * theta * beta_prime, rate = std::max({w, 2.0 * Gamma, 1e-300});
  double h = max_step > 0 ? max_step : 0.005 / rate;
  if (h * rate > 0.05)
    throw Error(ErrorCode::StepTooCoarse, "moment_theory", "imbalance_ode_oracle",
                "step times rate = " + fmt(h * rate) + " > 0.05");
  auto f = [&](const std::array<double, 2>& y, std::array<double, 2>& dy) {
    dy[0] = -w * y[1];
    dy[1] = -2.0 * Gamma * y[1] + w * y[0];
  };
  std::array<double, 2> y{1.0, 0.0};
  double zc = 0.0;
  std::vector<double> out;
  for (double zt : z) {
    double span = zt - zc;
    if (span > 0) {
      auto n = static_cast<long>(std::ceil(span / h));
      double hh = span / n;
      for (long i = 0; i < n; ++i) detail::rk4_step(f, y, hh);
      zc = zt;
    }
    out.push_back(y[0]);
  }
  return out;
}

// dP_t/dz = sum_t' G_tt' (P_t' - P_t) - Lambda_t P_t for an n-mode table with zero row sums.
inline std::vector<std::vector<double>> mean_power_ode(const std::vector<std::vector<double>>& Gc,
                                                       const std::vector<double>& Lc, const std::vector<double>& P_init,
                                                       const std::vector<double>& z, double max_step = 0.0)
{
  std::size_t n = P_init.size();
  if (Gc.size() != n || Lc.size() != n)
    throw Error(ErrorCode::BadCoefficientTable, "moment_theory", "mean_power_ode", "table size mismatch");
  double scale = 0.0;
  for (auto& r : Gc) {
    if (r.size() != n) throw Error(ErrorCode::BadCoefficientTable, "moment_theory", "mean_power_ode", "ragged table");
    double s = 0.0;
    for (double v : r) { s += v; scale = std::max(scale, std::abs(v)); }
    if (std::abs(s) > 1e-12 * std::max(1.0, scale))
      throw Error(ErrorCode::BadCoefficientTable, "moment_theory", "mean_power_ode",
                  "row sum " + fmt(s) + " is not zero");
  }
  detail::check_grid(z, "mean_power_ode");
  double rate = 1e-300;
  for (std::size_t i = 0; i < n; ++i) rate = std::max(rate, std::abs(Lc[i]) + 2.0 * std::abs(Gc[i][i]) + scale);
  double h = max_step > 0 ? max_step : 0.005 / rate;
  if (h * rate > 0.05)
    throw Error(ErrorCode::StepTooCoarse, "moment_theory", "mean_power_ode", "step too coarse for the table");

  std::vector<double> y = P_init, k1(n), k2(n), k3(n), k4(n), t(n);
  auto f = [&](const std::vector<double>& P, std::vector<double>& dP) {
    for (std::size_t a = 0; a < n; ++a) {
      double s = -Lc[a] * P[a];
      for (std::size_t b = 0; b < n; ++b)
        if (b != a) s += Gc[a][b] * (P[b] - P[a]);
      dP[a] = s;
    }
  };
  std::vector<std::vector<double>> out(n);
  double zc = 0.0;
  for (double zt : z) {
    double span = zt - zc;
    if (span > 0) {
      auto m = static_cast<long>(std::ceil(span / h));
      double hh = span / m;
      for (long s = 0; s < m; ++s) {
        f(y, k1);
        for (std::size_t i = 0; i < n; ++i) t[i] = y[i] + 0.5 * hh * k1[i];
        f(t, k2);
        for (std::size_t i = 0; i < n; ++i) t[i] = y[i] + 0.5 * hh * k2[i];
        f(t, k3);
        for (std::size_t i = 0; i < n; ++i) t[i] = y[i] + hh * k3[i];
        f(t, k4);
        for (std::size_t i = 0; i < n; ++i) y[i] += hh / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
      }
      zc = zt;
    }
    for (std::size_t i = 0; i < n; ++i) out[i].push_back(y[i]);
  }
  return out;
}

inline std::vector<std::vector<double>> table_as_matrix(const TwoModeTable& t)
{
  return {{t.Gamma_c[0][0], t.Gamma_c[0][1]}, {t.Gamma_c[1][0], t.Gamma_c[1][1]}};
}

struct VeryWeakPowers {
  std::vector<double> P_plus, P_minus, imbalance;
};

inline VeryWeakPowers very_weak_powers(cplx u0_plus, cplx u0_minus, double Lambda, const std::vector<double>& z)
{
  VeryWeakPowers r;
  double pp = std::norm(u0_plus), pm = std::norm(u0_minus), tot = pp + pm;
  double imb = tot > 0 ? (pp - pm) / tot : 0.0;
  for (double zz : z) {
    double e = std::exp(-Lambda * zz);
    r.P_plus.push_back(pp * e);
    r.P_minus.push_back(pm * e);
    r.imbalance.push_back(imb);
  }
  return r;
}

enum class Regime { moderate, weak, very_weak };

inline const char* regime_name(Regime r)
{
  return r == Regime::moderate ? "moderate" : (r == Regime::weak ? "weak" : "very_weak");
}

struct RegimeInfo {
  Regime regime = Regime::weak;
  double theta = 0.0;
};

// theta = e^{-eta d}/eps^2; moderate above 100, very weak below 0.01.
inline RegimeInfo classify_regime(double epsilon, double eta, double d)
{
  RegimeInfo r;
  r.theta = std::exp(-eta * d) / (epsilon * epsilon);
  r.regime = r.theta > 100.0 ? Regime::moderate : (r.theta < 0.01 ? Regime::very_weak : Regime::weak);
  return r;
}

} // namespace duowave
