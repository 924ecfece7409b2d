#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "errors.hpp"

namespace duowave {

enum class Parity { even, odd };

inline const char* parity_name(Parity p) { return p == Parity::even ? "even" : "odd"; }

// Two identical slabs of index n and width D at d/2 < |x| < d/2 + D, unit index elsewhere.
struct WaveguideGeometry {
  double k = 2.0 * std::numbers::pi;
  double n = 1.1;
  double D = 1.0;
  double d = 4.0;

  double dk2() const { return k * k * (n * n - 1.0); }
  double dk() const { return std::sqrt(dk2()); }
  bool single_mode() const { return k * D * std::sqrt(n * n - 1.0) < std::numbers::pi; }

  void validate(const char* op = "validate") const
  {
    if (!(k > 0.0) || !(n > 1.0) || !(D > 0.0) || !(d >= 0.0) || !std::isfinite(k + n + D + d))
      throw Error(ErrorCode::DomainError, "mode_spectrum", op,
                  "need k > 0, n > 1, D > 0, d >= 0");
  }
};

struct SingleWaveguideMode {
  double beta = 0, xi = 0, eta = 0, beta_prime = 0;
  // (2/eta + D)^{-1/2}
  double amplitude(double D) const { return 1.0 / std::sqrt(2.0 / eta + D); }
};

struct GuidedMode {
  Parity parity = Parity::even;
  int j = 1;
  double beta = 0, xi = 0, eta = 0, norm_const = 0;
};

struct CoupledSpectrum {
  std::vector<GuidedMode> even, odd;
  // beta_e - beta_o of the fundamental pair, refined in quad precision; the difference of the
  // double roots loses all digits once e^{-eta d} approaches the rounding of beta.
  double splitting = 0.0;
  std::size_t n_even() const { return even.size(); }
  std::size_t n_odd() const { return odd.size(); }
};

struct ContinuumModeParams {
  Parity parity = Parity::even;
  double gamma = 0, xi_gamma = 0, eta_gamma = 0, norm_const = 0;
};

namespace detail {

inline double xi_of(const WaveguideGeometry& g, double beta)
{
  return std::sqrt(std::max(0.0, g.k * g.k * g.n * g.n - beta * beta));
}
inline double eta_of(const WaveguideGeometry& g, double beta)
{
  return std::sqrt(std::max(0.0, beta * beta - g.k * g.k));
}

// Regularized single-guide relation: eta cos(q) times ((xi/eta) tan q - 1), q = xi D/2.
// cos q > 0 in the single-mode range, so the roots coincide.
inline double single_regular(const WaveguideGeometry& g, double beta)
{
  double xi = xi_of(g, beta), eta = eta_of(g, beta), q = 0.5 * xi * g.D;
  return xi * std::sin(q) - eta * std::cos(q);
}

// Coupled relations multiplied through by eta^2 sin(xi D). Where sin(xi D) = 0 the
// product equals -2 xi eta cos(xi D) != 0, so no root is added or lost.
inline double coupled_regular(Parity p, const WaveguideGeometry& g, double beta)
{
  double xi = xi_of(g, beta), eta = eta_of(g, beta);
  double s = std::sin(xi * g.D), c = std::cos(xi * g.D);
  double e = std::exp(-eta * g.d);
  double sgn = p == Parity::even ? 1.0 : -1.0;
  return sgn * (eta * eta + xi * xi) * e * s - (eta * eta - xi * xi) * s - 2.0 * xi * eta * c;
}

template <class F>
double bracketed_root(F&& f, double a, double b, double fa, double fb, const char* op)
{
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  boost::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 1);
  auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  if (iters >= 200)
    throw Error(ErrorCode::RootFindingFailed, "mode_spectrum", op,
                "no convergence in [" + fmt(a) + ", " + fmt(b) + "]");
  double x = 0.5 * (r.first + r.second);
  return std::abs(f(r.first)) < std::abs(f(x)) ? r.first : (std::abs(f(r.second)) < std::abs(f(x)) ? r.second : x);
}

inline std::vector<double> beta_grid(const WaveguideGeometry& g, int npts)
{
  double lo = g.k + 1e-9 * g.k, hi = g.n * g.k - 1e-9 * g.k;
  std::vector<double> b(npts);
  for (int i = 0; i < npts; ++i) b[i] = lo + (hi - lo) * i / (npts - 1);
  return b;
}

// e^{-eta d} sinh(eta d)/eta without overflow
inline double damped_sinh_over(double eta, double d) { return -std::expm1(-2.0 * eta * d) / (2.0 * eta); }

} // namespace detail

// (xi/eta) tan(xi D/2) - 1
inline double single_dispersion_residual(const WaveguideGeometry& g, double beta)
{
  double xi = detail::xi_of(g, beta), eta = detail::eta_of(g, beta);
  return xi / eta * std::tan(0.5 * xi * g.D) - 1.0;
}

// Sign changes of the single-guide relation on the uniform bracketing grid.
inline int count_single_sign_changes(const WaveguideGeometry& g, int npts = 400)
{
  auto b = detail::beta_grid(g, npts);
  int n = 0;
  double prev = single_dispersion_residual(g, b[0]);
  for (int i = 1; i < npts; ++i) {
    double v = single_dispersion_residual(g, b[i]);
    if (std::abs(v) > 1e12 || std::abs(prev) > 1e12) { prev = v; continue; }
    if ((prev < 0) != (v < 0)) ++n;
    prev = v;
  }
  return n;
}

inline double splitting_coefficient(double beta, double xi, double eta, double D)
{
  return eta / (beta * (1.0 + eta * eta / (xi * xi)) * (1.0 / eta + 0.5 * D));
}

inline SingleWaveguideMode solve_single_beta(const WaveguideGeometry& g)
{
  g.validate("solve_single_beta");
  if (!g.single_mode())
    throw Error(ErrorCode::NotSingleMode, "mode_spectrum", "solve_single_beta",
                "k D sqrt(n^2-1) = " + fmt(g.k * g.D * std::sqrt(g.n * g.n - 1)) + " >= pi");
  auto grid = detail::beta_grid(g, 400);
  auto f = [&](double b) { return detail::single_regular(g, b); };
  double fprev = f(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double fi = f(grid[i]);
    if ((fprev < 0) != (fi < 0) || fi == 0.0) {
      SingleWaveguideMode m;
      m.beta = detail::bracketed_root(f, grid[i - 1], grid[i], fprev, fi, "solve_single_beta");
      m.xi = detail::xi_of(g, m.beta);
      m.eta = detail::eta_of(g, m.beta);
      m.beta_prime = splitting_coefficient(m.beta, m.xi, m.eta, g.D);
      double res = std::abs(single_dispersion_residual(g, m.beta));
      if (!(res < 1e-10))
        throw Error(ErrorCode::RootFindingFailed, "mode_spectrum", "solve_single_beta",
                    "residual " + fmt(res));
      return m;
    }
    fprev = fi;
  }
  throw Error(ErrorCode::NoRootBracket, "mode_spectrum", "solve_single_beta",
              "no sign change on the 400-point grid");
}

// Isolated right-guide profile phi(x), centred at d/2 + D/2.
inline double single_eigenfunction(const SingleWaveguideMode& m, const WaveguideGeometry& g, double x)
{
  double A = m.amplitude(g.D), h = 0.5 * g.d;
  if (x <= h) return A * std::cos(0.5 * m.xi * g.D) * std::exp(m.eta * (x - h));
  if (x <= h + g.D) return A * std::cos(m.xi * (x - h - 0.5 * g.D));
  return A * std::cos(0.5 * m.xi * g.D) * std::exp(-m.eta * (x - h - g.D));
}

// Right-hand side minus left-hand side of the even (odd) coupled dispersion relation.
inline double coupled_dispersion_residual(Parity p, const WaveguideGeometry& g, double beta)
{
  double xi = detail::xi_of(g, beta), eta = detail::eta_of(g, beta), r = xi / eta;
  double q = 0.5 * xi * g.D;
  double rhs = (1.0 - r * std::tan(q)) * (1.0 + r / std::tan(q));
  double lhs = (p == Parity::even ? 1.0 : -1.0) * (1.0 + r * r) * std::exp(-eta * g.d);
  return rhs - lhs;
}

inline double guided_norm_const(Parity p, const WaveguideGeometry& g, double xi, double eta)
{
  double r2 = xi * xi / (eta * eta), D = g.D, d = g.d;
  double s = std::sin(xi * D);
  double inner = p == Parity::even ? detail::damped_sinh_over(eta, d) + std::exp(-eta * d) * d
                                   : detail::damped_sinh_over(eta, d) - std::exp(-eta * d) * d;
  double v = 0.5 * s * s * (1.0 + r2) * (1.0 + r2) * inner
           + (r2 - 1.0) * std::sin(2.0 * xi * D) / (2.0 * xi) + (r2 + 1.0) * D
           + 2.0 * s * s / eta + xi * xi / (eta * eta * eta);
  return 1.0 / std::sqrt(v);
}

inline GuidedMode make_guided_mode(Parity p, int j, const WaveguideGeometry& g, double beta)
{
  GuidedMode m;
  m.parity = p;
  m.j = j;
  m.beta = beta;
  m.xi = detail::xi_of(g, beta);
  m.eta = detail::eta_of(g, beta);
  m.norm_const = guided_norm_const(p, g, m.xi, m.eta);
  return m;
}

inline std::vector<GuidedMode> solve_parity_roots(Parity p, const WaveguideGeometry& g)
{
  auto grid = detail::beta_grid(g, 400);
  auto f = [&](double b) { return detail::coupled_regular(p, g, b); };
  std::vector<double> roots;
  double fprev = f(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double fi = f(grid[i]);
    if ((fprev < 0) != (fi < 0) && fprev != 0.0)
      roots.push_back(detail::bracketed_root(f, grid[i - 1], grid[i], fprev, fi, "solve_coupled_betas"));
    fprev = fi;
  }
  // fundamental first
  std::vector<GuidedMode> out;
  for (std::size_t i = roots.size(); i-- > 0;) {
    auto m = make_guided_mode(p, static_cast<int>(out.size()) + 1, g, roots[i]);
    double res = std::abs(coupled_dispersion_residual(p, g, m.beta));
    if (!(res < 1e-10))
      throw Error(ErrorCode::RootFindingFailed, "mode_spectrum", "solve_coupled_betas",
                  std::string(parity_name(p)) + " root beta=" + fmt(m.beta) +
                  " residual " + fmt(res));
    out.push_back(m);
  }
  return out;
}

namespace detail {
using quad = boost::multiprecision::cpp_bin_float_quad;

template <class T>
T coupled_regular_t(Parity p, const WaveguideGeometry& g, const T& beta)
{
  using std::sqrt, std::sin, std::cos, std::exp;
  T k = g.k, n = g.n, D = g.D, d = g.d;
  T xi = sqrt(k * k * n * n - beta * beta), eta = sqrt(beta * beta - k * k);
  T s = sin(xi * D), c = cos(xi * D);
  T sgn = p == Parity::even ? 1 : -1;
  return sgn * (eta * eta + xi * xi) * exp(-eta * d) * s - (eta * eta - xi * xi) * s - 2 * xi * eta * c;
}

template <class T>
T single_regular_t(const WaveguideGeometry& g, const T& beta)
{
  using std::sqrt, std::sin, std::cos;
  T k = g.k, n = g.n, D = g.D;
  T xi = sqrt(k * k * n * n - beta * beta), eta = sqrt(beta * beta - k * k);
  return xi * sin(xi * D / 2) - eta * cos(xi * D / 2);
}

// Polish a double root of f in quad precision, widening the bracket around it until the sign changes.
template <class F>
quad polish_root(F&& f, double b0, const char* op)
{
  quad w = quad(b0) * 1e-13;
  for (int i = 0; i < 12; ++i, w *= 8) {
    quad a = quad(b0) - w, b = quad(b0) + w;
    quad fa = f(a), fb = f(b);
    if (fa == 0) return a;
    if (fb == 0) return b;
    if ((fa < 0) == (fb < 0)) continue;
    boost::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb,
                                               boost::math::tools::eps_tolerance<quad>(std::numeric_limits<quad>::digits - 3),
                                               iters);
    return (r.first + r.second) / 2;
  }
  throw Error(ErrorCode::RootFindingFailed, "mode_spectrum", op, "no quad precision bracket near " + fmt(b0));
}
} // namespace detail

struct PreciseSplitting {
  double splitting = 0.0;  // beta_e - beta_o
  double defect = 0.0;     // e^{eta d} |beta_e - beta_o - 2 beta' e^{-eta d}|
};

// Fundamental splitting and its deviation from the large-separation law, all in quad precision.
inline PreciseSplitting precise_splitting(const WaveguideGeometry& g, double beta_e, double beta_o, double beta_single)
{
  using detail::quad;
  quad be = detail::polish_root([&](const quad& b) { return detail::coupled_regular_t(Parity::even, g, b); }, beta_e,
                                "precise_splitting");
  quad bo = detail::polish_root([&](const quad& b) { return detail::coupled_regular_t(Parity::odd, g, b); }, beta_o,
                                "precise_splitting");
  quad b = detail::polish_root([&](const quad& x) { return detail::single_regular_t(g, x); }, beta_single,
                               "precise_splitting");
  quad k = g.k, n = g.n, D = g.D, d = g.d;
  quad xi = sqrt(k * k * n * n - b * b), eta = sqrt(b * b - k * k);
  quad bp = eta / (b * (1 + eta * eta / (xi * xi)) * (1 / eta + D / 2));
  quad E = exp(-eta * d);
  PreciseSplitting r;
  r.splitting = static_cast<double>(be - bo);
  r.defect = static_cast<double>(abs(be - bo - 2 * bp * E) / E);
  return r;
}

inline CoupledSpectrum solve_coupled_betas(const WaveguideGeometry& g)
{
  g.validate("solve_coupled_betas");
  if (!(g.d > 0.0))
    throw Error(ErrorCode::DomainError, "mode_spectrum", "solve_coupled_betas", "need d > 0");
  CoupledSpectrum s;
  s.even = solve_parity_roots(Parity::even, g);
  s.odd = solve_parity_roots(Parity::odd, g);
  if (s.even.empty() || s.odd.empty())
    throw Error(ErrorCode::RootFindingFailed, "mode_spectrum", "solve_coupled_betas",
                "found " + std::to_string(s.even.size()) + " even and " + std::to_string(s.odd.size()) +
                " odd roots on the 400-point grid");
  using detail::quad;
  quad be = detail::polish_root([&](const quad& b) { return detail::coupled_regular_t(Parity::even, g, b); },
                                s.even.front().beta, "solve_coupled_betas");
  quad bo = detail::polish_root([&](const quad& b) { return detail::coupled_regular_t(Parity::odd, g, b); },
                                s.odd.front().beta, "solve_coupled_betas");
  s.splitting = static_cast<double>(be - bo);
  return s;
}

// Separation d at which the fundamental splitting beta_e - beta_o equals target.
// The splitting decreases monotonically in d; beyond d ~ 12 D it is lost in rounding of beta.
inline double separation_for_splitting(WaveguideGeometry g, double target, double lo = 0.05, double hi = 12.0)
{
  auto split = [&](double d) {
    g.d = d;
    return solve_coupled_betas(g).splitting;
  };
  if (!(target > 0.0))
    throw Error(ErrorCode::DomainError, "mode_spectrum", "separation_for_splitting", "need target > 0");
  auto f = [&](double d) { return std::log(split(d) / target); };
  double flo = f(lo), fhi = f(hi);
  if ((flo < 0) == (fhi < 0))
    throw Error(ErrorCode::NoRootBracket, "mode_spectrum", "separation_for_splitting",
                "target splitting " + fmt(target) + " outside [" + fmt(lo) + ", " +
                fmt(hi) + "]");
  return detail::bracketed_root(f, lo, hi, flo, fhi, "separation_for_splitting");
}

// Value on x >= 0 before normalization, plus derivative.
namespace detail {
inline void guided_shape(const GuidedMode& m, const WaveguideGeometry& g, double x, double& v, double& dv)
{
  double h = 0.5 * g.d, r = m.xi / m.eta, xi = m.xi, eta = m.eta;
  if (x <= h) {
    double a = std::sin(xi * g.D) * (1.0 + r * r) * 0.5;
    double ep = std::exp(eta * (x - h)), em = std::exp(-eta * (x + h));
    if (m.parity == Parity::even) { v = a * (ep + em); dv = a * eta * (ep - em); }
    else { v = a * (ep - em); dv = a * eta * (ep + em); }
  } else if (x <= h + g.D) {
    double t = xi * (x - h - g.D);
    v = r * std::cos(t) - std::sin(t);
    dv = -r * xi * std::sin(t) - xi * std::cos(t);
  } else {
    double e = std::exp(-eta * (x - h - g.D));
    v = r * e;
    dv = -eta * r * e;
  }
}
} // namespace detail

inline double guided_eigenfunction(const GuidedMode& m, const WaveguideGeometry& g, double x)
{
  double v, dv;
  detail::guided_shape(m, g, std::abs(x), v, dv);
  double s = (m.parity == Parity::odd && x < 0) ? -1.0 : 1.0;
  return s * m.norm_const * v;
}

inline double guided_eigenfunction_dx(const GuidedMode& m, const WaveguideGeometry& g, double x)
{
  double v, dv;
  detail::guided_shape(m, g, std::abs(x), v, dv);
  // even: f'(−x) = −f'(x); odd: f'(−x) = f'(x)
  double s = (m.parity == Parity::even && x < 0) ? -1.0 : 1.0;
  return s * m.norm_const * dv;
}

inline ContinuumModeParams make_continuum(Parity p, const WaveguideGeometry& g, double gamma)
{
  double k2 = g.k * g.k;
  if (gamma == 0.0 || gamma == k2)
    throw Error(ErrorCode::GammaAtBranchPoint, "mode_spectrum", "make_continuum",
                "gamma = " + fmt(gamma));
  if (!(gamma < k2))
    throw Error(ErrorCode::DomainError, "mode_spectrum", "make_continuum", "need gamma < k^2");
  ContinuumModeParams c;
  c.parity = p;
  c.gamma = gamma;
  c.xi_gamma = std::sqrt(k2 * g.n * g.n - gamma);
  c.eta_gamma = std::sqrt(k2 - gamma);
  double r = c.xi_gamma / c.eta_gamma, C = std::cos(c.xi_gamma * g.D), S = std::sin(c.xi_gamma * g.D);
  double ch = std::cos(0.5 * c.eta_gamma * g.d), sh = std::sin(0.5 * c.eta_gamma * g.d);
  double P, Q;
  if (p == Parity::even) { P = r * C * ch - S * sh; Q = r * S * ch + C * sh; }
  else { P = r * C * sh + S * ch; Q = r * S * sh - C * ch; }
  c.norm_const = 1.0 / std::sqrt(2.0 * std::numbers::pi * c.eta_gamma * (P * P + r * r * Q * Q));
  return c;
}

inline double continuum_eigenfunction(const ContinuumModeParams& c, const WaveguideGeometry& g, double x)
{
  if (c.gamma == 0.0 || c.gamma == g.k * g.k)
    throw Error(ErrorCode::GammaAtBranchPoint, "mode_spectrum", "continuum_eigenfunction",
                "gamma = " + fmt(c.gamma));
  double ax = std::abs(x), h = 0.5 * g.d, xi = c.xi_gamma, eta = c.eta_gamma, r = xi / eta;
  double ch = std::cos(eta * h), sh = std::sin(eta * h);
  bool even = c.parity == Parity::even;
  double v;
  if (ax <= h) {
    v = even ? r * std::cos(eta * ax) : r * std::sin(eta * ax);
  } else if (ax <= h + g.D) {
    double t = xi * (ax - h);
    v = even ? r * std::cos(t) * ch - std::sin(t) * sh : r * std::cos(t) * sh + std::sin(t) * ch;
  } else {
    double C = std::cos(xi * g.D), S = std::sin(xi * g.D), t = eta * (ax - h - g.D);
    double P = even ? r * C * ch - S * sh : r * C * sh + S * ch;
    double Q = even ? r * S * ch + C * sh : r * S * sh - C * ch;
    v = std::cos(t) * P - r * std::sin(t) * Q;
  }
  double s = (!even && x < 0) ? -1.0 : 1.0;
  return s * c.norm_const * v;
}

} // namespace duowave
