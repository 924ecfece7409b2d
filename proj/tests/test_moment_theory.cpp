#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <duowave/moment_theory.hpp>

using namespace duowave;

namespace {

std::vector<double> grid(double zmax, int n)
{
  std::vector<double> z;
  for (int i = 0; i <= n; ++i) z.push_back(zmax * i / n);
  return z;
}

EffectiveCoefficients coeffs(double G, double L, double Th = 0.0, double k = 0.0, double kev = 0.0)
{
  EffectiveCoefficients c;
  c.Gamma = G;
  c.Lambda = L;
  c.Theta = Th;
  c.kappa = k;
  c.kappa_ev = kev;
  return c;
}

} // namespace

TEST(Moderate, InitialValues)
{
  cplx ae(0.6, 0.3), ao(-0.2, 0.5);
  auto m = moments_moderate(ae, ao, coeffs(0.4, 0.1, 0.3, -0.2, 0.05), {0.0}, {});
  EXPECT_EQ(m.mean_ae[0], ae);
  EXPECT_EQ(m.mean_ao[0], ao);
  EXPECT_DOUBLE_EQ(m.Pe[0], std::norm(ae));
  EXPECT_DOUBLE_EQ(m.Po[0], std::norm(ao));
  EXPECT_NEAR(std::abs(m.cross[0] - ao * std::conj(ae)), 0.0, 1e-15);
  EXPECT_NEAR(m.m4_e[0], std::pow(std::norm(ae), 2), 1e-14);
  EXPECT_NEAR(m.m4_o[0], std::pow(std::norm(ao), 2), 1e-14);
  EXPECT_NEAR(m.m22[0], std::norm(ae) * std::norm(ao), 1e-14);
}

TEST(Moderate, EqualSplitMeansAndPowers)
{
  // a_e0 = a_o0 = 1/sqrt 2, Gamma = 1, Lambda = 0
  cplx a(M_SQRT1_2, 0.0);
  auto z = grid(3.0, 30);
  auto m = moments_moderate(a, a, coeffs(1.0, 0.0), z, {});
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(m.Pe[i], 0.5, 1e-15);
    EXPECT_NEAR(m.Po[i], 0.5, 1e-15);
    EXPECT_NEAR(std::abs(m.cross[i]), 0.5 * std::exp(-z[i]), 1e-15);
    EXPECT_NEAR(m.total[i], 1.0, 1e-14);
  }
}

TEST(Moderate, PowerExchange)
{
  auto z = grid(4.0, 40);
  auto m = moments_moderate({1.0, 0.0}, {0.0, 0.0}, coeffs(0.5, 0.2), z, {});
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(m.Pe[i], 0.5 * std::exp(-0.2 * z[i]) * (1.0 + std::exp(-z[i])), 1e-14);
    EXPECT_NEAR(total_power_variance(m, i), m.m4_e[i] + m.m4_o[i] + 2 * m.m22[i] - m.total[i] * m.total[i], 1e-15);
  }
}

TEST(Moderate, TotalPowerConservedAndFluctuationFree)
{
  auto z = grid(10.0, 200);
  cplx ae(0.3, -0.4), ao(0.8, 0.1);
  auto m = moments_moderate(ae, ao, coeffs(0.7, 0.0), z, {});
  double P0 = std::norm(ae) + std::norm(ao);
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(m.total[i], P0, 1e-14);
    EXPECT_NEAR(total_power_variance(m, i), 0.0, 1e-12);
    EXPECT_LE(m.Pe[i], P0 + 1e-14);
    EXPECT_GE(m.m4_e[i], m.Pe[i] * m.Pe[i] - 1e-12);
  }
  // equipartition limit: E|a|^4 -> P0^2/3
  auto far = moments_moderate(ae, ao, coeffs(0.7, 0.0), {200.0}, {});
  EXPECT_NEAR(far.m4_e[0], P0 * P0 / 3.0, 1e-12);
  EXPECT_NEAR(far.m22[0], P0 * P0 / 6.0, 1e-12);
}

TEST(Weak, ThetaZeroIsConstant)
{
  auto z = grid(20.0, 50);
  auto p = imbalance_weak(0.0, 0.14, 0.6, z);
  for (double v : p) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Weak, NoDampingIsCosine)
{
  double theta = 0.7, bp = 0.14, w = 2 * theta * bp;
  auto z = grid(60.0, 300);
  auto p = imbalance_weak(theta, bp, 0.0, z);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(p[i], std::cos(w * z[i]), 1e-12);
  auto h = imbalance_weak(theta, bp, 0.0, {std::numbers::pi / w});
  EXPECT_NEAR(h[0], -1.0, 1e-12);
}

TEST(Weak, CriticalDampingValue)
{
  // 2 theta beta' = Gamma = 1: P(1/Gamma) = (1 + Gamma z) e^{-Gamma z} = 2/e
  auto p = imbalance_weak(0.5, 1.0, 1.0, {1.0});
  EXPECT_NEAR(p[0], 2.0 / std::numbers::e, 1e-15);
  EXPECT_EQ(damping_branch(0.5, 1.0, 1.0), Damping::critical);
  EXPECT_EQ(damping_branch(0.25, 1.0, 1.0), Damping::overdamped);
  EXPECT_EQ(damping_branch(1.0, 1.0, 1.0), Damping::underdamped);
}

TEST(Weak, MatchesModerateForLargeRatio)
{
  // theta beta'/Gamma = 50 on [0, 2/Gamma]
  double G = 0.2, bp = 1.0, theta = 50.0 * G / bp;
  auto z = grid(2.0 / G, 4000);
  auto p = imbalance_weak(theta, bp, G, z);
  double w = 2 * theta * bp;
  for (std::size_t i = 0; i < z.size(); ++i)
    EXPECT_NEAR(p[i], std::exp(-G * z[i]) * std::cos(w * z[i]), 0.01);
}

TEST(Weak, ClosedFormMatchesOde)
{
  for (double r : {0.5, 1.0, 2.0}) {
    double G = 0.4, bp = 0.14, theta = r * G / (2 * bp);
    auto z = grid(5.0 / G, 400);
    auto a = imbalance_weak(theta, bp, G, z);
    auto b = imbalance_ode_oracle(theta, bp, G, z);
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-10) << r << " " << z[i];
  }
}

TEST(Weak, ContinuousAcrossCriticalDamping)
{
  double G = 1.0, bp = 1.0;
  for (double z : {0.5, 2.0, 7.0}) {
    double c = imbalance_weak(0.5, bp, G, {z})[0];
    double lo = imbalance_weak(0.5 * (1 - 1e-7), bp, G, {z})[0];
    double hi = imbalance_weak(0.5 * (1 + 1e-7), bp, G, {z})[0];
    EXPECT_NEAR(lo, c, 1e-6);
    EXPECT_NEAR(hi, c, 1e-6);
  }
}

TEST(Weak, Bounded)
{
  for (double r : {0.1, 0.5, 1.0, 3.0, 30.0}) {
    auto p = imbalance_weak(r * 0.5, 1.0, 1.0, grid(40.0, 2000));
    for (double v : p) EXPECT_LE(std::abs(v), 1.0 + 1e-12);
  }
}

TEST(Weak, DomainChecks)
{
  EXPECT_THROW(imbalance_weak(-1.0, 1.0, 1.0, {0.0}), Error);
  EXPECT_THROW(imbalance_weak(1.0, 1.0, -0.1, {0.0}), Error);
  EXPECT_THROW(imbalance_ode_oracle(1.0, 1.0, 1.0, {1.0, 0.5}), Error);
  EXPECT_THROW(imbalance_ode_oracle(1.0, 1.0, 1.0, {1.0}, 0.5), Error);
}

TEST(Weak, CrossMomentMagnitude)
{
  // Gamma = 0: the rotating-frame cross moment only turns, its magnitude is fixed
  cplx ae(0.7, 0.1), ao(0.2, -0.6);
  auto z = grid(30.0, 100);
  auto c = cross_moment_weak(ae, ao, 0.4, 0.5, 0.0, z);
  for (auto v : c) EXPECT_NEAR(std::abs(v), std::abs(ae * std::conj(ao)), 1e-12);
  EXPECT_NEAR(std::abs(c[0] - ao * std::conj(ae)), 0.0, 1e-15);
  // theta = 0: a purely imaginary cross moment decays at 2 Gamma
  auto d = cross_moment_weak({1.0, 0.0}, {0.0, 1.0}, 0.0, 0.5, 0.3, {2.0});
  EXPECT_NEAR(std::abs(d[0]), std::exp(-0.6 * 2.0), 1e-14);
}

TEST(MeanPowerOde, TwoModeTable)
{
  double G = 0.35;
  std::vector<std::vector<double>> t{{-G, G}, {G, -G}};
  auto z = grid(6.0, 60);
  auto P = mean_power_ode(t, {0.0, 0.0}, {1.0, 0.0}, z);
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(P[0][i], 0.5 * (1 + std::exp(-2 * G * z[i])), 1e-10);
    EXPECT_NEAR(P[0][i] + P[1][i], 1.0, 1e-13);
  }
  auto Q = mean_power_ode(t, {0.0, 0.0}, {0.5, 0.5}, z);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(Q[0][i], 0.5, 1e-14);
}

TEST(MeanPowerOde, WithLossMatchesModerate)
{
  double G = 0.35, L = 0.2;
  std::vector<std::vector<double>> t{{-G, G}, {G, -G}};
  auto z = grid(6.0, 60);
  auto P = mean_power_ode(t, {L, L}, {1.0, 0.0}, z);
  auto m = moments_moderate({1.0, 0.0}, {0.0, 0.0}, coeffs(G, L), z, {});
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(P[0][i], m.Pe[i], 1e-10);
    EXPECT_NEAR(P[1][i], m.Po[i], 1e-10);
  }
}

TEST(MeanPowerOde, RejectsBadTables)
{
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ConfigError;
  };
  EXPECT_EQ(code([] { mean_power_ode({{-1.0, 0.5}, {1.0, -1.0}}, {0, 0}, {1, 0}, {1.0}); }),
            ErrorCode::BadCoefficientTable);
  EXPECT_EQ(code([] { mean_power_ode({{-1.0, 1.0}}, {0, 0}, {1, 0}, {1.0}); }), ErrorCode::BadCoefficientTable);
  EXPECT_EQ(code([] { mean_power_ode({{-1.0, 1.0}, {1.0}}, {0, 0}, {1, 0}, {1.0}); }), ErrorCode::BadCoefficientTable);
}

TEST(MeanPowerOde, ThreeModeTable)
{
  double a = 0.2, b = 0.5;
  std::vector<std::vector<double>> t{{-(a + b), a, b}, {a, -a, 0.0}, {b, 0.0, -b}};
  auto z = grid(60.0, 60);
  auto P = mean_power_ode(t, {0, 0, 0}, {1.0, 0.0, 0.0}, z);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(P[0][i] + P[1][i] + P[2][i], 1.0, 1e-12);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(P[k].back(), 1.0 / 3.0, 1e-4);
}

TEST(VeryWeak, ExponentialLossConstantImbalance)
{
  auto z = grid(5.0, 10);
  auto v = very_weak_powers({1.0, 0.0}, {0.0, 0.0}, 0.3, z);
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(v.P_plus[i], std::exp(-0.3 * z[i]), 1e-15);
    EXPECT_EQ(v.P_minus[i], 0.0);
    EXPECT_EQ(v.imbalance[i], 1.0);
  }
  auto w = very_weak_powers({0.6, 0.0}, {0.0, 0.8}, 0.0, {0.0, 10.0});
  EXPECT_NEAR(w.imbalance[1], 0.36 - 0.64, 1e-15);
  EXPECT_NEAR(w.P_minus[1], 0.64, 1e-15);
}

TEST(Regime, Classification)
{
  double eta = 2.25115316, eps = 0.05;
  auto a = classify_regime(eps, eta, 4.0);
  EXPECT_NEAR(a.theta, std::exp(-eta * 4.0) / (eps * eps), 1e-12);
  EXPECT_EQ(a.regime, Regime::weak);
  EXPECT_EQ(classify_regime(eps, eta, 0.5).regime, Regime::moderate);
  EXPECT_EQ(classify_regime(eps, eta, 8.0).regime, Regime::very_weak);
  EXPECT_STREQ(regime_name(Regime::very_weak), "very_weak");
}
