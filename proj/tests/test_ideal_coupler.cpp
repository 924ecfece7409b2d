#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include <duowave/ideal_coupler.hpp>

using namespace duowave;

namespace {

struct Fixture {
  WaveguideGeometry g;
  SingleWaveguideMode sm = solve_single_beta(g);
  CoupledSpectrum s = solve_coupled_betas(g);
};

double argmax_abs(const std::vector<double>& xs, const std::vector<cplx>& p)
{
  std::size_t b = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (std::abs(p[i]) > std::abs(p[b])) b = i;
  return xs[b];
}

} // namespace

TEST(SourceAmplitudes, EvenModeProfile)
{
  Fixture t;
  const auto& me = t.s.even.front();
  double W = 0.5 * t.g.d + t.g.D + 40.0 / me.eta;
  auto f = SourceProfile::analytic("phi_e", [&](double x) { return guided_eigenfunction(me, t.g, x); }, -W, W,
                                   {-0.5 * t.g.d, 0.5 * t.g.d});
  auto a = source_amplitudes(f, t.s, t.g);
  EXPECT_NEAR(a.a_e0.real(), 0.5 * std::sqrt(me.beta), 1e-9);
  EXPECT_NEAR(std::abs(a.a_o0), 0.0, 1e-10);
}

TEST(SourceAmplitudes, OddProfileHasNoEvenPart)
{
  Fixture t;
  auto f = SourceProfile::analytic("odd", [](double x) { return x * std::exp(-x * x); }, -8.0, 8.0);
  auto a = source_amplitudes(f, t.s, t.g);
  EXPECT_NEAR(std::abs(a.a_e0), 0.0, 1e-12);
  EXPECT_GT(std::abs(a.a_o0), 1e-3);
}

TEST(SourceAmplitudes, RightWaveguideSplitsEvenly)
{
  Fixture t;
  auto f = SourceProfile::right_waveguide(t.sm, t.g);
  auto a = source_amplitudes(f, t.s, t.g);
  // the single-guide profile is almost (phi_e + phi_o)/sqrt 2
  double r = std::abs(a.a_e0) / std::abs(a.a_o0);
  EXPECT_NEAR(r, 1.0, 0.01);
  EXPECT_NEAR(std::norm(a.a_e0) + std::norm(a.a_o0), 0.25 * t.sm.beta * source_norm2(f, t.g), 0.01 * t.sm.beta);
}

TEST(SourceAmplitudes, SampledProfileMatchesAnalytic)
{
  Fixture t;
  auto g = [](double x) { return std::exp(-(x - 2.5) * (x - 2.5)); };
  auto fa = SourceProfile::analytic("gauss", g, -6.0, 11.0);
  std::vector<double> xs, fs;
  // linear interpolation at h = 0.01: O(h^2) error
  for (int i = 0; i <= 1700; ++i) {
    xs.push_back(-6.0 + 0.01 * i);
    fs.push_back(g(xs.back()));
  }
  auto a1 = source_amplitudes(fa, t.s, t.g);
  auto a2 = source_amplitudes(SourceProfile::sampled(xs, fs), t.s, t.g);
  EXPECT_NEAR(a1.a_e0.real(), a2.a_e0.real(), 1e-4);
  EXPECT_NEAR(a1.a_o0.real(), a2.a_o0.real(), 1e-4);
  EXPECT_THROW(SourceProfile::sampled({1.0, 0.0}, {0.0, 0.0}), Error);
}

TEST(IdealU, InitialValues)
{
  Fixture t;
  cplx ae(0.3, 0.2), ao(-0.1, 0.6);
  auto u = ideal_u({0.0}, ae, ao, t.sm.beta_prime, t.sm.eta, t.g.d);
  EXPECT_EQ(u.u_plus[0], ae + ao);
  EXPECT_EQ(u.u_minus[0], ae - ao);
}

TEST(IdealU, FullTransferAndPowerConservation)
{
  Fixture t;
  double Z = std::numbers::pi * std::exp(t.sm.eta * t.g.d) / (2.0 * t.sm.beta_prime);
  cplx a(0.5, 0.0);
  auto u = ideal_u({Z, 2.0 * Z}, a, a, t.sm.beta_prime, t.sm.eta, t.g.d);
  EXPECT_NEAR(std::abs(u.u_plus[0]), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(u.u_minus[0]), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(u.u_plus[1]), 1.0, 1e-12);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.0, 8.0 * Z), C(-1.0, 1.0);
  std::vector<double> z(10000);
  for (auto& v : z) v = U(rng);
  cplx ae(C(rng), C(rng)), ao(C(rng), C(rng));
  auto w = ideal_u(z, ae, ao, t.sm.beta_prime, t.sm.eta, t.g.d);
  double P = 2.0 * (std::norm(ae) + std::norm(ao));
  for (std::size_t i = 0; i < z.size(); ++i)
    ASSERT_NEAR(std::norm(w.u_plus[i]) + std::norm(w.u_minus[i]), P, 1e-12 * P);
}

TEST(IdealU, PowerPeriod)
{
  Fixture t;
  double T = std::numbers::pi * std::exp(t.sm.eta * t.g.d) / t.sm.beta_prime;
  cplx ae(0.6, 0.0), ao(0.2, 0.1);
  std::vector<double> z{0.37 * T, 1.37 * T, 3.37 * T};
  auto u = ideal_u(z, ae, ao, t.sm.beta_prime, t.sm.eta, t.g.d);
  EXPECT_NEAR(std::norm(u.u_plus[1]), std::norm(u.u_plus[0]), 1e-10);
  EXPECT_NEAR(std::norm(u.u_minus[2]), std::norm(u.u_minus[0]), 1e-10);
}

TEST(GuidedField, ParityOfSingleModeFields)
{
  Fixture t;
  std::vector<double> xs;
  for (int i = -200; i <= 200; ++i) xs.push_back(0.05 * i);
  auto pe = synthesize_guided_field(1.3, xs, t.s, t.g, {cplx(1.0, 0.0), 0.0});
  auto po = synthesize_guided_field(1.3, xs, t.s, t.g, {0.0, cplx(1.0, 0.0)});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::size_t j = xs.size() - 1 - i;
    EXPECT_NEAR(std::abs(pe[i] - pe[j]), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(po[i] + po[j]), 0.0, 1e-12);
  }
  auto z0 = synthesize_guided_field(0.4, xs, t.s, t.g, {0.0, 0.0});
  for (auto v : z0) EXPECT_EQ(v, cplx(0.0, 0.0));
}

TEST(GuidedField, PowerPeaksInRightThenLeftGuide)
{
  Fixture t;
  auto a = source_amplitudes(SourceProfile::right_waveguide(t.sm, t.g), t.s, t.g);
  std::vector<double> xs;
  double W = 0.5 * t.g.d + t.g.D + 2.0;
  for (int i = 0; i <= 4000; ++i) xs.push_back(-W + 2.0 * W * i / 4000.0);
  double c = 0.5 * (t.g.d + t.g.D);
  double Zt = std::numbers::pi / t.s.splitting;
  EXPECT_NEAR(argmax_abs(xs, synthesize_guided_field(0.0, xs, t.s, t.g, a)), c, t.g.D / 10.0);
  EXPECT_NEAR(argmax_abs(xs, synthesize_guided_field(Zt, xs, t.s, t.g, a)), -c, t.g.D / 10.0);
}

TEST(GuidedField, CsvColumns)
{
  std::ostringstream os;
  write_field_csv(os, {0.0, 1.0}, {cplx(1.0, -1.0), cplx(0.0, 2.0)});
  auto s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "x,Re_p,Im_p,abs_p");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
}
