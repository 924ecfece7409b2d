#include <cmath>
#include <cstdlib>
#include <numbers>

#include <gtest/gtest.h>

#include <duowave/oracles.hpp>
#include <duowave/stochastic_dynamics.hpp>

using namespace duowave;

namespace {

struct Fixture {
  WaveguideGeometry g;
  SingleWaveguideMode sm;
  CoupledSpectrum s;
  CovarianceModel cov;
  SimulationConfig cfg;

  explicit Fixture(double d = 4.0)
  {
    g.d = d;
    sm = solve_single_beta(g);
    s = solve_coupled_betas(g);
    cfg.L = 0.5;
    cfg.ensemble = 8;
    cfg.record_points = 65;
  }
};

} // namespace

TEST(Simulator, QuietMediumKeepsAmplitudes)
{
  Fixture t;
  t.cov.sigma2 = 0.0;
  t.cfg.a_e0 = {0.6, 0.2};
  t.cfg.a_o0 = {-0.3, 0.5};
  auto tr = simulate_guided(t.g, t.s, t.sm, t.cov, t.cfg);
  ASSERT_EQ(tr.z.size(), 65u);
  for (std::size_t i = 0; i < tr.z.size(); ++i) {
    EXPECT_NEAR(std::abs(tr.a_e[i] - t.cfg.a_e0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(tr.a_o[i] - t.cfg.a_o0), 0.0, 1e-14);
  }
  EXPECT_DOUBLE_EQ(tr.z.back(), t.cfg.L);
}

TEST(Simulator, NormDriftSmall)
{
  Fixture t;
  auto tr = simulate_guided(t.g, t.s, t.sm, t.cov, t.cfg, 3);
  EXPECT_LT(tr.max_norm_drift, 1e-6);
  EXPECT_LT(tr.clamp_rate, 1e-5);
  double moved = std::abs(tr.a_e.back() - t.cfg.a_e0);
  EXPECT_GT(moved, 1e-3);
}

TEST(Simulator, Preconditions)
{
  Fixture t;
  auto code = [&](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ConfigError;
  };
  auto cfg = t.cfg;
  cfg.dz_native = 1.0;
  EXPECT_EQ(code([&] { simulate_guided(t.g, t.s, t.sm, t.cov, cfg); }), ErrorCode::StepTooCoarse);
  cfg = t.cfg;
  cfg.epsilon = 0.2;
  EXPECT_EQ(code([&] { simulate_guided(t.g, t.s, t.sm, t.cov, cfg); }), ErrorCode::DomainError);
  cfg.epsilon = 0.0;
  EXPECT_EQ(code([&] { simulate_guided(t.g, t.s, t.sm, t.cov, cfg); }), ErrorCode::DomainError);
  auto wide = t.g;
  wide.D = 3.0;
  EXPECT_EQ(code([&] { simulate_guided(wide, t.s, t.sm, t.cov, t.cfg); }), ErrorCode::NotSingleMode);
  auto rough = t.cov;
  rough.ell = 0.05;
  EXPECT_EQ(code([&] { simulate_guided(t.g, t.s, t.sm, rough, t.cfg); }), ErrorCode::DomainError);
}

TEST(Simulator, StepBoundRespected)
{
  Fixture t;
  const auto& me = t.s.even.front();
  const auto& mo = t.s.odd.front();
  auto p = plan_simulation(me, mo, t.cov, t.cfg);
  EXPECT_LE(p.h, native_step_bound(me, mo, t.cov) * (1 + 1e-12));
  EXPECT_GE(p.process_samples * p.process_dz, t.cfg.L / (t.cfg.epsilon * t.cfg.epsilon));
  EXPECT_GE(p.fft_size, p.process_samples);
}

TEST(Ensemble, IndependentOfThreadCount)
{
  Fixture t;
  auto c1 = t.cfg, c2 = t.cfg;
  c1.threads = 1;
  c2.threads = 3;
  auto a = simulate_ensemble(t.g, t.s, t.sm, t.cov, c1);
  auto b = simulate_ensemble(t.g, t.s, t.sm, t.cov, c2);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    EXPECT_EQ(a[r].a_e, b[r].a_e);
    EXPECT_EQ(a[r].a_o, b[r].a_o);
  }
  auto one = simulate_guided(t.g, t.s, t.sm, t.cov, t.cfg, 5);
  EXPECT_EQ(one.a_e, a[5].a_e);
  EXPECT_NE(a[0].a_e, a[1].a_e);
}

TEST(Ensemble, SeedChangesRealizations)
{
  Fixture t;
  auto c = t.cfg;
  c.seed = 2;
  auto a = simulate_guided(t.g, t.s, t.sm, t.cov, t.cfg, 0);
  auto b = simulate_guided(t.g, t.s, t.sm, t.cov, c, 0);
  EXPECT_NE(a.a_e, b.a_e);
}

TEST(Ensemble, ThreadCountFromEnvironment)
{
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  setenv("DUOWAVE_THREADS", "1", 1);
  EXPECT_EQ(thread_count(), 1u);
  EXPECT_EQ(thread_count(4), 4u);
  setenv("DUOWAVE_THREADS", "100000", 1);
  EXPECT_EQ(thread_count(), hw);
  setenv("DUOWAVE_THREADS", "junk", 1);
  EXPECT_EQ(thread_count(), hw);
  unsetenv("DUOWAVE_THREADS");
}

TEST(EnsembleMoments, DuplicatedPathHasZeroError)
{
  Fixture t;
  auto tr = simulate_guided(t.g, t.s, t.sm, t.cov, t.cfg, 1);
  std::vector<Trajectory> v{tr, tr, tr};
  auto m = ensemble_moments(v);
  EXPECT_EQ(m.count, 3u);
  for (std::size_t i = 0; i < m.z.size(); ++i) {
    EXPECT_NEAR(m.se_Pe[i], 0.0, 1e-15);
    EXPECT_NEAR(m.se_imbalance[i], 0.0, 1e-15);
    EXPECT_NEAR(m.mean_Pe[i], std::norm(tr.a_e[i]), 1e-15);
  }
}

TEST(EnsembleMoments, InitialValuesAndErrors)
{
  Fixture t;
  auto paths = simulate_ensemble(t.g, t.s, t.sm, t.cov, t.cfg);
  auto m = ensemble_moments(paths);
  EXPECT_NEAR(m.mean_Pe[0], std::norm(t.cfg.a_e0), 1e-15);
  EXPECT_NEAR(m.mean_Po[0], std::norm(t.cfg.a_o0), 1e-15);
  EXPECT_NEAR(std::abs(m.cross[0] - t.cfg.a_o0 * std::conj(t.cfg.a_e0)), 0.0, 1e-15);
  EXPECT_NEAR(m.imbalance[0], 1.0, 1e-14);
  for (std::size_t i = 0; i < m.z.size(); ++i) EXPECT_NEAR(m.mean_Pe[i] + m.mean_Po[i], 1.0, 1e-6);

  EXPECT_THROW(ensemble_moments(std::span<const Trajectory>(paths.data(), 1)), Error);
  auto bad = paths;
  bad[1].z.pop_back();
  bad[1].a_e.pop_back();
  bad[1].a_o.pop_back();
  try {
    ensemble_moments(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
  }
}

TEST(RateFit, RecoversExponential)
{
  std::vector<double> z;
  std::vector<cplx> c;
  for (int i = 0; i <= 100; ++i) {
    z.push_back(0.05 * i);
    c.push_back(0.5 * std::exp(-0.73 * z.back()) * std::polar(1.0, 0.3 * i));
  }
  double r = fit_cross_decay_rate(z, c, moderate_cross_model({M_SQRT1_2, 0}, {M_SQRT1_2, 0}), 0.01, 10.0, 5.0);
  EXPECT_NEAR(r, 0.73, 1e-6);
}

TEST(RateFit, WeakModelMatchesClosedForm)
{
  double theta = 0.8, bp = 0.14, G = 0.3;
  std::vector<double> z;
  for (int i = 0; i <= 80; ++i) z.push_back(0.1 * i);
  auto c = cross_moment_weak({M_SQRT1_2, 0}, {M_SQRT1_2, 0}, theta, bp, G, z);
  double r = fit_cross_decay_rate(z, c, weak_cross_model({M_SQRT1_2, 0}, {M_SQRT1_2, 0}, theta, bp), 0.01, 10.0, 8.0);
  EXPECT_NEAR(r, G, 1e-6);
}

// Weak regime: the mean imbalance follows the damped oscillator within a few standard errors.
TEST(Ensemble, WeakRegimeImbalance)
{
  Fixture t;
  t.cov.sigma2 = 2.0;
  double G = gamma_coeff(t.sm, t.g, t.cov);
  t.g.d = separation_for_splitting(t.g, 2.0 * G * 0.0025);
  t.s = solve_coupled_betas(t.g);
  t.cfg.L = 1.0 / G;
  t.cfg.ensemble = 200;
  t.cfg.record_points = 41;
  auto paths = simulate_ensemble(t.g, t.s, t.sm, t.cov, t.cfg);
  auto m = ensemble_moments(paths);
  double theta = t.s.splitting / (2.0 * t.sm.beta_prime * 0.0025);
  auto th = imbalance_weak(theta, t.sm.beta_prime, G, m.z);
  int bad = 0;
  for (std::size_t i = 1; i < m.z.size(); ++i)
    if (std::abs(m.imbalance[i] - th[i]) > 4.0 * m.se_imbalance[i] + 1e-3) ++bad;
  EXPECT_EQ(bad, 0);
  EXPECT_LT(m.max_norm_drift, 1e-6);
}

// Moderate regime with guided modes only: Lambda = 0 and Gamma from the finite-d coupling,
// so E|a_e|^4 follows the three-exponential law. theta ~ 200; near theta = 100 the
// O(Gamma/theta beta') correction is already a visible 1% bias.
TEST(Ensemble, ModerateRegimeFourthMoment)
{
  Fixture t(0.3);
  t.cov.sigma2 = 2.0;
  auto reg = classify_regime(t.cfg.epsilon, t.sm.eta, t.g.d);
  ASSERT_EQ(reg.regime, Regime::moderate);
  EffectiveCoefficients c;
  c.Gamma = oracle::gamma_finite_d(t.g, t.cov);
  t.cfg.L = 1.0 / c.Gamma;
  t.cfg.ensemble = 800;
  t.cfg.record_points = 21;
  t.cfg.a_e0 = {0.9, 0.0};
  t.cfg.a_o0 = {std::sqrt(1.0 - 0.81), 0.0};
  auto paths = simulate_ensemble(t.g, t.s, t.sm, t.cov, t.cfg);
  auto m = ensemble_moments(paths);
  auto th = moments_moderate(t.cfg.a_e0, t.cfg.a_o0, c, m.z, {t.cfg.epsilon, t.s.splitting});
  int bad = 0;
  for (std::size_t i = 1; i < m.z.size(); ++i)
    if (std::abs(m.m4_e[i] - th.m4_e[i]) > 3.0 * m.se_m4_e[i]) ++bad;
  EXPECT_EQ(bad, 0);
}
