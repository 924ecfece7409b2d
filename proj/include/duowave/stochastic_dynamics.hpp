#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "coefficients.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "mode_spectrum.hpp"
#include "moment_theory.hpp"
#include "random_media.hpp"

namespace duowave {

struct SimulationConfig {
  double epsilon = 0.05;
  double L = 1.0;               // scaled range; native range is L/eps^2
  double dz_native = 0.0;       // 0 picks the largest admissible step
  std::size_t ensemble = 100;
  std::uint64_t seed = 1;
  Regime regime = Regime::weak; // logged only
  std::size_t record_points = 512;
  double process_dz_over_ell = 1.0 / 16.0;
  cplx a_e0{M_SQRT1_2, 0.0}, a_o0{M_SQRT1_2, 0.0};
  unsigned threads = 0;         // 0: DUOWAVE_THREADS or hardware concurrency
};

// Scaled range grid and guided amplitudes along one realization.
struct Trajectory {
  std::vector<double> z;
  std::vector<cplx> a_e, a_o;
  double epsilon = 0.0;
  double dbeta_e = 0.0, dbeta_o = 0.0;  // beta_t - beta (native)
  double splitting = 0.0;               // beta_e - beta_o
  double max_norm_drift = 0.0;
  double clamp_rate = 0.0;

  double delta_beta() const { return splitting; }
  cplx u_plus(std::size_t i) const { return a_e[i] * phase_e(i) + a_o[i] * phase_o(i); }
  cplx u_minus(std::size_t i) const { return a_e[i] * phase_e(i) - a_o[i] * phase_o(i); }
  // 2 Re{a_e conj(a_o) e^{i (beta_e - beta_o) z/eps^2}} / (|a_e|^2 + |a_o|^2)
  double imbalance(std::size_t i) const
  {
    double P = std::norm(a_e[i]) + std::norm(a_o[i]);
    return 2.0 * std::real(a_e[i] * std::conj(a_o[i]) * std::polar(1.0, delta_beta() * z[i] / (epsilon * epsilon))) / P;
  }

private:
  cplx phase_e(std::size_t i) const { return std::polar(1.0, dbeta_e * z[i] / (epsilon * epsilon)); }
  cplx phase_o(std::size_t i) const { return std::polar(1.0, dbeta_o * z[i] / (epsilon * epsilon)); }
};

inline unsigned thread_count(unsigned requested = 0)
{
  if (requested) return requested;
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* e = std::getenv("DUOWAVE_THREADS")) {
    long v = std::strtol(e, nullptr, 10);
    if (v > 0) return std::min<unsigned>(unsigned(v), hw);
  }
  return hw;
}

// Largest admissible native step: correlation length, phase of the splitting, carrier.
inline double native_step_bound(const GuidedMode& me, const GuidedMode& mo, const CovarianceModel& cov)
{
  double db = std::abs(me.beta - mo.beta);
  double b = std::min(cov.ell / 8.0, 2.0 * std::numbers::pi / (50.0 * me.beta));
  if (db > 0) b = std::min(b, 0.1 / db);
  return b;
}

namespace detail {

struct GuidedSystem {
  double kee, keo, koo, delta;
  std::array<double, 4> wee, weo, woo;
};

inline GuidedSystem make_system(const GuidedMode& me, const GuidedMode& mo, double splitting, const WaveguideGeometry& g,
                                double eps)
{
  GuidedSystem s;
  double K = 0.5 * eps * g.dk2();
  s.kee = K / me.beta;
  s.koo = K / mo.beta;
  s.keo = K / std::sqrt(me.beta * mo.beta);
  s.delta = splitting;
  s.wee = coupling_weights(me, me, g);
  s.weo = coupling_weights(me, mo, g);
  s.woo = coupling_weights(mo, mo, g);
  return s;
}

// Cubic Lagrange interpolation of the three coupling channels on the process grid.
struct Channels {
  std::vector<double> ee, eo, oo;
  double dz = 0.0;

  void at(double zeta, double& cee, double& ceo, double& coo) const
  {
    double u = zeta / dz + 1.0;
    auto j = static_cast<std::size_t>(u);
    double t = u - double(j);
    double wm = -t * (t - 1.0) * (t - 2.0) / 6.0, w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    double w1 = -(t + 1.0) * t * (t - 2.0) / 2.0, w2 = (t + 1.0) * t * (t - 1.0) / 6.0;
    cee = wm * ee[j - 1] + w0 * ee[j] + w1 * ee[j + 1] + w2 * ee[j + 2];
    ceo = wm * eo[j - 1] + w0 * eo[j] + w1 * eo[j + 1] + w2 * eo[j + 2];
    coo = wm * oo[j - 1] + w0 * oo[j] + w1 * oo[j + 1] + w2 * oo[j + 2];
  }
};

} // namespace detail

struct SimulationPlan {
  double h = 0.0;               // native step
  std::size_t substeps = 0;     // per record interval
  double process_dz = 0.0;
  std::size_t process_samples = 0;
  std::size_t fft_size = 0;
};

inline SimulationPlan plan_simulation(const GuidedMode& me, const GuidedMode& mo, const CovarianceModel& cov,
                                      const SimulationConfig& cfg)
{
  if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 0.1))
    throw Error(ErrorCode::DomainError, "stochastic_dynamics", "simulate_guided", "need 0 < epsilon <= 0.1");
  if (!(cfg.L > 0.0) || cfg.record_points < 2)
    throw Error(ErrorCode::DomainError, "stochastic_dynamics", "simulate_guided", "need L > 0, >= 2 record points");
  double bound = native_step_bound(me, mo, cov);
  if (cfg.dz_native > bound * (1 + 1e-12))
    throw Error(ErrorCode::StepTooCoarse, "stochastic_dynamics", "simulate_guided",
                "dz_native " + fmt(cfg.dz_native) + " exceeds bound " + fmt(bound));
  double hmax = cfg.dz_native > 0 ? cfg.dz_native : bound;
  double T = cfg.L / (cfg.epsilon * cfg.epsilon);
  double rec = T / double(cfg.record_points - 1);
  SimulationPlan p;
  p.substeps = std::size_t(std::ceil(rec / hmax * (1 - 1e-12)));
  p.h = rec / double(p.substeps);
  p.process_dz = cfg.process_dz_over_ell * cov.ell;
  double need = std::max(T, 50.0 * cov.ell);
  p.process_samples = std::size_t(std::ceil(need / p.process_dz)) + 4;
  // period proportional to T, so runs at eps and eps/2 share scaled frequencies
  p.fft_size = detail::next_pow2(std::max<std::size_t>(std::size_t(std::ceil(1.125 * need / p.process_dz)), 2048));
  std::size_t guard = p.process_samples + std::size_t(std::ceil(10.0 * cov.ell / p.process_dz));
  while (p.fft_size < guard) p.fft_size <<= 1;
  return p;
}

// Guided-only coupled mode system in native range zeta = z/eps^2, prepared once per
// configuration; run(r) integrates realization r.
class GuidedSimulator {
public:
  GuidedSimulator(const WaveguideGeometry& g, const CoupledSpectrum& modes, const SingleWaveguideMode& sm,
                  const CovarianceModel& cov, const SimulationConfig& cfg)
      : cfg_(cfg), me_(modes.even.front()), mo_(modes.odd.front()), sm_(sm),
        plan_(plan_simulation(me_, mo_, cov, cfg)), sys_(detail::make_system(me_, mo_, modes.splitting, g, cfg.epsilon)),
        synth_(cov, plan_.process_dz, plan_.process_samples, synthesis_options(plan_))
  {
    if (!g.single_mode())
      throw Error(ErrorCode::NotSingleMode, "stochastic_dynamics", "simulate_guided", "geometry is not single mode");
    // a quiet medium scatters nothing, so the forward check is vacuous there
    if (cov.sigma2 > 0.0) {
      auto fwd = check_forward_scattering(cov, g.k, 1e-3);
      if (!fwd.ok)
        throw Error(ErrorCode::DomainError, "stochastic_dynamics", "simulate_guided",
                    "forward scattering check failed: " + fwd.diagnostic);
    }
  }

  const SimulationPlan& plan() const { return plan_; }

  Trajectory run(std::uint64_t realization) const
  {
    auto proc = synth_.draw(rng::realization_seed(cfg_.seed, realization));
    detail::Channels ch;
    ch.dz = plan_.process_dz;
    std::size_t N = proc.size();
    ch.ee.resize(N);
    ch.eo.resize(N);
    ch.oo.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
      double e = 0, x = 0, o = 0;
      for (int q = 0; q < 4; ++q) {
        double v = proc.values[q][i];
        e += sys_.wee[q] * v;
        x += sys_.weo[q] * v;
        o += sys_.woo[q] * v;
      }
      ch.ee[i] = e;
      ch.eo[i] = x;
      ch.oo[i] = o;
    }

    Trajectory tr;
    tr.epsilon = cfg_.epsilon;
    tr.dbeta_e = me_.beta - sm_.beta;
    tr.dbeta_o = mo_.beta - sm_.beta;
    tr.splitting = sys_.delta;
    tr.clamp_rate = proc.clamp_rate();
    const double e2 = cfg_.epsilon * cfg_.epsilon;
    const double h = plan_.h;
    const cplx I(0.0, 1.0);
    const cplx rot = std::polar(1.0, 0.5 * sys_.delta * h);

    cplx ae = cfg_.a_e0, ao = cfg_.a_o0;
    const double n0 = std::norm(ae) + std::norm(ao);
    auto rhs = [&](double cee, double ceo, double coo, cplx ph, cplx xe, cplx xo, cplx& de, cplx& dd) {
      de = I * (sys_.kee * cee * xe + sys_.keo * ceo * std::conj(ph) * xo);
      dd = I * (sys_.keo * ceo * ph * xe + sys_.koo * coo * xo);
    };

    const std::size_t R = cfg_.record_points;
    tr.z.reserve(R);
    tr.a_e.reserve(R);
    tr.a_o.reserve(R);
    double zrec = cfg_.L / double(R - 1);
    double c0e, c0x, c0o;
    ch.at(0.0, c0e, c0x, c0o);
    for (std::size_t r = 0; r < R; ++r) {
      if (r > 0) {
        double zeta0 = double(r - 1) * zrec / e2;
        // resync the phase once per record interval
        cplx ph = std::polar(1.0, sys_.delta * zeta0);
        for (std::size_t s = 0; s < plan_.substeps; ++s) {
          double zeta = zeta0 + double(s) * h;
          double cme, cmx, cmo, c1e, c1x, c1o;
          ch.at(zeta + 0.5 * h, cme, cmx, cmo);
          ch.at(zeta + h, c1e, c1x, c1o);
          cplx phm = ph * rot, ph1 = phm * rot;
          cplx k1e, k1o, k2e, k2o, k3e, k3o, k4e, k4o;
          rhs(c0e, c0x, c0o, ph, ae, ao, k1e, k1o);
          rhs(cme, cmx, cmo, phm, ae + 0.5 * h * k1e, ao + 0.5 * h * k1o, k2e, k2o);
          rhs(cme, cmx, cmo, phm, ae + 0.5 * h * k2e, ao + 0.5 * h * k2o, k3e, k3o);
          rhs(c1e, c1x, c1o, ph1, ae + h * k3e, ao + h * k3o, k4e, k4o);
          ae += h / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e);
          ao += h / 6.0 * (k1o + 2.0 * k2o + 2.0 * k3o + k4o);
          ph = ph1;
          c0e = c1e;
          c0x = c1x;
          c0o = c1o;
        }
        double drift = std::abs(std::norm(ae) + std::norm(ao) - n0);
        tr.max_norm_drift = std::max(tr.max_norm_drift, drift);
        if (!(drift <= 1e-4))
          throw Error(ErrorCode::NormDrift, "stochastic_dynamics", "simulate_guided",
                      "norm drift " + fmt(drift) + " at z = " + fmt(double(r) * zrec) +
                      ", realization " + std::to_string(realization) + ", step " + fmt(h));
      }
      tr.z.push_back(double(r) * zrec);
      tr.a_e.push_back(ae);
      tr.a_o.push_back(ao);
    }
    return tr;
  }

private:
  static SynthesisOptions synthesis_options(const SimulationPlan& p)
  {
    SynthesisOptions o;
    o.fft_size = p.fft_size;
    return o;
  }

  SimulationConfig cfg_;
  GuidedMode me_, mo_;
  SingleWaveguideMode sm_;
  SimulationPlan plan_;
  detail::GuidedSystem sys_;
  SpectralSynthesizer synth_;
};

inline Trajectory simulate_guided(const WaveguideGeometry& g, const CoupledSpectrum& modes, const SingleWaveguideMode& sm,
                                  const CovarianceModel& cov, const SimulationConfig& cfg, std::uint64_t realization = 0)
{
  return GuidedSimulator(g, modes, sm, cov, cfg).run(realization);
}

// Independent realizations r = 0..ensemble-1, stored by index so the result does not depend
// on scheduling.
inline std::vector<Trajectory> simulate_ensemble(const WaveguideGeometry& g, const CoupledSpectrum& modes,
                                                 const SingleWaveguideMode& sm, const CovarianceModel& cov,
                                                 const SimulationConfig& cfg)
{
  GuidedSimulator sim(g, modes, sm, cov, cfg);
  std::vector<Trajectory> out(cfg.ensemble);
  unsigned nt = std::min<unsigned>(thread_count(cfg.threads), unsigned(std::max<std::size_t>(1, cfg.ensemble)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  auto work = [&]() {
    for (;;) {
      std::size_t r = next.fetch_add(1);
      if (r >= cfg.ensemble || failed) return;
      try {
        out[r] = sim.run(r);
      } catch (...) {
        if (!failed.exchange(true)) err = std::current_exception();
        return;
      }
    }
  };
  if (nt <= 1) work();
  else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < nt; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
  return out;
}

struct EnsembleMoments {
  std::size_t count = 0;
  std::vector<double> z;
  std::vector<double> mean_Pe, se_Pe, mean_Po, se_Po;
  std::vector<cplx> cross;       // E[a_o conj(a_e)]
  std::vector<double> se_cross;  // SE of |mean cross| (delta method)
  std::vector<double> imbalance, se_imbalance;
  std::vector<double> m4_e, se_m4_e, m4_o, m22;
  double max_norm_drift = 0.0;
};

inline EnsembleMoments ensemble_moments(std::span<const Trajectory> paths)
{
  if (paths.size() < 2)
    throw Error(ErrorCode::DomainError, "stochastic_dynamics", "ensemble_moments", "need at least 2 trajectories");
  const auto& z = paths[0].z;
  for (const auto& p : paths)
    if (p.z != z || p.a_e.size() != z.size() || p.a_o.size() != z.size())
      throw Error(ErrorCode::GridMismatch, "stochastic_dynamics", "ensemble_moments", "trajectories on different grids");
  EnsembleMoments m;
  m.count = paths.size();
  m.z = z;
  const double n = double(paths.size());
  auto se_of = [&](auto&& f, double mean) {
    double s = 0.0;
    for (const auto& p : paths) {
      double d = f(p) - mean;
      s += d * d;
    }
    return std::sqrt(s / (n - 1.0) / n);
  };
  for (const auto& p : paths) m.max_norm_drift = std::max(m.max_norm_drift, p.max_norm_drift);
  for (std::size_t i = 0; i < z.size(); ++i) {
    double spe = 0, spo = 0, sim = 0, s4e = 0, s4o = 0, s22 = 0;
    cplx sc = 0;
    for (const auto& p : paths) {
      double pe = std::norm(p.a_e[i]), po = std::norm(p.a_o[i]);
      spe += pe;
      spo += po;
      sc += p.a_o[i] * std::conj(p.a_e[i]);
      sim += p.imbalance(i);
      s4e += pe * pe;
      s4o += po * po;
      s22 += pe * po;
    }
    double mpe = spe / n, mpo = spo / n, mim = sim / n, m4e = s4e / n;
    cplx mc = sc / n;
    m.mean_Pe.push_back(mpe);
    m.mean_Po.push_back(mpo);
    m.cross.push_back(mc);
    m.imbalance.push_back(mim);
    m.m4_e.push_back(m4e);
    m.m4_o.push_back(s4o / n);
    m.m22.push_back(s22 / n);
    m.se_Pe.push_back(se_of([&](const Trajectory& p) { return std::norm(p.a_e[i]); }, mpe));
    m.se_Po.push_back(se_of([&](const Trajectory& p) { return std::norm(p.a_o[i]); }, mpo));
    m.se_imbalance.push_back(se_of([&](const Trajectory& p) { return p.imbalance(i); }, mim));
    m.se_m4_e.push_back(se_of([&](const Trajectory& p) { return std::norm(p.a_e[i]) * std::norm(p.a_e[i]); }, m4e));
    double am = std::abs(mc);
    cplx dir = am > 0 ? mc / am : cplx(1.0, 0.0);
    double proj = std::real(mc * std::conj(dir));
    m.se_cross.push_back(se_of([&](const Trajectory& p) { return std::real(p.a_o[i] * std::conj(p.a_e[i]) * std::conj(dir)); }, proj));
  }
  return m;
}

inline void write_moments_csv(std::ostream& os, const EnsembleMoments& m)
{
  csv::header(os, {"z", "mean_Pe", "se_Pe", "mean_Po", "se_Po", "Re_cross", "Im_cross", "imbalance", "se_imbalance",
                   "m4_e", "m4_o", "m22"});
  for (std::size_t i = 0; i < m.z.size(); ++i)
    csv::row(os, {m.z[i], m.mean_Pe[i], m.se_Pe[i], m.mean_Po[i], m.se_Po[i], m.cross[i].real(), m.cross[i].imag(),
                  m.imbalance[i], m.se_imbalance[i], m.m4_e[i], m.m4_o[i], m.m22[i]});
}

// Model for |E[a_o conj(a_e)]|(z) as a function of the free rate.
using CrossDecayModel = std::function<std::vector<double>(double rate, const std::vector<double>& z)>;

inline CrossDecayModel moderate_cross_model(cplx a_e0, cplx a_o0)
{
  double a = std::abs(a_o0 * std::conj(a_e0));
  return [a](double rate, const std::vector<double>& z) {
    std::vector<double> v;
    for (double zz : z) v.push_back(a * std::exp(-rate * zz));
    return v;
  };
}

inline CrossDecayModel weak_cross_model(cplx a_e0, cplx a_o0, double theta, double beta_prime)
{
  return [=](double rate, const std::vector<double>& z) {
    auto c = cross_moment_weak(a_e0, a_o0, theta, beta_prime, rate, z);
    std::vector<double> v;
    for (auto x : c) v.push_back(std::abs(x));
    return v;
  };
}

// Least squares on |E[a_o conj(a_e)]| over z <= zmax, rate searched in [lo, hi].
inline double fit_cross_decay_rate(const std::vector<double>& z, const std::vector<cplx>& cross, const CrossDecayModel& model,
                                   double lo, double hi, double zmax)
{
  std::vector<double> zs, ys;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i] <= zmax * (1 + 1e-12)) {
      zs.push_back(z[i]);
      ys.push_back(std::abs(cross[i]));
    }
  auto obj = [&](double lr) {
    auto m = model(std::exp(lr), zs);
    double s = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i) s += (m[i] - ys[i]) * (m[i] - ys[i]);
    return s;
  };
  double a = std::log(lo), b = std::log(hi);
  const int n = 64;
  int best = 0;
  double fb = obj(a);
  for (int i = 1; i <= n; ++i) {
    double f = obj(a + (b - a) * i / n);
    if (f < fb) { fb = f; best = i; }
  }
  double l = a + (b - a) * std::max(0, best - 1) / n, r = a + (b - a) * std::min(n, best + 1) / n;
  auto res = boost::math::tools::brent_find_minima(obj, l, r, 40);
  return std::exp(res.first);
}

struct RateEstimate {
  double rate = 0.0;
  double se = 0.0;  // delete-one-group jackknife
};

inline RateEstimate fit_rate_jackknife(std::span<const Trajectory> paths, const CrossDecayModel& model, double lo, double hi,
                                       double zmax, std::size_t groups = 20)
{
  auto full = ensemble_moments(paths);
  RateEstimate e;
  e.rate = fit_cross_decay_rate(full.z, full.cross, model, lo, hi, zmax);
  groups = std::min(groups, paths.size());
  std::size_t n = paths.size();
  std::vector<double> est;
  for (std::size_t gi = 0; gi < groups; ++gi) {
    std::size_t b0 = gi * n / groups, b1 = (gi + 1) * n / groups;
    std::vector<cplx> c(full.z.size());
    for (std::size_t i = 0; i < full.z.size(); ++i) {
      cplx s = full.cross[i] * double(n);
      for (std::size_t r = b0; r < b1; ++r) s -= paths[r].a_o[i] * std::conj(paths[r].a_e[i]);
      c[i] = s / double(n - (b1 - b0));
    }
    est.push_back(fit_cross_decay_rate(full.z, c, model, lo, hi, zmax));
  }
  double mean = 0.0;
  for (double v : est) mean += v;
  mean /= double(groups);
  double s = 0.0;
  for (double v : est) s += (v - mean) * (v - mean);
  e.se = std::sqrt(double(groups - 1) / double(groups) * s);
  return e;
}

} // namespace duowave
