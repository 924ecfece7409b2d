#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "acceptance.hpp"
#include "coefficients.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "ideal_coupler.hpp"
#include "mode_spectrum.hpp"
#include "moment_theory.hpp"
#include "random_media.hpp"
#include "stochastic_dynamics.hpp"

namespace duowave {

inline constexpr const char* tool_version = "0.1.0";

namespace fs = std::filesystem;
using nlohmann::json;

struct RunContext {
  ExperimentConfig cfg;
  fs::path out;
  std::ostream* log = &std::cout;
  json manifest;
  std::vector<std::string> files;
  bool all_passed = true;      // validate only
  bool check_determinism = true;
  std::size_t determinism_ensemble = 16;

  fs::path file(const std::string& name)
  {
    files.push_back(name);
    return out / name;
  }
};

namespace detail {

inline json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Applies simulation.ratio by tuning d so that 2 theta beta' = 2 ratio Gamma.
inline void apply_ratio(RunContext& rc)
{
  auto& c = rc.cfg;
  if (!c.ratio) return;
  auto sm = solve_single_beta(c.geometry);
  double G = gamma_coeff(sm, c.geometry, c.covariance);
  if (!(G > 0))
    throw Error(ErrorCode::DomainError, "cli", "apply_ratio", "simulation.ratio needs Gamma > 0");
  c.geometry.d = separation_for_splitting(c.geometry, 2.0 * *c.ratio * G * c.epsilon * c.epsilon);
  *rc.log << "tuned geometry.d = " << csv::num(c.geometry.d) << " for ratio " << csv::num(*c.ratio) << "\n";
}

inline json derived_quantities(const ExperimentConfig& c, std::ostream& log)
{
  json d;
  const auto& g = c.geometry;
  auto sm = solve_single_beta(g);
  auto s = solve_coupled_betas(g);
  double theta_eff = s.splitting / (2.0 * sm.beta_prime * c.epsilon * c.epsilon);
  auto reg = classify_regime(c.epsilon, sm.eta, g.d);
  d["beta"] = sm.beta;
  d["beta_e"] = s.even.front().beta;
  d["beta_o"] = s.odd.front().beta;
  d["splitting"] = s.splitting;
  d["beta_prime"] = sm.beta_prime;
  d["xi"] = sm.xi;
  d["eta"] = sm.eta;
  d["theta"] = reg.theta;
  d["theta_from_splitting"] = theta_eff;
  d["regime"] = regime_name(reg.regime);
  log << "theta = " << csv::num(reg.theta) << " (" << regime_name(reg.regime) << ")\n";
  auto put = [&](const char* name, auto&& f) {
    try {
      d[name] = nullable(f());
    } catch (const Error& e) {
      d[name] = nullptr;
      d["unavailable"][name] = e.what();
    }
  };
  put("Gamma", [&] { return gamma_coeff(sm, g, c.covariance); });
  put("Lambda", [&] { return lambda_coeff(sm, g, c.covariance); });
  put("Theta", [&] { return theta_coeff(sm, g, c.covariance); });
  put("kappa", [&] { return kappa_coeff(sm, g, c.covariance); });
  put("kappa_ev", [&] { return kappa_ev_coeff(sm, g, c.covariance); });
  return d;
}

inline SimulationConfig simulation_config(const ExperimentConfig& c)
{
  SimulationConfig s;
  s.epsilon = c.epsilon;
  s.L = c.L;
  s.dz_native = c.dz;
  s.ensemble = c.ensemble;
  s.seed = c.seed;
  return s;
}

} // namespace detail

inline void run_modes(RunContext& rc)
{
  const auto& g = rc.cfg.geometry;
  auto sm = solve_single_beta(g);
  auto s = solve_coupled_betas(g);
  acceptance::write_file(rc.file("modes.csv"), [&](std::ostream& os) {
    os << "mode,j,beta,xi,eta,norm_const\n";
    os << "single,1," << csv::num(sm.beta) << "," << csv::num(sm.xi) << "," << csv::num(sm.eta) << ","
       << csv::num(sm.amplitude(g.D)) << "\n";
    for (const auto* list : {&s.even, &s.odd})
      for (const auto& m : *list)
        os << parity_name(m.parity) << "," << m.j << "," << csv::num(m.beta) << "," << csv::num(m.xi) << ","
           << csv::num(m.eta) << "," << csv::num(m.norm_const) << "\n";
  });
  acceptance::write_file(rc.file("eigenfunctions.csv"),
                         [&](std::ostream& os) { acceptance::write_eigenfunctions(os, g); });
}

inline void run_coeffs(RunContext& rc)
{
  const auto& g = rc.cfg.geometry;
  const auto& cov = rc.cfg.covariance;
  auto sm = solve_single_beta(g);
  auto c = compute_effective_coefficients(sm, g, cov);
  auto t = two_mode_table(c);
  acceptance::write_file(rc.file("coefficients.csv"), [&](std::ostream& os) {
    os << "name,value\n";
    auto row = [&](const char* n, double v) { os << n << "," << csv::num(v) << "\n"; };
    row("beta_prime", c.beta_prime);
    row("Gamma", c.Gamma);
    row("Lambda", c.Lambda);
    row("Lambda_per_parity", lambda_coeff_per_parity(sm, g, cov));
    row("Theta", c.Theta);
    row("kappa", c.kappa);
    row("kappa_ev", c.kappa_ev);
    row("c_second_order", second_order_phase_c(sm, g, cov));
    row("Gamma_c_ee", t.Gamma_c[0][0]);
    row("Gamma_c_eo", t.Gamma_c[0][1]);
    row("Gamma_c_oe", t.Gamma_c[1][0]);
    row("Gamma_c_oo", t.Gamma_c[1][1]);
  });
}

inline void run_ideal(RunContext& rc)
{
  const auto& g = rc.cfg.geometry;
  auto sm = solve_single_beta(g);
  auto s = solve_coupled_betas(g);
  auto src = SourceProfile::right_waveguide(sm, g);
  auto a = source_amplitudes(src, s, g);
  double Z = std::numbers::pi * std::exp(sm.eta * g.d) / (2.0 * sm.beta_prime);
  auto z = acceptance::linspace(0.0, 2.0 * Z, 513);
  auto u = ideal_u(z, a.a_e0, a.a_o0, sm.beta_prime, sm.eta, g.d);
  acceptance::write_file(rc.file("ideal.csv"), [&](std::ostream& os) {
    csv::header(os, {"z", "Re_u_plus", "Im_u_plus", "Re_u_minus", "Im_u_minus", "P_plus", "P_minus", "imbalance"});
    for (std::size_t i = 0; i < z.size(); ++i) {
      double pp = std::norm(u.u_plus[i]), pm = std::norm(u.u_minus[i]);
      csv::row(os, {z[i], u.u_plus[i].real(), u.u_plus[i].imag(), u.u_minus[i].real(), u.u_minus[i].imag(), pp, pm,
                    (pp - pm) / (pp + pm)});
    }
  });
  double X = 0.5 * g.d + g.D + 4.0 / sm.eta;
  auto xs = acceptance::linspace(-X, X, 801);
  acceptance::write_file(rc.file("field_z0.csv"),
                         [&](std::ostream& os) { write_field_csv(os, xs, synthesize_guided_field(0.0, xs, s, g, a)); });
  acceptance::write_file(rc.file("field_transfer.csv"),
                         [&](std::ostream& os) { write_field_csv(os, xs, synthesize_guided_field(Z, xs, s, g, a)); });
  rc.manifest["results"]["a_e0"] = {a.a_e0.real(), a.a_e0.imag()};
  rc.manifest["results"]["a_o0"] = {a.a_o0.real(), a.a_o0.imag()};
  rc.manifest["results"]["transfer_length"] = Z;
}

inline void run_simulate(RunContext& rc)
{
  const auto& c = rc.cfg;
  const auto& g = c.geometry;
  auto sm = solve_single_beta(g);
  auto modes = solve_coupled_betas(g);
  auto sc = detail::simulation_config(c);
  double G = gamma_coeff(sm, g, c.covariance);
  double theta = modes.splitting / (2.0 * sm.beta_prime * c.epsilon * c.epsilon);
  auto reg = classify_regime(c.epsilon, sm.eta, g.d);
  auto paths = simulate_ensemble(g, modes, sm, c.covariance, sc);
  auto m = ensemble_moments(paths);
  acceptance::write_file(rc.file("moments.csv"), [&](std::ostream& os) { write_moments_csv(os, m); });

  std::vector<double> theory;
  if (reg.regime == Regime::weak) theory = imbalance_weak(theta, sm.beta_prime, G, m.z);
  else if (reg.regime == Regime::moderate) {
    EffectiveCoefficients ec;
    ec.Gamma = G;
    theory = moments_moderate(sc.a_e0, sc.a_o0, ec, m.z, {c.epsilon, modes.splitting}).imbalance;
  } else {
    cplx up = sc.a_e0 + sc.a_o0, um = sc.a_e0 - sc.a_o0;
    theory = very_weak_powers(up, um, 0.0, m.z).imbalance;
  }
  auto cross = cross_moment_weak(sc.a_e0, sc.a_o0, theta, sm.beta_prime, G, m.z);
  acceptance::write_file(rc.file("theory.csv"), [&](std::ostream& os) {
    csv::header(os, {"z", "imbalance", "abs_cross"});
    for (std::size_t i = 0; i < m.z.size(); ++i) csv::row(os, {m.z[i], theory[i], std::abs(cross[i])});
  });

  auto& r = rc.manifest["results"];
  r["max_norm_drift"] = m.max_norm_drift;
  r["theta_from_splitting"] = theta;
  if (G > 0) {
    auto model = weak_cross_model(sc.a_e0, sc.a_o0, theta, sm.beta_prime);
    auto est = fit_rate_jackknife(paths, model, G / 4.0, 4.0 * G, c.L);
    r["fitted_Gamma"] = est.rate;
    r["fitted_Gamma_se"] = est.se;
  }
  if (c.dump_realization) {
    auto plan = plan_simulation(modes.even.front(), modes.odd.front(), c.covariance, sc);
    SynthesisOptions so;
    so.fft_size = plan.fft_size;
    auto p = synthesize(c.covariance, plan.process_dz, plan.process_samples, rng::realization_seed(c.seed, 0), so);
    std::size_t stride = std::max<std::size_t>(1, p.size() / 20000);
    acceptance::write_file(rc.file("realization_0.csv"), [&](std::ostream& os) { write_realization_csv(os, p, stride); });
    const auto& t = paths.front();
    acceptance::write_file(rc.file("trajectory_0.csv"), [&](std::ostream& os) {
      csv::header(os, {"z", "Re_a_e", "Im_a_e", "Re_a_o", "Im_a_o", "imbalance"});
      for (std::size_t i = 0; i < t.z.size(); ++i)
        csv::row(os, {t.z[i], t.a_e[i].real(), t.a_e[i].imag(), t.a_o[i].real(), t.a_o[i].imag(), t.imbalance(i)});
    });
  }
}

inline void run_moments(RunContext& rc)
{
  const auto& c = rc.cfg;
  const auto& g = c.geometry;
  auto sm = solve_single_beta(g);
  auto s = solve_coupled_betas(g);
  auto ec = compute_effective_coefficients(sm, g, c.covariance);
  double theta = s.splitting / (2.0 * sm.beta_prime * c.epsilon * c.epsilon);
  auto z = acceptance::linspace(0.0, c.L, 513);
  cplx a(M_SQRT1_2, 0.0);
  auto m = moments_moderate(a, a, ec, z, {c.epsilon, s.splitting});
  acceptance::write_file(rc.file("moments.csv"), [&](std::ostream& os) {
    csv::header(os, {"z", "Pe", "Po", "Re_cross", "Im_cross", "m4_e", "m4_o", "m22", "total", "imbalance"});
    for (std::size_t i = 0; i < z.size(); ++i)
      csv::row(os, {z[i], m.Pe[i], m.Po[i], m.cross[i].real(), m.cross[i].imag(), m.m4_e[i], m.m4_o[i], m.m22[i],
                    m.total[i], m.imbalance[i]});
  });
  auto weak = imbalance_weak(theta, sm.beta_prime, ec.Gamma, z);
  auto vw = very_weak_powers(a + a, 0.0, ec.Lambda, z);
  acceptance::write_file(rc.file("imbalance.csv"), [&](std::ostream& os) {
    csv::header(os, {"z", "moderate", "weak", "very_weak"});
    for (std::size_t i = 0; i < z.size(); ++i) csv::row(os, {z[i], m.imbalance[i], weak[i], vw.imbalance[i]});
  });
}

inline void run_figure2(RunContext& rc)
{
  for (double f : {1.0, 4.0}) {
    auto g = rc.cfg.geometry;
    g.d = f * g.D;
    acceptance::write_file(rc.file("figure2_d" + csv::num(f) + ".csv"),
                           [&](std::ostream& os) { acceptance::write_eigenfunctions(os, g); });
  }
}

inline void run_figure3(RunContext& rc)
{
  acceptance::write_figure3(rc.out, acceptance::linspace(0.0, 10.0, 1001));
  for (double gv : acceptance::figure3_g) rc.files.push_back(acceptance::figure3_name(gv));
}

inline bool same_bytes(const fs::path& a, const fs::path& b)
{
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
  return fa.good() == fb.good() && sa == sb;
}

inline void run_validate(RunContext& rc);

// Two inner validate runs with a small ensemble; every CSV must match byte for byte.
inline acceptance::Result determinism(RunContext& rc)
{
  acceptance::Result r{11, "determinism"};
  fs::path scratch = rc.out / "determinism_scratch";
  fs::remove_all(scratch);
  std::vector<fs::path> dirs{scratch / "run1", scratch / "run2"};
  std::ostringstream sink;
  for (auto& d : dirs) {
    fs::create_directories(d);
    RunContext inner;
    inner.cfg = rc.cfg;
    inner.cfg.ensemble = rc.determinism_ensemble;
    inner.out = d;
    inner.log = &sink;
    inner.check_determinism = false;
    run_validate(inner);
  }
  std::size_t n = 0, diff = 0;
  for (const auto& e : fs::directory_iterator(dirs[0])) {
    if (e.path().extension() != ".csv") continue;
    ++n;
    if (!same_bytes(e.path(), dirs[1] / e.path().filename())) {
      ++diff;
      r.detail += "[x] " + e.path().filename().string() + " differs; ";
    }
  }
  fs::remove_all(scratch);
  r.pass = n > 0 && diff == 0;
  r.detail += std::to_string(n) + " CSV files compared, ensemble " + std::to_string(rc.determinism_ensemble);
  return r;
}

inline void run_validate(RunContext& rc)
{
  acceptance::Context ctx;
  ctx.out = rc.out;
  ctx.seed = rc.cfg.seed;
  ctx.ensemble = rc.cfg.ensemble;
  std::vector<acceptance::Result> results;
  auto crit = acceptance::criteria_1_to_10();
  for (std::size_t i = 0; i < crit.size(); ++i) {
    results.push_back(acceptance::run_timed(crit[i], ctx, int(i + 1)));
    *rc.log << acceptance::format_line(results.back()) << std::endl;
  }
  if (rc.check_determinism) {
    results.push_back(acceptance::run_timed([&](const acceptance::Context&) { return determinism(rc); }, ctx, 11));
    *rc.log << acceptance::format_line(results.back()) << std::endl;
  }
  for (const auto& e : fs::directory_iterator(rc.out))
    if (e.path().extension() == ".csv") rc.files.push_back(e.path().filename().string());
  json crits = json::array();
  for (auto& r : results) {
    rc.all_passed = rc.all_passed && r.pass;
    crits.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}, {"seconds", r.seconds}});
  }
  rc.manifest["results"]["criteria"] = crits;
  acceptance::write_file(rc.out / "acceptance.txt", [&](std::ostream& os) {
    for (auto& r : results) os << acceptance::format_line(r) << "\n";
  });
}

inline void dispatch(RunContext& rc)
{
  const auto& e = rc.cfg.experiment;
  if (e == "modes") run_modes(rc);
  else if (e == "coeffs") run_coeffs(rc);
  else if (e == "ideal") run_ideal(rc);
  else if (e == "simulate") run_simulate(rc);
  else if (e == "moments") run_moments(rc);
  else if (e == "figure2") run_figure2(rc);
  else if (e == "figure3") run_figure3(rc);
  else if (e == "validate") run_validate(rc);
  else throw Error(ErrorCode::ConfigError, "cli", "dispatch", "unknown experiment " + e);
}

inline json config_echo(const ExperimentConfig& c)
{
  json j;
  j["experiment"] = c.experiment;
  j["geometry"] = {{"k", c.geometry.k}, {"n", c.geometry.n}, {"D", c.geometry.D}, {"d", c.geometry.d}};
  j["covariance"] = {{"family", family_name(c.covariance.family)}, {"sigma2", c.covariance.sigma2},
                     {"ell", c.covariance.ell}};
  j["simulation"] = {{"epsilon", c.epsilon}, {"L", c.L}, {"ensemble", c.ensemble}, {"seed", c.seed}, {"dz", c.dz},
                     {"dump_realization", c.dump_realization}};
  if (c.ratio) j["simulation"]["ratio"] = *c.ratio;
  json file = json::object();
  for (auto& [k, v] : c.echo) file[k] = v;
  j["file"] = file;
  return j;
}

// Full run after validation. Library errors propagate; the caller maps them to exit codes.
inline void execute(RunContext& rc)
{
  auto t0 = std::chrono::steady_clock::now();
  rc.manifest["tool"] = "duowave";
  rc.manifest["version"] = tool_version;
  rc.manifest["seed"] = rc.cfg.seed;
  rc.manifest["config"] = config_echo(rc.cfg);
  detail::apply_ratio(rc);
  rc.manifest["effective_geometry_d"] = rc.cfg.geometry.d;
  rc.manifest["derived"] = detail::derived_quantities(rc.cfg, *rc.log);
  dispatch(rc);
  rc.manifest["files"] = rc.files;
  rc.manifest["timing_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  acceptance::write_file(rc.out / "manifest.json", [&](std::ostream& os) { os << rc.manifest.dump(2) << "\n"; });
}

} // namespace duowave
