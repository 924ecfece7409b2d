#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "mode_spectrum.hpp"
#include "random_media.hpp"

namespace duowave {

inline const std::vector<std::string>& experiment_names()
{
  static const std::vector<std::string> v{"modes", "coeffs", "ideal", "simulate", "moments", "figure2", "figure3", "validate"};
  return v;
}

struct ExperimentConfig {
  std::string experiment;
  WaveguideGeometry geometry;
  CovarianceModel covariance;
  double epsilon = 0.05;
  double L = 1.0;
  std::size_t ensemble = 100;
  std::uint64_t seed = 1;
  double dz = 0.0;
  std::optional<double> ratio;  // theta beta'/Gamma; when set, d is tuned to it
  bool dump_realization = false;

  // key = value pairs in file order, as read
  std::vector<std::pair<std::string, std::string>> echo;
};

namespace detail {

inline std::string trim(const std::string& s)
{
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] inline void config_fail(const std::string& msg)
{
  throw Error(ErrorCode::ConfigError, "cli", "parse_config", msg);
}

inline double to_double(const std::string& key, const std::string& v)
{
  double x = 0.0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(x))
    config_fail(key + ": not a finite number: '" + v + "'");
  return x;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v)
{
  std::uint64_t x = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) config_fail(key + ": not a nonnegative integer: '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v)
{
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  config_fail(key + ": expected true or false, got '" + v + "'");
}

} // namespace detail

// Module preconditions that can be checked before any computation.
inline void validate_config(const ExperimentConfig& c)
{
  using detail::config_fail;
  const auto& g = c.geometry;
  if (!(g.k > 0)) config_fail("geometry.k must be > 0");
  if (!(g.n > 1)) config_fail("geometry.n must be > 1");
  if (!(g.D > 0)) config_fail("geometry.D must be > 0");
  if (!(g.d > 0)) config_fail("geometry.d must be > 0");
  if (!g.single_mode()) config_fail("geometry is not single mode: need k D sqrt(n^2 - 1) < pi");
  if (!(c.covariance.sigma2 >= 0)) config_fail("covariance.sigma2 must be >= 0");
  if (!(c.covariance.ell > 0)) config_fail("covariance.ell must be > 0");
  if (!(c.epsilon > 0 && c.epsilon <= 0.1)) config_fail("simulation.epsilon must be in (0, 0.1]");
  if (!(c.L > 0)) config_fail("simulation.L must be > 0");
  if (c.ensemble < 2) config_fail("simulation.ensemble must be >= 2");
  if (!(c.dz >= 0)) config_fail("simulation.dz must be >= 0");
  if (c.ratio && !(*c.ratio > 0)) config_fail("simulation.ratio must be > 0");
  if (c.experiment == "simulate" && c.covariance.sigma2 > 0 && !c.covariance.has_fast_decay())
    config_fail("simulate needs a rapidly decaying covariance; band_limited is not supported");
}

inline ExperimentConfig parse_config(std::istream& in, const std::string& experiment)
{
  using detail::config_fail;
  ExperimentConfig c;
  c.experiment = experiment;
  std::map<std::string, int> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto h = line.find('#');
    if (h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) config_fail("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq)), v = detail::trim(line.substr(eq + 1));
    if (v.empty()) config_fail("line " + std::to_string(lineno) + ": empty value for " + key);
    if (seen[key]++) config_fail("line " + std::to_string(lineno) + ": duplicate key " + key);
    c.echo.emplace_back(key, v);

    if (key == "geometry.k") c.geometry.k = detail::to_double(key, v);
    else if (key == "geometry.n") c.geometry.n = detail::to_double(key, v);
    else if (key == "geometry.D") c.geometry.D = detail::to_double(key, v);
    else if (key == "geometry.d") c.geometry.d = detail::to_double(key, v);
    else if (key == "covariance.family") {
      if (!parse_family(v, c.covariance.family)) config_fail("covariance.family: unknown family '" + v + "'");
    }
    else if (key == "covariance.sigma2") c.covariance.sigma2 = detail::to_double(key, v);
    else if (key == "covariance.ell") c.covariance.ell = detail::to_double(key, v);
    else if (key == "simulation.epsilon") c.epsilon = detail::to_double(key, v);
    else if (key == "simulation.L") c.L = detail::to_double(key, v);
    else if (key == "simulation.ensemble") c.ensemble = detail::to_uint(key, v);
    else if (key == "simulation.seed") c.seed = detail::to_uint(key, v);
    else if (key == "simulation.dz") c.dz = detail::to_double(key, v);
    else if (key == "simulation.ratio") c.ratio = detail::to_double(key, v);
    else if (key == "simulation.dump_realization") c.dump_realization = detail::to_bool(key, v);
    else if (key == "experiment") {
      if (v != experiment) config_fail("config is for experiment '" + v + "', not '" + experiment + "'");
    }
    else config_fail("line " + std::to_string(lineno) + ": unknown key " + key);
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path, const std::string& experiment)
{
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cli", "load_config", "cannot read " + path);
  return parse_config(in, experiment);
}

} // namespace duowave
