#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>

#include <duowave/config.hpp>

using namespace duowave;

namespace {

ExperimentConfig parse(const std::string& text, const std::string& exp = "modes")
{
  std::istringstream in(text);
  return parse_config(in, exp);
}

void expect_config_error(const std::string& text, const std::string& exp = "modes")
{
  try {
    auto c = parse(text, exp);
    validate_config(c);
    FAIL() << "accepted: " << text;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError) << e.what();
  }
}

} // namespace

TEST(Config, ParsesAllKeys)
{
  auto c = parse("# comment\n"
                 "geometry.k = 6.5\n"
                 "geometry.n = 1.05   # trailing\n"
                 "geometry.D = 0.9\n"
                 "geometry.d = 3\n"
                 "\n"
                 "covariance.family = gaussian_derivative\n"
                 "covariance.sigma2 = 0.5\n"
                 "covariance.ell = 2\n"
                 "simulation.epsilon = 0.03\n"
                 "simulation.L = 4\n"
                 "simulation.ensemble = 64\n"
                 "simulation.seed = 99\n"
                 "simulation.dz = 0.01\n"
                 "simulation.ratio = 1.5\n"
                 "simulation.dump_realization = true\n"
                 "experiment = modes\n");
  EXPECT_DOUBLE_EQ(c.geometry.k, 6.5);
  EXPECT_DOUBLE_EQ(c.geometry.n, 1.05);
  EXPECT_DOUBLE_EQ(c.geometry.D, 0.9);
  EXPECT_DOUBLE_EQ(c.geometry.d, 3.0);
  EXPECT_EQ(c.covariance.family, CovarianceFamily::gaussian_derivative);
  EXPECT_DOUBLE_EQ(c.covariance.sigma2, 0.5);
  EXPECT_DOUBLE_EQ(c.covariance.ell, 2.0);
  EXPECT_DOUBLE_EQ(c.epsilon, 0.03);
  EXPECT_DOUBLE_EQ(c.L, 4.0);
  EXPECT_EQ(c.ensemble, 64u);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_DOUBLE_EQ(c.dz, 0.01);
  ASSERT_TRUE(c.ratio.has_value());
  EXPECT_DOUBLE_EQ(*c.ratio, 1.5);
  EXPECT_TRUE(c.dump_realization);
  EXPECT_EQ(c.echo.size(), 15u);
  EXPECT_NO_THROW(validate_config(c));
}

TEST(Config, DefaultsAreReferenceGeometry)
{
  auto c = parse("");
  EXPECT_DOUBLE_EQ(c.geometry.n, 1.1);
  EXPECT_DOUBLE_EQ(c.geometry.d, 4.0);
  EXPECT_FALSE(c.ratio.has_value());
  EXPECT_NO_THROW(validate_config(c));
}

TEST(Config, Rejections)
{
  expect_config_error("geometry.q = 1\n");
  expect_config_error("geometry.n = 1.1\ngeometry.n = 1.2\n");
  expect_config_error("geometry.n = 0.9\n");
  expect_config_error("geometry.n = 1\n");
  expect_config_error("geometry.D = 3\n");
  expect_config_error("geometry.d = -1\n");
  expect_config_error("geometry.k = abc\n");
  expect_config_error("geometry.k = 1.5x\n");
  expect_config_error("geometry.k = inf\n");
  expect_config_error("geometry.k\n");
  expect_config_error("geometry.k =\n");
  expect_config_error("covariance.family = cauchy\n");
  expect_config_error("covariance.sigma2 = -1\n");
  expect_config_error("covariance.ell = 0\n");
  expect_config_error("simulation.epsilon = 0.2\n");
  expect_config_error("simulation.ensemble = 1\n");
  expect_config_error("simulation.ensemble = -4\n");
  expect_config_error("simulation.ratio = 0\n");
  expect_config_error("simulation.dump_realization = maybe\n");
  expect_config_error("experiment = figure3\n", "modes");
  expect_config_error("covariance.family = band_limited\n", "simulate");
}

TEST(Config, MissingFile)
{
  try {
    load_config("/nonexistent/duowave.cfg", "modes");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(Config, ExperimentNames)
{
  const auto& n = experiment_names();
  for (const char* e : {"modes", "coeffs", "ideal", "simulate", "moments", "figure2", "figure3", "validate"})
    EXPECT_NE(std::find(n.begin(), n.end(), e), n.end()) << e;
}
