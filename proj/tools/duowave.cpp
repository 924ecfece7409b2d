#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <duowave/config.hpp>
#include <duowave/experiments.hpp>

namespace fs = std::filesystem;

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;
constexpr int exit_validation_failed = 1;

void write_diagnostic(const fs::path& out, const std::string& experiment, const std::string& what,
                      const std::string& module, const std::string& op)
{
  std::error_code ec;
  fs::create_directories(out, ec);
  std::ofstream os(out / "diagnostic.txt");
  os << "experiment: " << experiment << "\n";
  if (!module.empty()) os << "module: " << module << "\noperation: " << op << "\n";
  os << "error: " << what << "\n";
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"duowave: random-interface directional coupler experiments"};
  std::string experiment, config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> ensemble;
  const auto& names = duowave::experiment_names();
  app.add_option("experiment", experiment, "modes | coeffs | ideal | simulate | moments | figure2 | figure3 | validate")
      ->required();
  app.add_option("--config", config_path, "config file (dotted key = value)")->required();
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--seed", seed, "override simulation.seed");
  app.add_option("--ensemble", ensemble, "override simulation.ensemble");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : exit_config;
  }
  if (std::find(names.begin(), names.end(), experiment) == names.end()) {
    std::cerr << "error: unknown experiment '" << experiment << "'\n";
    return exit_config;
  }

  duowave::RunContext rc;
  try {
    rc.cfg = duowave::load_config(config_path, experiment);
    if (seed) rc.cfg.seed = *seed;
    if (ensemble) rc.cfg.ensemble = *ensemble;
    duowave::validate_config(rc.cfg);
  } catch (const duowave::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  }

  rc.out = out_dir;
  std::error_code ec;
  fs::create_directories(rc.out, ec);
  if (ec || !fs::is_directory(rc.out)) {
    std::cerr << "config error: cannot create output directory " << out_dir << "\n";
    return exit_config;
  }

  try {
    duowave::execute(rc);
  } catch (const duowave::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    write_diagnostic(rc.out, experiment, e.what(), e.module(), e.op());
    return exit_numerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    write_diagnostic(rc.out, experiment, e.what(), "", "");
    return exit_numerical;
  }
  if (experiment == "validate" && !rc.all_passed) {
    std::cerr << "validate: some criteria failed, see " << (rc.out / "acceptance.txt").string() << "\n";
    return exit_validation_failed;
  }
  return 0;
}
