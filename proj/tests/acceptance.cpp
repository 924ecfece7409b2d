// Prints one PASS/FAIL line per acceptance criterion; exit 1 if any fails.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <duowave/experiments.hpp>

int main(int argc, char** argv)
{
  duowave::RunContext rc;
  rc.cfg.experiment = "validate";
  rc.cfg.ensemble = 2000;
  rc.out = std::filesystem::current_path() / "acceptance_out";
  for (int i = 1; i + 1 < argc; i += 2) {
    std::string a = argv[i];
    if (a == "--ensemble") rc.cfg.ensemble = std::strtoull(argv[i + 1], nullptr, 10);
    else if (a == "--seed") rc.cfg.seed = std::strtoull(argv[i + 1], nullptr, 10);
    else if (a == "--out") rc.out = argv[i + 1];
    else {
      std::cerr << "usage: acceptance [--ensemble N] [--seed N] [--out DIR]\n";
      return 2;
    }
  }
  std::filesystem::create_directories(rc.out);
  try {
    duowave::execute(rc);
  } catch (const std::exception& e) {
    std::cerr << "acceptance aborted: " << e.what() << "\n";
    return 1;
  }
  std::cout << (rc.all_passed ? "all criteria passed" : "some criteria failed") << "\n";
  return rc.all_passed ? 0 : 1;
}
