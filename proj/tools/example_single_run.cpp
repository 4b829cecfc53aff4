// Library usage: optimize one channel draw under each scheme and print the
// resulting minimum pair volume.
//
//   ./example_single_run [config.json] [seed]

#include <cstdlib>
#include <iomanip>
#include <iostream>

#include "risrsma/ao_driver.hpp"

using namespace risrsma;

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : std::string(RISRSMA_CONFIG_DIR) + "/default.json";
  const auto cfg = load_scenario_file(path);
  const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : cfg.seed;

  const auto ch = realize(cfg, seed).channels;
  std::cout << std::fixed << std::setprecision(3);
  for (auto scheme : kAllSchemes) {
    const auto r = run_scheme(scheme, cfg, ch, seed);
    std::cout << std::setw(13) << to_string(scheme) << "  " << std::setw(12) << r.evaluation.ell << " bits  "
              << r.trace.iterations() << " iterations, t0 = " << r.state.t[0] * 1e3 << " ms\n";
  }
}
