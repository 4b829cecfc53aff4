// Command-line front end: single runs, convergence experiments and sweeps.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "risrsma/experiments.hpp"

using namespace risrsma;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad value '" + item + "' in --values");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RIS-assisted RSMA data collection optimizer.\n"
               "Environment: RISRSMA_SOLVER_TOL overrides the conic solver tolerance."};
  app.require_subcommand(1);

  std::string config_path, scheme_name = "proposed", schemes_list = "all", axis, values, out_dir = ".";
  std::optional<std::uint64_t> seed;
  int trials = 20;
  unsigned threads = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Scenario JSON file")->required();
    sub->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  };

  auto* run = app.add_subcommand("run", "Optimize one scenario and write result.json and trace.csv");
  add_common(run);
  run->add_option("--scheme", scheme_name, "proposed, tdma_only, random_phase or no_ris")->capture_default_str();
  run->add_option("--seed", seed, "Channel seed (default: the config's seed)");

  auto* conv = app.add_subcommand("convergence", "Run all schemes over several seeds and record traces");
  add_common(conv);
  conv->add_option("--trials", trials, "Number of seeds")->capture_default_str();
  conv->add_option("--seed", seed, "First seed (default: the config's seed)");
  conv->add_option("--threads", threads, "Worker threads (0: hardware concurrency)");

  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter and record per-seed results");
  add_common(sweep);
  sweep->add_option("--axis", axis, "f_bits, F_max, N or P_max_dbm")->required();
  sweep->add_option("--values", values, "Comma-separated, strictly increasing")->required();
  sweep->add_option("--trials", trials, "Number of seeds")->capture_default_str();
  sweep->add_option("--scheme", schemes_list, "Comma-separated schemes or 'all'")->capture_default_str();
  sweep->add_option("--seed", seed, "First seed (default: the config's seed)");
  sweep->add_option("--threads", threads, "Worker threads (0: hardware concurrency)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  if (!std::filesystem::is_regular_file(config_path)) {
    std::cerr << "config file not found: " << config_path << "\n\n" << app.help();
    return 2;
  }

  try {
    const auto cfg = with_env_overrides(load_scenario_file(config_path));
    const std::uint64_t first = seed.value_or(cfg.seed);
    if (run->parsed()) return cmd_run(cfg, parse_scheme(scheme_name), first, out_dir, std::cout);
    if (conv->parsed()) return cmd_convergence(cfg, trials, first, out_dir, std::cout, threads);
    SweepSpec spec;
    spec.axis = axis;
    spec.values = parse_values(values);
    spec.trials = trials;
    spec.base = cfg;
    spec.first_seed = first;
    if (schemes_list != "all") {
      spec.schemes.clear();
      for (const auto& name : split_list(schemes_list)) spec.schemes.push_back(parse_scheme(name));
    }
    return cmd_sweep(spec, out_dir, std::cout, threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
