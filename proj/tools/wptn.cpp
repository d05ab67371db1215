#include <CLI11.hpp>

#include <iostream>

#include "wptn/cli.hpp"

namespace cli = wptn::cli;

int main(int argc, char** argv) {
  CLI::App app{"Wireless power transfer network simulator and analysis toolkit"};
  app.require_subcommand(1);

  cli::RunManifest manifest;
  std::string protocols = "all", seeds = "1-5", thresholds = "-70,-65,-60,-55,-50";
  auto* run = app.add_subcommand("run", "Simulate every (protocol, threshold, seed) cell and emit traces and metrics");
  run->add_option("--scenario", manifest.scenario_path, "Scenario YAML (default: built-in LOS scenario)");
  run->add_option("--protocol", protocols, "all, scenario, or a comma list of beaconing,probing,freerun");
  run->add_option("--seeds", seeds, "Comma list of seeds, ranges like 1-5 allowed");
  run->add_option("--thresholds-dbm", thresholds, "Comma list of ETx communication thresholds [dBm]");
  run->add_option("--out", manifest.out_dir, "Output directory (default: metrics CSV to stdout)");
  run->add_option("--workers", manifest.workers, "Concurrent simulations");

  cli::TtcOptions ttc;
  std::string ttc_protocol = "beaconing";
  auto* ttc_cmd = app.add_subcommand("ttc", "Empirical vs analytic time-to-charge CDF in a proximity layout");
  ttc_cmd->add_option("--scenario", ttc.scenario_path, "Scenario YAML supplying protocol/radio parameters");
  ttc_cmd->add_option("--protocol", ttc_protocol, "beaconing or probing");
  ttc_cmd->add_option("--n", ttc.n, "Chargers in communication range");
  ttc_cmd->add_option("--k", ttc.k, "Chargers able to charge the receiver");
  ttc_cmd->add_option("--trials", ttc.trials, "Random appearances");
  ttc_cmd->add_option("--seed", ttc.seed, "Base seed");
  ttc_cmd->add_option("--out", ttc.out_path, "CSV output path (default: stdout)");

  std::string instance, mode = "pii-exact";
  auto* solve = app.add_subcommand("solve", "Solve a charger-activation knapsack instance");
  solve->add_option("instance", instance, "Instance file")->required();
  solve->add_option("--mode", mode, "pi, pii-exact or pii-greedy");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("--scenario", validate_path, "Scenario YAML")->required();

  std::string ref_path, ref_out;
  std::optional<std::uint64_t> ref_seed;
  auto* reference = app.add_subcommand("reference", "Emit the per-ETx reference chargeability series");
  reference->add_option("--scenario", ref_path, "Scenario YAML (default: built-in LOS scenario)");
  reference->add_option("--seed", ref_seed, "Override the scenario seed");
  reference->add_option("--out", ref_out, "CSV output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitValidation;
  }

  if (*run) {
    return cli::guarded(std::cerr, [&] {
      manifest.protocols = cli::parse_protocol_list(protocols);
      manifest.seeds = cli::parse_seed_list(seeds);
      manifest.thresholds_dbm = cli::parse_threshold_list(thresholds);
      return cli::cmd_run(manifest, std::cout, std::cerr);
    });
  }
  if (*ttc_cmd) {
    const auto p = wptn::parse_protocol(ttc_protocol);
    if (!p) {
      std::cerr << "error: unknown protocol '" << ttc_protocol << "'\n";
      return cli::kExitValidation;
    }
    ttc.protocol = *p;
    return cli::cmd_ttc(ttc, std::cout, std::cerr);
  }
  if (*solve) {
    const auto m = cli::parse_solve_mode(mode);
    if (!m) {
      std::cerr << "error: unknown mode '" << mode << "' (pi, pii-exact, pii-greedy)\n";
      return cli::kExitValidation;
    }
    return cli::cmd_solve(instance, *m, std::cout, std::cerr);
  }
  if (*validate) return cli::cmd_validate(validate_path, std::cout, std::cerr);
  if (*reference) return cli::cmd_reference(ref_path, ref_seed, ref_out, std::cout, std::cerr);
  return cli::kExitValidation;
}
