#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tvlab/errors.hpp"
#include "tvlab/harness.hpp"

namespace tvlab {

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::string format;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
};

void add_run_options(CLI::App& cmd, Overrides& o, bool needs_config) {
  auto* config = cmd.add_option("--config", o.config, "experiment config file (TOML subset)");
  if (needs_config) config->required();
  cmd.add_option("--out", o.out, "output path (default: stdout)");
  cmd.add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd.add_option("--threads", o.threads, "worker threads per cell")->check(CLI::PositiveNumber);
  cmd.add_option("--seed", o.seed, "run seed, overrides run.seed");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = load_config(o.config);
  if (!o.out.empty()) c.out_path = o.out;
  if (!o.format.empty()) c.format = o.format;
  if (o.threads) c.threads = *o.threads;
  if (o.seed) c.run_seed = *o.seed;
  c.validate();
  return c;
}

void emit(const std::string& path, const std::string& body) {
  if (path.empty()) {
    std::cout << body << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file '" + path + "'");
  out << body;
}

int run_selftest() {
  int failed = 0;
  for (const auto& check : selftest_checks()) {
    const bool ok = check.passed();
    if (!ok) ++failed;
    std::cout << fmt::format("{} {}: expected {} got {}\n", ok ? "PASS" : "FAIL", check.name,
                             format_number(check.expected), format_number(check.actual));
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Draft-tree verification lab: exact oracle, Monte Carlo simulation and sweeps"};
  app.require_subcommand(1);

  Overrides oracle_o, simulate_o, sweep_o;
  auto* oracle = app.add_subcommand("oracle", "exact losslessness reports (JSON)");
  add_run_options(*oracle, oracle_o, true);
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo acceptance lengths");
  add_run_options(*simulate, simulate_o, true);
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over one axis");
  add_run_options(*sweep, sweep_o, true);
  auto* selftest = app.add_subcommand("selftest", "worked-example regression constants");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (selftest->parsed()) return run_selftest();
    if (oracle->parsed()) {
      const auto config = resolve(oracle_o);
      const OracleRun run = run_oracle(config);
      emit(config.out_path, oracle_json(run));
      if (!run.passed) std::cerr << "oracle: asserted losslessness check failed\n";
      return run.passed ? 0 : 1;
    }
    if (simulate->parsed()) {
      const auto config = resolve(simulate_o);
      const RunStats stats = run_monte_carlo(config);
      emit(config.out_path, config.format == "json" ? simulate_json(stats) : simulate_csv(stats));
      return 0;
    }
    if (sweep->parsed()) {
      const auto config = resolve(sweep_o);
      const auto rows = run_sweep(config);
      emit(config.out_path, config.format == "json" ? sweep_json(rows) : sweep_csv(rows));
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace tvlab
