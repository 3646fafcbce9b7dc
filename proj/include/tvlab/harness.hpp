#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tvlab/model.hpp"
#include "tvlab/oracle.hpp"
#include "tvlab/tree.hpp"
#include "tvlab/verify.hpp"

namespace tvlab {

enum class SweepAxis { None, Depth, TreeSize, Temperature, Alignment };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view text);

struct ExperimentConfig {
  ModelSpec model;
  std::size_t model_seeds = 1;  // consecutive model seeds starting at model.seed
  std::vector<std::string> templates{"chain:5"};
  SiblingMode mode = SiblingMode::WithoutReplacement;
  std::vector<Algorithm> algorithms{Algorithm::TokenTree, Algorithm::Traversal};
  std::vector<double> temperatures{1.0};
  std::size_t trials = 10000;
  std::uint64_t run_seed = 0;
  std::size_t threads = 1;

  SweepAxis sweep_axis = SweepAxis::None;
  std::vector<double> sweep_values;
  int sweep_arity = 2;  // branching of tree_size sweeps

  std::string out_path;  // empty: stdout
  std::string format = "csv";

  void validate() const;  // throws ConfigError
};

// TOML subset: [section] headers, `key = value` with dotted keys, numbers,
// booleans, quoted strings and (possibly multi-line) arrays, '#' comments.
// model.seed is the only required key.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

struct CellStats {
  std::string algorithm;
  std::string template_label;
  double temperature = 1.0;
  std::size_t trials = 0;
  double mean_accept_len = 0.0;
  double stderr_accept_len = 0.0;
  double seconds = 0.0;            // wall time of the whole cell
  double tokens_per_second = 0.0;  // accepted tokens / verifier wall time
};

struct RunStats {
  std::vector<CellStats> cells;
};

// One cell per (template, temperature, algorithm). Trial t of a cell uses an
// rng seeded from (run seed, model seed, template, temperature, t) only, so
// every algorithm in the cell verifies the same sampled trees.
RunStats run_monte_carlo(const ExperimentConfig& config);

struct SweepRow {
  std::string axis;
  double value = 0.0;
  std::string template_label;
  std::string algorithm;
  double temperature = 1.0;
  double lambda = 0.0;
  std::size_t seeds = 0;
  std::size_t trials = 0;
  double mean_accept_len = 0.0;  // mean over model seeds
  double stderr_accept_len = 0.0;
  double delta_pct = 0.0;  // mean over seeds of (traversal − token_tree)/token_tree, in percent
  double seconds = 0.0;
};

std::vector<SweepRow> run_sweep(const ExperimentConfig& config);

struct OracleRecord {
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double temperature = 1.0;
  std::string template_label;
  bool asserted = false;
  LosslessnessReport report;
};

struct OracleRun {
  std::vector<OracleRecord> records;
  bool passed = true;
};

inline constexpr double kLosslessTolerance = 1e-9;

OracleRun run_oracle(const ExperimentConfig& config);

// Fixed-format emitters: '.' decimal separator, 6 significant digits.
std::string format_number(double value);
std::string simulate_csv(const RunStats& stats);
std::string simulate_json(const RunStats& stats);
std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string sweep_json(const std::vector<SweepRow>& rows);
std::string oracle_json(const OracleRun& run);

struct SelfTestCheck {
  std::string name;
  double expected = 0.0;
  double actual = 0.0;
  double tolerance = 1e-3;
  bool passed() const;
};

// Worked-example constants of single-token, RRSw and traversal verification.
std::vector<SelfTestCheck> selftest_checks();

// Entry point of the `tvlab` tool. 0 success, 1 assertion failure, 2 config
// or usage error.
int cli_main(int argc, char** argv);

}  // namespace tvlab
