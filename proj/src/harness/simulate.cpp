#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

#include "tvlab/errors.hpp"
#include "tvlab/harness.hpp"

namespace tvlab {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t trial_seed(std::uint64_t run_seed, std::uint64_t model_seed, const std::string& tmpl, double temperature,
                         std::uint64_t trial) {
  std::uint64_t h = mix64(run_seed);
  h = hash_combine(h, model_seed);
  h = hash_combine(h, fnv1a(tmpl));
  h = hash_combine(h, std::bit_cast<std::uint64_t>(temperature));
  return hash_combine(h, trial);
}

struct TrialResult {
  int accept_length = 0;
  double verifier_seconds = 0.0;
};

CellStats run_cell(const ExperimentConfig& config, const ModelPair& pair, const TreeTemplate& tmpl,
                   const std::string& label, double temperature, Algorithm algorithm) {
  const auto start = Clock::now();
  std::vector<TrialResult> results(config.trials);
  const std::size_t workers = std::min(config.threads, config.trials);
  std::vector<std::exception_ptr> errors(workers);

  auto work = [&](std::size_t w) {
    try {
      for (std::size_t t = w; t < config.trials; t += workers) {
        RandomSource rng(trial_seed(config.run_seed, pair.spec().seed, label, temperature, t));
        const SampledTree tree = sample_tree(pair, {}, tmpl, config.mode, rng);
        const auto v0 = Clock::now();
        const auto outcome = verify(algorithm, tree, rng);
        const auto v1 = Clock::now();
        results[t] = {outcome.accept_length, std::chrono::duration<double>(v1 - v0).count()};
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const std::exception& ex) {
      throw Error("cell " + std::string(to_string(algorithm)) + "/" + label + "/T=" + format_number(temperature) +
                  " aborted: " + ex.what());
    }
  }

  // ordered reduction by trial index
  double sum = 0.0;
  double verifier_seconds = 0.0;
  for (const auto& r : results) {
    sum += r.accept_length;
    verifier_seconds += r.verifier_seconds;
  }
  const auto n = static_cast<double>(config.trials);
  const double mean = sum / n;
  double ss = 0.0;
  for (const auto& r : results) ss += (r.accept_length - mean) * (r.accept_length - mean);
  CellStats cell;
  cell.algorithm = std::string(to_string(algorithm));
  cell.template_label = label;
  cell.temperature = temperature;
  cell.trials = config.trials;
  cell.mean_accept_len = mean;
  cell.stderr_accept_len = config.trials > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  cell.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  cell.tokens_per_second = verifier_seconds > 0.0 ? (sum - n) / verifier_seconds : 0.0;
  return cell;
}

}  // namespace

RunStats run_monte_carlo(const ExperimentConfig& config) {
  config.validate();
  RunStats stats;
  const ModelPair base(config.model);
  for (const auto& label : config.templates) {
    const TreeTemplate tmpl = parse_template(label);
    for (double temperature : config.temperatures) {
      const ModelPair pair = base.with_temperature(temperature);
      for (Algorithm algorithm : config.algorithms) {
        stats.cells.push_back(run_cell(config, pair, tmpl, label, temperature, algorithm));
      }
    }
  }
  return stats;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config) {
  config.validate();
  std::vector<double> values = config.sweep_values;
  if (config.sweep_axis == SweepAxis::None) values = {0.0};

  std::vector<SweepRow> rows;
  for (double value : values) {
    ExperimentConfig cell = config;
    switch (config.sweep_axis) {
      case SweepAxis::Depth:
        cell.templates = {"chain:" + std::to_string(static_cast<int>(value))};
        break;
      case SweepAxis::TreeSize:
        cell.templates = {"kary:" + std::to_string(config.sweep_arity) + ":" + std::to_string(static_cast<int>(value))};
        break;
      case SweepAxis::Temperature:
        cell.temperatures = {value};
        break;
      case SweepAxis::Alignment:
        cell.model.lambda = value;
        break;
      case SweepAxis::None: break;
    }

    // per (template, temperature, algorithm): one CellStats per model seed
    std::map<std::tuple<std::string, double, std::string>, std::vector<CellStats>> by_cell;
    std::vector<std::tuple<std::string, double, std::string>> order;
    for (std::size_t s = 0; s < config.model_seeds; ++s) {
      ExperimentConfig seeded = cell;
      seeded.model.seed = config.model.seed + s;
      for (auto& c : run_monte_carlo(seeded).cells) {
        auto key = std::make_tuple(c.template_label, c.temperature, c.algorithm);
        if (!by_cell.count(key)) order.push_back(key);
        by_cell[key].push_back(std::move(c));
      }
    }

    for (const auto& key : order) {
      const auto& [label, temperature, algorithm] = key;
      const auto& per_seed = by_cell[key];
      SweepRow row;
      row.axis = std::string(to_string(config.sweep_axis));
      row.value = value;
      row.template_label = label;
      row.algorithm = algorithm;
      row.temperature = temperature;
      row.lambda = cell.model.lambda;
      row.seeds = per_seed.size();
      row.trials = config.trials;
      double var = 0.0;
      for (const auto& c : per_seed) {
        row.mean_accept_len += c.mean_accept_len;
        var += c.stderr_accept_len * c.stderr_accept_len;
        row.seconds += c.seconds;
      }
      const auto n = static_cast<double>(per_seed.size());
      row.mean_accept_len /= n;
      row.stderr_accept_len = std::sqrt(var) / n;

      const auto tok = by_cell.find(std::make_tuple(label, temperature, std::string("token_tree")));
      const auto tra = by_cell.find(std::make_tuple(label, temperature, std::string("traversal")));
      if (tok != by_cell.end() && tra != by_cell.end()) {
        double delta = 0.0;
        for (std::size_t s = 0; s < tok->second.size(); ++s) {
          const double base = tok->second[s].mean_accept_len;
          delta += 100.0 * (tra->second[s].mean_accept_len - base) / base;
        }
        row.delta_pct = delta / static_cast<double>(tok->second.size());
      } else {
        row.delta_pct = std::numeric_limits<double>::quiet_NaN();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

OracleRun run_oracle(const ExperimentConfig& config) {
  config.validate();
  std::vector<double> lambdas{config.model.lambda};
  if (config.sweep_axis == SweepAxis::Alignment) lambdas = config.sweep_values;

  OracleRun run;
  for (std::size_t s = 0; s < config.model_seeds; ++s) {
    for (double lambda : lambdas) {
      ModelSpec spec = config.model;
      spec.seed = config.model.seed + s;
      spec.lambda = lambda;
      const ModelPair base(spec);
      for (const auto& label : config.templates) {
        const TreeTemplate tmpl = parse_template(label);
        for (double temperature : config.temperatures) {
          const ModelPair pair = base.with_temperature(temperature);
          for (Algorithm algorithm : config.algorithms) {
            OracleRecord rec;
            rec.seed = spec.seed;
            rec.lambda = lambda;
            rec.temperature = temperature;
            rec.template_label = label;
            rec.asserted = lossless_expected(algorithm, config.mode);
            rec.report = losslessness_report(algorithm, pair, {}, tmpl, config.mode);
            if (rec.asserted && !(rec.report.tv < kLosslessTolerance)) run.passed = false;
            run.records.push_back(std::move(rec));
          }
        }
      }
    }
  }
  return run;
}

}  // namespace tvlab
