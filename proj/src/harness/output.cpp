#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tvlab/harness.hpp"

namespace tvlab {

namespace {

using Json = nlohmann::ordered_json;

// NaN serializes as null
Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) value = 0.0;  // drop the sign of -0
  return fmt::format("{:#.6g}", value);
}

std::string simulate_csv(const RunStats& stats) {
  std::string out = "algorithm,template,temperature,trials,mean_accept_len,stderr,seconds\n";
  for (const auto& c : stats.cells) {
    out += fmt::format("{},{},{},{},{},{},{}\n", c.algorithm, c.template_label, format_number(c.temperature), c.trials,
                       format_number(c.mean_accept_len), format_number(c.stderr_accept_len), format_number(c.seconds));
  }
  return out;
}

std::string simulate_json(const RunStats& stats) {
  Json cells = Json::array();
  for (const auto& c : stats.cells) {
    Json j;
    j["algorithm"] = c.algorithm;
    j["template"] = c.template_label;
    j["temperature"] = c.temperature;
    j["trials"] = c.trials;
    j["mean_accept_len"] = c.mean_accept_len;
    j["stderr"] = c.stderr_accept_len;
    j["seconds"] = c.seconds;
    j["tokens_per_second"] = c.tokens_per_second;
    cells.push_back(std::move(j));
  }
  Json root;
  root["cells"] = std::move(cells);
  return root.dump(2) + "\n";
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "axis,value,template,algorithm,temperature,lambda,seeds,trials,mean_accept_len,stderr,delta_pct,seconds\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.axis, format_number(r.value), r.template_label,
                       r.algorithm, format_number(r.temperature), format_number(r.lambda), r.seeds, r.trials,
                       format_number(r.mean_accept_len), format_number(r.stderr_accept_len),
                       format_number(r.delta_pct), format_number(r.seconds));
  }
  return out;
}

std::string sweep_json(const std::vector<SweepRow>& rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["axis"] = r.axis;
    j["value"] = r.value;
    j["template"] = r.template_label;
    j["algorithm"] = r.algorithm;
    j["temperature"] = r.temperature;
    j["lambda"] = r.lambda;
    j["seeds"] = r.seeds;
    j["trials"] = r.trials;
    j["mean_accept_len"] = r.mean_accept_len;
    j["stderr"] = r.stderr_accept_len;
    j["delta_pct"] = number_or_null(r.delta_pct);
    j["seconds"] = r.seconds;
    arr.push_back(std::move(j));
  }
  Json root;
  root["rows"] = std::move(arr);
  return root.dump(2) + "\n";
}

std::string oracle_json(const OracleRun& run) {
  Json records = Json::array();
  for (const auto& rec : run.records) {
    Json j;
    j["seed"] = rec.seed;
    j["lambda"] = rec.lambda;
    j["temperature"] = rec.temperature;
    j["template"] = rec.template_label;
    j["asserted"] = rec.asserted;
    j["report"] = Json::parse(to_json(rec.report));
    records.push_back(std::move(j));
  }
  Json root;
  root["passed"] = run.passed;
  root["tolerance"] = kLosslessTolerance;
  root["records"] = std::move(records);
  return root.dump(2) + "\n";
}

}  // namespace tvlab
