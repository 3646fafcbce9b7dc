#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tvlab/errors.hpp"
#include "tvlab/harness.hpp"

namespace tvlab {

namespace {

struct Scalar {
  enum class Kind { Number, String, Bool } kind;
  std::string text;
};

struct Value {
  bool is_array = false;
  std::vector<Scalar> items;
  std::size_t line = 0;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Drops a trailing '#' comment that is not inside a quoted string.
std::string strip_comment(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

Scalar parse_scalar(const std::string& raw, std::size_t line) {
  const std::string s = trim(raw);
  if (s.empty()) throw ConfigError("line " + std::to_string(line) + ": empty value");
  if (s.front() == '"' || s.front() == '\'') {
    if (s.size() < 2 || s.back() != s.front()) throw ConfigError("line " + std::to_string(line) + ": unterminated string");
    return {Scalar::Kind::String, s.substr(1, s.size() - 2)};
  }
  if (s == "true" || s == "false") return {Scalar::Kind::Bool, s};
  return {Scalar::Kind::Number, s};
}

Value parse_value(const std::string& raw, std::size_t line) {
  const std::string s = trim(raw);
  Value v;
  v.line = line;
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw ConfigError("line " + std::to_string(line) + ": unterminated array");
    v.is_array = true;
    const std::string body = s.substr(1, s.size() - 2);
    std::string item;
    char quote = 0;
    for (char c : body) {
      if (quote) {
        if (c == quote) quote = 0;
        item.push_back(c);
      } else if (c == '"' || c == '\'') {
        quote = c;
        item.push_back(c);
      } else if (c == ',') {
        if (!trim(item).empty()) v.items.push_back(parse_scalar(item, line));
        item.clear();
      } else {
        item.push_back(c);
      }
    }
    if (!trim(item).empty()) v.items.push_back(parse_scalar(item, line));
    return v;
  }
  v.items.push_back(parse_scalar(s, line));
  return v;
}

class Table {
 public:
  explicit Table(std::map<std::string, Value> values) : values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const Scalar& scalar(const std::string& key) const {
    const Value& v = at(key);
    if (v.is_array || v.items.size() != 1) throw error(key, "expected a single value");
    return v.items.front();
  }

  double number(const std::string& key) const { return to_double(key, scalar(key)); }

  std::uint64_t u64(const std::string& key) const { return to_u64(key, scalar(key)); }

  std::string string(const std::string& key) const {
    const Scalar& s = scalar(key);
    if (s.kind != Scalar::Kind::String) throw error(key, "expected a quoted string");
    return s.text;
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : at(key).items) out.push_back(to_double(key, s));
    return out;
  }

  std::vector<std::string> strings(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& s : at(key).items) {
      if (s.kind != Scalar::Kind::String) throw error(key, "expected quoted strings");
      out.push_back(s.text);
    }
    return out;
  }

  void reject_unknown(const std::set<std::string>& known) const {
    for (const auto& [key, v] : values_) {
      if (!known.count(key)) throw ConfigError("line " + std::to_string(v.line) + ": unknown key '" + key + "'");
    }
  }

 private:
  const Value& at(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
    return it->second;
  }

  ConfigError error(const std::string& key, const std::string& what) const {
    return ConfigError("line " + std::to_string(at(key).line) + ": " + key + ": " + what);
  }

  double to_double(const std::string& key, const Scalar& s) const {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(s.text.data(), s.text.data() + s.text.size(), out);
    if (s.kind != Scalar::Kind::Number || ec != std::errc{} || ptr != s.text.data() + s.text.size() ||
        !std::isfinite(out)) {
      throw error(key, "expected a number, got '" + s.text + "'");
    }
    return out;
  }

  std::uint64_t to_u64(const std::string& key, const Scalar& s) const {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(s.text.data(), s.text.data() + s.text.size(), out);
    if (s.kind != Scalar::Kind::Number || ec != std::errc{} || ptr != s.text.data() + s.text.size()) {
      throw error(key, "expected a non-negative integer, got '" + s.text + "'");
    }
    return out;
  }

  std::map<std::string, Value> values_;
};

Table parse_table(std::string_view text) {
  std::map<std::string, Value> values;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.find('=') == std::string::npos) {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string rhs = trim(line.substr(eq + 1));
    const std::size_t start_line = line_no;
    // arrays may continue over several lines until the bracket closes
    if (!rhs.empty() && rhs.front() == '[') {
      while (std::count(rhs.begin(), rhs.end(), '[') > std::count(rhs.begin(), rhs.end(), ']')) {
        if (!std::getline(in, raw)) throw ConfigError("line " + std::to_string(start_line) + ": unterminated array");
        ++line_no;
        rhs += " " + trim(strip_comment(raw));
      }
    }
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (values.count(key)) throw ConfigError("line " + std::to_string(start_line) + ": duplicate key '" + key + "'");
    values.emplace(key, parse_value(rhs, start_line));
  }
  return Table(std::move(values));
}

}  // namespace

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::None: return "none";
    case SweepAxis::Depth: return "depth";
    case SweepAxis::TreeSize: return "tree_size";
    case SweepAxis::Temperature: return "temperature";
    case SweepAxis::Alignment: return "alignment";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view text) {
  for (auto a : {SweepAxis::None, SweepAxis::Depth, SweepAxis::TreeSize, SweepAxis::Temperature, SweepAxis::Alignment}) {
    if (text == to_string(a)) return a;
  }
  throw ConfigError("unknown sweep axis '" + std::string(text) + "'");
}

void ExperimentConfig::validate() const {
  try {
    model.validate();
  } catch (const InvalidSpec& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  if (trials < 1) throw ConfigError("run.trials must be >= 1");
  if (model_seeds < 1) throw ConfigError("model.seeds must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (templates.empty()) throw ConfigError("tree.templates must not be empty");
  if (algorithms.empty()) throw ConfigError("run.algorithms must not be empty");
  if (temperatures.empty()) throw ConfigError("run.temperatures must not be empty");
  for (const auto& t : templates) {
    try {
      parse_template(t);
    } catch (const Error& e) {
      throw ConfigError("tree.templates: '" + t + "': " + e.what());
    }
  }
  for (double t : temperatures) {
    if (!(t > 0.0)) throw ConfigError("run.temperatures entries must be > 0");
  }
  if (format != "csv" && format != "json") throw ConfigError("output format must be csv or json");
  if (sweep_axis != SweepAxis::None && sweep_values.empty()) throw ConfigError("sweep.values must not be empty");
  for (double v : sweep_values) {
    switch (sweep_axis) {
      case SweepAxis::Depth:
      case SweepAxis::TreeSize:
        if (v < 1 || v != std::floor(v)) throw ConfigError("sweep.values must be positive integers for " +
                                                           std::string(to_string(sweep_axis)));
        break;
      case SweepAxis::Temperature:
        if (!(v > 0.0)) throw ConfigError("sweep.values must be > 0 for temperature");
        break;
      case SweepAxis::Alignment:
        if (v < 0.0 || v > 1.0) throw ConfigError("sweep.values must lie in [0, 1] for alignment");
        break;
      case SweepAxis::None: break;
    }
  }
  if (sweep_arity < 1) throw ConfigError("sweep.arity must be >= 1");
}

ExperimentConfig parse_config(std::string_view text) {
  const Table t = parse_table(text);
  t.reject_unknown({"model.seed", "model.seeds", "model.vocab", "model.order", "model.lambda", "model.concentration",
                    "tree.templates", "tree.mode", "run.algorithms", "run.temperatures", "run.trials", "run.seed",
                    "run.threads", "sweep.axis", "sweep.values", "sweep.arity", "output.path", "output.format"});
  ExperimentConfig c;
  if (!t.has("model.seed")) throw ConfigError("missing required key 'model.seed'");
  c.model.seed = t.u64("model.seed");
  if (t.has("model.seeds")) c.model_seeds = t.u64("model.seeds");
  if (t.has("model.vocab")) c.model.vocab_size = t.u64("model.vocab");
  if (t.has("model.order")) c.model.context_order = t.u64("model.order");
  if (t.has("model.lambda")) c.model.lambda = t.number("model.lambda");
  if (t.has("model.concentration")) c.model.concentration = t.number("model.concentration");
  if (t.has("tree.templates")) c.templates = t.strings("tree.templates");
  if (t.has("tree.mode")) c.mode = parse_sibling_mode(t.string("tree.mode"));
  if (t.has("run.algorithms")) {
    c.algorithms.clear();
    for (const auto& a : t.strings("run.algorithms")) c.algorithms.push_back(parse_algorithm(a));
  }
  if (t.has("run.temperatures")) c.temperatures = t.numbers("run.temperatures");
  if (t.has("run.trials")) c.trials = t.u64("run.trials");
  if (t.has("run.seed")) c.run_seed = t.u64("run.seed");
  if (t.has("run.threads")) c.threads = t.u64("run.threads");
  if (t.has("sweep.axis")) c.sweep_axis = parse_sweep_axis(t.string("sweep.axis"));
  if (t.has("sweep.values")) c.sweep_values = t.numbers("sweep.values");
  if (t.has("sweep.arity")) c.sweep_arity = static_cast<int>(t.u64("sweep.arity"));
  if (t.has("output.path")) c.out_path = t.string("output.path");
  if (t.has("output.format")) c.format = t.string("output.format");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream body;
  body << in.rdbuf();
  return parse_config(body.str());
}

}  // namespace tvlab
