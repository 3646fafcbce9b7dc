#include "tvlab/model.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "tvlab/errors.hpp"

namespace tvlab {

namespace {

constexpr std::uint64_t kTargetSalt = 0x7461726765740001ULL;
constexpr std::uint64_t kNoiseSalt = 0x6e6f697365000002ULL;

// (0, 1]: never exactly zero so that -log(u) stays finite.
double unit_open_closed(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53; }

}  // namespace

void ModelSpec::validate() const {
  if (vocab_size < 2) throw InvalidSpec("vocab_size must be >= 2");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidSpec("lambda must lie in [0, 1]");
  if (!(concentration > 0.0) || !std::isfinite(concentration)) throw InvalidSpec("concentration must be > 0");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw InvalidSpec("temperature must be > 0");
}

ModelPair::ModelPair(ModelSpec spec) : spec_(spec) { spec_.validate(); }

ModelPair::ModelPair(ModelSpec spec, Fixed fixed) : spec_(spec), fixed_(std::move(fixed)) { spec_.validate(); }

ModelPair ModelPair::fixed(Categorical target, Categorical draft, double temperature) {
  if (target.size() != draft.size()) throw InvalidSpec("fixed pair: vocabulary mismatch");
  ModelSpec spec;
  spec.vocab_size = target.size();
  spec.context_order = 0;
  spec.lambda = target == draft ? 0.0 : 1.0;
  spec.temperature = temperature;
  return ModelPair(spec, Fixed{std::move(target), std::move(draft)});
}

ModelPair ModelPair::with_temperature(double temperature) const {
  ModelPair copy = *this;
  copy.spec_.temperature = temperature;
  copy.spec_.validate();
  return copy;
}

std::uint64_t ModelPair::context_key(std::uint64_t salt, std::span<const Token> context) const {
  const std::size_t keep = std::min(context.size(), spec_.context_order);
  const auto window = context.subspan(context.size() - keep);
  std::uint64_t h = hash_combine(mix64(spec_.seed), salt);
  h = hash_combine(h, window.size());
  for (Token t : window) h = hash_combine(h, static_cast<std::uint64_t>(t));
  return h;
}

// Weights (-ln u)^concentration: concentration 1 is exactly a flat
// Dirichlet(1, ..., 1); larger values sharpen, smaller ones flatten.
Categorical ModelPair::keyed_dirichlet(std::uint64_t key) const {
  std::vector<double> w(spec_.vocab_size);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double u = unit_open_closed(hash_combine(key, i));
    w[i] = std::pow(-std::log(u), spec_.concentration);
  }
  return normalize(w);
}

Categorical ModelPair::raw_target(std::span<const Token> context) const {
  if (fixed_) return fixed_->target;
  return keyed_dirichlet(context_key(kTargetSalt, context));
}

Categorical ModelPair::raw_draft(std::span<const Token> context) const {
  if (fixed_) return fixed_->draft;
  Categorical target = raw_target(context);
  if (spec_.lambda == 0.0) return target;
  const Categorical noise = keyed_dirichlet(context_key(kNoiseSalt, context));
  std::vector<double> mixed(spec_.vocab_size);
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    const auto t = static_cast<Token>(i);
    mixed[i] = (1.0 - spec_.lambda) * target[t] + spec_.lambda * noise[t];
  }
  return normalize(mixed);
}

Categorical ModelPair::query(Which which, std::span<const Token> context) const {
  for (Token t : context) {
    if (t < 0 || static_cast<std::size_t>(t) >= spec_.vocab_size) throw Error("query: token out of range");
  }
  Categorical raw = which == Which::Target ? raw_target(context) : raw_draft(context);
  return apply_temperature(raw, spec_.temperature);
}

ModelPair make_pair(const ModelSpec& spec) { return ModelPair(spec); }

OutcomeDistribution exact_sequence_distribution(const ModelPair& pair, Which which, std::span<const Token> prefix,
                                                std::size_t length) {
  if (length == 0) throw Error("exact_sequence_distribution: length must be >= 1");
  if (std::pow(static_cast<double>(pair.vocab_size()), static_cast<double>(length)) > kEnumerationGuard) {
    throw TooLarge("exact_sequence_distribution: V^length exceeds " + std::to_string(kEnumerationGuard));
  }
  OutcomeDistribution out;
  TokenSeq context(prefix.begin(), prefix.end());
  TokenSeq suffix;
  std::function<void(double)> walk = [&](double mass) {
    if (suffix.size() == length) {
      out.emplace(suffix, mass);
      return;
    }
    const Categorical next = pair.query(which, context);
    for (std::size_t x = 0; x < next.size(); ++x) {
      const auto t = static_cast<Token>(x);
      if (next[t] <= 0.0) continue;
      context.push_back(t);
      suffix.push_back(t);
      walk(mass * next[t]);
      context.pop_back();
      suffix.pop_back();
    }
  };
  walk(1.0);
  return out;
}

}  // namespace tvlab
