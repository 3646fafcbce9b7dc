#include "tvlab/dist.hpp"

#include <algorithm>
#include <cmath>

#include "tvlab/errors.hpp"

namespace tvlab {

Categorical::Categorical(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw Error("Categorical: empty probability vector");
  double sum = 0.0;
  for (double v : probs_) {
    if (!std::isfinite(v) || v < 0.0) throw Error("Categorical: entries must be finite and >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("Categorical: entries must sum to 1");
  for (double& v : probs_) v /= sum;
}

Token Categorical::argmax() const {
  return static_cast<Token>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

std::size_t Categorical::support_size() const {
  return static_cast<std::size_t>(std::count_if(probs_.begin(), probs_.end(), [](double v) { return v > 0.0; }));
}

double RandomSource::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) noexcept { return mix64(h ^ mix64(v)); }

Categorical normalize(std::span<const double> weights) {
  if (weights.empty()) throw ZeroMass("normalize: empty weight vector");
  std::vector<double> out(weights.begin(), weights.end());
  double sum = 0.0;
  bool any = false;
  for (double& v : out) {
    if (!std::isfinite(v) || v < 0.0) throw Error("normalize: weights must be finite and >= 0");
    if (v > kZeroMass) any = true;
    sum += v;
  }
  if (!any) throw ZeroMass("normalize: no positive mass");
  for (double& v : out) v /= sum;
  return Categorical(std::move(out), Categorical::Trusted{});
}

Residual residual(double p, const Categorical& target, const Categorical& draft) {
  if (target.size() != draft.size()) throw Error("residual: vocabulary mismatch");
  std::vector<double> clipped(target.size(), 0.0);
  double mass = 0.0;
  for (std::size_t x = 0; x < clipped.size(); ++x) {
    const auto t = static_cast<Token>(x);
    const double d = p * target[t] - draft[t];
    // negatives become an exact 0, never -1e-17 residue
    if (d > 0.0) {
      clipped[x] = d;
      mass += d;
    }
  }
  Residual out;
  out.mass = mass;
  if (mass > kZeroMass) out.dist = normalize(clipped);
  return out;
}

std::optional<Categorical> zero_and_renorm(const Categorical& draft, Token token) {
  if (token < 0 || static_cast<std::size_t>(token) >= draft.size()) throw Error("zero_and_renorm: token out of range");
  if (draft[token] >= 1.0 - kZeroMass) return std::nullopt;
  std::vector<double> w(draft.probs().begin(), draft.probs().end());
  w[static_cast<std::size_t>(token)] = 0.0;
  try {
    return normalize(w);
  } catch (const ZeroMass&) {
    return std::nullopt;
  }
}

double parent_acceptance(double p, double mass) {
  if (p >= 1.0) {
    if (mass <= 0.0) throw Indeterminate("parent_acceptance: p = 1 with exhausted residual");
    return 1.0;
  }
  if (mass <= 0.0) return 0.0;
  return std::min(p, mass / (mass + 1.0 - p));
}

Categorical apply_temperature(const Categorical& c, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw Error("apply_temperature: T must be > 0");
  if (temperature == 1.0) return c;
  const auto probs = c.probs();
  const double top = std::log(*std::max_element(probs.begin(), probs.end()));
  std::vector<double> w(probs.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (probs[i] > 0.0) w[i] = std::exp((std::log(probs[i]) - top) / temperature);
  }
  return normalize(w);
}

Token sample_with(const Categorical& c, double eta) {
  const auto probs = c.probs();
  double acc = 0.0;
  Token last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = static_cast<Token>(i);
    acc += probs[i];
    if (eta < acc) return last_positive;
  }
  // rounding left eta above the accumulated total
  return last_positive;
}

Token sample(const Categorical& c, RandomSource& rng) { return sample_with(c, rng.uniform()); }

double tv_distance(const Categorical& a, const Categorical& b) {
  if (a.size() != b.size()) throw Error("tv_distance: vocabulary mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a.probs()[i] - b.probs()[i]);
  return 0.5 * sum;
}

double tv_distance(const OutcomeDistribution& a, const OutcomeDistribution& b) {
  double sum = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  // merge walk over the two ordered key sets
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      sum += std::abs(ia->second);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      sum += std::abs(ib->second);
      ++ib;
    } else {
      sum += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return 0.5 * sum;
}

}  // namespace tvlab
