#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace tvlab {

using Token = std::int32_t;
using TokenSeq = std::vector<Token>;

// Exact law over fixed-length token sequences. Ordered so that iteration,
// serialization and floating-point reductions are bit-stable.
using OutcomeDistribution = std::map<TokenSeq, double>;

inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kZeroMass = 1e-15;

// Dense finite distribution over token ids [0, size()).
class Categorical {
 public:
  // Takes probabilities that already sum to 1 (within 1e-9) and rescales
  // them exactly onto the simplex. Use normalize() for arbitrary weights.
  explicit Categorical(std::vector<double> probs);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](Token t) const { return probs_[static_cast<std::size_t>(t)]; }
  std::span<const double> probs() const noexcept { return probs_; }

  Token argmax() const;
  std::size_t support_size() const;

  friend bool operator==(const Categorical&, const Categorical&) = default;

 private:
  struct Trusted {};
  Categorical(std::vector<double> probs, Trusted) : probs_(std::move(probs)) {}
  friend Categorical normalize(std::span<const double> weights);

  std::vector<double> probs_;
};

// Deterministic uniform / categorical source. Same seed and same call
// sequence give the same draws on every platform.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  // η ∈ [0, 1) from the top 53 bits of one engine output.
  double uniform();
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// splitmix64 finalizer; the building block for keyed derivations.
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) noexcept;

// Throws ZeroMass if no entry exceeds kZeroMass.
Categorical normalize(std::span<const double> weights);

struct Residual {
  std::optional<Categorical> dist;  // empty when mass <= kZeroMass
  double mass = 0.0;                // Σ_x [p·target(x) − draft(x)]_+
};

// norm([p·target − draft]_+) together with its unnormalized mass.
Residual residual(double p, const Categorical& target, const Categorical& draft);

// Draft with `token` removed and the rest rescaled; empty once the draft has
// no support left.
std::optional<Categorical> zero_and_renorm(const Categorical& draft, Token token);

// mass / (mass + 1 − p). Throws Indeterminate at p == 1, mass == 0.
double parent_acceptance(double p, double mass);

// c(x)^{1/T}, renormalized.
Categorical apply_temperature(const Categorical& c, double temperature);

Token sample(const Categorical& c, RandomSource& rng);
// Inverse-CDF lookup for a given uniform, skipping zero-mass tokens.
Token sample_with(const Categorical& c, double eta);

double tv_distance(const Categorical& a, const Categorical& b);
double tv_distance(const OutcomeDistribution& a, const OutcomeDistribution& b);

}  // namespace tvlab
