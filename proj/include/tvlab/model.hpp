#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "tvlab/dist.hpp"

namespace tvlab {

enum class Which { Draft, Target };

struct ModelSpec {
  std::uint64_t seed = 0;
  std::size_t vocab_size = 16;
  std::size_t context_order = 1;
  double lambda = 0.5;         // 0: draft ≡ target
  double concentration = 1.0;  // >1 sharpens the generated distributions
  double temperature = 1.0;

  void validate() const;  // throws InvalidSpec
};

// Synthetic draft/target pair. Distributions are pure functions of
// (spec, last context_order tokens); nothing is stored per context.
class ModelPair {
 public:
  explicit ModelPair(ModelSpec spec);

  // Context-free pair returning the same two distributions everywhere.
  static ModelPair fixed(Categorical target, Categorical draft, double temperature = 1.0);

  const ModelSpec& spec() const noexcept { return spec_; }
  std::size_t vocab_size() const noexcept { return spec_.vocab_size; }

  Categorical query(Which which, std::span<const Token> context) const;

  ModelPair with_temperature(double temperature) const;

 private:
  struct Fixed {
    Categorical target;
    Categorical draft;
  };

  ModelPair(ModelSpec spec, Fixed fixed);

  Categorical raw_target(std::span<const Token> context) const;
  Categorical raw_draft(std::span<const Token> context) const;
  std::uint64_t context_key(std::uint64_t salt, std::span<const Token> context) const;
  Categorical keyed_dirichlet(std::uint64_t key) const;

  ModelSpec spec_;
  std::optional<Fixed> fixed_;
};

ModelPair make_pair(const ModelSpec& spec);

inline Categorical query(const ModelPair& pair, Which which, std::span<const Token> context) {
  return pair.query(which, context);
}

inline constexpr double kEnumerationGuard = 1e7;

// Exact product-of-conditionals law of every continuation of `prefix` with
// `length` tokens. Keys hold only the continuation. Throws TooLarge when
// V^length exceeds kEnumerationGuard.
OutcomeDistribution exact_sequence_distribution(const ModelPair& pair, Which which, std::span<const Token> prefix,
                                                std::size_t length);

}  // namespace tvlab
