#pragma once

#include <string>
#include <vector>

#include "tvlab/dist.hpp"
#include "tvlab/model.hpp"
#include "tvlab/tree.hpp"
#include "tvlab/verify.hpp"

namespace tvlab {

// P(τ >= ℓ) for one drafted prefix x^ℓ of a chain, marginalized over the
// deeper draft tokens, next to the initial acceptance rate p_ini(x_ℓ).
struct PrefixAcceptance {
  TokenSeq prefix;
  double prefix_probability = 0.0;
  double accept_probability = 0.0;
  double initial_rate = 0.0;
};

// Same quantities for one complete labeling (no marginalization).
struct LabelingAcceptance {
  TokenSeq labels;
  double probability = 0.0;
  std::vector<double> tau_at_least;  // index ℓ = 0..depth
  std::vector<double> initial_rates;  // rank-0 chain, index ℓ
};

struct OracleAnalysis {
  OutcomeDistribution outcome;  // continuation tokens, length depth + 1
  double expected_accept_length = 0.0;
  std::vector<double> tau_pmf;  // P(τ = k)
  std::size_t labelings = 0;
  std::size_t branches = 0;
  double max_branch_mass_error = 0.0;  // per labeling |Σ branch mass − 1|
  std::vector<LabelingAcceptance> per_labeling;
  std::vector<PrefixAcceptance> per_prefix;  // chain templates only
};

inline constexpr double kBranchGuard = 1e7;

// Executes the verifier symbolically on every labeling: each uniform test
// with threshold t in (0, 1) forks into accept (mass t) and reject (1 − t).
// Terminal outputs are extended with exact target conditionals to depth + 1
// tokens. Throws TooLarge past the labeling or branch guards.
OracleAnalysis analyze(Algorithm algorithm, const ModelPair& pair, const TokenSeq& prefix, const TreeTemplate& tmpl,
                       SiblingMode mode);

OutcomeDistribution outcome_distribution(Algorithm algorithm, const ModelPair& pair, const TokenSeq& prefix,
                                         const TreeTemplate& tmpl, SiblingMode mode);

struct AcceptanceLength {
  double expected = 0.0;  // E[N] = E[τ] + 1
  std::vector<PrefixAcceptance> per_prefix;
};

AcceptanceLength expected_acceptance_length(Algorithm algorithm, const ModelPair& pair, const TokenSeq& prefix,
                                            const TreeTemplate& tmpl, SiblingMode mode);

struct LosslessnessReport {
  std::string algorithm;
  std::string mode;
  double tv = 0.0;
  double max_deviation = 0.0;
  double expected_accept_length = 0.0;
  std::size_t labelings = 0;
  std::size_t branches = 0;
  std::size_t sequences = 0;
};

LosslessnessReport losslessness_report(Algorithm algorithm, const ModelPair& pair, const TokenSeq& prefix,
                                       const TreeTemplate& tmpl, SiblingMode mode);

// Whether losslessness is a claim for this pairing (and therefore asserted)
// rather than an exploratory measurement.
bool lossless_expected(Algorithm algorithm, SiblingMode mode);

std::string to_json(const LosslessnessReport& report);

}  // namespace tvlab
