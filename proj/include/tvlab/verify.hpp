#pragma once

#include <cmath>
#include <limits>
#include <string_view>
#include <vector>

#include "tvlab/dist.hpp"
#include "tvlab/model.hpp"
#include "tvlab/tree.hpp"

namespace tvlab {

enum class Algorithm {
  SingleToken,  // sequential per-token acceptance along the rank-0 chain
  Rrs,          // top-down, recursive rejection sampling with replacement
  Rrsw,         // top-down, recursive rejection sampling without replacement
  TokenTree,    // top-down token-level tree verification (RRSw per layer)
  Traversal,
};

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view text);

enum class Replacement { With, Without };

enum class EventKind {
  Test,       // uniform comparison against `threshold`
  Reject,     // `node` removed; `updated` got new distributions and rate
  Prune,      // `node` hit rate 0 and was removed with its subtree
  Exhausted,  // nothing left to test at `node`; fall through to the bonus
  Bonus,      // bonus token drawn at `node`
};

struct Event {
  EventKind kind = EventKind::Test;
  NodeId node = kNoParent;
  double threshold = 0.0;
  double eta = std::numeric_limits<double>::quiet_NaN();  // NaN when no uniform was drawn
  bool accepted = false;
  NodeId updated = kNoParent;
  double old_rate = std::numeric_limits<double>::quiet_NaN();  // rate of `updated` before a Reject
  double new_rate = std::numeric_limits<double>::quiet_NaN();
  Token token = -1;

  friend bool operator==(const Event& a, const Event& b) {
    auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    return a.kind == b.kind && a.node == b.node && same(a.threshold, b.threshold) && same(a.eta, b.eta) &&
           a.accepted == b.accepted && a.updated == b.updated && same(a.old_rate, b.old_rate) &&
           same(a.new_rate, b.new_rate) && a.token == b.token;
  }
};

using EventTrace = std::vector<Event>;

struct VerificationOutcome {
  TokenSeq accepted;                  // X^τ without the root prefix
  std::vector<NodeId> accepted_nodes;
  Token bonus = -1;
  int tau = 0;
  int accept_length = 1;              // tau + 1
  EventTrace events;
};

// Source of accept/reject decisions for threshold tests.
class Decider {
 public:
  struct Decision {
    bool accept;
    double eta;
  };
  virtual ~Decider() = default;
  virtual Decision test(double threshold) = 0;
};

// η ~ U(0,1), accept iff η < threshold. One uniform per test, always.
class RandomDecider final : public Decider {
 public:
  explicit RandomDecider(RandomSource& rng) : rng_(rng) {}
  Decision test(double threshold) override {
    const double eta = rng_.uniform();
    return {eta < threshold, eta};
  }

 private:
  RandomSource& rng_;
};

// Replays a fixed decision list and records every threshold it is asked
// about. Past the end of the list it throws, or answers `fallback` if set.
class ScriptedDecider final : public Decider {
 public:
  explicit ScriptedDecider(std::vector<bool> script, std::optional<bool> fallback = std::nullopt)
      : script_(std::move(script)), fallback_(fallback) {}
  Decision test(double threshold) override;
  const std::vector<double>& thresholds() const noexcept { return thresholds_; }

 private:
  std::vector<bool> script_;
  std::optional<bool> fallback_;
  std::vector<double> thresholds_;
  std::size_t next_ = 0;
};

// Everything up to (not including) the bonus draw.
struct VerificationResult {
  std::vector<NodeId> accepted_nodes;
  TokenSeq accepted;
  NodeId final_node = kRoot;                  // node whose distribution yields the bonus
  std::optional<Categorical> bonus_dist;
  EventTrace events;
};

// Runs one verifier on a private copy of `tree`.
VerificationResult run_verifier(Algorithm algorithm, const SampledTree& tree, Decider& decider);

// Runs the verifier and draws the bonus token from `rng`.
VerificationOutcome verify(Algorithm algorithm, const SampledTree& tree, RandomSource& rng);

VerificationOutcome verify_single_token(const TokenSeq& prefix, Token draft_token, const ModelPair& pair,
                                        RandomSource& rng);
VerificationOutcome verify_rrs(const TokenSeq& prefix, const TokenSeq& candidates, const ModelPair& pair,
                               RandomSource& rng, Replacement replacement);
VerificationOutcome verify_token_tree(const SampledTree& tree, RandomSource& rng);
VerificationOutcome verify_traversal(const SampledTree& tree, RandomSource& rng);

// Re-runs `algorithm` feeding back the decisions recorded in `trace`.
VerificationResult replay(Algorithm algorithm, const SampledTree& tree, const EventTrace& trace);

}  // namespace tvlab
