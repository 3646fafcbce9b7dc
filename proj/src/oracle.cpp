#include "tvlab/oracle.hpp"

#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "tvlab/errors.hpp"

namespace tvlab {

namespace {

struct NeedBranch {
  double threshold;
};

// Follows a fixed accept/reject script; a non-trivial test past the end of
// the script asks the caller to fork.
class BranchDecider final : public Decider {
 public:
  explicit BranchDecider(const std::vector<bool>& script) : script_(script) {}
  Decision test(double threshold) override {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    if (threshold >= 1.0) return {true, nan};
    if (threshold <= 0.0) return {false, nan};
    if (next_ < script_.size()) return {script_[next_++], nan};
    throw NeedBranch{threshold};
  }

 private:
  const std::vector<bool>& script_;
  std::size_t next_ = 0;
};

class TargetExtender {
 public:
  TargetExtender(const ModelPair& pair, TokenSeq prefix) : pair_(pair), prefix_(std::move(prefix)) {}

  // Law of the `length` target tokens following prefix + head.
  const OutcomeDistribution& tail(const TokenSeq& head, std::size_t length) {
    auto key = head;
    key.push_back(static_cast<Token>(-1 - static_cast<Token>(length)));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    TokenSeq ctx = prefix_;
    ctx.insert(ctx.end(), head.begin(), head.end());
    return cache_.emplace(std::move(key), exact_sequence_distribution(pair_, Which::Target, ctx, length))
        .first->second;
  }

 private:
  const ModelPair& pair_;
  TokenSeq prefix_;
  std::map<TokenSeq, OutcomeDistribution> cache_;
};

}  // namespace

OracleAnalysis analyze(Algorithm algorithm, const ModelPair& pair, const TokenSeq& prefix, const TreeTemplate& tmpl,
                       SiblingMode mode) {
  OracleAnalysis out;
  const auto depth = static_cast<std::size_t>(tmpl.depth());
  const std::size_t length = depth + 1;
  out.tau_pmf.assign(depth + 1, 0.0);
  TargetExtender extender(pair, prefix);

  out.labelings = for_each_labeling(tmpl, pair, prefix, mode, [&](const SampledTree& tree, double lab_prob) {
    LabelingAcceptance lab;
    lab.labels = tree.labels();
    lab.probability = lab_prob;
    lab.tau_at_least.assign(depth + 1, 0.0);
    for (NodeId u = kRoot; u != kNoParent; u = tree.first_alive_child(u)) lab.initial_rates.push_back(tree.node(u).rate);

    std::vector<std::pair<std::vector<bool>, double>> pending{{{}, 1.0}};
    double branch_mass = 0.0;
    while (!pending.empty()) {
      auto [script, mass] = std::move(pending.back());
      pending.pop_back();
      BranchDecider decider(script);
      VerificationResult r;
      try {
        r = run_verifier(algorithm, tree, decider);
      } catch (const NeedBranch& b) {
        auto accept = script;
        accept.push_back(true);
        script.push_back(false);
        // reject first on the stack so accept branches are expanded first
        pending.emplace_back(std::move(script), mass * (1.0 - b.threshold));
        pending.emplace_back(std::move(accept), mass * b.threshold);
        continue;
      }
      if (++out.branches > kBranchGuard) throw TooLarge("oracle: symbolic branch count exceeds 1e7");
      if (!r.bonus_dist) throw DegenerateResidual("oracle: terminal state without a bonus distribution");
      branch_mass += mass;
      const std::size_t tau = r.accepted.size();
      const double weight = lab_prob * mass;
      out.tau_pmf[tau] += weight;
      out.expected_accept_length += weight * static_cast<double>(tau + 1);
      for (std::size_t l = 0; l <= tau; ++l) lab.tau_at_least[l] += mass;

      const Categorical& bonus = *r.bonus_dist;
      TokenSeq head = r.accepted;
      head.push_back(0);
      for (std::size_t y = 0; y < bonus.size(); ++y) {
        const auto tok = static_cast<Token>(y);
        if (bonus[tok] <= 0.0) continue;
        head.back() = tok;
        const double w = weight * bonus[tok];
        if (head.size() == length) {
          out.outcome[head] += w;
          continue;
        }
        for (const auto& [rest, p] : extender.tail(head, length - head.size())) {
          TokenSeq full = head;
          full.insert(full.end(), rest.begin(), rest.end());
          out.outcome[full] += w * p;
        }
      }
    }
    out.max_branch_mass_error = std::max(out.max_branch_mass_error, std::abs(branch_mass - 1.0));
    out.per_labeling.push_back(std::move(lab));
  });

  if (tmpl.is_chain()) {
    // chain node ids are 0..depth in path order
    for (std::size_t l = 1; l <= depth; ++l) {
      std::map<TokenSeq, PrefixAcceptance> groups;
      for (const auto& lab : out.per_labeling) {
        TokenSeq key(lab.labels.begin() + 1, lab.labels.begin() + static_cast<std::ptrdiff_t>(l) + 1);
        auto& g = groups[key];
        g.prefix = key;
        g.prefix_probability += lab.probability;
        g.accept_probability += lab.probability * lab.tau_at_least[l];
        g.initial_rate = lab.initial_rates[l];
      }
      for (auto& [key, g] : groups) {
        g.accept_probability /= g.prefix_probability;
        out.per_prefix.push_back(std::move(g));
      }
    }
  }
  return out;
}

OutcomeDistribution outcome_distribution(Algorithm algorithm, const ModelPair& pair, const TokenSeq& prefix,
                                         const TreeTemplate& tmpl, SiblingMode mode) {
  return analyze(algorithm, pair, prefix, tmpl, mode).outcome;
}

AcceptanceLength expected_acceptance_length(Algorithm algorithm, const ModelPair& pair, const TokenSeq& prefix,
                                            const TreeTemplate& tmpl, SiblingMode mode) {
  auto a = analyze(algorithm, pair, prefix, tmpl, mode);
  return {a.expected_accept_length, std::move(a.per_prefix)};
}

LosslessnessReport losslessness_report(Algorithm algorithm, const ModelPair& pair, const TokenSeq& prefix,
                                       const TreeTemplate& tmpl, SiblingMode mode) {
  const auto a = analyze(algorithm, pair, prefix, tmpl, mode);
  const auto reference =
      exact_sequence_distribution(pair, Which::Target, prefix, static_cast<std::size_t>(tmpl.depth()) + 1);
  LosslessnessReport r;
  r.algorithm = std::string(to_string(algorithm));
  r.mode = std::string(to_string(mode));
  r.tv = tv_distance(a.outcome, reference);
  for (const auto& [seq, p] : reference) {
    auto it = a.outcome.find(seq);
    r.max_deviation = std::max(r.max_deviation, std::abs(p - (it == a.outcome.end() ? 0.0 : it->second)));
  }
  for (const auto& [seq, p] : a.outcome) {
    if (!reference.count(seq)) r.max_deviation = std::max(r.max_deviation, std::abs(p));
  }
  r.expected_accept_length = a.expected_accept_length;
  r.labelings = a.labelings;
  r.branches = a.branches;
  r.sequences = a.outcome.size();
  return r;
}

bool lossless_expected(Algorithm algorithm, SiblingMode mode) {
  if (algorithm == Algorithm::SingleToken) return true;
  if (mode == SiblingMode::Iid) return algorithm == Algorithm::Rrs;
  return algorithm != Algorithm::Rrs;
}

std::string to_json(const LosslessnessReport& report) {
  nlohmann::ordered_json j;
  j["algorithm"] = report.algorithm;
  j["mode"] = report.mode;
  j["tv"] = report.tv;
  j["max_deviation"] = report.max_deviation;
  j["expected_accept_length"] = report.expected_accept_length;
  j["labelings"] = report.labelings;
  j["branches"] = report.branches;
  j["sequences"] = report.sequences;
  return j.dump();
}

}  // namespace tvlab
