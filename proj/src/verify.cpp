#include "tvlab/verify.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "tvlab/errors.hpp"

namespace tvlab {

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::SingleToken: return "single_token";
    case Algorithm::Rrs: return "rrs";
    case Algorithm::Rrsw: return "rrsw";
    case Algorithm::TokenTree: return "token_tree";
    case Algorithm::Traversal: return "traversal";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view text) {
  for (auto a : {Algorithm::SingleToken, Algorithm::Rrs, Algorithm::Rrsw, Algorithm::TokenTree, Algorithm::Traversal}) {
    if (text == to_string(a)) return a;
  }
  throw ConfigError("unknown algorithm '" + std::string(text) + "'");
}

namespace {

// min(b/s, 1); a token the draft can no longer produce passes iff the target
// still wants it.
double ratio_threshold(double b, double s) {
  if (s <= 0.0) return b > 0.0 ? 1.0 : 0.0;
  return std::min(b / s, 1.0);
}

double mass_of(const std::optional<Categorical>& c, Token t) { return c ? (*c)[t] : 0.0; }

void record_test(EventTrace& events, NodeId node, Token token, double threshold, const Decider::Decision& d) {
  Event e;
  e.kind = EventKind::Test;
  e.node = node;
  e.token = token;
  e.threshold = threshold;
  e.eta = d.eta;
  e.accepted = d.accept;
  events.push_back(e);
}

VerificationResult run_single_token(const SampledTree& tree, Decider& decider) {
  VerificationResult out;
  NodeId u = kRoot;
  while (true) {
    const NodeId c = tree.first_alive_child(u);
    const TreeNode& at = tree.node(u);
    if (c == kNoParent) {
      out.bonus_dist = at.target;
      break;
    }
    const Token tok = tree.node(c).token;
    const double thr = ratio_threshold(mass_of(at.target, tok), mass_of(at.draft, tok));
    const auto d = decider.test(thr);
    record_test(out.events, c, tok, thr, d);
    if (d.accept) {
      out.accepted_nodes.push_back(c);
      out.accepted.push_back(tok);
      u = c;
      continue;
    }
    const Residual res = residual(1.0, *at.target, *at.draft);
    if (!res.dist) throw DegenerateResidual("single-token rejection left no residual mass");
    out.bonus_dist = res.dist;
    break;
  }
  out.final_node = u;
  return out;
}

VerificationResult run_top_down(const SampledTree& tree, Decider& decider, Replacement replacement) {
  VerificationResult out;
  NodeId u = kRoot;
  while (true) {
    const auto kids = tree.alive_children(u);
    const TreeNode& at = tree.node(u);
    if (kids.empty()) {
      out.bonus_dist = at.target;
      break;
    }
    Categorical target = *at.target;
    std::optional<Categorical> draft = at.draft;
    NodeId chosen = kNoParent;
    for (NodeId c : kids) {
      const Token tok = tree.node(c).token;
      const double thr = ratio_threshold(target[tok], mass_of(draft, tok));
      const auto d = decider.test(thr);
      record_test(out.events, c, tok, thr, d);
      if (d.accept) {
        chosen = c;
        break;
      }
      if (draft) {
        Residual res = residual(1.0, target, *draft);
        if (!res.dist) throw DegenerateResidual("recursive rejection left no residual mass");
        target = std::move(*res.dist);
        if (replacement == Replacement::Without) draft = zero_and_renorm(*draft, tok);
      }
      Event rej;
      rej.kind = EventKind::Reject;
      rej.node = c;
      rej.token = tok;
      rej.updated = u;
      out.events.push_back(rej);
    }
    if (chosen == kNoParent) {
      Event ex;
      ex.kind = EventKind::Exhausted;
      ex.node = u;
      out.events.push_back(ex);
      out.bonus_dist = std::move(target);
      break;
    }
    out.accepted_nodes.push_back(chosen);
    out.accepted.push_back(tree.node(chosen).token);
    u = chosen;
  }
  out.final_node = u;
  return out;
}

// Removes `removed` (already dead) from its parent `u`: residual target,
// draft with its token zeroed, parent acceptance update. A parent driven to
// rate 0 is pruned and the rejection cascades to its own parent.
void reject_into(SampledTree& tree, NodeId removed, EventTrace& events) {
  NodeId u = tree.node(removed).parent;
  Token tok = tree.node(removed).token;
  while (true) {
    TreeNode& n = tree.node(u);
    Residual res;
    if (n.draft) {
      res = residual(n.rate, *n.target, *n.draft);
    } else {
      // draft exhausted (iid duplicates): [p·M_b − 0]_+ = p·M_b
      res.mass = n.rate;
      res.dist = n.target;
    }
    const double mass = res.dist ? res.mass : 0.0;
    const double new_rate = parent_acceptance(n.rate, mass);

    Event rej;
    rej.kind = EventKind::Reject;
    rej.node = removed;
    rej.token = tok;
    rej.updated = u;
    rej.old_rate = n.rate;
    rej.new_rate = new_rate;

    n.target = std::move(res.dist);
    if (n.draft) n.draft = zero_and_renorm(*n.draft, tok);
    n.rate = new_rate;
    events.push_back(rej);

    if (new_rate <= 0.0 && u != kRoot) {
      tree.prune_subtree(u);
      Event pr;
      pr.kind = EventKind::Prune;
      pr.node = u;
      pr.token = n.token;
      pr.updated = n.parent;
      events.push_back(pr);
      removed = u;
      tok = n.token;
      u = n.parent;
      continue;
    }
    if (!n.target) throw DegenerateResidual("traversal residual exhausted at a surviving node");
    recompute_rates_below(tree, u, false);
    return;
  }
}

VerificationResult run_traversal(const SampledTree& input, Decider& decider) {
  SampledTree tree = input;
  VerificationResult out;
  while (true) {
    const auto chain = first_chain(tree);
    const NodeId leaf = chain.back();
    if (leaf == kRoot) {
      Event ex;
      ex.kind = EventKind::Exhausted;
      ex.node = kRoot;
      out.events.push_back(ex);
      out.final_node = kRoot;
      out.bonus_dist = tree.node(kRoot).target;
      break;
    }
    const TreeNode& l = tree.node(leaf);
    const double thr = l.rate;
    const auto d = decider.test(thr);
    record_test(out.events, leaf, l.token, thr, d);
    if (d.accept) {
      for (std::size_t i = 1; i < chain.size(); ++i) {
        out.accepted_nodes.push_back(chain[i]);
        out.accepted.push_back(tree.node(chain[i]).token);
      }
      out.final_node = leaf;
      // may be a residual if this node's own children were rejected
      out.bonus_dist = l.target;
      break;
    }
    tree.delete_leaf(leaf);
    reject_into(tree, leaf, out.events);
  }
  return out;
}

}  // namespace

Decider::Decision ScriptedDecider::test(double threshold) {
  thresholds_.push_back(threshold);
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (next_ < script_.size()) return {script_[next_++], nan};
  if (fallback_) return {*fallback_, nan};
  throw Error("scripted decider: script exhausted");
}

VerificationResult run_verifier(Algorithm algorithm, const SampledTree& tree, Decider& decider) {
  if (tree.empty()) throw EmptyTree("verifier called on an empty tree");
  switch (algorithm) {
    case Algorithm::SingleToken: return run_single_token(tree, decider);
    case Algorithm::Rrs: return run_top_down(tree, decider, Replacement::With);
    case Algorithm::Rrsw:
    case Algorithm::TokenTree: return run_top_down(tree, decider, Replacement::Without);
    case Algorithm::Traversal: return run_traversal(tree, decider);
  }
  throw Error("unknown algorithm");
}

VerificationOutcome verify(Algorithm algorithm, const SampledTree& tree, RandomSource& rng) {
  RandomDecider decider(rng);
  VerificationResult r = run_verifier(algorithm, tree, decider);
  if (!r.bonus_dist) throw DegenerateResidual("no distribution left for the bonus token");
  VerificationOutcome out;
  out.bonus = sample(*r.bonus_dist, rng);
  out.accepted = std::move(r.accepted);
  out.accepted_nodes = std::move(r.accepted_nodes);
  out.tau = static_cast<int>(out.accepted.size());
  out.accept_length = out.tau + 1;
  out.events = std::move(r.events);
  Event bonus;
  bonus.kind = EventKind::Bonus;
  bonus.node = r.final_node;
  bonus.token = out.bonus;
  out.events.push_back(bonus);
  return out;
}

VerificationOutcome verify_single_token(const TokenSeq& prefix, Token draft_token, const ModelPair& pair,
                                        RandomSource& rng) {
  const auto tree =
      SampledTree::materialize(TreeTemplate::chain(1), pair, prefix, {-1, draft_token}, SiblingMode::WithoutReplacement);
  return verify(Algorithm::SingleToken, tree, rng);
}

VerificationOutcome verify_rrs(const TokenSeq& prefix, const TokenSeq& candidates, const ModelPair& pair,
                               RandomSource& rng, Replacement replacement) {
  if (candidates.empty()) throw ShapeError("verify_rrs: need at least one candidate");
  TokenSeq labels{-1};
  labels.insert(labels.end(), candidates.begin(), candidates.end());
  const auto mode = replacement == Replacement::With ? SiblingMode::Iid : SiblingMode::WithoutReplacement;
  const auto tmpl = TreeTemplate::kary(static_cast<int>(candidates.size()), 1);
  const auto tree = SampledTree::materialize(tmpl, pair, prefix, labels, mode);
  return verify(replacement == Replacement::With ? Algorithm::Rrs : Algorithm::Rrsw, tree, rng);
}

VerificationOutcome verify_token_tree(const SampledTree& tree, RandomSource& rng) {
  return verify(Algorithm::TokenTree, tree, rng);
}

VerificationOutcome verify_traversal(const SampledTree& tree, RandomSource& rng) {
  return verify(Algorithm::Traversal, tree, rng);
}

VerificationResult replay(Algorithm algorithm, const SampledTree& tree, const EventTrace& trace) {
  std::vector<bool> script;
  for (const auto& e : trace) {
    if (e.kind == EventKind::Test) script.push_back(e.accepted);
  }
  ScriptedDecider decider(std::move(script));
  return run_verifier(algorithm, tree, decider);
}

}  // namespace tvlab
