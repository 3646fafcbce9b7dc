#include <cmath>

#include "tvlab/errors.hpp"
#include "tvlab/harness.hpp"

namespace tvlab {

namespace {

constexpr Token a = 0, b = 1, c = 2;

ModelPair worked_pair() {
  return ModelPair::fixed(Categorical({0.3, 0.4, 0.3}), Categorical({0.6, 0.3, 0.1}));
}

double rate_after_first_reject(const EventTrace& events) {
  for (const auto& e : events) {
    if (e.kind == EventKind::Reject) return e.new_rate;
  }
  throw Error("selftest: no rejection recorded");
}

}  // namespace

bool SelfTestCheck::passed() const { return std::abs(expected - actual) <= tolerance; }

std::vector<SelfTestCheck> selftest_checks() {
  const ModelPair pair = worked_pair();
  std::vector<SelfTestCheck> out;

  {
    const auto tree = SampledTree::materialize(TreeTemplate::chain(1), pair, {}, {-1, a}, SiblingMode::WithoutReplacement);
    ScriptedDecider d({}, true);
    run_verifier(Algorithm::SingleToken, tree, d);
    out.push_back({"single_token accept(a)", 0.5, d.thresholds().at(0)});
  }

  {
    const Categorical target({0.3, 0.4, 0.3});
    const Categorical draft({0.6, 0.3, 0.1});
    const Residual res = residual(1.0, target, draft);
    const auto renorm = zero_and_renorm(draft, a);
    if (!res.dist || !renorm) throw Error("selftest: degenerate residual");
    const double want_res[] = {0.0, 1.0 / 3.0, 2.0 / 3.0};
    const double want_draft[] = {0.0, 0.75, 0.25};
    for (Token t = 0; t < 3; ++t) {
      out.push_back({"rrsw residual[" + std::to_string(t) + "]", want_res[t], (*res.dist)[t]});
      out.push_back({"rrsw draft[" + std::to_string(t) + "]", want_draft[t], (*renorm)[t]});
    }

    const auto tree = SampledTree::materialize(TreeTemplate::kary(2, 1), pair, {}, {-1, a, b}, SiblingMode::WithoutReplacement);
    ScriptedDecider d({false}, true);
    run_verifier(Algorithm::Rrsw, tree, d);
    out.push_back({"rrsw second-candidate accept(b)", 4.0 / 9.0, d.thresholds().at(1)});
  }

  {
    // root -> {X1, X2}, X1 -> {X3, X4}, X2 -> {X5}; labels a, c, b, c, a
    const auto tmpl = TreeTemplate::from_edges({{0, std::nullopt, 0}, {1, 0, 0}, {2, 0, 1}, {3, 1, 0}, {4, 1, 1}, {5, 2, 0}});
    const auto tree = SampledTree::materialize(tmpl, pair, {}, {-1, a, c, b, c, a}, SiblingMode::WithoutReplacement);
    ScriptedDecider d({false}, true);
    const auto r = run_verifier(Algorithm::Traversal, tree, d);
    out.push_back({"traversal chain X1X3 accept", 2.0 / 3.0, d.thresholds().at(0)});
    out.push_back({"traversal p'(X1) after rejecting X3", 0.05 / 0.55, rate_after_first_reject(r.events)});
    out.push_back({"traversal chain X1X4 accept", 7.0 / 11.0, d.thresholds().at(1)});
  }
  return out;
}

}  // namespace tvlab
