#include <doctest.h>

#include <cmath>

#include "tvlab/errors.hpp"
#include "tvlab/oracle.hpp"
#include "tvlab/verify.hpp"

using namespace tvlab;

namespace {

constexpr Token a = 0, b = 1, c = 2;

ModelPair worked_pair() { return ModelPair::fixed(Categorical({0.3, 0.4, 0.3}), Categorical({0.6, 0.3, 0.1})); }

ModelPair seeded(std::uint64_t seed, std::size_t vocab, double lambda = 0.5) {
  ModelSpec s;
  s.seed = seed;
  s.vocab_size = vocab;
  s.lambda = lambda;
  return ModelPair(s);
}

TreeTemplate branched() {
  return TreeTemplate::from_edges({{0, std::nullopt, 0}, {1, 0, 0}, {2, 0, 1}, {3, 1, 0}, {4, 1, 1}, {5, 2, 0}});
}

SampledTree branched_tree(const ModelPair& pair) {
  return SampledTree::materialize(branched(), pair, {}, {-1, a, c, b, c, a}, SiblingMode::WithoutReplacement);
}

std::vector<NodeId> nodes_of(const EventTrace& events, EventKind kind) {
  std::vector<NodeId> out;
  for (const auto& e : events) {
    if (e.kind == kind) out.push_back(e.node);
  }
  return out;
}

// Leaves tested or subtrees pruned, in order: the traversal visit order.
std::vector<NodeId> visit_order(const EventTrace& events) {
  std::vector<NodeId> out;
  for (const auto& e : events) {
    if (e.kind == EventKind::Test || e.kind == EventKind::Prune) out.push_back(e.node);
  }
  return out;
}

// Rejects every test that a uniform could fail.
class RejectUnlessCertain final : public Decider {
 public:
  Decision test(double threshold) override { return {threshold >= 1.0, 0.5}; }
};

}  // namespace

TEST_SUITE("verify") {
  TEST_CASE("algorithm names round-trip") {
    for (auto alg : {Algorithm::SingleToken, Algorithm::Rrs, Algorithm::Rrsw, Algorithm::TokenTree, Algorithm::Traversal}) {
      CHECK(parse_algorithm(to_string(alg)) == alg);
    }
    CHECK_THROWS_AS(parse_algorithm("block"), ConfigError);
  }

  TEST_CASE("single-token thresholds") {
    const auto pair = worked_pair();
    for (auto [tok, want] : {std::pair{a, 0.5}, std::pair{b, 1.0}, std::pair{c, 1.0}}) {
      const auto tree = SampledTree::materialize(TreeTemplate::chain(1), pair, {}, {-1, tok}, SiblingMode::Iid);
      ScriptedDecider d({}, true);
      run_verifier(Algorithm::SingleToken, tree, d);
      CHECK(d.thresholds().at(0) == doctest::Approx(want).epsilon(1e-15));
    }
    // b is accepted whatever the uniform
    RandomSource rng(1);
    for (int i = 0; i < 200; ++i) CHECK(verify_single_token({}, b, pair, rng).tau == 1);

    const Categorical d({0.2, 0.3, 0.5});
    const auto same = ModelPair::fixed(d, d);
    for (int i = 0; i < 200; ++i) CHECK(verify_single_token({}, static_cast<Token>(i % 3), same, rng).tau == 1);
  }

  TEST_CASE("single-token rejection resamples from the residual") {
    const auto tree = SampledTree::materialize(TreeTemplate::chain(1), worked_pair(), {}, {-1, a}, SiblingMode::Iid);
    ScriptedDecider d({false});
    const auto r = run_verifier(Algorithm::SingleToken, tree, d);
    CHECK(r.accepted.empty());
    REQUIRE(r.bonus_dist);
    CHECK((*r.bonus_dist)[a] == 0.0);
    CHECK((*r.bonus_dist)[b] == doctest::Approx(1.0 / 3.0));
    CHECK((*r.bonus_dist)[c] == doctest::Approx(2.0 / 3.0));
  }

  TEST_CASE("rrsw worked example") {
    const auto pair = worked_pair();
    const auto tmpl = TreeTemplate::kary(2, 1);
    const auto ab = SampledTree::materialize(tmpl, pair, {}, {-1, a, b}, SiblingMode::WithoutReplacement);
    ScriptedDecider d({false}, true);
    const auto r = run_verifier(Algorithm::Rrsw, ab, d);
    CHECK(d.thresholds().at(0) == doctest::Approx(0.5));
    CHECK(d.thresholds().at(1) == doctest::Approx(4.0 / 9.0));
    CHECK(r.accepted == TokenSeq{b});

    const auto ac = SampledTree::materialize(tmpl, pair, {}, {-1, a, c}, SiblingMode::WithoutReplacement);
    ScriptedDecider d2({false}, true);
    run_verifier(Algorithm::Rrsw, ac, d2);
    CHECK(d2.thresholds().at(1) == 1.0);
  }

  TEST_CASE("single candidate rrs matches single-token") {
    const auto pair = seeded(4, 5, 0.8);
    for (Token t = 0; t < 5; ++t) {
      for (auto rep : {Replacement::With, Replacement::Without}) {
        RandomSource r1(t + 10), r2(t + 10);
        const auto x = verify_single_token({2}, t, pair, r1);
        const auto y = verify_rrs({2}, {t}, pair, r2, rep);
        CHECK(x.accepted == y.accepted);
        CHECK(x.bonus == y.bonus);
      }
    }
    RandomSource rng(1);
    CHECK_THROWS_AS(verify_rrs({}, {}, pair, rng, Replacement::With), ShapeError);
  }

  TEST_CASE("token tree discards a rejected subtree") {
    const auto tree = branched_tree(worked_pair());
    ScriptedDecider d({false}, true);
    const auto r = run_verifier(Algorithm::TokenTree, tree, d);
    CHECK(nodes_of(r.events, EventKind::Test) == std::vector<NodeId>{1, 2, 5});
    CHECK(r.accepted == TokenSeq{c, a});
  }

  TEST_CASE("token tree exhausting layer one bonuses from its residual") {
    const auto tree = branched_tree(worked_pair());
    ScriptedDecider d({false, false});
    const auto r = run_verifier(Algorithm::TokenTree, tree, d);
    CHECK(r.accepted.empty());
    CHECK(r.final_node == kRoot);
    REQUIRE(r.bonus_dist);
    // target residual after rejecting a then c: norm([norm([M_b − M_s]_+) − norm(M_s with a zeroed)]_+)
    const Residual first = residual(1.0, Categorical({0.3, 0.4, 0.3}), Categorical({0.6, 0.3, 0.1}));
    const Residual second = residual(1.0, *first.dist, Categorical({0.0, 0.75, 0.25}));
    CHECK(*r.bonus_dist == *second.dist);
    CHECK(nodes_of(r.events, EventKind::Exhausted) == std::vector<NodeId>{kRoot});
  }

  TEST_CASE("on a chain token_tree reduces to single-token") {
    const auto pair = seeded(6, 4, 0.7);
    RandomSource tr(2);
    for (int trial = 0; trial < 100; ++trial) {
      const auto tree = sample_tree(pair, {}, TreeTemplate::chain(4), SiblingMode::WithoutReplacement, tr);
      RandomSource r1(trial), r2(trial);
      const auto x = verify(Algorithm::SingleToken, tree, r1);
      const auto y = verify(Algorithm::TokenTree, tree, r2);
      CHECK(x.accepted == y.accepted);
      CHECK(x.bonus == y.bonus);
    }
  }

  TEST_CASE("traversal worked example") {
    const auto tree = branched_tree(worked_pair());
    CHECK(tree.node(1).rate == doctest::Approx(0.5));
    CHECK(tree.node(3).rate == doctest::Approx(2.0 / 3.0));

    ScriptedDecider d({false}, true);
    const auto r = run_verifier(Algorithm::Traversal, tree, d);
    CHECK(d.thresholds().at(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(d.thresholds().at(1) == doctest::Approx(7.0 / 11.0).epsilon(1e-15));
    const auto& rej = r.events.at(1);
    CHECK(rej.kind == EventKind::Reject);
    CHECK(rej.updated == 1);
    CHECK(rej.new_rate == doctest::Approx(0.05 / 0.55).epsilon(1e-15));
    CHECK(r.accepted == TokenSeq{a, c});
    CHECK(r.final_node == 4);
  }

  TEST_CASE("traversal visit order without early acceptance") {
    const auto tree = branched_tree(worked_pair());
    ScriptedDecider d({}, false);
    const auto r = run_verifier(Algorithm::Traversal, tree, d);
    CHECK(visit_order(r.events) == std::vector<NodeId>{3, 4, 1, 5, 2});
    // X1 drops to rate 0 after losing both children and is pruned untested
    CHECK(nodes_of(r.events, EventKind::Prune) == std::vector<NodeId>{1});

    // a pair in which no rate hits 0 or 1: every node is tested in turn
    RejectUnlessCertain cautious;
    const auto r2 = run_verifier(Algorithm::Traversal, branched_tree(seeded(79, 3, 0.9)), cautious);
    CHECK(nodes_of(r2.events, EventKind::Test) == std::vector<NodeId>{3, 4, 1, 5, 2});
  }

  TEST_CASE("traversal accepts the first chain when draft equals target") {
    const Categorical d({0.2, 0.5, 0.3});
    const auto pair = ModelPair::fixed(d, d);
    RandomSource rng(3);
    for (int i = 0; i < 50; ++i) {
      const auto tree = sample_tree(pair, {}, branched(), SiblingMode::WithoutReplacement, rng);
      const auto out = verify_traversal(tree, rng);
      CHECK(out.tau == 2);
      CHECK(out.accepted_nodes == std::vector<NodeId>{1, 3});
      CHECK(out.accept_length == 3);
    }
  }

  TEST_CASE("property: rejections never raise a rate") {
    RandomSource rng(17);
    for (int trial = 0; trial < 300; ++trial) {
      const auto pair = seeded(trial + 1, 4, 0.3 + 0.6 * rng.uniform());
      const auto mode = trial % 2 ? SiblingMode::Iid : SiblingMode::WithoutReplacement;
      const auto tree = sample_tree(pair, {}, TreeTemplate::kary(2, 3), mode, rng);
      const auto out = verify_traversal(tree, rng);
      for (const auto& e : out.events) {
        if (e.kind != EventKind::Reject) continue;
        CHECK(e.new_rate <= e.old_rate + 1e-15);
        CHECK(e.new_rate >= 0.0);
      }
    }
  }

  TEST_CASE("property: replay reproduces traces") {
    RandomSource rng(23);
    for (int trial = 0; trial < 100; ++trial) {
      const auto pair = seeded(trial + 1, 5, 0.6);
      const auto tree = sample_tree(pair, {}, TreeTemplate::kary(2, 3), SiblingMode::WithoutReplacement, rng);
      for (auto alg : {Algorithm::SingleToken, Algorithm::Rrsw, Algorithm::TokenTree, Algorithm::Traversal}) {
        RandomSource r1(trial), r2(trial);
        const auto x = verify(alg, tree, r1);
        const auto y = verify(alg, tree, r2);
        CHECK(x.events == y.events);
        const auto again = replay(alg, tree, x.events);
        CHECK(again.accepted == x.accepted);
        CHECK(again.accepted_nodes == x.accepted_nodes);
      }
    }
  }

  TEST_CASE("one-candidate trees: all verifiers agree exactly") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto pair = seeded(seed, 3, 0.7);
      const auto tmpl = TreeTemplate::chain(1);
      const auto ref = outcome_distribution(Algorithm::SingleToken, pair, {}, tmpl, SiblingMode::WithoutReplacement);
      for (auto alg : {Algorithm::Rrs, Algorithm::Rrsw, Algorithm::TokenTree, Algorithm::Traversal}) {
        for (auto mode : {SiblingMode::Iid, SiblingMode::WithoutReplacement}) {
          CHECK(tv_distance(outcome_distribution(alg, pair, {}, tmpl, mode), ref) < 1e-12);
        }
      }
    }
  }

  TEST_CASE("error paths") {
    RandomSource rng(1);
    CHECK_THROWS_AS(verify(Algorithm::Traversal, SampledTree{}, rng), EmptyTree);
    ScriptedDecider strict({});
    const auto tree = branched_tree(worked_pair());
    CHECK_THROWS_AS(run_verifier(Algorithm::Traversal, tree, strict), Error);
  }
}
