#include <doctest.h>

#include <cmath>
#include <vector>

#include "tvlab/errors.hpp"
#include "tvlab/model.hpp"

using namespace tvlab;

namespace {

TokenSeq random_context(RandomSource& rng, std::size_t vocab, std::size_t length) {
  TokenSeq ctx(length);
  for (auto& t : ctx) t = static_cast<Token>(rng.uniform() * static_cast<double>(vocab));
  return ctx;
}

ModelSpec spec_of(std::uint64_t seed, std::size_t vocab, double lambda, std::size_t order = 1) {
  ModelSpec s;
  s.seed = seed;
  s.vocab_size = vocab;
  s.lambda = lambda;
  s.context_order = order;
  return s;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("spec validation") {
    CHECK_THROWS_AS(ModelPair(spec_of(1, 1, 0.5)), InvalidSpec);
    CHECK_THROWS_AS(ModelPair(spec_of(1, 4, 1.5)), InvalidSpec);
    CHECK_THROWS_AS(ModelPair(spec_of(1, 4, -0.1)), InvalidSpec);
    auto s = spec_of(1, 4, 0.5);
    s.concentration = 0.0;
    CHECK_THROWS_AS(make_pair(s), InvalidSpec);
    s.concentration = 1.0;
    s.temperature = -1.0;
    CHECK_THROWS_AS(make_pair(s), InvalidSpec);
  }

  TEST_CASE("lambda 0 makes the draft equal the target") {
    const ModelPair pair(spec_of(11, 6, 0.0, 2));
    RandomSource rng(1);
    for (int i = 0; i < 100; ++i) {
      const auto ctx = random_context(rng, 6, i % 5);
      CHECK(pair.query(Which::Draft, ctx) == pair.query(Which::Target, ctx));
    }
  }

  TEST_CASE("same spec gives identical distributions") {
    const ModelPair a(spec_of(3, 8, 0.4, 2));
    const ModelPair b(spec_of(3, 8, 0.4, 2));
    RandomSource rng(2);
    for (int i = 0; i < 100; ++i) {
      const auto ctx = random_context(rng, 8, 1 + i % 4);
      CHECK(a.query(Which::Target, ctx) == b.query(Which::Target, ctx));
      CHECK(a.query(Which::Draft, ctx) == b.query(Which::Draft, ctx));
      CHECK(query(a, Which::Draft, ctx) == a.query(Which::Draft, ctx));
    }
  }

  TEST_CASE("golden pair for seed 7, V=3, lambda 1, empty context") {
    const ModelPair pair(spec_of(7, 3, 1.0));
    const auto target = pair.query(Which::Target, {});
    const auto draft = pair.query(Which::Draft, {});
    const std::vector<double> want_target{0.16982909497728929, 0.59531386149426535, 0.2348570435284455};
    const std::vector<double> want_draft{0.75123702577999274, 0.044126295005012563, 0.20463667921499473};
    for (Token t = 0; t < 3; ++t) {
      CHECK(std::abs(target[t] - want_target[static_cast<std::size_t>(t)]) < 1e-12);
      CHECK(std::abs(draft[t] - want_draft[static_cast<std::size_t>(t)]) < 1e-12);
    }
  }

  TEST_CASE("order 0 ignores the context") {
    const ModelPair pair(spec_of(5, 4, 0.5, 0));
    const auto base = pair.query(Which::Target, {});
    RandomSource rng(3);
    for (int i = 0; i < 50; ++i) CHECK(pair.query(Which::Target, random_context(rng, 4, 1 + i % 6)) == base);
  }

  TEST_CASE("contexts equal inside the window give equal distributions") {
    const ModelPair pair(spec_of(9, 5, 0.5, 2));
    RandomSource rng(4);
    for (int i = 0; i < 100; ++i) {
      auto a = random_context(rng, 5, 6);
      auto b = random_context(rng, 5, 3);
      b.insert(b.end(), a.end() - 2, a.end());
      CHECK(pair.query(Which::Target, a) == pair.query(Which::Target, b));
      CHECK(pair.query(Which::Draft, a) == pair.query(Which::Draft, b));
    }
  }

  TEST_CASE("different contexts usually differ") {
    const ModelPair pair(spec_of(9, 5, 0.5, 1));
    const Token zero = 0, one = 1;
    CHECK_FALSE(pair.query(Which::Target, std::span(&zero, 1)) == pair.query(Which::Target, std::span(&one, 1)));
  }

  TEST_CASE("temperature is applied at query time") {
    const ModelPair pair(spec_of(2, 4, 0.5));
    const auto hot = pair.with_temperature(0.5);
    const Token ctx = 1;
    CHECK(hot.query(Which::Target, std::span(&ctx, 1)) ==
          apply_temperature(pair.query(Which::Target, std::span(&ctx, 1)), 0.5));
    CHECK(hot.query(Which::Draft, std::span(&ctx, 1)) ==
          apply_temperature(pair.query(Which::Draft, std::span(&ctx, 1)), 0.5));
  }

  TEST_CASE("exact_sequence_distribution examples") {
    const ModelPair pair(spec_of(13, 4, 0.5, 1));
    const TokenSeq prefix{2};
    const auto one = exact_sequence_distribution(pair, Which::Target, prefix, 1);
    const auto q = pair.query(Which::Target, prefix);
    for (Token t = 0; t < 4; ++t) CHECK(one.at({t}) == q[t]);

    const Categorical d({0.6, 0.4});
    const auto iid = exact_sequence_distribution(ModelPair::fixed(d, d), Which::Target, {}, 2);
    CHECK(std::abs(iid.at({0, 0}) - 0.36) < 1e-15);
    CHECK(std::abs(iid.at({0, 1}) - 0.24) < 1e-15);
    CHECK(std::abs(iid.at({1, 0}) - 0.24) < 1e-15);
    CHECK(std::abs(iid.at({1, 1}) - 0.16) < 1e-15);

    CHECK_THROWS_AS(exact_sequence_distribution(ModelPair(spec_of(1, 16, 0.5)), Which::Target, {}, 6), TooLarge);
  }

  TEST_CASE("property: sequence laws carry unit mass") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      for (std::size_t order : {0, 1, 2}) {
        const ModelPair pair(spec_of(seed, 3, 0.3 * static_cast<double>(seed % 4), order));
        for (auto which : {Which::Draft, Which::Target}) {
          double total = 0.0;
          for (const auto& [seq, p] : exact_sequence_distribution(pair, which, TokenSeq{1}, 4)) {
            CHECK(seq.size() == 4);
            total += p;
          }
          CHECK(std::abs(total - 1.0) < 1e-10);
        }
      }
    }
  }

  TEST_CASE("property: draft-target divergence grows with lambda") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      double prev = -1.0;
      for (double lambda : {0.0, 0.25, 0.5, 1.0}) {
        const ModelPair pair(spec_of(seed, 8, lambda, 1));
        RandomSource rng(seed);
        double mean = 0.0;
        for (int i = 0; i < 100; ++i) {
          const auto ctx = random_context(rng, 8, 2);
          mean += tv_distance(pair.query(Which::Draft, ctx), pair.query(Which::Target, ctx));
        }
        CHECK(mean >= prev);
        prev = mean;
      }
    }
  }
}
