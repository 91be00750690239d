#include <algorithm>
#include <limits>
#include <map>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "rlkge/errors.hpp"
#include "rlkge/evaluation.hpp"

using namespace rlkge;

namespace {

using Bytes = std::vector<std::uint8_t>;

// Deterministic pseudo-random score of a triple, with deliberate ties.
double hashed_score(const Triple& t) {
  std::uint64_t x = (std::uint64_t{t.head} * 1000003u) ^ (std::uint64_t{t.relation} * 7919u) ^
                    (std::uint64_t{t.tail} * 104729u);
  x ^= x >> 13;
  x *= 0x9E3779B97F4A7C15ull;
  return static_cast<double>((x >> 40) % 17);
}

}  // namespace

TEST_CASE("noise-detection F1: exact cases") {
  const Bytes labels = {1, 0, 0, 1, 0};
  CHECK(noise_detection_f1(Bytes{0, 1, 1, 0, 1}, labels) == 1.0);
  CHECK(noise_detection_f1(Bytes{1, 1, 1, 1, 1}, labels) == 0.0);
  // One of two noise triples flagged together with one clean: P = R = 1/2.
  CHECK(noise_detection_f1(Bytes{0, 0, 1, 1, 1}, labels) == doctest::Approx(0.5));
  CHECK_THROWS_AS(noise_detection_f1(Bytes{1, 1}, Bytes{0, 0}), UsageError);
  CHECK_THROWS_AS(noise_detection_f1(Bytes{1}, Bytes{1, 0}), UsageError);
}

TEST_CASE("noise-detection F1: score sweep and fixed count") {
  const std::vector<double> scores = {1, 2, 3, 4};
  CHECK(noise_detection_max_f1(scores, Bytes{1, 0, 0, 0}) == 1.0);
  CHECK(noise_detection_max_f1(scores, Bytes{1, 1, 0, 0}) == 1.0);
  // Noise at the top: best is flagging all but the top group.
  CHECK(noise_detection_max_f1(scores, Bytes{0, 0, 0, 1}) == 0.0);
  CHECK(noise_detection_f1_at_count(scores, Bytes{1, 1, 0, 0}, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(noise_detection_f1_at_count(scores, Bytes{1, 1, 0, 0}, 2) == 1.0);
  CHECK_THROWS_AS(noise_detection_f1_at_count(scores, Bytes{1, 1, 0, 0}, 5), UsageError);
}

TEST_CASE("property: the sweep over 0/1 scores equals the hard-mask F1") {
  Rng gen(71);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen.below(30);
    Bytes mask(n), labels(n);
    for (auto& m : mask) m = gen.coin();
    for (auto& l : labels) l = gen.bernoulli(0.3);
    mask[gen.below(n)] = 1;  // flag-everything is outside the sweep
    labels[gen.below(n)] = 1;
    std::vector<double> scores(mask.begin(), mask.end());
    CHECK(noise_detection_max_f1(scores, labels) ==
          doctest::Approx(noise_detection_f1(mask, labels)).epsilon(1e-15));
  }
}

TEST_CASE("link prediction: perfect model ranks every true entity first") {
  Rng gen(72);
  const auto g = testutil::random_graph(gen, 15, 2, 40, 5, 8);
  const TripleScorer perfect = [&](const Triple& t) { return g.is_known_positive(t) ? 1.0 : 0.0; };
  const auto res = link_prediction(perfect, g);
  CHECK(res.mrr == 1.0);
  CHECK(res.hits1 == 1.0);
  CHECK(res.hits10 == 1.0);
}

TEST_CASE("link prediction: rank arithmetic on a hand-made scorer") {
  // Test triple (0, r, 1). Tail candidates 2, 3 score above it and 4 ties it,
  // so the tail rank is 4; no head candidate reaches it.
  const auto g = testutil::id_graph(5, 1, {{2, 0, 3}}, {}, {{0, 0, 1}});
  const TripleScorer s = [](const Triple& t) {
    if (t.head != 0) return -1.0;
    static const double tail_scores[] = {0.0, 5.0, 6.0, 7.0, 5.0};
    return tail_scores[t.tail];
  };
  const auto res = link_prediction(s, g);
  REQUIRE(res.ranks.size() == 2);
  CHECK(res.ranks[0] == 1);
  CHECK(res.ranks[1] == 4);
  CHECK(res.mrr == doctest::Approx((1.0 + 0.25) / 2));
  CHECK(res.hits1 == 0.5);
  CHECK(res.hits3 == 0.5);
  CHECK(res.hits10 == 1.0);
}

TEST_CASE("link prediction agrees with a brute-force ranking") {
  Rng gen(73);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = testutil::random_graph(gen, 20, 3, 60, 6, 10);
    for (auto filter : {RankFilter::Filtered, RankFilter::Raw}) {
      const auto res = link_prediction(hashed_score, g, 1, filter);
      CHECK(res.ranks == oracle::brute_force_ranks(hashed_score, g, filter == RankFilter::Filtered));
    }
  }
}

TEST_CASE("property: filtered ranks never exceed raw ranks") {
  Rng gen(74);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = testutil::random_graph(gen, 25, 2, 120, 10, 10);
    const auto f = link_prediction(hashed_score, g, 1, RankFilter::Filtered);
    const auto r = link_prediction(hashed_score, g, 1, RankFilter::Raw);
    for (std::size_t i = 0; i < f.ranks.size(); ++i) CHECK(f.ranks[i] <= r.ranks[i]);
  }
}

TEST_CASE("property: ranks are invariant under an increasing affine map of scores") {
  Rng gen(75);
  const auto g = testutil::random_graph(gen, 20, 2, 60, 5, 10);
  const TripleScorer mapped = [](const Triple& t) { return 2 * hashed_score(t) + 7; };
  CHECK(link_prediction(mapped, g).ranks == link_prediction(hashed_score, g).ranks);
}

TEST_CASE("property: a constant scorer ranks last among the filtered candidates") {
  Rng gen(76);
  const auto g = testutil::random_graph(gen, 12, 2, 50, 5, 10);
  const TripleScorer flat = [](const Triple&) { return 0.0; };
  const auto res = link_prediction(flat, g);
  for (std::size_t i = 0; i < g.test().size(); ++i) {
    for (int side = 0; side < 2; ++side) {
      std::size_t candidates = 1;
      for (EntityId e = 0; e < g.num_entities(); ++e) {
        Triple c = g.test()[i];
        (side == 0 ? c.head : c.tail) = e;
        if (!g.is_known_positive(c)) ++candidates;
      }
      CHECK(res.ranks[2 * i + side] == candidates);
    }
  }
}

TEST_CASE("property: thread count does not change ranks") {
  Rng gen(77);
  const auto g = testutil::random_graph(gen, 30, 3, 100, 10, 25);
  const auto one = link_prediction(hashed_score, g, 1);
  const auto four = link_prediction(hashed_score, g, 4);
  CHECK(one.ranks == four.ranks);
  CHECK(one.mrr == four.mrr);
}

TEST_CASE("link prediction rejects an empty test split") {
  const auto g = testutil::id_graph(3, 1, {{0, 0, 1}});
  CHECK_THROWS_AS(link_prediction(hashed_score, g), UsageError);
}

TEST_CASE("triple classification: separable scores are classified perfectly") {
  const std::vector<ClassificationTriple> valid = {
      {{0, 0, 1}, 1}, {{0, 0, 2}, -1}, {{1, 1, 2}, 1}, {{1, 1, 0}, -1}};
  const std::vector<ClassificationTriple> test = {
      {{2, 0, 1}, 1}, {{2, 0, 2}, -1}, {{2, 1, 2}, 1}, {{2, 1, 0}, -1}};
  const TripleScorer s = [](const Triple& t) { return t.tail == 0 || (t.tail == 2 && t.relation == 0) ? -1.0 : 1.0; };
  const auto res = triple_classification(s, 2, valid, test);
  CHECK(res.accuracy == 1.0);
  CHECK(res.has_own == Bytes{1, 1});
}

TEST_CASE("triple classification: a constant scorer on balanced data gets one half") {
  std::vector<ClassificationTriple> valid, test;
  for (EntityId i = 0; i < 10; ++i) {
    valid.push_back({{i, 0, i}, i % 2 ? 1 : -1});
    test.push_back({{i, 0, i}, i % 2 ? -1 : 1});
  }
  const TripleScorer flat = [](const Triple&) { return 3.0; };
  CHECK(triple_classification(flat, 1, valid, test).accuracy == 0.5);
  CHECK_THROWS_AS(triple_classification(flat, 1, {}, test), UsageError);
}

TEST_CASE("triple classification: thresholds are optimal on validation") {
  // Oracle: for each relation, every threshold that gives a distinct
  // partition of the validation scores, compared with the chosen one.
  Rng gen(78);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<ClassificationTriple> valid, test;
    for (int i = 0; i < 6; ++i) {
      const Triple t{static_cast<EntityId>(i), static_cast<RelationId>(gen.below(2)),
                     static_cast<EntityId>(gen.below(4))};
      valid.push_back({t, gen.coin() ? 1 : -1});
      test.push_back({{static_cast<EntityId>(i + 10), t.relation, t.tail}, gen.coin() ? 1 : -1});
    }
    std::map<Triple, double> table;
    const TripleScorer s = [&](const Triple& t) {
      auto it = table.find(t);
      if (it == table.end()) it = table.emplace(t, static_cast<double>(gen.below(5))).first;
      return it->second;
    };
    for (const auto& x : valid) s(x.triple);
    for (const auto& x : test) s(x.triple);
    const auto res = triple_classification(s, 2, valid, test);
    for (RelationId r = 0; r < 2; ++r) {
      std::vector<double> cuts = {-std::numeric_limits<double>::infinity()};
      for (const auto& x : valid) {
        if (x.triple.relation == r) cuts.push_back(table[x.triple]);
      }
      if (cuts.size() == 1) continue;
      const auto accuracy = [&](double tau) {
        std::size_t ok = 0;
        for (const auto& x : valid) {
          if (x.triple.relation != r) continue;
          ok += (table[x.triple] > tau) == (x.label == 1);
        }
        return ok;
      };
      std::size_t best = 0;
      for (double c : cuts) best = std::max(best, accuracy(c));
      CHECK(accuracy(res.thresholds[r]) == best);
    }
    std::size_t correct = 0;
    for (const auto& x : test) {
      correct += (table[x.triple] > res.thresholds[x.triple.relation]) == (x.label == 1);
    }
    CHECK(res.accuracy == doctest::Approx(static_cast<double>(correct) / 6.0));
  }
}
