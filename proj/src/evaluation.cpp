#include "rlkge/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "rlkge/errors.hpp"

namespace rlkge {

namespace {

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

void check_labels(std::size_t n, std::span<const std::uint8_t> labels) {
  if (n != labels.size()) throw UsageError("prediction and label lengths differ");
  if (std::find(labels.begin(), labels.end(), std::uint8_t{1}) == labels.end()) {
    throw UsageError("labels contain no noise; F1 is undefined");
  }
}

std::vector<std::size_t> ascending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

}  // namespace

TripleScorer store_scorer(const EmbeddingStore& store) {
  return [&store](const Triple& t) { return score(store, t); };
}

double noise_detection_f1(std::span<const std::uint8_t> mask,
                          std::span<const std::uint8_t> labels) {
  check_labels(mask.size(), labels);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const bool flagged = mask[i] == 0;
    const bool noise = labels[i] != 0;
    tp += flagged && noise;
    fp += flagged && !noise;
    fn += !flagged && noise;
  }
  return f1_from_counts(tp, fp, fn);
}

double noise_detection_max_f1(std::span<const double> scores,
                              std::span<const std::uint8_t> labels) {
  check_labels(scores.size(), labels);
  const auto order = ascending_order(scores);
  const std::size_t total_noise =
      static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  std::size_t tp = 0, flagged = 0;
  double best = 0.0;
  // Flag whole groups of equal scores; stop before the last group.
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tp += labels[order[j]] != 0;
      ++flagged;
      ++j;
    }
    if (j == order.size()) break;
    best = std::max(best, f1_from_counts(tp, flagged - tp, total_noise - tp));
    i = j;
  }
  return best;
}

double noise_detection_f1_at_count(std::span<const double> scores,
                                   std::span<const std::uint8_t> labels, std::size_t drop_count) {
  check_labels(scores.size(), labels);
  if (drop_count > scores.size()) throw UsageError("drop count exceeds the number of triples");
  const auto order = ascending_order(scores);
  std::vector<std::uint8_t> mask(scores.size(), 1);
  for (std::size_t i = 0; i < drop_count; ++i) mask[order[i]] = 0;
  return noise_detection_f1(mask, labels);
}

RankingResult link_prediction(const TripleScorer& scorer, const KnowledgeGraph& graph,
                              std::size_t threads, RankFilter filter) {
  const auto test = graph.test();
  if (test.empty()) throw UsageError("link prediction needs a nonempty test split");
  const std::size_t n_entities = graph.num_entities();
  RankingResult result;
  result.ranks.assign(2 * test.size(), 0);

  const auto rank_one = [&](const Triple& truth, bool head_side) {
    const double target = scorer(truth);
    std::size_t rank = 1;
    Triple candidate = truth;
    EntityId& slot = head_side ? candidate.head : candidate.tail;
    const EntityId true_id = slot;
    for (EntityId e = 0; e < n_entities; ++e) {
      if (e == true_id) continue;
      slot = e;
      if (filter == RankFilter::Filtered && graph.is_known_positive(candidate)) continue;
      if (scorer(candidate) >= target) ++rank;
    }
    return rank;
  };

  const auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      result.ranks[2 * i] = rank_one(test[i], true);
      result.ranks[2 * i + 1] = rank_one(test[i], false);
    }
  };

  threads = std::max<std::size_t>(1, std::min(threads, test.size()));
  if (threads == 1) {
    work(0, test.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (test.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(test.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(work, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  result.per_relation.assign(graph.num_relations(), {});
  for (std::size_t q = 0; q < result.ranks.size(); ++q) {
    const double rank = static_cast<double>(result.ranks[q]);
    result.mrr += 1.0 / rank;
    result.hits1 += rank <= 1;
    result.hits3 += rank <= 3;
    result.hits10 += rank <= 10;
    auto& rel = result.per_relation[test[q / 2].relation];
    ++rel.queries;
    rel.mrr += 1.0 / rank;
    rel.hits10 += rank <= 10;
  }
  const double nq = static_cast<double>(result.ranks.size());
  result.mrr /= nq;
  result.hits1 /= nq;
  result.hits3 /= nq;
  result.hits10 /= nq;
  for (auto& rel : result.per_relation) {
    if (rel.queries == 0) continue;
    rel.mrr /= static_cast<double>(rel.queries);
    rel.hits10 /= static_cast<double>(rel.queries);
  }
  return result;
}

namespace {

struct Scored {
  double score;
  bool positive;
};

// Threshold maximizing accuracy of "score > threshold means positive".
double best_threshold(std::vector<Scored> items) {
  std::sort(items.begin(), items.end(),
            [](const Scored& a, const Scored& b) { return a.score < b.score; });
  std::size_t correct = 0;
  for (const auto& x : items) correct += x.positive;
  double best_tau = items.front().score - 1.0;
  std::size_t best_correct = correct;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) {
      // This group now falls at or below the threshold: predicted negative.
      if (items[j].positive) {
        --correct;
      } else {
        ++correct;
      }
      ++j;
    }
    const double tau =
        j < items.size() ? 0.5 * (items[i].score + items[j].score) : items[i].score + 1.0;
    if (correct > best_correct) {
      best_correct = correct;
      best_tau = tau;
    }
    i = j;
  }
  return best_tau;
}

}  // namespace

ClassificationResult triple_classification(const TripleScorer& scorer, std::size_t num_relations,
                                           std::span<const ClassificationTriple> valid,
                                           std::span<const ClassificationTriple> test) {
  if (valid.empty() || test.empty()) {
    throw UsageError("triple classification needs nonempty labeled valid and test sets");
  }
  std::vector<std::vector<Scored>> by_relation(num_relations);
  std::vector<Scored> all;
  all.reserve(valid.size());
  for (const auto& item : valid) {
    const Scored s{scorer(item.triple), item.label > 0};
    by_relation.at(item.triple.relation).push_back(s);
    all.push_back(s);
  }

  ClassificationResult result;
  result.global_threshold = best_threshold(all);
  result.thresholds.assign(num_relations, result.global_threshold);
  result.has_own.assign(num_relations, 0);
  for (std::size_t r = 0; r < num_relations; ++r) {
    if (by_relation[r].empty()) continue;
    result.thresholds[r] = best_threshold(std::move(by_relation[r]));
    result.has_own[r] = 1;
  }

  std::size_t correct = 0;
  for (const auto& item : test) {
    const bool predicted = scorer(item.triple) > result.thresholds.at(item.triple.relation);
    correct += predicted == (item.label > 0);
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  return result;
}

nlohmann::ordered_json to_json(const EvalReport& report, const KnowledgeGraph& graph) {
  nlohmann::ordered_json doc;
  if (report.has_ranking) {
    const auto& rk = report.ranking;
    doc["link_prediction"] = {{"setting", "filtered"},
                              {"queries", rk.ranks.size()},
                              {"mrr", rk.mrr},
                              {"hits@1", rk.hits1},
                              {"hits@3", rk.hits3},
                              {"hits@10", rk.hits10}};
  }
  if (report.has_noise_f1) {
    doc["noise_detection"] = {{"f1", report.noise_f1}, {"source", report.noise_f1_source}};
  }
  if (report.has_classification) {
    doc["triple_classification"] = {{"accuracy", report.classification_accuracy}};
  }
  if (report.has_ranking) {
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < report.ranking.per_relation.size(); ++r) {
      const auto& rel = report.ranking.per_relation[r];
      if (rel.queries == 0) continue;
      rows.push_back({{"relation", graph.relations().name(static_cast<RelationId>(r))},
                      {"queries", rel.queries},
                      {"mrr", rel.mrr},
                      {"hits@10", rel.hits10}});
    }
    doc["per_relation"] = std::move(rows);
  }
  return doc;
}

}  // namespace rlkge
