#include "rlkge/noise.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_set>

#include "rlkge/errors.hpp"
#include "rlkge/rng.hpp"

namespace rlkge {

std::size_t NoiseLabels::noise_count() const {
  return static_cast<std::size_t>(std::count(is_noise.begin(), is_noise.end(), std::uint8_t{1}));
}

SlotSets::SlotSets(std::size_t num_relations, std::span<const Triple> triples)
    : heads_(num_relations), tails_(num_relations) {
  std::vector<std::unordered_set<EntityId>> seen_heads(num_relations);
  std::vector<std::unordered_set<EntityId>> seen_tails(num_relations);
  for (const auto& t : triples) {
    if (seen_heads[t.relation].insert(t.head).second) heads_[t.relation].push_back(t.head);
    if (seen_tails[t.relation].insert(t.tail).second) tails_[t.relation].push_back(t.tail);
  }
}

namespace {

// One slot-compatible corruption of base, or nullopt when the draw is
// unusable (same entity, known positive, or already produced).
std::optional<Triple> draw_corruption(const Triple& base, const SlotSets& slots, Rng& rng,
                                      const KnowledgeGraph& graph,
                                      const std::unordered_set<Triple, TripleHash>& taken) {
  const bool replace_head = rng.coin();
  const auto pool = replace_head ? slots.heads(base.relation) : slots.tails(base.relation);
  if (pool.empty()) return std::nullopt;
  const EntityId e = pool[rng.below(pool.size())];
  Triple c = base;
  (replace_head ? c.head : c.tail) = e;
  if (c == base || graph.is_known_positive(c) || taken.contains(c)) return std::nullopt;
  return c;
}

}  // namespace

InjectionResult inject_noise(const KnowledgeGraph& graph, double rate, std::uint64_t seed,
                             int max_attempts) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw UsageError("noise rate must lie in [0, 1]");
  if (max_attempts < 1) throw UsageError("max_attempts must be positive");

  const auto clean = graph.train();
  InjectionResult result;
  result.target = static_cast<std::size_t>(std::floor(rate * static_cast<double>(clean.size())));

  const SlotSets slots(graph.num_relations(), clean);
  Rng rng(seed);
  std::unordered_set<Triple, TripleHash> taken;
  std::vector<Triple> injected;
  injected.reserve(result.target);

  for (std::size_t i = 0; i < result.target; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < max_attempts && !placed; ++attempt) {
      const Triple& base = clean[rng.below(clean.size())];
      if (auto c = draw_corruption(base, slots, rng, graph, taken)) {
        taken.insert(*c);
        injected.push_back(*c);
        placed = true;
      }
    }
    if (!placed) ++result.skipped;
  }
  result.injected = injected.size();
  if (result.skipped > 0) {
    spdlog::warn("event=inject_noise_shortfall target={} injected={} skipped={}", result.target,
                 result.injected, result.skipped);
  }

  std::vector<Triple> train(clean.begin(), clean.end());
  std::vector<std::uint8_t> labels(train.size(), 0);
  train.insert(train.end(), injected.begin(), injected.end());
  labels.resize(train.size(), 1);

  if (!injected.empty()) {
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<Triple> mixed(train.size());
    std::vector<std::uint8_t> mixed_labels(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      mixed[i] = train[order[i]];
      mixed_labels[i] = labels[order[i]];
    }
    train = std::move(mixed);
    labels = std::move(mixed_labels);
  }

  spdlog::info("event=inject_noise rate={} target={} injected={} train={}", rate, result.target,
               result.injected, train.size());
  result.graph = graph.with_train(std::move(train));
  result.labels.is_noise = std::move(labels);
  return result;
}

ClassificationSets make_classification_negatives(const KnowledgeGraph& graph, std::uint64_t seed,
                                                 int max_attempts) {
  if (max_attempts < 1) throw UsageError("max_attempts must be positive");
  std::vector<Triple> all(graph.train().begin(), graph.train().end());
  all.insert(all.end(), graph.valid().begin(), graph.valid().end());
  all.insert(all.end(), graph.test().begin(), graph.test().end());
  const SlotSets slots(graph.num_relations(), all);

  Rng rng(seed);
  std::unordered_set<Triple, TripleHash> taken;
  ClassificationSets out;

  const auto build = [&](std::span<const Triple> split, std::vector<ClassificationTriple>& dst) {
    dst.reserve(2 * split.size());
    for (const auto& positive : split) {
      std::optional<Triple> negative;
      for (int attempt = 0; attempt < max_attempts && !negative; ++attempt) {
        negative = draw_corruption(positive, slots, rng, graph, taken);
      }
      if (!negative) {
        ++out.skipped;
        continue;
      }
      taken.insert(*negative);
      dst.push_back({positive, 1});
      dst.push_back({*negative, -1});
    }
  };
  build(graph.valid(), out.valid);
  build(graph.test(), out.test);
  if (out.skipped > 0) {
    spdlog::warn("event=classification_negatives_shortfall skipped={}", out.skipped);
  }
  return out;
}

void write_noise_labels(const std::filesystem::path& path, const NoiseLabels& labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (auto flag : labels.is_noise) out << (flag ? '1' : '0') << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

NoiseLabels read_noise_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  NoiseLabels labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "0") {
      labels.is_noise.push_back(0);
    } else if (line == "1") {
      labels.is_noise.push_back(1);
    } else {
      throw ParseError(path.string(), lineno, "expected 0 or 1");
    }
  }
  return labels;
}

void write_classification(const std::filesystem::path& path,
                          std::span<const ClassificationTriple> items,
                          const KnowledgeGraph& graph) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& item : items) {
    out << graph.entities().name(item.triple.head) << '\t'
        << graph.relations().name(item.triple.relation) << '\t'
        << graph.entities().name(item.triple.tail) << '\t' << item.label << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<ClassificationTriple> read_classification(const std::filesystem::path& path,
                                                      const KnowledgeGraph& graph) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<ClassificationTriple> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find('\t')) != std::string_view::npos;) {
      fields.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    fields.push_back(rest);
    if (fields.size() != 4) throw ParseError(path.string(), lineno, "expected 4 fields");
    const auto h = graph.entities().find(fields[0]);
    const auto r = graph.relations().find(fields[1]);
    const auto t = graph.entities().find(fields[2]);
    if (!h || !r || !t) throw ParseError(path.string(), lineno, "unknown entity or relation");
    int label = 0;
    if (fields[3] == "1") {
      label = 1;
    } else if (fields[3] == "-1") {
      label = -1;
    } else {
      throw ParseError(path.string(), lineno, "label must be 1 or -1");
    }
    items.push_back({Triple{*h, *r, *t}, label});
  }
  return items;
}

}  // namespace rlkge
