#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "rlkge/graph.hpp"
#include "rlkge/models.hpp"
#include "rlkge/noise.hpp"

namespace rlkge {

using TripleScorer = std::function<double(const Triple&)>;

/// Scorer view over a frozen store.
TripleScorer store_scorer(const EmbeddingStore& store);

/// F1 of "unselected means noise". mask[i] = 1 keeps triple i; labels[i] = 1
/// marks ground-truth noise. F1 is 0 when precision + recall is 0.
double noise_detection_f1(std::span<const std::uint8_t> mask, std::span<const std::uint8_t> labels);

/// Best F1 over detectors "score < tau" for every distinct score value tau,
/// so lower scores read as noisier. The detector that flags everything is
/// not in the sweep; with 0/1 scores this equals the hard-mask F1.
double noise_detection_max_f1(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// F1 when exactly the drop_count lowest-scored triples (stable order on ties)
/// are flagged as noise.
double noise_detection_f1_at_count(std::span<const double> scores,
                                   std::span<const std::uint8_t> labels, std::size_t drop_count);

enum class RankFilter { Filtered, Raw };

struct RelationRanking {
  std::size_t queries = 0;
  double mrr = 0.0;
  double hits10 = 0.0;
};

struct RankingResult {
  double mrr = 0.0;
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  /// Two entries per test triple: head query, then tail query.
  std::vector<std::size_t> ranks;
  std::vector<RelationRanking> per_relation;
};

/// Ranks the true entity among all entity substitutions for the head and the
/// tail of every test triple. Filtered mode skips candidates that form any
/// other known positive. Ties count against the true entity:
/// rank = 1 + #(higher) + #(equal, other).
RankingResult link_prediction(const TripleScorer& scorer, const KnowledgeGraph& graph,
                              std::size_t threads = 1, RankFilter filter = RankFilter::Filtered);

struct ClassificationResult {
  double accuracy = 0.0;
  double global_threshold = 0.0;
  std::vector<double> thresholds;       // per relation; global for relations unseen in valid
  std::vector<std::uint8_t> has_own;    // 1 when the relation had its own validation data
};

/// A triple is called true when its score is above its relation's threshold.
/// Thresholds maximize validation accuracy over the midpoints of sorted
/// distinct validation scores plus one point below and one above the range;
/// the lowest best candidate wins ties.
ClassificationResult triple_classification(const TripleScorer& scorer, std::size_t num_relations,
                                           std::span<const ClassificationTriple> valid,
                                           std::span<const ClassificationTriple> test);

struct EvalReport {
  RankingResult ranking;
  bool has_ranking = false;
  double noise_f1 = 0.0;
  bool has_noise_f1 = false;
  std::string noise_f1_source;  // "mask" or "score-sweep"
  double classification_accuracy = 0.0;
  bool has_classification = false;
};

/// Report document; schema in docs/file_formats.md.
nlohmann::ordered_json to_json(const EvalReport& report, const KnowledgeGraph& graph);

}  // namespace rlkge
