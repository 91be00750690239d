#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rlkge/graph.hpp"

namespace rlkge {

/// Ground-truth noise flags aligned with a graph's train() order. Kept apart
/// from KnowledgeGraph so nothing on the training path can read them.
struct NoiseLabels {
  std::vector<std::uint8_t> is_noise;

  std::size_t noise_count() const;
};

/// Per-relation lists of entities seen in the head and tail slot, distinct,
/// in first-appearance order.
class SlotSets {
 public:
  SlotSets(std::size_t num_relations, std::span<const Triple> triples);

  std::span<const EntityId> heads(RelationId r) const { return heads_.at(r); }
  std::span<const EntityId> tails(RelationId r) const { return tails_.at(r); }

 private:
  std::vector<std::vector<EntityId>> heads_;
  std::vector<std::vector<EntityId>> tails_;
};

struct InjectionResult {
  KnowledgeGraph graph;
  NoiseLabels labels;
  std::size_t target = 0;
  std::size_t injected = 0;
  std::size_t skipped = 0;
};

/// Adds floor(rate * |train|) slot-compatible corruptions of uniformly drawn
/// clean triples. Each corruption replaces the head or tail (fair coin) with
/// an entity seen in that slot for the same relation, and collides with no
/// known positive and no earlier corruption. A required triple that finds no
/// such corruption within max_attempts draws is skipped and counted. When
/// anything was injected the combined train split is shuffled so position
/// carries no label information.
InjectionResult inject_noise(const KnowledgeGraph& graph, double rate, std::uint64_t seed,
                             int max_attempts = 100);

struct ClassificationTriple {
  Triple triple;
  int label = 1;  // +1 true, -1 corrupted
};

struct ClassificationSets {
  std::vector<ClassificationTriple> valid;
  std::vector<ClassificationTriple> test;
  std::size_t skipped = 0;
};

/// One slot-compatible negative per valid/test triple, emitted as the pair
/// (positive, negative) in source order. Negatives avoid every known positive
/// and each other. Slot sets come from all three splits, so relations seen
/// only in held-out data can still be corrupted.
ClassificationSets make_classification_negatives(const KnowledgeGraph& graph, std::uint64_t seed,
                                                 int max_attempts = 100);

void write_noise_labels(const std::filesystem::path& path, const NoiseLabels& labels);
NoiseLabels read_noise_labels(const std::filesystem::path& path);

/// Lines `head<TAB>relation<TAB>tail<TAB>label` with label 1 or -1.
void write_classification(const std::filesystem::path& path,
                          std::span<const ClassificationTriple> items, const KnowledgeGraph& graph);
std::vector<ClassificationTriple> read_classification(const std::filesystem::path& path,
                                                      const KnowledgeGraph& graph);

}  // namespace rlkge
