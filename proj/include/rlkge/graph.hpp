#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace rlkge {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept {
    std::uint64_t x = (static_cast<std::uint64_t>(t.head) << 32) ^ t.tail;
    x ^= static_cast<std::uint64_t>(t.relation) * 0x9e3779b97f4a7c15ULL;
    x ^= x >> 29;
    x *= 0xbf58476d1ce4e5b9ULL;
    return static_cast<std::size_t>(x ^ (x >> 32));
  }
};

/// A triple plus its ground-truth noise flag. Only dataset construction and
/// evaluation see these; KnowledgeGraph stores bare triples.
struct LabeledTriple {
  Triple triple;
  bool is_noise = false;
};

/// String <-> dense id bijection. Ids are handed out in first-intern order.
class Vocabulary {
 public:
  std::uint32_t intern(std::string_view name);
  std::optional<std::uint32_t> find(std::string_view name) const;
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const noexcept { return names_.size(); }
  std::span<const std::string> names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

class PositiveIndex {
 public:
  void insert(const Triple& t) { set_.insert(t); }
  bool contains(const Triple& t) const { return set_.contains(t); }
  std::size_t size() const noexcept { return set_.size(); }

 private:
  std::unordered_set<Triple, TripleHash> set_;
};

struct LoadReport {
  std::size_t train_duplicates = 0;
  std::size_t valid_duplicates = 0;
  std::size_t test_duplicates = 0;
  // Vocabulary items first seen outside the training split.
  std::size_t unseen_entities = 0;
  std::size_t unseen_relations = 0;
};

/// Immutable dataset: vocabularies, three splits, and the index of every
/// known-positive triple (train, valid and test together).
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  KnowledgeGraph(Vocabulary entities, Vocabulary relations, std::vector<Triple> train,
                 std::vector<Triple> valid, std::vector<Triple> test);

  const Vocabulary& entities() const noexcept { return entities_; }
  const Vocabulary& relations() const noexcept { return relations_; }
  std::size_t num_entities() const noexcept { return entities_.size(); }
  std::size_t num_relations() const noexcept { return relations_.size(); }

  std::span<const Triple> train() const noexcept { return train_; }
  std::span<const Triple> valid() const noexcept { return valid_; }
  std::span<const Triple> test() const noexcept { return test_; }

  const PositiveIndex& positives() const noexcept { return positives_; }
  bool is_known_positive(const Triple& t) const { return positives_.contains(t); }

  /// Positions in train() of the triples with relation r, in stored order.
  std::span<const std::size_t> relation_positions(RelationId r) const;

  /// The training triples of relation r, in stored order.
  std::vector<Triple> triples_of_relation(RelationId r) const;

  /// Same vocabularies and held-out splits with a different training split.
  KnowledgeGraph with_train(std::vector<Triple> train) const;

 private:
  void build_indexes();

  Vocabulary entities_;
  Vocabulary relations_;
  std::vector<Triple> train_;
  std::vector<Triple> valid_;
  std::vector<Triple> test_;
  PositiveIndex positives_;
  std::vector<std::vector<std::size_t>> by_relation_;
};

/// Reads three `head<TAB>relation<TAB>tail` files. Ids are assigned by first
/// appearance in train, then valid, then test; within a line head comes
/// before tail. Duplicate lines within a split are dropped.
KnowledgeGraph load_graph(const std::filesystem::path& train_path,
                          const std::filesystem::path& valid_path,
                          const std::filesystem::path& test_path, LoadReport* report = nullptr);

/// load_graph on DIR/train.txt, DIR/valid.txt, DIR/test.txt.
KnowledgeGraph load_graph_dir(const std::filesystem::path& dir, LoadReport* report = nullptr);

void write_triples(const std::filesystem::path& path, std::span<const Triple> triples,
                   const KnowledgeGraph& graph);

/// Writes the three split files into dir using the standard file names.
void write_graph_dir(const std::filesystem::path& dir, const KnowledgeGraph& graph);

}  // namespace rlkge
