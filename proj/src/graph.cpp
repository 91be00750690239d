#include "rlkge/graph.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <utility>

#include "rlkge/errors.hpp"

namespace rlkge {

std::uint32_t Vocabulary::intern(std::string_view name) {
  auto it = ids_.find(std::string(name));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

KnowledgeGraph::KnowledgeGraph(Vocabulary entities, Vocabulary relations,
                               std::vector<Triple> train, std::vector<Triple> valid,
                               std::vector<Triple> test)
    : entities_(std::move(entities)),
      relations_(std::move(relations)),
      train_(std::move(train)),
      valid_(std::move(valid)),
      test_(std::move(test)) {
  build_indexes();
}

void KnowledgeGraph::build_indexes() {
  const auto check = [this](const Triple& t) {
    if (t.head >= entities_.size() || t.tail >= entities_.size() ||
        t.relation >= relations_.size()) {
      throw DataError("triple id out of vocabulary range");
    }
  };
  by_relation_.assign(relations_.size(), {});
  for (std::size_t i = 0; i < train_.size(); ++i) {
    check(train_[i]);
    by_relation_[train_[i].relation].push_back(i);
    positives_.insert(train_[i]);
  }
  for (const auto& t : valid_) {
    check(t);
    positives_.insert(t);
  }
  for (const auto& t : test_) {
    check(t);
    positives_.insert(t);
  }
}

std::span<const std::size_t> KnowledgeGraph::relation_positions(RelationId r) const {
  return by_relation_.at(r);
}

std::vector<Triple> KnowledgeGraph::triples_of_relation(RelationId r) const {
  std::vector<Triple> out;
  const auto positions = relation_positions(r);
  out.reserve(positions.size());
  for (auto i : positions) out.push_back(train_[i]);
  return out;
}

KnowledgeGraph KnowledgeGraph::with_train(std::vector<Triple> train) const {
  return KnowledgeGraph(entities_, relations_, std::move(train), valid_, test_);
}

namespace {

struct SplitReader {
  Vocabulary& entities;
  Vocabulary& relations;

  std::vector<Triple> read(const std::filesystem::path& path, std::size_t& duplicates,
                           std::size_t* new_entities, std::size_t* new_relations) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<Triple> out;
    std::unordered_set<Triple, TripleHash> seen;
    std::string line;
    std::size_t lineno = 0;
    duplicates = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto t1 = line.find('\t');
      const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
      if (t1 == std::string::npos || t2 == std::string::npos ||
          line.find('\t', t2 + 1) != std::string::npos) {
        throw ParseError(path.string(), lineno, "expected 3 tab-separated fields");
      }
      std::string_view view(line);
      const auto h = view.substr(0, t1);
      const auto r = view.substr(t1 + 1, t2 - t1 - 1);
      const auto t = view.substr(t2 + 1);
      if (h.empty() || r.empty() || t.empty()) {
        throw ParseError(path.string(), lineno, "empty field");
      }
      const auto before_e = entities.size();
      const auto before_r = relations.size();
      Triple triple{entities.intern(h), relations.intern(r), entities.intern(t)};
      if (new_entities) *new_entities += entities.size() - before_e;
      if (new_relations) *new_relations += relations.size() - before_r;
      if (!seen.insert(triple).second) {
        ++duplicates;
        continue;
      }
      out.push_back(triple);
    }
    return out;
  }
};

}  // namespace

KnowledgeGraph load_graph(const std::filesystem::path& train_path,
                          const std::filesystem::path& valid_path,
                          const std::filesystem::path& test_path, LoadReport* report) {
  Vocabulary entities;
  Vocabulary relations;
  SplitReader reader{entities, relations};
  LoadReport local;
  auto train = reader.read(train_path, local.train_duplicates, nullptr, nullptr);
  auto valid = reader.read(valid_path, local.valid_duplicates, &local.unseen_entities,
                           &local.unseen_relations);
  auto test = reader.read(test_path, local.test_duplicates, &local.unseen_entities,
                          &local.unseen_relations);

  spdlog::info("event=load_graph entities={} relations={} train={} valid={} test={}",
               entities.size(), relations.size(), train.size(), valid.size(), test.size());
  spdlog::info(
      "event=load_report train_duplicates={} valid_duplicates={} test_duplicates={} "
      "heldout_only_entities={} heldout_only_relations={}",
      local.train_duplicates, local.valid_duplicates, local.test_duplicates,
      local.unseen_entities, local.unseen_relations);
  if (report) *report = local;
  return KnowledgeGraph(std::move(entities), std::move(relations), std::move(train),
                        std::move(valid), std::move(test));
}

KnowledgeGraph load_graph_dir(const std::filesystem::path& dir, LoadReport* report) {
  return load_graph(dir / "train.txt", dir / "valid.txt", dir / "test.txt", report);
}

void write_triples(const std::filesystem::path& path, std::span<const Triple> triples,
                   const KnowledgeGraph& graph) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& t : triples) {
    out << graph.entities().name(t.head) << '\t' << graph.relations().name(t.relation) << '\t'
        << graph.entities().name(t.tail) << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

void write_graph_dir(const std::filesystem::path& dir, const KnowledgeGraph& graph) {
  std::filesystem::create_directories(dir);
  write_triples(dir / "train.txt", graph.train(), graph);
  write_triples(dir / "valid.txt", graph.valid(), graph);
  write_triples(dir / "test.txt", graph.test(), graph);
}

}  // namespace rlkge
