#pragma once

#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <unistd.h>

#include "rlkge/graph.hpp"
#include "rlkge/rng.hpp"

namespace testutil {

using rlkge::EntityId;
using rlkge::RelationId;
using rlkge::Triple;

/// Graph over entities e0..e{ne-1} and relations r0..r{nr-1}, all interned
/// up front so ids equal indices.
inline rlkge::KnowledgeGraph id_graph(std::size_t ne, std::size_t nr, std::vector<Triple> train,
                                      std::vector<Triple> valid = {},
                                      std::vector<Triple> test = {}) {
  rlkge::Vocabulary ents, rels;
  for (std::size_t i = 0; i < ne; ++i) ents.intern("e" + std::to_string(i));
  for (std::size_t i = 0; i < nr; ++i) rels.intern("r" + std::to_string(i));
  return rlkge::KnowledgeGraph(std::move(ents), std::move(rels), std::move(train),
                               std::move(valid), std::move(test));
}

/// Hand-rolled generator: n distinct random triples split into train/valid/test.
inline rlkge::KnowledgeGraph random_graph(rlkge::Rng& rng, std::size_t ne, std::size_t nr,
                                          std::size_t n, std::size_t n_valid,
                                          std::size_t n_test) {
  std::unordered_set<Triple, rlkge::TripleHash> seen;
  std::vector<Triple> all;
  while (all.size() < n) {
    Triple t{static_cast<EntityId>(rng.below(ne)), static_cast<RelationId>(rng.below(nr)),
             static_cast<EntityId>(rng.below(ne))};
    if (seen.insert(t).second) all.push_back(t);
  }
  std::vector<Triple> test(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<Triple> valid(all.begin() + static_cast<std::ptrdiff_t>(n_test),
                            all.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid));
  std::vector<Triple> train(all.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid), all.end());
  return id_graph(ne, nr, std::move(train), std::move(valid), std::move(test));
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("rlkge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testutil
