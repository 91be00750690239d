#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rlkge/agent.hpp"
#include "rlkge/models.hpp"

namespace rlkge {

/// Byte layouts are documented in docs/file_formats.md. All integers and
/// floats are little-endian regardless of host order.

struct ModelCheckpoint {
  EmbeddingStore store;
  std::vector<std::string> entity_names;
  std::vector<std::string> relation_names;
};

void save_model(const std::filesystem::path& path, const EmbeddingStore& store,
                std::span<const std::string> entity_names,
                std::span<const std::string> relation_names);
ModelCheckpoint load_model(const std::filesystem::path& path);

struct PolicyCheckpoint {
  PolicyParams params;
  std::vector<std::uint32_t> cluster_of;
  std::size_t embedding_dim = 0;
};

void save_policy(const std::filesystem::path& path, const PolicyParams& params,
                 std::span<const std::uint32_t> cluster_of, std::size_t embedding_dim);
PolicyCheckpoint load_policy(const std::filesystem::path& path);

}  // namespace rlkge
