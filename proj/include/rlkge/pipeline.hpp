#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "rlkge/config.hpp"
#include "rlkge/graph.hpp"
#include "rlkge/noise.hpp"

namespace rlkge {

/// Rule-generated clean KG. Each entity gets a hidden latent vector and a
/// type; each relation gets a domain (several types), a range (fewer types)
/// and a hidden translation. Every domain entity h yields exactly one triple
/// (h, r, t) where t is the range entity nearest to latent(h) + shift(r).
struct SyntheticSpec {
  std::size_t entities = 200;
  std::size_t relations = 20;
  std::size_t types = 10;
  std::size_t latent_dim = 8;
  std::size_t domain_types = 8;
  std::size_t range_types = 2;
  double valid_fraction = 0.05;
  double test_fraction = 0.05;
};

KnowledgeGraph make_synthetic_graph(const SyntheticSpec& spec, std::uint64_t seed);

enum class TrainMode { Plain, STRL, MTRL, XScore };

TrainMode parse_train_mode(std::string_view name);
std::string_view to_string(TrainMode mode);

struct TrainSummary {
  std::size_t train_size = 0;
  std::size_t kept = 0;
};

/// Runs one training mode and writes into out_dir:
///   model.ckpt, policy.ckpt (strl/mtrl), clusters.tsv (mtrl), mask.txt,
///   curve.csv and config.effective.
/// An existing clusters assignment can be passed for mtrl.
TrainSummary train_to_dir(const KnowledgeGraph& graph, TrainMode mode, const TrainConfig& cfg,
                          const std::filesystem::path& out_dir,
                          const std::optional<std::filesystem::path>& clusters_file = std::nullopt);

struct EvaluateInputs {
  std::filesystem::path checkpoint;
  std::filesystem::path graph_dir;
  std::optional<std::filesystem::path> labels;  // one 0/1 per train line
  std::optional<std::filesystem::path> mask;    // one 0/1 per train line
  std::size_t threads = 1;
};

/// Filtered link prediction on the graph's test split, noise-detection F1
/// when labels are given (hard F1 with a mask, max-F1 score sweep without),
/// and triple classification when valid_classification.tsv and
/// test_classification.tsv exist in the graph directory.
nlohmann::ordered_json evaluate_checkpoint(const EvaluateInputs& inputs);

/// The synthetic-n1 protocol with an explicit configuration: per repeat, a
/// fresh synthetic graph, 10% injected noise, then plain, X-Score, STRL and
/// MTRL training on it. cfg.seed is ignored; seeds derive from seed.
nlohmann::ordered_json run_synthetic_experiment(const TrainConfig& cfg, std::uint64_t seed,
                                                std::size_t repeats = 3);

/// Runs the named preset end to end and returns the report. "synthetic-n1"
/// generates its own data and runs `repeats` seeds; dataset presets need
/// graph_dir (with train_noise_labels.txt when noise F1 is wanted).
nlohmann::ordered_json run_experiment(std::string_view preset, std::uint64_t seed,
                                      std::size_t threads,
                                      const std::optional<std::filesystem::path>& graph_dir,
                                      std::size_t repeats = 3);

}  // namespace rlkge
