#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rlkge/models.hpp"

namespace rlkge {

/// Every knob of a training run. Defaults are the tuned values reported for
/// TransE on FB15k-237 style data; presets override them per dataset family.
struct TrainConfig {
  ModelConfig model;
  std::size_t dim = 100;
  AdamConfig adam;                    // pre-training and plain training
  double lr_extended = 0.0005;        // KGE updates inside the joint loop
  std::size_t batch_size = 1024;
  std::size_t pretrain_epochs = 100;  // clamped to kMaxPretrainEpochs

  double alpha = 0.05;
  double lambda1 = 0.001;
  double lambda2 = 0.01;
  double policy_lr = 0.001;
  std::size_t agent_warmup_episodes = 5;
  std::size_t episodes = 15;
  std::size_t subsample_cap = 5000;
  std::size_t joint_epochs_per_visit = 1;

  std::size_t clusters_k = 120;
  std::size_t kmeans_max_iters = 100;
  double delta = 0.1;

  std::uint64_t seed = 0;
  std::size_t threads = 1;

  static constexpr std::size_t kMaxPretrainEpochs = 100;

  void validate() const;

  /// Sets one documented key from its text form; throws UsageError for
  /// unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);

  /// Effective configuration as ordered (key, value) pairs.
  std::vector<std::pair<std::string, std::string>> entries() const;

  std::string to_text() const;
};

/// Applies `key = value` lines; '#' starts a comment.
void apply_config_text(TrainConfig& cfg, std::string_view text, std::string_view origin = "config");
void apply_config_file(TrainConfig& cfg, const std::filesystem::path& path);
void write_config_file(const std::filesystem::path& path, const TrainConfig& cfg);

/// Names accepted by preset_config.
std::vector<std::string> preset_names();

/// Tuned hyperparameters for `<dataset>-<noise>-<model>`, e.g.
/// "fb15k-237-n1-transe" or "wn18rr-n3-rotate", plus "synthetic-n1".
TrainConfig preset_config(std::string_view name);

}  // namespace rlkge
