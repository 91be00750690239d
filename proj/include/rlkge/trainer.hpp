#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rlkge/agent.hpp"
#include "rlkge/clustering.hpp"
#include "rlkge/config.hpp"
#include "rlkge/graph.hpp"
#include "rlkge/models.hpp"

// Nothing in this header accepts noise labels: the trainer only ever sees a
// KnowledgeGraph, whose train split carries no ground truth.

namespace rlkge {

/// Pre-training epoch count after the 100-epoch cap (warns when clamping).
std::size_t capped_pretrain_epochs(const TrainConfig& cfg);

/// One shuffled pass of mini-batch loss_and_grad + adam_step over triples.
/// Returns the mean per-triple loss. Throws NumericError on a non-finite loss.
double train_epoch(EmbeddingStore& store, const KnowledgeGraph& graph,
                   std::span<const Triple> triples, const AdamConfig& adam,
                   std::size_t batch_size, Rng& rng, std::size_t epoch_label = 0);

struct PretrainResult {
  EmbeddingStore store;
  std::vector<double> loss_curve;  // mean loss per epoch
};

/// Fresh init followed by up to 100 epochs over graph.train().
PretrainResult pretrain_kge(const KnowledgeGraph& graph, const TrainConfig& cfg);

/// Warm-up episodes of trajectory/reward/REINFORCE per relation against a
/// frozen store.
void pretrain_agents(const KnowledgeGraph& graph, const EmbeddingStore& store,
                     PolicyParams& params, std::span<const std::uint32_t> cluster_of,
                     const TrainConfig& cfg);

/// k-means over TransE relation vectors. Uses store when it is a TransE
/// store, otherwise pre-trains a TransE model on graph first.
RelationClusters cluster_relations(const KnowledgeGraph& graph, const TrainConfig& cfg,
                                   const EmbeddingStore* transe_store = nullptr);

struct EpisodeStats {
  std::size_t episode = 0;
  std::size_t kept = 0;        // working-set size at episode end
  double mean_reward = 0.0;
  double last_loss = 0.0;      // mean loss of the episode's final KGE pass
};

struct JointResult {
  EmbeddingStore store;
  PolicyParams policy;
  std::vector<std::uint32_t> cluster_of;
  std::vector<std::uint8_t> mask;  // 1 = kept, aligned with graph.train()
  std::vector<double> pretrain_curve;
  std::vector<EpisodeStats> episodes;
};

/// Pre-trains the KGE model and the agents, then runs the episode loop: for
/// every relation (shuffled each episode) subsample to subsample_cap, select
/// with the policy, swap the relation's triples in the working set for the
/// selection, train the KGE model on the working set, reward, and update the
/// policy. Triples left out of a subsample keep their previous status.
/// MTRL needs clusters; when none are given they are computed with
/// cluster_relations from the pre-trained store.
JointResult joint_train(const KnowledgeGraph& graph, PolicyMode mode, const TrainConfig& cfg,
                        const RelationClusters* clusters = nullptr);

struct XScoreResult {
  EmbeddingStore store;
  std::vector<std::uint8_t> mask;
  std::vector<double> pretrain_scores;  // score of every train triple after pre-training
  std::vector<double> pretrain_curve;
  std::vector<double> retrain_curve;
};

/// Pre-trains, drops the floor(delta * n) lowest-scored train triples (stable
/// order on ties) and retrains from the same initialization on the rest.
XScoreResult xscore_baseline(const KnowledgeGraph& graph, double delta, const TrainConfig& cfg);

}  // namespace rlkge
