#include "rlkge/trainer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rlkge/errors.hpp"

namespace rlkge {

namespace {

std::vector<std::size_t> subsample(std::span<const std::size_t> positions, std::size_t cap,
                                   Rng& rng) {
  std::vector<std::size_t> out(positions.begin(), positions.end());
  if (out.size() <= cap) return out;
  // Partial Fisher-Yates: the first cap slots become a uniform subset.
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t j = i + rng.below(out.size() - i);
    std::swap(out[i], out[j]);
  }
  out.resize(cap);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Triple> gather(std::span<const Triple> train, std::span<const std::size_t> positions) {
  std::vector<Triple> out;
  out.reserve(positions.size());
  for (auto p : positions) out.push_back(train[p]);
  return out;
}

std::vector<RelationId> relation_order(const KnowledgeGraph& graph, Rng& rng) {
  std::vector<RelationId> order;
  for (RelationId r = 0; r < graph.num_relations(); ++r) {
    if (!graph.relation_positions(r).empty()) order.push_back(r);
  }
  rng.shuffle(std::span<RelationId>(order));
  return order;
}

}  // namespace

std::size_t capped_pretrain_epochs(const TrainConfig& cfg) {
  if (cfg.pretrain_epochs > TrainConfig::kMaxPretrainEpochs) {
    spdlog::warn("event=pretrain_epochs_clamped requested={} used={}", cfg.pretrain_epochs,
                 TrainConfig::kMaxPretrainEpochs);
    return TrainConfig::kMaxPretrainEpochs;
  }
  return cfg.pretrain_epochs;
}

double train_epoch(EmbeddingStore& store, const KnowledgeGraph& graph,
                   std::span<const Triple> triples, const AdamConfig& adam,
                   std::size_t batch_size, Rng& rng, std::size_t epoch_label) {
  if (triples.empty()) return 0.0;
  std::vector<Triple> order(triples.begin(), triples.end());
  rng.shuffle(std::span<Triple>(order));
  double total = 0.0;
  std::size_t fallbacks = 0;
  for (std::size_t begin = 0, batch = 0; begin < order.size(); begin += batch_size, ++batch) {
    const std::size_t end = std::min(order.size(), begin + batch_size);
    auto result = loss_and_grad(store, graph, std::span(order).subspan(begin, end - begin), rng);
    if (!std::isfinite(result.loss)) {
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch_label) + " batch " +
                         std::to_string(batch));
    }
    total += result.loss;
    fallbacks += result.fallbacks;
    adam_step(store, result.grads, adam);
  }
  if (fallbacks > 0) {
    spdlog::debug("event=negative_fallbacks epoch={} count={}", epoch_label, fallbacks);
  }
  return total / static_cast<double>(order.size());
}

PretrainResult pretrain_kge(const KnowledgeGraph& graph, const TrainConfig& cfg) {
  cfg.validate();
  PretrainResult out{init_embeddings(graph.num_entities(), graph.num_relations(), cfg.dim,
                                     cfg.model, derive_seed(cfg.seed, "kge-init")),
                     {}};
  const std::size_t epochs = capped_pretrain_epochs(cfg);
  Rng rng(derive_seed(cfg.seed, "kge-pretrain"));
  for (std::size_t e = 0; e < epochs; ++e) {
    out.loss_curve.push_back(
        train_epoch(out.store, graph, graph.train(), cfg.adam, cfg.batch_size, rng, e + 1));
  }
  if (!out.loss_curve.empty()) {
    spdlog::info("event=pretrain_kge model={} epochs={} first_loss={} last_loss={}",
                 to_string(cfg.model.kind), epochs, out.loss_curve.front(),
                 out.loss_curve.back());
  }
  return out;
}

void pretrain_agents(const KnowledgeGraph& graph, const EmbeddingStore& store,
                     PolicyParams& params, std::span<const std::uint32_t> cluster_of,
                     const TrainConfig& cfg) {
  const auto train = graph.train();
  for (std::size_t ep = 0; ep < cfg.agent_warmup_episodes; ++ep) {
    Rng rng(derive_seed(cfg.seed, "agent-warmup", ep));
    double reward_sum = 0.0;
    const auto order = relation_order(graph, rng);
    for (const auto r : order) {
      const auto positions = subsample(graph.relation_positions(r), cfg.subsample_cap, rng);
      const auto triples = gather(train, positions);
      const auto traj = sample_trajectory(params, cluster_of, store, r, triples, rng);
      const auto selected = gather(triples, traj.selected);
      const double reward = compute_reward(store, selected, triples, cfg.alpha);
      reward_sum += reward;
      reinforce_update(params, cluster_of, traj, reward, cfg.lambda1, cfg.lambda2, cfg.policy_lr);
    }
    spdlog::info("event=pretrain_agents episode={} mean_reward={}", ep + 1,
                 order.empty() ? 0.0 : reward_sum / static_cast<double>(order.size()));
  }
}

RelationClusters cluster_relations(const KnowledgeGraph& graph, const TrainConfig& cfg,
                                   const EmbeddingStore* transe_store) {
  if (transe_store && transe_store->model.kind == ModelKind::TransE) {
    return kmeans(transe_store->relations, cfg.clusters_k, derive_seed(cfg.seed, "kmeans"),
                  cfg.kmeans_max_iters);
  }
  TrainConfig transe_cfg = cfg;
  transe_cfg.model = ModelConfig{};
  transe_cfg.model.kind = ModelKind::TransE;
  transe_cfg.seed = derive_seed(cfg.seed, "cluster-transe");
  const auto pre = pretrain_kge(graph, transe_cfg);
  return kmeans(pre.store.relations, cfg.clusters_k, derive_seed(cfg.seed, "kmeans"),
                cfg.kmeans_max_iters);
}

JointResult joint_train(const KnowledgeGraph& graph, PolicyMode mode, const TrainConfig& cfg,
                        const RelationClusters* clusters) {
  cfg.validate();
  auto pre = pretrain_kge(graph, cfg);
  JointResult out;
  out.store = std::move(pre.store);
  out.pretrain_curve = std::move(pre.loss_curve);

  std::size_t num_clusters = 1;
  if (mode == PolicyMode::MTRL) {
    RelationClusters computed;
    if (!clusters) {
      computed = cluster_relations(graph, cfg, &out.store);
      clusters = &computed;
    }
    if (clusters->assignment.size() != graph.num_relations()) {
      throw UsageError("cluster assignment does not cover every relation");
    }
    out.cluster_of = clusters->assignment;
    num_clusters = clusters->k;
  } else {
    out.cluster_of.assign(graph.num_relations(), 0);
  }

  out.policy = make_policy(mode, num_clusters, graph.num_relations(), state_width(out.store));
  pretrain_agents(graph, out.store, out.policy, out.cluster_of, cfg);

  const auto train = graph.train();
  out.mask.assign(train.size(), 1);
  AdamConfig joint_adam = cfg.adam;
  joint_adam.lr = cfg.lr_extended;
  std::vector<Triple> working;

  for (std::size_t m = 0; m < cfg.episodes; ++m) {
    Rng policy_rng(derive_seed(cfg.seed, "joint-policy", m));
    Rng kge_rng(derive_seed(cfg.seed, "joint-kge", m));
    EpisodeStats stats;
    stats.episode = m + 1;
    const auto order = relation_order(graph, policy_rng);
    for (const auto r : order) {
      const auto positions = subsample(graph.relation_positions(r), cfg.subsample_cap, policy_rng);
      const auto triples = gather(train, positions);
      const auto traj =
          sample_trajectory(out.policy, out.cluster_of, out.store, r, triples, policy_rng);
      for (auto p : positions) out.mask[p] = 0;
      for (auto i : traj.selected) out.mask[positions[i]] = 1;

      working.clear();
      for (std::size_t i = 0; i < train.size(); ++i) {
        if (out.mask[i]) working.push_back(train[i]);
      }
      for (std::size_t e = 0; e < cfg.joint_epochs_per_visit; ++e) {
        stats.last_loss =
            train_epoch(out.store, graph, working, joint_adam, cfg.batch_size, kge_rng, m + 1);
      }

      const auto selected = gather(triples, traj.selected);
      const double reward = compute_reward(out.store, selected, triples, cfg.alpha);
      stats.mean_reward += reward;
      reinforce_update(out.policy, out.cluster_of, traj, reward, cfg.lambda1, cfg.lambda2,
                       cfg.policy_lr);
    }
    stats.kept = static_cast<std::size_t>(std::count(out.mask.begin(), out.mask.end(), 1));
    if (!order.empty()) stats.mean_reward /= static_cast<double>(order.size());
    spdlog::info("event=joint_episode mode={} episode={} kept={} of={} mean_reward={} loss={}",
                 to_string(mode), stats.episode, stats.kept, train.size(), stats.mean_reward,
                 stats.last_loss);
    out.episodes.push_back(stats);
  }
  return out;
}

XScoreResult xscore_baseline(const KnowledgeGraph& graph, double delta, const TrainConfig& cfg) {
  if (!(delta >= 0 && delta <= 1)) throw UsageError("delta must lie in [0, 1]");
  const auto train = graph.train();
  const auto drop = static_cast<std::size_t>(
      std::floor(delta * static_cast<double>(train.size()) + 1e-9));
  if (drop >= train.size()) throw UsageError("delta leaves no training triples");

  auto pre = pretrain_kge(graph, cfg);
  XScoreResult out;
  out.pretrain_curve = std::move(pre.loss_curve);
  out.pretrain_scores.reserve(train.size());
  for (const auto& t : train) out.pretrain_scores.push_back(score(pre.store, t));

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.pretrain_scores[a] < out.pretrain_scores[b];
  });
  out.mask.assign(train.size(), 1);
  for (std::size_t i = 0; i < drop; ++i) out.mask[order[i]] = 0;

  std::vector<Triple> survivors;
  survivors.reserve(train.size() - drop);
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (out.mask[i]) survivors.push_back(train[i]);
  }
  // Same seeds as pre-training, so delta = 0 reproduces plain training.
  out.store = init_embeddings(graph.num_entities(), graph.num_relations(), cfg.dim, cfg.model,
                              derive_seed(cfg.seed, "kge-init"));
  Rng rng(derive_seed(cfg.seed, "kge-pretrain"));
  const std::size_t epochs = capped_pretrain_epochs(cfg);
  for (std::size_t e = 0; e < epochs; ++e) {
    out.retrain_curve.push_back(
        train_epoch(out.store, graph, survivors, cfg.adam, cfg.batch_size, rng, e + 1));
  }
  spdlog::info("event=xscore delta={} dropped={} kept={}", delta, drop, survivors.size());
  return out;
}

}  // namespace rlkge
