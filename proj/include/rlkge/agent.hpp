#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "rlkge/graph.hpp"
#include "rlkge/models.hpp"
#include "rlkge/rng.hpp"

namespace rlkge {

/// STRL keeps the cluster-shared vectors at zero; MTRL trains them.
enum class PolicyMode : std::uint32_t { STRL = 0, MTRL = 1 };

std::string_view to_string(PolicyMode mode);

/// Logistic triple-selection policy for every relation. The weight used for
/// relation r is shared.row(cluster_of[r]) + specific.row(r).
struct PolicyParams {
  PolicyMode mode = PolicyMode::STRL;
  Matrix shared;    // clusters x state width
  Matrix specific;  // relations x state width

  std::size_t state_width() const { return specific.cols(); }
};

/// Zero-initialized parameters, so every first decision has probability 0.5.
PolicyParams make_policy(PolicyMode mode, std::size_t num_clusters, std::size_t num_relations,
                         std::size_t state_width);

/// Five blocks of the entity row width: 5*dim for real models, 10*dim for
/// RotatE, whose relation block is (cos theta, sin theta).
std::size_t state_width(const EmbeddingStore& store);

struct AgentState {
  std::vector<double> values;
};

/// relation ++ head ++ tail ++ selected-head mean ++ selected-tail mean.
AgentState build_state(const EmbeddingStore& store, RelationId r, const Triple& triple,
                       std::span<const double> head_mean, std::span<const double> tail_mean);

double policy_logit(const PolicyParams& params, std::span<const std::uint32_t> cluster_of,
                    RelationId r, std::span<const double> state);

/// P(select) = sigmoid(w_r . s).
double policy_prob(const PolicyParams& params, std::span<const std::uint32_t> cluster_of,
                   RelationId r, std::span<const double> state);

struct TrajectoryStep {
  AgentState state;
  std::uint8_t action = 0;
  double log_prob = 0.0;
};

struct Trajectory {
  RelationId relation = 0;
  std::vector<TrajectoryStep> steps;
  std::vector<std::size_t> order;     // input indices in visit order
  std::vector<std::size_t> selected;  // input indices chosen, in visit order
};

/// Visits triples in a shuffled order, drawing one Bernoulli action each.
/// Selected-head/tail means are updated only after an action of 1 and are
/// zero before the first selection.
Trajectory sample_trajectory(const PolicyParams& params, std::span<const std::uint32_t> cluster_of,
                             const EmbeddingStore& store, RelationId r,
                             std::span<const Triple> triples, Rng& rng);

/// Mean score of the selected triples plus alpha * |selected| / |full|; the
/// mean score of full when nothing was selected.
double compute_reward(const EmbeddingStore& store, std::span<const Triple> selected,
                      std::span<const Triple> full, double alpha);

struct PolicyGradient {
  std::uint32_t cluster = 0;
  std::vector<double> shared;    // empty in STRL mode
  std::vector<double> specific;
};

/// Ascent direction of reward * sum_t log pi(a_t|s_t) - lambda1 |u_c|^2 - lambda2 |v_r|^2.
PolicyGradient policy_gradient(const PolicyParams& params,
                               std::span<const std::uint32_t> cluster_of,
                               const Trajectory& trajectory, double reward, double lambda1,
                               double lambda2);

void reinforce_update(PolicyParams& params, std::span<const std::uint32_t> cluster_of,
                      const Trajectory& trajectory, double reward, double lambda1, double lambda2,
                      double lr);

}  // namespace rlkge
