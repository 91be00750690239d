#include "rlkge/agent.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "rlkge/errors.hpp"

namespace rlkge {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log sigmoid(x) and log(1 - sigmoid(x)) without cancellation.
double log_sigmoid(double x) { return -(std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x)))); }

std::uint32_t cluster_for(const PolicyParams& params, std::span<const std::uint32_t> cluster_of,
                          RelationId r) {
  if (params.mode == PolicyMode::STRL) return 0;
  if (r >= cluster_of.size()) throw UsageError("relation has no cluster assignment");
  const auto c = cluster_of[r];
  if (c >= params.shared.rows()) throw UsageError("cluster id out of range");
  return c;
}

}  // namespace

std::string_view to_string(PolicyMode mode) { return mode == PolicyMode::STRL ? "strl" : "mtrl"; }

PolicyParams make_policy(PolicyMode mode, std::size_t num_clusters, std::size_t num_relations,
                         std::size_t state_width) {
  if (mode == PolicyMode::MTRL && num_clusters < 1) {
    throw UsageError("MTRL policy needs at least one cluster");
  }
  PolicyParams p;
  p.mode = mode;
  p.shared = Matrix(mode == PolicyMode::STRL ? 1 : num_clusters, state_width);
  p.specific = Matrix(num_relations, state_width);
  return p;
}

std::size_t state_width(const EmbeddingStore& store) { return 5 * store.entity_width(); }

AgentState build_state(const EmbeddingStore& store, RelationId r, const Triple& triple,
                       std::span<const double> head_mean, std::span<const double> tail_mean) {
  const std::size_t w = store.entity_width();
  if (head_mean.size() != w || tail_mean.size() != w) {
    throw UsageError("selected-mean width does not match the entity width");
  }
  AgentState s;
  s.values.reserve(5 * w);
  const auto rel = store.relations.row(r);
  if (store.model.kind == ModelKind::RotatE) {
    for (double theta : rel) s.values.push_back(std::cos(theta));
    for (double theta : rel) s.values.push_back(std::sin(theta));
  } else {
    s.values.insert(s.values.end(), rel.begin(), rel.end());
  }
  const auto h = store.entities.row(triple.head);
  const auto t = store.entities.row(triple.tail);
  s.values.insert(s.values.end(), h.begin(), h.end());
  s.values.insert(s.values.end(), t.begin(), t.end());
  s.values.insert(s.values.end(), head_mean.begin(), head_mean.end());
  s.values.insert(s.values.end(), tail_mean.begin(), tail_mean.end());
  return s;
}

double policy_logit(const PolicyParams& params, std::span<const std::uint32_t> cluster_of,
                    RelationId r, std::span<const double> state) {
  if (state.size() != params.state_width()) throw UsageError("state width mismatch");
  const auto v = params.specific.row(r);
  double z = 0.0;
  if (params.mode == PolicyMode::MTRL) {
    const auto u = params.shared.row(cluster_for(params, cluster_of, r));
    for (std::size_t i = 0; i < state.size(); ++i) z += (u[i] + v[i]) * state[i];
  } else {
    for (std::size_t i = 0; i < state.size(); ++i) z += v[i] * state[i];
  }
  return z;
}

double policy_prob(const PolicyParams& params, std::span<const std::uint32_t> cluster_of,
                   RelationId r, std::span<const double> state) {
  return sigmoid(policy_logit(params, cluster_of, r, state));
}

Trajectory sample_trajectory(const PolicyParams& params, std::span<const std::uint32_t> cluster_of,
                             const EmbeddingStore& store, RelationId r,
                             std::span<const Triple> triples, Rng& rng) {
  if (triples.empty()) throw UsageError("trajectory needs at least one triple");
  Trajectory traj;
  traj.relation = r;
  traj.order.resize(triples.size());
  std::iota(traj.order.begin(), traj.order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(traj.order));

  const std::size_t w = store.entity_width();
  std::vector<double> head_sum(w, 0.0), tail_sum(w, 0.0);
  std::vector<double> head_mean(w, 0.0), tail_mean(w, 0.0);
  std::size_t count = 0;
  traj.steps.reserve(triples.size());

  for (auto idx : traj.order) {
    const Triple& x = triples[idx];
    TrajectoryStep step;
    step.state = build_state(store, r, x, head_mean, tail_mean);
    const double z = policy_logit(params, cluster_of, r, step.state.values);
    const double p = sigmoid(z);
    step.action = rng.bernoulli(p) ? 1 : 0;
    step.log_prob = step.action ? log_sigmoid(z) : log_sigmoid(-z);
    if (step.action) {
      traj.selected.push_back(idx);
      ++count;
      const auto h = store.entities.row(x.head);
      const auto t = store.entities.row(x.tail);
      const double n = static_cast<double>(count);
      for (std::size_t i = 0; i < w; ++i) {
        head_sum[i] += h[i];
        tail_sum[i] += t[i];
        head_mean[i] = head_sum[i] / n;
        tail_mean[i] = tail_sum[i] / n;
      }
    }
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

double compute_reward(const EmbeddingStore& store, std::span<const Triple> selected,
                      std::span<const Triple> full, double alpha) {
  if (full.empty()) throw UsageError("reward needs a nonempty triple set");
  const auto mean_score = [&](std::span<const Triple> xs) {
    double sum = 0.0;
    for (const auto& x : xs) sum += score(store, x);
    return sum / static_cast<double>(xs.size());
  };
  if (selected.empty()) return mean_score(full);
  return mean_score(selected) +
         alpha * static_cast<double>(selected.size()) / static_cast<double>(full.size());
}

PolicyGradient policy_gradient(const PolicyParams& params,
                               std::span<const std::uint32_t> cluster_of,
                               const Trajectory& trajectory, double reward, double lambda1,
                               double lambda2) {
  const std::size_t width = params.state_width();
  const RelationId r = trajectory.relation;
  std::vector<double> g(width, 0.0);
  for (const auto& step : trajectory.steps) {
    const double p = policy_prob(params, cluster_of, r, step.state.values);
    const double coeff = reward * (static_cast<double>(step.action) - p);
    for (std::size_t i = 0; i < width; ++i) g[i] += coeff * step.state.values[i];
  }

  PolicyGradient out;
  const auto v = params.specific.row(r);
  out.specific.resize(width);
  for (std::size_t i = 0; i < width; ++i) out.specific[i] = g[i] - 2.0 * lambda2 * v[i];
  if (params.mode == PolicyMode::MTRL) {
    out.cluster = cluster_for(params, cluster_of, r);
    const auto u = params.shared.row(out.cluster);
    out.shared.resize(width);
    for (std::size_t i = 0; i < width; ++i) out.shared[i] = g[i] - 2.0 * lambda1 * u[i];
  }
  return out;
}

void reinforce_update(PolicyParams& params, std::span<const std::uint32_t> cluster_of,
                      const Trajectory& trajectory, double reward, double lambda1, double lambda2,
                      double lr) {
  if (trajectory.steps.empty()) throw UsageError("reinforce_update needs a nonempty trajectory");
  const auto grad = policy_gradient(params, cluster_of, trajectory, reward, lambda1, lambda2);
  const auto finite = [](const std::vector<double>& xs) {
    for (double x : xs) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  };
  if (!std::isfinite(reward) || !finite(grad.specific) || !finite(grad.shared)) {
    throw NumericError("non-finite policy update for relation " +
                       std::to_string(trajectory.relation));
  }
  auto v = params.specific.row(trajectory.relation);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += lr * grad.specific[i];
  if (params.mode == PolicyMode::MTRL) {
    auto u = params.shared.row(grad.cluster);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += lr * grad.shared[i];
  }
}

}  // namespace rlkge
