#include "rlkge/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rlkge/errors.hpp"

namespace rlkge {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

struct Scratch {
  std::vector<double> dh, dr, dt;
};

Scratch& scratch(std::size_t entity_width, std::size_t relation_width) {
  thread_local Scratch s;
  s.dh.assign(entity_width, 0.0);
  s.dt.assign(entity_width, 0.0);
  s.dr.assign(relation_width, 0.0);
  return s;
}

double transe(const EmbeddingStore& store, const Triple& x, double upstream, Gradients* grads) {
  const auto h = store.entities.row(x.head);
  const auto r = store.relations.row(x.relation);
  const auto t = store.entities.row(x.tail);
  const std::size_t d = h.size();
  double f = 0.0;
  if (store.model.norm == Norm::L1) {
    for (std::size_t i = 0; i < d; ++i) f -= std::abs(h[i] + r[i] - t[i]);
  } else {
    double sq = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double e = h[i] + r[i] - t[i];
      sq += e * e;
    }
    f = -std::sqrt(sq);
  }
  if (!grads) return f;

  auto& s = scratch(d, d);
  const double norm = -f;
  for (std::size_t i = 0; i < d; ++i) {
    const double e = h[i] + r[i] - t[i];
    double df_de = 0.0;
    if (store.model.norm == Norm::L1) {
      df_de = -sign(e);
    } else if (norm > 0) {
      df_de = -e / norm;
    }
    s.dh[i] = df_de;
    s.dr[i] = df_de;
    s.dt[i] = -df_de;
  }
  grads->entities.add(x.head, s.dh, upstream);
  grads->relations.add(x.relation, s.dr, upstream);
  grads->entities.add(x.tail, s.dt, upstream);
  return f;
}

double distmult(const EmbeddingStore& store, const Triple& x, double upstream, Gradients* grads) {
  const auto h = store.entities.row(x.head);
  const auto r = store.relations.row(x.relation);
  const auto t = store.entities.row(x.tail);
  const std::size_t d = h.size();
  double f = 0.0;
  for (std::size_t i = 0; i < d; ++i) f += h[i] * r[i] * t[i];
  if (!grads) return f;

  auto& s = scratch(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    s.dh[i] = r[i] * t[i];
    s.dr[i] = h[i] * t[i];
    s.dt[i] = h[i] * r[i];
  }
  grads->entities.add(x.head, s.dh, upstream);
  grads->relations.add(x.relation, s.dr, upstream);
  grads->entities.add(x.tail, s.dt, upstream);
  return f;
}

double rotate(const EmbeddingStore& store, const Triple& x, double upstream, Gradients* grads) {
  const auto h = store.entities.row(x.head);
  const auto phase = store.relations.row(x.relation);
  const auto t = store.entities.row(x.tail);
  const std::size_t d = phase.size();
  Scratch* s = grads ? &scratch(2 * d, d) : nullptr;
  double f = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double c = std::cos(phase[i]);
    const double sn = std::sin(phase[i]);
    const double hr = h[i], hi = h[d + i];
    const double a = hr * c - hi * sn - t[i];
    const double b = hr * sn + hi * c - t[d + i];
    const double m = std::hypot(a, b);
    f -= m;
    if (s && m > 0) {
      const double fa = -a / m;
      const double fb = -b / m;
      s->dh[i] = fa * c + fb * sn;
      s->dh[d + i] = -fa * sn + fb * c;
      s->dr[i] = fa * (-hr * sn - hi * c) + fb * (hr * c - hi * sn);
      s->dt[i] = -fa;
      s->dt[d + i] = -fb;
    }
  }
  if (s) {
    grads->entities.add(x.head, s->dh, upstream);
    grads->relations.add(x.relation, s->dr, upstream);
    grads->entities.add(x.tail, s->dt, upstream);
  }
  return f;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::TransE: return "transe";
    case ModelKind::DistMult: return "distmult";
    case ModelKind::RotatE: return "rotate";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "transe") return ModelKind::TransE;
  if (name == "distmult") return ModelKind::DistMult;
  if (name == "rotate") return ModelKind::RotatE;
  throw UsageError("unknown model '" + std::string(name) + "' (transe|distmult|rotate)");
}

void ModelConfig::validate() const {
  if (!(margin > 0)) throw UsageError("margin must be positive");
  if (!(eta > 0)) throw UsageError("eta must be positive");
  if (!(l2 >= 0)) throw UsageError("l2 must be non-negative");
  if (negatives < 1) throw UsageError("negatives must be at least 1");
  if (norm != Norm::L1 && norm != Norm::L2) throw UsageError("norm must be 1 or 2");
}

void AdamConfig::validate() const {
  if (!(lr > 0)) throw UsageError("learning rate must be positive");
  if (!(beta1 > 0 && beta1 < 1)) throw UsageError("beta1 must lie in (0, 1)");
  if (!(beta2 > 0 && beta2 < 1)) throw UsageError("beta2 must lie in (0, 1)");
  if (!(eps > 0)) throw UsageError("eps must be positive");
}

EmbeddingStore init_embeddings(std::size_t num_entities, std::size_t num_relations,
                               std::size_t dim, const ModelConfig& model, std::uint64_t seed) {
  if (dim < 1) throw UsageError("embedding dimension must be at least 1");
  model.validate();
  const bool complex = model.kind == ModelKind::RotatE;
  const std::size_t ew = complex ? 2 * dim : dim;

  EmbeddingStore store;
  store.model = model;
  store.dim = dim;
  store.entities = Matrix(num_entities, ew);
  store.relations = Matrix(num_relations, dim);
  store.entity_m = Matrix(num_entities, ew);
  store.entity_v = Matrix(num_entities, ew);
  store.relation_m = Matrix(num_relations, dim);
  store.relation_v = Matrix(num_relations, dim);

  Rng rng(seed);
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  for (auto& x : store.entities.data()) x = rng.uniform(-bound, bound);
  for (auto& x : store.relations.data()) {
    x = complex ? rng.uniform(0.0, kTwoPi) : rng.uniform(-bound, bound);
  }
  return store;
}

double score_with_grad(const EmbeddingStore& store, const Triple& triple, double upstream,
                       Gradients* grads) {
  switch (store.model.kind) {
    case ModelKind::TransE: return transe(store, triple, upstream, grads);
    case ModelKind::DistMult: return distmult(store, triple, upstream, grads);
    case ModelKind::RotatE: return rotate(store, triple, upstream, grads);
  }
  return 0.0;
}

double score(const EmbeddingStore& store, const Triple& triple) {
  return score_with_grad(store, triple, 0.0, nullptr);
}

void SparseRows::add(std::uint32_t id, std::span<const double> values, double scale) {
  auto [it, inserted] = slot_.try_emplace(id, ids_.size());
  if (inserted) {
    ids_.push_back(id);
    values_.resize(values_.size() + width_, 0.0);
  }
  double* dst = values_.data() + it->second * width_;
  for (std::size_t i = 0; i < width_; ++i) dst[i] += scale * values[i];
}

std::span<const double> SparseRows::find(std::uint32_t id) const {
  auto it = slot_.find(id);
  if (it == slot_.end()) return {};
  return values_at(it->second);
}

double batch_loss(const EmbeddingStore& store, std::span<const TrainingSample> samples,
                  Gradients* grads) {
  const auto& model = store.model;
  double loss = 0.0;
  for (const auto& sample : samples) {
    switch (model.kind) {
      case ModelKind::TransE: {
        const double fp = score(store, sample.positive);
        for (const auto& neg : sample.negatives) {
          const double z = score(store, neg) - fp + model.margin;
          if (z <= 0) continue;
          loss += z;
          if (grads) {
            score_with_grad(store, neg, 1.0, grads);
            score_with_grad(store, sample.positive, -1.0, grads);
          }
        }
        break;
      }
      case ModelKind::DistMult: {
        const double fp = score(store, sample.positive);
        loss += softplus(-fp);
        if (grads) score_with_grad(store, sample.positive, -sigmoid(-fp), grads);
        for (const auto& neg : sample.negatives) {
          const double fn = score(store, neg);
          loss += softplus(fn);
          if (grads) score_with_grad(store, neg, sigmoid(fn), grads);
        }
        break;
      }
      case ModelKind::RotatE: {
        const double fp = score(store, sample.positive);
        loss += softplus(-(model.eta + fp));
        if (grads) score_with_grad(store, sample.positive, -sigmoid(-(model.eta + fp)), grads);
        if (sample.negatives.empty()) break;
        const double inv_k = 1.0 / static_cast<double>(sample.negatives.size());
        for (const auto& neg : sample.negatives) {
          const double fn = score(store, neg);
          loss += inv_k * softplus(fn + model.eta);
          if (grads) score_with_grad(store, neg, inv_k * sigmoid(fn + model.eta), grads);
        }
        break;
      }
    }
  }

  if (model.kind == ModelKind::DistMult && model.l2 > 0) {
    std::vector<std::uint32_t> ents;
    std::vector<std::uint32_t> rels;
    for (const auto& sample : samples) {
      ents.push_back(sample.positive.head);
      ents.push_back(sample.positive.tail);
      rels.push_back(sample.positive.relation);
      for (const auto& neg : sample.negatives) {
        ents.push_back(neg.head);
        ents.push_back(neg.tail);
        rels.push_back(neg.relation);
      }
    }
    std::sort(ents.begin(), ents.end());
    ents.erase(std::unique(ents.begin(), ents.end()), ents.end());
    std::sort(rels.begin(), rels.end());
    rels.erase(std::unique(rels.begin(), rels.end()), rels.end());
    const auto penalize = [&](const Matrix& m, std::span<const std::uint32_t> ids,
                              SparseRows* dst) {
      for (auto id : ids) {
        const auto row = m.row(id);
        double sq = 0.0;
        for (double v : row) sq += v * v;
        loss += model.l2 * sq;
        if (dst) dst->add(id, row, 2.0 * model.l2);
      }
    };
    penalize(store.entities, ents, grads ? &grads->entities : nullptr);
    penalize(store.relations, rels, grads ? &grads->relations : nullptr);
  }
  return loss;
}

NegativeDraw sample_negative(const KnowledgeGraph& graph, const Triple& triple, Rng& rng,
                             int max_resamples) {
  const std::size_t n = graph.num_entities();
  if (n < 2) throw UsageError("negative sampling needs at least 2 entities");
  NegativeDraw draw;
  for (int attempt = 0; attempt <= max_resamples; ++attempt) {
    draw.triple = triple;
    EntityId& slot = rng.coin() ? draw.triple.head : draw.triple.tail;
    auto e = static_cast<EntityId>(rng.below(n - 1));
    if (e >= slot) ++e;
    slot = e;
    if (!graph.is_known_positive(draw.triple)) return draw;
  }
  draw.fell_back = true;
  return draw;
}

LossResult loss_and_grad(const EmbeddingStore& store, const KnowledgeGraph& graph,
                         std::span<const Triple> positives, Rng& rng) {
  if (positives.empty()) throw UsageError("loss_and_grad needs at least one positive");
  const int k = store.model.negatives_per_positive();
  std::vector<TrainingSample> samples(positives.size());
  LossResult result{0.0, Gradients::for_store(store), 0};
  for (std::size_t i = 0; i < positives.size(); ++i) {
    samples[i].positive = positives[i];
    samples[i].negatives.reserve(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
      auto draw = sample_negative(graph, positives[i], rng);
      if (draw.fell_back) ++result.fallbacks;
      samples[i].negatives.push_back(draw.triple);
    }
  }
  result.loss = batch_loss(store, samples, &result.grads);
  return result;
}

namespace {

void check_finite(const SparseRows& rows, const char* what) {
  for (std::size_t s = 0; s < rows.size(); ++s) {
    for (double g : rows.values_at(s)) {
      if (!std::isfinite(g)) {
        throw NumericError(std::string("non-finite gradient in ") + what + " row " +
                           std::to_string(rows.id_at(s)));
      }
    }
  }
}

void apply(Matrix& params, Matrix& m, Matrix& v, const SparseRows& rows, const AdamConfig& cfg,
           double c1, double c2, bool wrap_phase, const char* what) {
  for (std::size_t s = 0; s < rows.size(); ++s) {
    const auto id = rows.id_at(s);
    const auto g = rows.values_at(s);
    auto p = params.row(id);
    auto mr = m.row(id);
    auto vr = v.row(id);
    for (std::size_t j = 0; j < g.size(); ++j) {
      mr[j] = cfg.beta1 * mr[j] + (1.0 - cfg.beta1) * g[j];
      vr[j] = cfg.beta2 * vr[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      p[j] -= cfg.lr * (mr[j] / c1) / (std::sqrt(vr[j] / c2) + cfg.eps);
      if (wrap_phase) {
        p[j] = std::fmod(p[j], kTwoPi);
        if (p[j] < 0) p[j] += kTwoPi;
        if (p[j] >= kTwoPi) p[j] = 0.0;
      }
      if (!std::isfinite(p[j])) {
        throw NumericError(std::string("non-finite parameter in ") + what + " row " +
                           std::to_string(id));
      }
    }
  }
}

}  // namespace

void adam_step(EmbeddingStore& store, const Gradients& grads, const AdamConfig& config) {
  check_finite(grads.entities, "entity");
  check_finite(grads.relations, "relation");
  ++store.step;
  const double t = static_cast<double>(store.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  apply(store.entities, store.entity_m, store.entity_v, grads.entities, config, c1, c2, false,
        "entity");
  apply(store.relations, store.relation_m, store.relation_v, grads.relations, config, c1, c2,
        store.model.kind == ModelKind::RotatE, "relation");
}

}  // namespace rlkge
