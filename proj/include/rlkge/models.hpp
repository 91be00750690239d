#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rlkge/graph.hpp"
#include "rlkge/rng.hpp"

namespace rlkge {

enum class ModelKind : std::uint32_t { TransE = 0, DistMult = 1, RotatE = 2 };
enum class Norm : std::uint32_t { L1 = 1, L2 = 2 };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelConfig {
  ModelKind kind = ModelKind::TransE;
  Norm norm = Norm::L1;    // TransE distance
  double margin = 1.0;     // TransE hinge margin
  double l2 = 1e-5;        // DistMult regularizer weight
  double eta = 5.0;        // RotatE margin
  int negatives = 10;      // per positive for DistMult and RotatE; TransE always uses 1

  int negatives_per_positive() const { return kind == ModelKind::TransE ? 1 : negatives; }
  void validate() const;
};

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Entity/relation parameters plus Adam state.
///
/// TransE and DistMult rows are real vectors of width dim. RotatE entity
/// rows hold a complex vector as [re_0..re_{d-1}, im_0..im_{d-1}] (width
/// 2*dim) and relation rows hold phases in [0, 2*pi), so every relation
/// coefficient has modulus exactly 1.
struct EmbeddingStore {
  ModelConfig model;
  std::size_t dim = 0;
  Matrix entities;
  Matrix relations;
  Matrix entity_m, entity_v;
  Matrix relation_m, relation_v;
  std::uint64_t step = 0;

  std::size_t entity_width() const { return entities.cols(); }
  std::size_t relation_width() const { return relations.cols(); }
};

EmbeddingStore init_embeddings(std::size_t num_entities, std::size_t num_relations,
                               std::size_t dim, const ModelConfig& model, std::uint64_t seed);

double score(const EmbeddingStore& store, const Triple& triple);

/// Gradient rows keyed by parameter row id, in first-touch order.
class SparseRows {
 public:
  explicit SparseRows(std::size_t width = 0) : width_(width) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::uint32_t id_at(std::size_t slot) const { return ids_[slot]; }
  std::span<const double> values_at(std::size_t slot) const {
    return {values_.data() + slot * width_, width_};
  }

  /// row(id) += scale * values.
  void add(std::uint32_t id, std::span<const double> values, double scale = 1.0);

  /// Empty span when id was never touched.
  std::span<const double> find(std::uint32_t id) const;

 private:
  std::size_t width_;
  std::vector<std::uint32_t> ids_;
  std::vector<double> values_;
  std::unordered_map<std::uint32_t, std::size_t> slot_;
};

struct Gradients {
  SparseRows entities;
  SparseRows relations;

  static Gradients for_store(const EmbeddingStore& store) {
    return {SparseRows(store.entity_width()), SparseRows(store.relation_width())};
  }
};

/// Score of triple; when grads is set, adds upstream * d(score)/d(params).
/// Nondifferentiable points (|x| at 0, a zero-length residual) get subgradient 0.
double score_with_grad(const EmbeddingStore& store, const Triple& triple, double upstream,
                       Gradients* grads);

/// A positive with the corruptions drawn for it.
struct TrainingSample {
  Triple positive;
  std::vector<Triple> negatives;
};

/// Loss summed over samples, with gradients when grads is set.
///   TransE:   sum [f(neg) - f(pos) + margin]_+
///   DistMult: sum softplus(-f(pos)) + sum softplus(f(neg))
///             + l2 * (sum of squared norms of the distinct rows touched)
///   RotatE:   sum -log sigma(eta + f(pos)) - (1/k) sum log sigma(-eta - f(neg))
double batch_loss(const EmbeddingStore& store, std::span<const TrainingSample> samples,
                  Gradients* grads);

struct NegativeDraw {
  Triple triple;
  bool fell_back = false;  // every draw was a known positive
};

/// Replaces head or tail (fair coin) with a uniformly drawn different entity;
/// redraws up to max_resamples times while the result is a known positive,
/// then keeps the last draw.
NegativeDraw sample_negative(const KnowledgeGraph& graph, const Triple& triple, Rng& rng,
                             int max_resamples = 10);

struct LossResult {
  double loss = 0.0;
  Gradients grads;
  std::size_t fallbacks = 0;
};

LossResult loss_and_grad(const EmbeddingStore& store, const KnowledgeGraph& graph,
                         std::span<const Triple> positives, Rng& rng);

/// Bias-corrected Adam on the touched rows only. Throws NumericError naming
/// the row when a gradient or updated parameter is not finite.
void adam_step(EmbeddingStore& store, const Gradients& grads, const AdamConfig& config);

}  // namespace rlkge
