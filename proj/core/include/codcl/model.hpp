#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "codcl/linalg.hpp"
#include "codcl/temporal_graph.hpp"
#include "codcl/types.hpp"

namespace codcl {

/// Shape of the reference backbone and predictor head. The backbone embeds a
/// node at a query time from its own features, the mean features of its most
/// recent neighbors, and a learnable cosine encoding of the recency gap; the
/// head maps edge representations to scalar logits through a residual layer
/// with batch normalization.
struct ModelConfig {
  std::size_t feature_dim = 0;       // node feature dimension d
  std::size_t time_dim = 16;         // time-encoding width
  std::size_t hidden_dim = 128;      // backbone hidden layer
  std::size_t embed_dim = 64;        // node/edge embedding dimension
  std::size_t recent_neighbors = 20; // neighbor events averaged per query
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;
  bool disable_time_encoding = false;

  std::size_t input_dim() const { return 2 * feature_dim + time_dim; }
  void validate() const;
};

struct TrainConfig {
  double alpha = 0.8;  // factual weight in the joint objective
  double tau = 1.0;    // contrastive temperature
  std::size_t batch_size = 200;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 1;
  int epochs = 50;
  int patience = 5;
  bool disable_counterfactual = false;  // ignore counterfactual pairs, alpha -> 1
  bool disable_time_encoding = false;
  bool disable_contrastive = false;  // score counterfactual pairs with a factual loss
  bool disable_similarity = false;   // counterfactuals drawn uniformly, not by argmax
  bool refresh_cf_per_epoch = false;

  void validate() const;
};

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  Vec data;
  std::size_t size() const { return data.size(); }
};

enum TensorId : int {
  kTimeFreq,
  kTimePhase,
  kBackboneW1,
  kBackboneB1,
  kBackboneW2,
  kBackboneB2,
  kHeadW1,
  kHeadB1,
  kHeadGamma,
  kHeadBeta,
  kHeadW2,
  kHeadB2,
  kTensorCount,
};

enum BufferId : int {
  kRunningMean,
  kRunningVar,
  kBufferCount,
};

/// All learnable tensors plus the normalization running statistics.
class ModelParameters {
 public:
  /// Seeded uniform fan-in initialization for weights, zero biases, unit
  /// normalization scale.
  static ModelParameters initialized(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  Tensor& tensor(TensorId id) { return tensors_[id]; }
  const Tensor& tensor(TensorId id) const { return tensors_[id]; }
  Tensor& buffer(BufferId id) { return buffers_[id]; }
  const Tensor& buffer(BufferId id) const { return buffers_[id]; }
  std::span<Tensor> tensors() { return tensors_; }
  std::span<const Tensor> tensors() const { return tensors_; }
  std::span<Tensor> buffers() { return buffers_; }
  std::span<const Tensor> buffers() const { return buffers_; }

  bool same_shapes(const ModelParameters& other) const;

 private:
  friend ModelParameters make_empty_parameters(const ModelConfig&);
  ModelParameters() = default;
  ModelConfig config_;
  std::vector<Tensor> tensors_;
  std::vector<Tensor> buffers_;
};

/// Zero-filled parameter set with the tensor layout for `config` (used by
/// checkpoint loading and tests).
ModelParameters make_empty_parameters(const ModelConfig& config);

/// Per-tensor gradients, same shapes as the learnable tensors.
struct Gradients {
  explicit Gradients(const ModelParameters& params);
  std::vector<Tensor> tensors;
  void zero();
};

/// One training instance: a factual event, its sampled negative destination,
/// and the counterfactual pair when the search found one.
struct TrainExample {
  NodeId u = 0;
  NodeId v = 0;
  Time t = 0.0;
  NodeId neg_v = 0;
  bool has_cf = false;
  NodeId cf_u = 0;
  NodeId cf_v = 0;
  bool cf_observed = false;
};

struct LossBreakdown {
  double factual = 0.0;
  double contrastive = 0.0;
  double total = 0.0;
};

/// Node embedding at query time t. History lookups are strict: only events
/// with timestamp < t contribute.
Vec embed(NodeId u, Time t, const TemporalGraph& graph, const ModelParameters& params);

/// Element-wise product of two embeddings; shared by factual, counterfactual
/// and negative pairs.
Vec edge_representation(std::span<const double> h_u, std::span<const double> h_v);

/// Predictor logit for one edge representation using evaluation-mode
/// normalization (running statistics), so the score is independent of batch
/// composition.
double predict_score(std::span<const double> z, const ModelParameters& params);

/// Mean over the batch of -[log sigma(s_pos) + log(1 - sigma(s_neg))].
double factual_loss(std::span<const double> pos_scores, std::span<const double> neg_scores);

struct ContrastiveItem {
  Vec z_pos;
  Vec z_cf;
  Vec z_neg;
  bool cf_observed = false;
};

/// Temperature-scaled contrastive objective over edge representations. The
/// anchor direction follows the counterfactual pair's observed state. Zero
/// for an empty batch.
double contrastive_loss(std::span<const ContrastiveItem> items, double tau);

/// alpha * factual + (1 - alpha) * contrastive.
double total_loss(double factual, double contrastive, double alpha);

/// Batch-mode statistics of the normalization layer for one training batch.
struct BatchNormStats {
  Vec mean;
  Vec var_unbiased;
  std::size_t rows = 0;
};

/// Joint loss of one batch in training mode (batch normalization statistics,
/// no side effects). Pure in the parameters, so it doubles as the reference
/// function for finite-difference checks.
LossBreakdown compute_loss(const ModelParameters& params, const TemporalGraph& graph,
                           std::span<const TrainExample> batch, const TrainConfig& config);

/// Same forward as compute_loss plus exact parameter gradients. When
/// `bn_stats` is given, the batch statistics of the normalization layer are
/// exported for the running-average update.
LossBreakdown compute_gradients(const ModelParameters& params, const TemporalGraph& graph,
                                std::span<const TrainExample> batch,
                                const TrainConfig& config, Gradients& out,
                                BatchNormStats* bn_stats = nullptr);

class AdamOptimizer {
 public:
  AdamOptimizer(const ModelParameters& params, const TrainConfig& config);
  void step(ModelParameters& params, const Gradients& grads);
  std::uint64_t steps_taken() const { return step_; }

 private:
  double rate_, beta1_, beta2_, epsilon_;
  std::uint64_t step_ = 0;
  std::vector<Vec> first_moment_;
  std::vector<Vec> second_moment_;
};

/// One descent step on the joint objective: gradients, running-statistics
/// update, Adam update. Returns the batch losses for logging.
LossBreakdown train_step(ModelParameters& params, AdamOptimizer& optimizer,
                         const TemporalGraph& graph, std::span<const TrainExample> batch,
                         const TrainConfig& config);

/// Numerically stable helpers shared with the loss implementations.
double sigmoid(double x);
double softplus(double x);

}  // namespace codcl
