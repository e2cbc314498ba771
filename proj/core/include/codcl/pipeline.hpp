#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "codcl/cfsearch.hpp"
#include "codcl/metrics.hpp"
#include "codcl/model.hpp"
#include "codcl/splits.hpp"
#include "codcl/synthetic.hpp"
#include "codcl/temporal_graph.hpp"
#include "codcl/treatment.hpp"

namespace codcl {

/// Everything a full run needs: split policy, treatment and search settings,
/// model shape, training schedule and evaluation protocol.
struct PipelineConfig {
  SplitRatios split;
  TreatmentConfig treatment;
  CfSearchConfig search;
  ModelConfig model;
  TrainConfig train;
  double inductive_fraction = 0.1;
  std::uint64_t negatives_seed = 999;
  std::vector<std::uint64_t> seeds = {1};
  std::size_t workers = 0;

  void validate() const;
};

struct SettingMetrics {
  bool applicable = false;
  double ap = 0.0;
  double auc = 0.0;
  std::size_t positives = 0;
};

struct StageSeconds {
  double split = 0.0;
  double treat = 0.0;
  double augment = 0.0;
  double train = 0.0;
  double evaluate = 0.0;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  SettingMetrics transductive;
  SettingMetrics inductive;
  double coverage = 0.0;
  double mean_similarity = 0.0;
  double theta = 0.0;
  int epochs_run = 0;
  double best_val_ap = 0.0;
  StageSeconds seconds;
};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single seed
};

struct EvalReport {
  std::vector<SeedOutcome> per_seed;

  MetricSummary transductive_ap() const;
  MetricSummary transductive_auc() const;
  MetricSummary inductive_ap() const;
  MetricSummary inductive_auc() const;
  MetricSummary coverage() const;

  /// Canonical key: value serialization. Stage timings are only included on
  /// request; artifact files omit them so equal-seed runs stay bitwise equal.
  std::string to_text(bool include_timings = false) const;
  /// One JSON record per (seed, setting).
  std::string to_json_lines() const;
};

/// Derived one-hot degree-bucket features (8 log-spaced buckets) for graphs
/// whose dataset provides no node features. Must be given the training-split
/// graph so the derived features depend on training data only.
std::vector<double> degree_bucket_features(const TemporalGraph& train_graph,
                                           std::size_t* feature_dim);

/// Split, mask, and training-split graph with node features attached. The
/// `featured` graph carries the full event set for evaluation-time history.
struct DataContext {
  TemporalGraph featured;
  SplitResult split;
  std::vector<NodeId> mask;
  std::vector<TemporalEvent> train_events;  // mask-filtered
  TemporalGraph train_graph;
};

DataContext prepare_data(const TemporalGraph& raw, const PipelineConfig& config,
                         std::uint64_t seed);

struct EpochLog {
  int epoch = 0;
  double factual = 0.0;
  double contrastive = 0.0;
  double total = 0.0;
  double val_ap = 0.0;
};

struct TrainedModel {
  ModelParameters params;
  int epochs_run = 0;
  double best_val_ap = 0.0;
  std::vector<EpochLog> log;
};

/// Full training loop with per-epoch validation AP and early stopping.
/// Counterfactual assignments are consumed positionally (one per training
/// event). `rule` and `projector` are only consulted when counterfactual
/// pairs are refreshed each epoch.
TrainedModel train_model(const DataContext& data, const AugmentResult& augmentation,
                         const PipelineConfig& config, std::uint64_t seed,
                         const TreatmentRule* rule = nullptr,
                         const ContextProjector* projector = nullptr);

/// Positive scores for the given events plus one sampled negative each;
/// scores/labels are ordered positives-first, then negatives.
struct ScoredEvents {
  std::vector<double> scores;
  std::vector<int> labels;
};
ScoredEvents score_events(const ModelParameters& params, const TemporalGraph& graph,
                          std::span<const TemporalEvent> events,
                          std::uint64_t negatives_seed, std::size_t workers);

/// Test-split evaluation under both protocols: transductive test events
/// connect nodes seen in the surviving training events, inductive test events
/// touch at least one masked node. Fills the corresponding outcome fields.
void evaluate_test(const ModelParameters& params, const DataContext& data,
                   const PipelineConfig& config, SeedOutcome& outcome);

/// One full run at one seed: prepare, treat, augment, train, evaluate.
SeedOutcome run_single(const TemporalGraph& raw, const PipelineConfig& config,
                       std::uint64_t seed);

/// Multi-seed experiment; aggregates are reported as mean +/- stddev.
EvalReport run_experiment(const TemporalGraph& raw, const PipelineConfig& config);

}  // namespace codcl
