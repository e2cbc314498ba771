#pragma once

#include <span>
#include <string>
#include <vector>

#include "codcl/temporal_graph.hpp"
#include "codcl/types.hpp"

namespace codcl {

enum class IntensityMode { kCumulative, kExponentialDecay };
enum class IndicatorStat { kCommonNeighbors, kIntensity };

enum class TreatmentKind {
  kDynamicInteraction,
  kCommonNeighbors,
  kDegreeSimilarity,
  kTemporalProximity,
  kActivitySynchrony,
  kInteractionFrequency,
  kKCoreTemporal,
};

std::string to_string(TreatmentKind kind);
TreatmentKind treatment_kind_from_string(const std::string& name);

struct TreatmentConfig {
  Time delta = 0.0;
  IntensityMode intensity_mode = IntensityMode::kCumulative;
  double lambda = 0.0;
  double percentile_p = 50.0;
  IndicatorStat indicator_stat = IndicatorStat::kCommonNeighbors;
  TreatmentKind kind = TreatmentKind::kDynamicInteraction;
  // Threshold the percentile of the intensity distribution even when the
  // gated indicator is the common-neighbor count (legacy combination).
  bool phi_threshold_compat = false;

  // Alternative-kind thresholds. Negative values are resolved from the
  // training data: proximity -> 10% of the graph's time span, frequency ->
  // median observed pair frequency over the training events.
  double degree_gap = 2.0;
  double proximity_threshold = -1.0;
  double frequency_threshold = -1.0;
  int core_order = 2;

  void validate() const;
};

/// Per-pair binary treatment together with the continuous statistic and the
/// threshold that produced it. For every kind, treatment == 1 iff
/// statistic >= threshold (sign conventions are arranged to keep this so).
struct TreatmentAssignment {
  NodeId u = 0;
  NodeId v = 0;
  Time query_time = 0.0;
  double statistic = 0.0;
  double threshold = 0.0;
  int treatment = 0;
};

/// Pair interaction intensity: weighted event count over the pair's full
/// history in `graph`, optionally decayed toward the dataset's last
/// timestamp. Zero when the pair never interacted.
double interaction_intensity(NodeId u, NodeId v, const TemporalGraph& graph,
                             const TreatmentConfig& config);

/// Nearest-rank percentile: ascending order statistic at ceil(p/100 * n).
double global_threshold(std::vector<double> statistics, double percentile_p);

/// The continuous statistic gated by the dynamic-interaction treatment:
/// windowed common-neighbor count by default, or the pair intensity.
double indicator_statistic(NodeId u, NodeId v, Time t, const TemporalGraph& graph,
                           const TreatmentConfig& config);

/// Dynamic-interaction binary treatment: 1 iff the indicator statistic at
/// (u, v, t) reaches theta (inclusive).
int binary_treatment(NodeId u, NodeId v, Time t, double theta,
                     const TemporalGraph& graph, const TreatmentConfig& config);

/// One of the six alternative treatment rules. `kind` must not be
/// kDynamicInteraction. Thresholds must already be resolved (non-negative);
/// use resolve_thresholds for data-dependent defaults.
int alternative_treatment(TreatmentKind kind, NodeId u, NodeId v, Time t,
                          const TemporalGraph& graph, const TreatmentConfig& config);

/// Fills data-dependent thresholds (proximity, frequency) from the training
/// graph and events. Returns a config with every threshold concrete.
TreatmentConfig resolve_thresholds(const TreatmentConfig& config,
                                   const TemporalGraph& graph,
                                   std::span<const TemporalEvent> training_events);

struct AssignResult {
  std::vector<TreatmentAssignment> assignments;
  double theta = 0.0;
  TreatmentConfig resolved;
};

/// Assigns a treatment to every training event. Statistics are computed at a
/// cutoff strictly below each event's own timestamp, so an event never feeds
/// its own assignment. For the dynamic-interaction kind, theta is the
/// percentile threshold over the training statistic distribution; other
/// kinds use their fixed (resolved) thresholds.
AssignResult assign_all(std::span<const TemporalEvent> training_events,
                        const TemporalGraph& training_graph,
                        const TreatmentConfig& config);

/// Statistic/threshold pair for any kind at (u, v, t); the treatment is
/// statistic >= threshold. `theta` is only consulted by the
/// dynamic-interaction kind.
std::pair<double, double> treatment_statistic(TreatmentKind kind, NodeId u, NodeId v,
                                              Time t, double theta,
                                              const TemporalGraph& graph,
                                              const TreatmentConfig& config);

/// A frozen treatment decision rule over one graph: T(u, v, t) in {0, 1}.
/// Copyable, cheap, safe for concurrent use.
class TreatmentRule {
 public:
  TreatmentRule(const TemporalGraph& graph, TreatmentConfig resolved_config, double theta)
      : graph_(&graph), config_(std::move(resolved_config)), theta_(theta) {}

  int operator()(NodeId u, NodeId v, Time t) const {
    auto [stat, thr] = treatment_statistic(config_.kind, u, v, t, theta_, *graph_, config_);
    return stat >= thr ? 1 : 0;
  }

  double theta() const { return theta_; }
  const TreatmentConfig& config() const { return config_; }
  const TemporalGraph& graph() const { return *graph_; }

 private:
  const TemporalGraph* graph_;
  TreatmentConfig config_;
  double theta_;
};

/// Nodes whose core number reaches `order` in the static snapshot of edges
/// with at least one event at or before t.
std::vector<bool> kcore_membership(const TemporalGraph& graph, Time t, int order);

}  // namespace codcl
