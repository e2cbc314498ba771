#include "codcl/treatment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace codcl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Time window_start(Time t, Time delta) {
  return delta > 0.0 ? t - delta : -kInf;
}

}  // namespace

std::string to_string(TreatmentKind kind) {
  switch (kind) {
    case TreatmentKind::kDynamicInteraction: return "dynamic-interaction";
    case TreatmentKind::kCommonNeighbors: return "common-neighbors";
    case TreatmentKind::kDegreeSimilarity: return "degree-similarity";
    case TreatmentKind::kTemporalProximity: return "temporal-proximity";
    case TreatmentKind::kActivitySynchrony: return "activity-synchrony";
    case TreatmentKind::kInteractionFrequency: return "interaction-frequency";
    case TreatmentKind::kKCoreTemporal: return "k-core-temporal";
  }
  throw Error("unknown treatment kind");
}

TreatmentKind treatment_kind_from_string(const std::string& name) {
  for (int k = 0; k <= static_cast<int>(TreatmentKind::kKCoreTemporal); ++k) {
    if (to_string(static_cast<TreatmentKind>(k)) == name) {
      return static_cast<TreatmentKind>(k);
    }
  }
  throw ConfigError("unknown treatment kind: " + name);
}

void TreatmentConfig::validate() const {
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw ConfigError("treatment delta must be finite and >= 0");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("treatment lambda must be finite and >= 0");
  }
  if (!(percentile_p > 0.0 && percentile_p < 100.0)) {
    throw ConfigError("treatment percentile must lie in (0, 100)");
  }
  if (core_order < 1) throw ConfigError("core order must be >= 1");
}

double interaction_intensity(NodeId u, NodeId v, const TemporalGraph& graph,
                             const TreatmentConfig& config) {
  // Scan the smaller endpoint's index; the pair's event set is symmetric.
  const auto adj_u = graph.adjacency(u);
  const auto adj_v = graph.adjacency(v);
  const auto& adj = adj_u.size() <= adj_v.size() ? adj_u : adj_v;
  const NodeId other = adj_u.size() <= adj_v.size() ? v : u;
  const Time t_max = graph.t_max();
  double total = 0.0;
  for (const AdjacencyEntry& e : adj) {
    if (e.other != other) continue;
    const double w = graph.events()[e.event_index].weight;
    if (config.intensity_mode == IntensityMode::kExponentialDecay) {
      total += w * std::exp(-config.lambda * (t_max - e.timestamp));
    } else {
      total += w;
    }
  }
  return total;
}

double global_threshold(std::vector<double> statistics, double percentile_p) {
  if (statistics.empty()) throw Error("percentile of an empty multiset");
  if (!(percentile_p > 0.0 && percentile_p < 100.0)) {
    throw ConfigError("percentile must lie in (0, 100)");
  }
  for (double s : statistics) {
    if (std::isnan(s)) throw Error("percentile input contains NaN");
  }
  std::sort(statistics.begin(), statistics.end());
  const double n = static_cast<double>(statistics.size());
  auto rank = static_cast<std::size_t>(std::ceil(percentile_p * n / 100.0 - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, statistics.size());
  return statistics[rank - 1];
}

double indicator_statistic(NodeId u, NodeId v, Time t, const TemporalGraph& graph,
                           const TreatmentConfig& config) {
  if (config.indicator_stat == IndicatorStat::kIntensity) {
    return interaction_intensity(u, v, graph, config);
  }
  return static_cast<double>(graph.common_neighbor_count(u, v, t, config.delta));
}

int binary_treatment(NodeId u, NodeId v, Time t, double theta,
                     const TemporalGraph& graph, const TreatmentConfig& config) {
  return indicator_statistic(u, v, t, graph, config) >= theta ? 1 : 0;
}

std::vector<bool> kcore_membership(const TemporalGraph& graph, Time t, int order) {
  const std::size_t n = graph.num_nodes();
  // Deduplicated snapshot of pairs with at least one event at or before t.
  std::vector<std::vector<NodeId>> snapshot(n);
  for (NodeId u = 0; u < n; ++u) {
    snapshot[u] = graph.neighbors_window(u, t, 0.0);
  }
  std::vector<std::size_t> degree(n);
  std::vector<bool> alive(n, true);
  std::vector<NodeId> queue;
  for (NodeId u = 0; u < n; ++u) {
    degree[u] = snapshot[u].size();
    if (degree[u] < static_cast<std::size_t>(order)) {
      alive[u] = false;
      queue.push_back(u);
    }
  }
  while (!queue.empty()) {
    const NodeId u = queue.back();
    queue.pop_back();
    for (NodeId w : snapshot[u]) {
      if (!alive[w]) continue;
      if (--degree[w] < static_cast<std::size_t>(order)) {
        alive[w] = false;
        queue.push_back(w);
      }
    }
  }
  return alive;
}

std::pair<double, double> treatment_statistic(TreatmentKind kind, NodeId u, NodeId v,
                                              Time t, double theta,
                                              const TemporalGraph& graph,
                                              const TreatmentConfig& config) {
  switch (kind) {
    case TreatmentKind::kDynamicInteraction:
      return {indicator_statistic(u, v, t, graph, config), theta};

    case TreatmentKind::kCommonNeighbors:
      // Requires at least two shared neighbors before the query time.
      return {static_cast<double>(graph.common_neighbor_count(u, v, t, 0.0)), 2.0};

    case TreatmentKind::kDegreeSimilarity: {
      const double gap = std::abs(static_cast<double>(graph.degree_at(u, t)) -
                                  static_cast<double>(graph.degree_at(v, t)));
      return {-gap, -config.degree_gap};
    }

    case TreatmentKind::kTemporalProximity: {
      const auto last_u = graph.last_event_time(u, t);
      const auto last_v = graph.last_event_time(v, t);
      if (!last_u || !last_v) return {-kInf, -config.proximity_threshold};
      return {-std::abs(*last_u - *last_v), -config.proximity_threshold};
    }

    case TreatmentKind::kActivitySynchrony: {
      const Time lo = window_start(t, config.delta);
      const bool both = graph.node_active_in(u, lo, t) && graph.node_active_in(v, lo, t);
      return {both ? 1.0 : 0.0, 1.0};
    }

    case TreatmentKind::kInteractionFrequency: {
      const auto first = graph.first_pair_time(u, v, t);
      if (!first) return {-kInf, config.frequency_threshold};
      const std::size_t count = graph.pair_event_count(u, v, t);
      const Time span = t - *first;
      const double freq = span > 0.0 ? static_cast<double>(count) / span : kInf;
      return {freq, config.frequency_threshold};
    }

    case TreatmentKind::kKCoreTemporal: {
      const auto core = kcore_membership(graph, t, config.core_order);
      const bool both = core[u] && core[v];
      return {both ? 1.0 : 0.0, 1.0};
    }
  }
  throw Error("unknown treatment kind");
}

int alternative_treatment(TreatmentKind kind, NodeId u, NodeId v, Time t,
                          const TemporalGraph& graph, const TreatmentConfig& config) {
  if (kind == TreatmentKind::kDynamicInteraction) {
    throw Error("dynamic-interaction is not an alternative treatment kind");
  }
  if ((kind == TreatmentKind::kTemporalProximity && config.proximity_threshold < 0.0) ||
      (kind == TreatmentKind::kInteractionFrequency && config.frequency_threshold < 0.0)) {
    throw ConfigError("treatment threshold not resolved; call resolve_thresholds");
  }
  auto [stat, thr] = treatment_statistic(kind, u, v, t, 0.0, graph, config);
  return stat >= thr ? 1 : 0;
}

TreatmentConfig resolve_thresholds(const TreatmentConfig& config,
                                   const TemporalGraph& graph,
                                   std::span<const TemporalEvent> training_events) {
  TreatmentConfig resolved = config;
  if (resolved.proximity_threshold < 0.0) {
    resolved.proximity_threshold = 0.1 * graph.time_span();
  }
  if (resolved.frequency_threshold < 0.0) {
    // Median pair frequency over training events with an observable history.
    std::vector<double> freqs;
    for (const TemporalEvent& e : training_events) {
      const Time cutoff = strict_past_cutoff(e.timestamp);
      const auto first = graph.first_pair_time(e.src, e.dst, cutoff);
      if (!first) continue;
      const Time span = cutoff - *first;
      if (span <= 0.0) continue;
      freqs.push_back(static_cast<double>(graph.pair_event_count(e.src, e.dst, cutoff)) /
                      span);
    }
    resolved.frequency_threshold = freqs.empty() ? kInf : global_threshold(freqs, 50.0);
  }
  return resolved;
}

AssignResult assign_all(std::span<const TemporalEvent> training_events,
                        const TemporalGraph& training_graph,
                        const TreatmentConfig& config) {
  config.validate();
  AssignResult result;
  result.resolved = resolve_thresholds(config, training_graph, training_events);
  result.assignments.reserve(training_events.size());

  if (config.kind == TreatmentKind::kDynamicInteraction) {
    std::vector<double> stats;
    stats.reserve(training_events.size());
    for (const TemporalEvent& e : training_events) {
      stats.push_back(indicator_statistic(e.src, e.dst, strict_past_cutoff(e.timestamp),
                                          training_graph, result.resolved));
    }
    std::vector<double> theta_source;
    if (config.phi_threshold_compat &&
        config.indicator_stat == IndicatorStat::kCommonNeighbors) {
      theta_source.reserve(training_events.size());
      for (const TemporalEvent& e : training_events) {
        theta_source.push_back(
            interaction_intensity(e.src, e.dst, training_graph, result.resolved));
      }
    } else {
      theta_source = stats;
    }
    result.theta = global_threshold(std::move(theta_source), config.percentile_p);
    for (std::size_t i = 0; i < training_events.size(); ++i) {
      const TemporalEvent& e = training_events[i];
      result.assignments.push_back({e.src, e.dst, e.timestamp, stats[i], result.theta,
                                    stats[i] >= result.theta ? 1 : 0});
    }
    return result;
  }

  for (const TemporalEvent& e : training_events) {
    auto [stat, thr] =
        treatment_statistic(config.kind, e.src, e.dst, strict_past_cutoff(e.timestamp),
                            0.0, training_graph, result.resolved);
    result.assignments.push_back(
        {e.src, e.dst, e.timestamp, stat, thr, stat >= thr ? 1 : 0});
  }
  // For non-percentile kinds theta reports the kind's fixed threshold.
  result.theta = result.assignments.empty() ? 0.0 : result.assignments.front().threshold;
  return result;
}

}  // namespace codcl
