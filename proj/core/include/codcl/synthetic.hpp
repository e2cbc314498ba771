#pragma once

#include <cstdint>
#include <vector>

#include "codcl/temporal_graph.hpp"
#include "codcl/types.hpp"

namespace codcl {

/// Planted-treatment event generator: community-biased candidate pairs arrive
/// over time and are thinned so that pairs whose live common-neighbor count
/// reaches the planted threshold link with probability multiplied by
/// exp(effect).
struct SyntheticConfig {
  std::size_t nodes = 500;
  std::size_t communities = 10;
  double duration = 100.0;
  double warmup_fraction = 0.3;     // head of the timeline used for background edges
  std::size_t warmup_edges = 1000;  // background edges, all accepted
  std::size_t candidate_events = 8000;
  double base_rate = 0.2;  // acceptance probability for untreated candidates
  double effect = 1.0;     // log rate multiplier for treated candidates
  double planted_threshold = 2.0;  // common-neighbor count defining "treated"
  double intra_prob = 0.8;         // probability a candidate pair is intra-community

  void validate() const;
};

struct SyntheticStats {
  std::size_t treated_candidates = 0;
  std::size_t treated_accepted = 0;
  std::size_t untreated_candidates = 0;
  std::size_t untreated_accepted = 0;

  /// Empirical treated/untreated acceptance-rate ratio (NaN when undefined).
  double rate_ratio() const;
};

struct SyntheticData {
  std::vector<TemporalEvent> events;  // time-sorted, dense ids
  std::size_t num_nodes = 0;
  std::vector<int> community;       // per node
  std::vector<char> event_treated;  // planted label per emitted event
  SyntheticStats stats;
};

SyntheticData generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

/// Random d-regular interaction graph (pairing model), one event per edge at
/// a uniform time in [0, duration]. Used for search-cost scaling studies.
std::vector<TemporalEvent> generate_regular_temporal(std::size_t nodes, std::size_t degree,
                                                     double duration, std::uint64_t seed);

}  // namespace codcl
