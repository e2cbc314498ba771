#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "codcl/temporal_graph.hpp"
#include "codcl/types.hpp"

namespace codcl {

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  // Test takes the remainder.
  void validate() const;
};

/// Chronological split boundaries plus the inductive node mask. Boundary
/// timestamps are the first timestamps of the validation and test segments.
struct SplitSpec {
  Time train_val_boundary = 0.0;
  Time val_test_boundary = 0.0;
  std::vector<NodeId> inductive_mask;  // sorted
};

struct SplitResult {
  SplitSpec spec;
  std::vector<TemporalEvent> train;
  std::vector<TemporalEvent> val;
  std::vector<TemporalEvent> test;
};

/// Splits time-sorted events at floor(train*n) and floor((train+val)*n),
/// pushing each boundary forward so identical timestamps never straddle it.
/// Fails when fewer than 3 events remain or no valid boundary exists.
SplitResult chronological_split(std::span<const TemporalEvent> events, SplitRatios ratios);

/// Uniformly samples floor(fraction * n) of the nodes that appear in the
/// validation or test segments; deterministic in the seed. The returned set
/// is sorted.
std::vector<NodeId> make_inductive_mask(const SplitResult& split, double fraction,
                                        std::uint64_t seed);

/// Training events that touch no masked node. Fails when the mask would
/// empty the training set.
std::vector<TemporalEvent> remove_masked_training(std::span<const TemporalEvent> train,
                                                  std::span<const NodeId> mask);

/// One uniformly drawn negative destination per positive event, excluding
/// the event's endpoints. Deterministic given the seed and batch order.
struct NegativeSample {
  NodeId u = 0;
  NodeId v = 0;
};
std::vector<NegativeSample> sample_negatives(std::span<const TemporalEvent> batch,
                                             const TemporalGraph& graph,
                                             std::uint64_t seed);

}  // namespace codcl
