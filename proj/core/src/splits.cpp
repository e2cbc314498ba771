#include "codcl/splits.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "codcl/rng.hpp"

namespace codcl {

void SplitRatios::validate() const {
  if (!(train > 0.0 && val > 0.0 && train + val < 1.0)) {
    throw ConfigError("split ratios must be positive with train+val < 1");
  }
}

namespace {

/// Moves a cut index back to the start of any tied-timestamp run it lands in,
/// so simultaneous events land entirely in the later segment.
std::size_t settle_boundary(std::span<const TemporalEvent> events, std::size_t cut) {
  while (cut > 0 && cut < events.size() &&
         events[cut].timestamp == events[cut - 1].timestamp) {
    --cut;
  }
  return cut;
}

}  // namespace

SplitResult chronological_split(std::span<const TemporalEvent> events,
                                SplitRatios ratios) {
  ratios.validate();
  const std::size_t n = events.size();
  if (n < 3) throw Error("chronological split needs at least 3 events");
  for (std::size_t i = 1; i < n; ++i) {
    if (events[i].timestamp < events[i - 1].timestamp) {
      throw Error("events must be sorted by timestamp before splitting");
    }
  }
  std::size_t cut1 = static_cast<std::size_t>(
      std::floor(ratios.train * static_cast<double>(n)));
  std::size_t cut2 = static_cast<std::size_t>(
      std::floor((ratios.train + ratios.val) * static_cast<double>(n)));
  cut1 = settle_boundary(events, std::min(cut1, n - 1));
  cut2 = settle_boundary(events, std::min(std::max(cut2, cut1 + 1), n - 1));
  if (cut1 == 0 || cut2 <= cut1 || cut2 >= n) {
    throw Error("no valid chronological boundary (too many tied timestamps)");
  }

  SplitResult out;
  out.train.assign(events.begin(), events.begin() + static_cast<std::ptrdiff_t>(cut1));
  out.val.assign(events.begin() + static_cast<std::ptrdiff_t>(cut1),
                 events.begin() + static_cast<std::ptrdiff_t>(cut2));
  out.test.assign(events.begin() + static_cast<std::ptrdiff_t>(cut2), events.end());
  out.spec.train_val_boundary = out.val.front().timestamp;
  out.spec.val_test_boundary = out.test.front().timestamp;
  return out;
}

std::vector<NodeId> make_inductive_mask(const SplitResult& split, double fraction,
                                        std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("inductive fraction must lie in (0, 1)");
  }
  std::unordered_set<NodeId> seen;
  for (const TemporalEvent& e : split.val) {
    seen.insert(e.src);
    seen.insert(e.dst);
  }
  for (const TemporalEvent& e : split.test) {
    seen.insert(e.src);
    seen.insert(e.dst);
  }
  std::vector<NodeId> candidates(seen.begin(), seen.end());
  std::sort(candidates.begin(), candidates.end());
  const std::size_t want = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(candidates.size())));
  std::vector<NodeId> mask;
  if (want == 0) return mask;

  // Seeded partial Fisher-Yates over the sorted candidate list.
  std::mt19937_64 gen(mix_seed(seed, 0x1d0cae5eULL));
  for (std::size_t i = 0; i < want; ++i) {
    const std::size_t j = i + uniform_index(gen, candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
    mask.push_back(candidates[i]);
  }
  std::sort(mask.begin(), mask.end());
  return mask;
}

std::vector<TemporalEvent> remove_masked_training(std::span<const TemporalEvent> train,
                                                  std::span<const NodeId> mask) {
  std::unordered_set<NodeId> masked(mask.begin(), mask.end());
  std::vector<TemporalEvent> out;
  out.reserve(train.size());
  for (const TemporalEvent& e : train) {
    if (masked.count(e.src) || masked.count(e.dst)) continue;
    out.push_back(e);
  }
  if (out.empty() && !train.empty()) {
    throw Error("inductive mask removed every training event");
  }
  return out;
}

std::vector<NegativeSample> sample_negatives(std::span<const TemporalEvent> batch,
                                             const TemporalGraph& graph,
                                             std::uint64_t seed) {
  const std::size_t n = graph.num_nodes();
  if (n < 3) throw Error("negative sampling needs at least 3 nodes");
  std::mt19937_64 gen(mix_seed(seed, 0x4e65f0e5ULL));
  std::vector<NegativeSample> out;
  out.reserve(batch.size());
  for (const TemporalEvent& e : batch) {
    // Uniform over all nodes except the positive destination, and except the
    // source too when self-loops are disabled.
    NodeId lo = std::min(e.src, e.dst);
    NodeId hi = std::max(e.src, e.dst);
    std::size_t excluded = lo == hi ? 1 : 2;
    if (graph.self_loops_enabled()) {
      lo = hi = e.dst;
      excluded = 1;
    }
    NodeId draw = static_cast<NodeId>(uniform_index(gen, n - excluded));
    if (draw >= lo) ++draw;
    if (excluded == 2 && draw >= hi) ++draw;
    out.push_back({e.src, draw});
  }
  return out;
}

}  // namespace codcl
