#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "codcl/linalg.hpp"
#include "codcl/temporal_graph.hpp"
#include "codcl/treatment.hpp"
#include "codcl/types.hpp"

namespace codcl {

struct CfSearchConfig {
  int k_max = 2;
  std::size_t embed_dim = 32;  // context-embedding dimension
  Time delta = 0.0;            // window for hop expansion and observed-state checks
  // Optimize across every layer up to k_max instead of stopping at the first
  // layer that contains a valid candidate.
  bool global_argmax = false;
  // Use identity maps instead of random projections (requires matching dims).
  bool identity_maps = false;
  enum class Selection { kArgmaxSimilarity, kUniformRandom };
  Selection selection = Selection::kArgmaxSimilarity;
  std::uint64_t seed = 0x5eedULL;

  void validate() const;
};

struct ContextEmbedding {
  Vec vector;
  NodeId node = 0;
  Time query_time = 0.0;
};

/// Fixed per-run linear maps for the context embedding: a self projection of
/// the node's own features plus a neighbor projection averaged over the
/// node's temporal neighbors. Drawn once from a seeded generator and reused
/// for every query, so augmentation stays a deterministic preprocessing step.
class ContextProjector {
 public:
  static ContextProjector seeded(std::size_t feature_dim, std::size_t embed_dim,
                                 std::uint64_t seed);
  static ContextProjector identity(std::size_t dim);

  /// Self projection of x_u plus the mean neighbor projection over the full
  /// cutoff neighborhood at t; the mean term is zero for isolated nodes.
  ContextEmbedding embed(NodeId u, Time t, const TemporalGraph& graph) const;

  std::size_t embed_dim() const { return proj_self_.rows; }
  std::size_t feature_dim() const { return proj_self_.cols; }
  const Matrix& proj_self() const { return proj_self_; }
  const Matrix& proj_neighbor() const { return proj_neighbor_; }

 private:
  ContextProjector(Matrix proj_self, Matrix proj_neighbor);
  Matrix proj_self_;
  Matrix proj_neighbor_;
};

struct CandidatePair {
  NodeId u = 0;
  NodeId v = 0;
  int hop = 0;  // max of the two endpoint hop distances
};

/// All candidate pairs within k hops of (u, v): cross product of the two
/// k-hop neighborhoods, keeping pairs of distinct nodes, different from the
/// factual pair, with opposite treatment. Sorted by (hop, u', v').
std::vector<CandidatePair> candidate_pairs(NodeId u, NodeId v, Time t, int k,
                                           const TemporalGraph& graph,
                                           const TreatmentRule& treatments,
                                           const CfSearchConfig& config);

/// Factual pair, the selected counterfactual (when one exists), and how it
/// was found. `found == false` is a valid outcome, not an error.
struct CounterfactualAssignment {
  NodeId u = 0;
  NodeId v = 0;
  Time t = 0.0;
  bool found = false;
  NodeId cf_u = 0;
  NodeId cf_v = 0;
  double similarity = 0.0;
  int hop = 0;
  // Whether the selected pair has an observed event in the state window
  // ending at t ([t-delta, t]; delta = 0 means any history up to t).
  bool cf_observed = false;
};

/// Layered search for the opposite-treatment pair with maximal average
/// cosine similarity of context embeddings. Scans hop layers outward and
/// stops at the first layer containing a valid candidate (or exhausts k_max;
/// global_argmax scans all layers). Ties break toward the smaller hop, then
/// the lexicographically smaller pair.
CounterfactualAssignment select_counterfactual(NodeId u, NodeId v, Time t,
                                               const TemporalGraph& graph,
                                               const TreatmentRule& treatments,
                                               const ContextProjector& projector,
                                               const CfSearchConfig& config);

struct AugmentStats {
  std::size_t total = 0;
  std::size_t found = 0;
  double coverage = 0.0;         // found / total, 0 when total == 0
  double mean_similarity = 0.0;  // over found assignments
  std::vector<std::size_t> hop_histogram;  // index = hop, [0] unused
};

struct AugmentResult {
  std::vector<CounterfactualAssignment> assignments;
  AugmentStats stats;
};

/// One counterfactual assignment per event, in event order. Queries run at a
/// cutoff strictly below each event's timestamp. Searches are independent
/// and run on a worker pool; results are ordered by input position, so the
/// output is identical for any worker count. workers = 0 picks a default
/// honoring the CODCL_WORKERS environment cap.
AugmentResult augment_split(std::span<const TemporalEvent> events,
                            const TemporalGraph& graph, const TreatmentRule& treatments,
                            const ContextProjector& projector,
                            const CfSearchConfig& config, std::size_t workers = 0);

/// Worker count after applying the CODCL_WORKERS environment cap.
std::size_t effective_workers(std::size_t requested);

}  // namespace codcl
