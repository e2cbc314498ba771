#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "codcl/types.hpp"

namespace codcl {

/// Column layout and validation switches for event-stream ingest.
struct IngestConfig {
  // 0-based column indices; -1 means the column is absent.
  int src_col = 0;
  int dst_col = 1;
  int time_col = 2;
  int label_col = -1;
  int weight_col = -1;
  std::vector<int> feature_cols;
  // When set, every column not claimed above is an edge feature (JODIE layout).
  bool features_from_remainder = false;
  bool has_header = true;
  bool allow_self_loops = false;
  // Destination ids live in their own namespace (user/item style datasets).
  bool bipartite = false;
  char delimiter = ',';
};

/// Builds an IngestConfig from a CSV header line, or nullopt when the header
/// is not one of the recognized layouts (JODIE `user_id,item_id,timestamp,
/// state_label,...` or a plain src/dst/t triple with optional label/weight).
std::optional<IngestConfig> detect_columns(const std::string& header_line);

struct AdjacencyEntry {
  Time timestamp;
  NodeId other;
  std::uint32_t event_index;
};

/// Immutable time-indexed interaction store. Events are sorted by
/// (timestamp, arrival order); each node's incident events are kept in a
/// binary-searchable time-sorted list, with every event indexed under both
/// endpoints. Safe for unsynchronized concurrent reads once constructed.
class TemporalGraph {
 public:
  TemporalGraph() = default;

  /// Events must use dense node ids < num_nodes; they are stable-sorted by
  /// timestamp on construction. `node_features` is row-major num_nodes x
  /// feature_dim, or empty for featureless graphs (feature_dim = 0).
  TemporalGraph(std::vector<TemporalEvent> events, std::size_t num_nodes,
                std::vector<double> node_features = {}, std::size_t feature_dim = 0,
                std::vector<std::string> original_ids = {}, bool allow_self_loops = false);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_events() const { return events_.size(); }
  std::span<const TemporalEvent> events() const { return events_; }
  Time t_max() const { return t_max_; }
  Time t_min() const { return t_min_; }
  Time time_span() const { return events_.empty() ? 0.0 : t_max_ - t_min_; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t edge_feature_dim() const { return edge_feature_dim_; }
  bool self_loops_enabled() const { return allow_self_loops_; }

  std::span<const double> node_features(NodeId u) const;
  std::span<const AdjacencyEntry> adjacency(NodeId u) const;
  /// Original dataset id for a dense node id; empty when the graph was built
  /// programmatically.
  const std::string& original_id(NodeId u) const;

  /// Distinct partners of u with an event in the window: delta = 0 covers all
  /// of history up to t, delta > 0 the closed interval [t-delta, t].
  /// Result is sorted ascending with no duplicates.
  std::vector<NodeId> neighbors_window(NodeId u, Time t, Time delta) const;

  /// Number of common window-neighbors of u and v.
  std::size_t common_neighbor_count(NodeId u, NodeId v, Time t, Time delta) const;

  /// Breadth-first expansion over the window-neighbor relation, layer by
  /// layer up to k hops. Returns (node, minimal hop) pairs sorted by node id;
  /// u itself is excluded.
  std::vector<std::pair<NodeId, int>> khop_nodes(NodeId u, Time t, int k, Time delta) const;

  /// Count of distinct partners up to time t.
  std::size_t degree_at(NodeId u, Time t) const;

  /// Latest interaction time of the pair at or before t, if any.
  std::optional<Time> last_pair_time(NodeId u, NodeId v, Time t) const;

  /// Earliest interaction time of the pair at or before t, if any.
  std::optional<Time> first_pair_time(NodeId u, NodeId v, Time t) const;

  /// Number of (u,v) events with timestamp <= t.
  std::size_t pair_event_count(NodeId u, NodeId v, Time t) const;

  /// True iff u has at least one event in the closed window [t_lo, t_hi].
  bool node_active_in(NodeId u, Time t_lo, Time t_hi) const;

  /// Latest event time of u at or before t, if any.
  std::optional<Time> last_event_time(NodeId u, Time t) const;

  /// Copy of this graph with the node-feature matrix replaced.
  TemporalGraph with_node_features(std::vector<double> features, std::size_t feature_dim) const;

  /// New graph over the same node-id space containing only the given events.
  TemporalGraph restricted_to(std::span<const TemporalEvent> events) const;

 private:
  void check_node(NodeId u) const;
  // Adjacency range [first, last) with timestamps in the query window.
  std::pair<std::size_t, std::size_t> window_range(NodeId u, Time t, Time delta) const;

  std::vector<TemporalEvent> events_;
  std::size_t num_nodes_ = 0;
  std::vector<std::vector<AdjacencyEntry>> adjacency_;
  std::vector<double> node_features_;  // row-major num_nodes x feature_dim
  std::size_t feature_dim_ = 0;
  std::size_t edge_feature_dim_ = 0;
  std::vector<std::string> original_ids_;
  Time t_max_ = 0.0;
  Time t_min_ = 0.0;
  bool allow_self_loops_ = false;
};

/// Parses an event CSV into a TemporalGraph. Node ids are renumbered densely
/// in first-appearance order; original ids are retained. Raises ParseError
/// with the offending line number on malformed rows and Error on empty input.
TemporalGraph ingest_events(std::istream& input, const IngestConfig& config);
TemporalGraph ingest_file(const std::string& path, const IngestConfig& config);

/// Reads only the header line of `path` and auto-detects the column layout.
/// Falls back to a plain src,dst,t map when the file has no header.
IngestConfig sniff_columns(const std::string& path);

}  // namespace codcl
