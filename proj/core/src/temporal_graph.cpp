#include "codcl/temporal_graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace codcl {

namespace {

bool entry_time_less(const AdjacencyEntry& e, Time t) { return e.timestamp < t; }

}  // namespace

TemporalGraph::TemporalGraph(std::vector<TemporalEvent> events, std::size_t num_nodes,
                             std::vector<double> node_features, std::size_t feature_dim,
                             std::vector<std::string> original_ids, bool allow_self_loops)
    : events_(std::move(events)),
      num_nodes_(num_nodes),
      node_features_(std::move(node_features)),
      feature_dim_(feature_dim),
      original_ids_(std::move(original_ids)),
      allow_self_loops_(allow_self_loops) {
  if (feature_dim_ > 0 && node_features_.size() != num_nodes_ * feature_dim_) {
    throw Error("node feature matrix has wrong size");
  }
  std::stable_sort(events_.begin(), events_.end(),
                   [](const TemporalEvent& a, const TemporalEvent& b) {
                     return a.timestamp < b.timestamp;
                   });
  adjacency_.assign(num_nodes_, {});
  t_max_ = 0.0;
  t_min_ = events_.empty() ? 0.0 : std::numeric_limits<Time>::infinity();
  for (std::uint32_t i = 0; i < events_.size(); ++i) {
    const TemporalEvent& e = events_[i];
    if (e.src >= num_nodes_ || e.dst >= num_nodes_) {
      throw Error("event node id out of range");
    }
    if (e.src == e.dst && !allow_self_loops_) {
      throw Error("self-loop event on node " + std::to_string(e.src) +
                  " but self-loops are disabled");
    }
    if (!std::isfinite(e.timestamp) || e.timestamp < 0.0) {
      throw Error("event timestamp must be finite and non-negative");
    }
    if (!std::isfinite(e.weight)) throw Error("event weight must be finite");
    adjacency_[e.src].push_back({e.timestamp, e.dst, i});
    adjacency_[e.dst].push_back({e.timestamp, e.src, i});
    t_max_ = std::max(t_max_, e.timestamp);
    t_min_ = std::min(t_min_, e.timestamp);
    edge_feature_dim_ = std::max(edge_feature_dim_, e.edge_features.size());
  }
  // Events were appended in time order, so every list is already sorted.
}

void TemporalGraph::check_node(NodeId u) const {
  if (u >= num_nodes_) {
    throw Error("unknown node id " + std::to_string(u));
  }
}

std::span<const double> TemporalGraph::node_features(NodeId u) const {
  check_node(u);
  if (feature_dim_ == 0) return {};
  return std::span<const double>(node_features_).subspan(u * feature_dim_, feature_dim_);
}

std::span<const AdjacencyEntry> TemporalGraph::adjacency(NodeId u) const {
  check_node(u);
  return adjacency_[u];
}

const std::string& TemporalGraph::original_id(NodeId u) const {
  static const std::string kEmpty;
  check_node(u);
  return u < original_ids_.size() ? original_ids_[u] : kEmpty;
}

std::pair<std::size_t, std::size_t> TemporalGraph::window_range(NodeId u, Time t,
                                                                Time delta) const {
  const auto& adj = adjacency_[u];
  // Endpoints are inclusive: τ ≤ t, and τ ≥ t - delta when delta > 0.
  const auto hi = std::upper_bound(adj.begin(), adj.end(), t,
                                   [](Time value, const AdjacencyEntry& e) {
                                     return value < e.timestamp;
                                   });
  auto lo = adj.begin();
  if (delta > 0.0) {
    lo = std::lower_bound(adj.begin(), hi, t - delta, entry_time_less);
  }
  return {static_cast<std::size_t>(lo - adj.begin()),
          static_cast<std::size_t>(hi - adj.begin())};
}

std::vector<NodeId> TemporalGraph::neighbors_window(NodeId u, Time t, Time delta) const {
  check_node(u);
  if (std::isnan(t) || std::isnan(delta) || delta < 0.0) {
    throw Error("invalid window query: t and delta must be numbers, delta >= 0");
  }
  auto [lo, hi] = window_range(u, t, delta);
  std::vector<NodeId> out;
  out.reserve(hi - lo);
  const auto& adj = adjacency_[u];
  for (std::size_t i = lo; i < hi; ++i) out.push_back(adj[i].other);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t TemporalGraph::common_neighbor_count(NodeId u, NodeId v, Time t,
                                                 Time delta) const {
  const std::vector<NodeId> nu = neighbors_window(u, t, delta);
  const std::vector<NodeId> nv = neighbors_window(v, t, delta);
  std::size_t count = 0;
  std::size_t i = 0, j = 0;
  while (i < nu.size() && j < nv.size()) {
    if (nu[i] < nv[j]) {
      ++i;
    } else if (nv[j] < nu[i]) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

std::vector<std::pair<NodeId, int>> TemporalGraph::khop_nodes(NodeId u, Time t, int k,
                                                              Time delta) const {
  check_node(u);
  if (k < 1) throw Error("khop_nodes requires k >= 1");
  std::vector<int> hop(num_nodes_, -1);
  hop[u] = 0;
  std::vector<NodeId> frontier{u};
  std::vector<std::pair<NodeId, int>> out;
  for (int layer = 1; layer <= k && !frontier.empty(); ++layer) {
    std::vector<NodeId> next;
    for (NodeId w : frontier) {
      for (NodeId x : neighbors_window(w, t, delta)) {
        if (hop[x] == -1) {
          hop[x] = layer;
          next.push_back(x);
          out.emplace_back(x, layer);
        }
      }
    }
    frontier = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t TemporalGraph::degree_at(NodeId u, Time t) const {
  return neighbors_window(u, t, 0.0).size();
}

std::optional<Time> TemporalGraph::last_pair_time(NodeId u, NodeId v, Time t) const {
  check_node(u);
  check_node(v);
  const auto& adj = adjacency_[u].size() <= adjacency_[v].size() ? adjacency_[u]
                                                                 : adjacency_[v];
  const NodeId other = adjacency_[u].size() <= adjacency_[v].size() ? v : u;
  auto hi = std::upper_bound(adj.begin(), adj.end(), t,
                             [](Time value, const AdjacencyEntry& e) {
                               return value < e.timestamp;
                             });
  for (auto it = std::make_reverse_iterator(hi); it != adj.rend(); ++it) {
    if (it->other == other) return it->timestamp;
  }
  return std::nullopt;
}

std::optional<Time> TemporalGraph::first_pair_time(NodeId u, NodeId v, Time t) const {
  check_node(u);
  check_node(v);
  const auto& adj = adjacency_[u].size() <= adjacency_[v].size() ? adjacency_[u]
                                                                 : adjacency_[v];
  const NodeId other = adjacency_[u].size() <= adjacency_[v].size() ? v : u;
  for (const AdjacencyEntry& e : adj) {
    if (e.timestamp > t) break;
    if (e.other == other) return e.timestamp;
  }
  return std::nullopt;
}

std::size_t TemporalGraph::pair_event_count(NodeId u, NodeId v, Time t) const {
  check_node(u);
  check_node(v);
  const auto& adj = adjacency_[u].size() <= adjacency_[v].size() ? adjacency_[u]
                                                                 : adjacency_[v];
  const NodeId other = adjacency_[u].size() <= adjacency_[v].size() ? v : u;
  std::size_t count = 0;
  for (const AdjacencyEntry& e : adj) {
    if (e.timestamp > t) break;
    if (e.other == other) ++count;
  }
  return count;
}

bool TemporalGraph::node_active_in(NodeId u, Time t_lo, Time t_hi) const {
  check_node(u);
  const auto& adj = adjacency_[u];
  auto it = std::lower_bound(adj.begin(), adj.end(), t_lo, entry_time_less);
  return it != adj.end() && it->timestamp <= t_hi;
}

std::optional<Time> TemporalGraph::last_event_time(NodeId u, Time t) const {
  check_node(u);
  const auto& adj = adjacency_[u];
  auto hi = std::upper_bound(adj.begin(), adj.end(), t,
                             [](Time value, const AdjacencyEntry& e) {
                               return value < e.timestamp;
                             });
  if (hi == adj.begin()) return std::nullopt;
  return (hi - 1)->timestamp;
}

TemporalGraph TemporalGraph::with_node_features(std::vector<double> features,
                                                std::size_t feature_dim) const {
  return TemporalGraph(events_, num_nodes_, std::move(features), feature_dim,
                       original_ids_, allow_self_loops_);
}

TemporalGraph TemporalGraph::restricted_to(std::span<const TemporalEvent> events) const {
  return TemporalGraph(std::vector<TemporalEvent>(events.begin(), events.end()),
                       num_nodes_, node_features_, feature_dim_, original_ids_,
                       allow_self_loops_);
}

}  // namespace codcl
