#include "codcl/cfsearch.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <unordered_map>

#include "codcl/rng.hpp"

namespace codcl {

void CfSearchConfig::validate() const {
  if (k_max < 1) throw ConfigError("search k_max must be >= 1");
  if (embed_dim == 0) throw ConfigError("search embed_dim must be positive");
  if (!(delta >= 0.0) || !std::isfinite(delta)) {
    throw ConfigError("search delta must be finite and >= 0");
  }
}

ContextProjector::ContextProjector(Matrix proj_self, Matrix proj_neighbor)
    : proj_self_(std::move(proj_self)), proj_neighbor_(std::move(proj_neighbor)) {}

ContextProjector ContextProjector::seeded(std::size_t feature_dim, std::size_t embed_dim,
                                          std::uint64_t seed) {
  std::mt19937_64 gen(mix_seed(seed, 0xc017eec7ULL));
  const double scale = feature_dim > 0 ? 1.0 / std::sqrt(static_cast<double>(feature_dim))
                                       : 1.0;
  auto draw = [&](Matrix& m) {
    m = Matrix(embed_dim, feature_dim);
    for (double& x : m.data) x = normal01(gen) * scale;
  };
  Matrix s, n;
  draw(s);
  draw(n);
  return ContextProjector(std::move(s), std::move(n));
}

ContextProjector ContextProjector::identity(std::size_t dim) {
  Matrix s(dim, dim), n(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    s.at(i, i) = 1.0;
    n.at(i, i) = 1.0;
  }
  return ContextProjector(std::move(s), std::move(n));
}

ContextEmbedding ContextProjector::embed(NodeId u, Time t,
                                         const TemporalGraph& graph) const {
  if (graph.feature_dim() != proj_self_.cols) {
    throw Error("context projector dimension mismatch: graph features are " +
                std::to_string(graph.feature_dim()) + ", projector expects " +
                std::to_string(proj_self_.cols));
  }
  ContextEmbedding out;
  out.node = u;
  out.query_time = t;
  out.vector = matvec(proj_self_, graph.node_features(u));
  const std::vector<NodeId> neighbors = graph.neighbors_window(u, t, 0.0);
  if (!neighbors.empty()) {
    Vec mean(proj_neighbor_.cols, 0.0);
    for (NodeId w : neighbors) add_in_place(mean, graph.node_features(w));
    scale_in_place(mean, 1.0 / static_cast<double>(neighbors.size()));
    add_in_place(out.vector, matvec(proj_neighbor_, mean));
  }
  return out;
}

namespace {

struct HopSets {
  // nodes[h] lists nodes at exact hop h (1-based), each sorted ascending.
  std::vector<std::vector<NodeId>> layers;
};

HopSets hop_layers(const TemporalGraph& graph, NodeId u, Time t, int k, Time delta) {
  HopSets sets;
  sets.layers.assign(static_cast<std::size_t>(k) + 1, {});
  for (auto [node, hop] : graph.khop_nodes(u, t, k, delta)) {
    sets.layers[static_cast<std::size_t>(hop)].push_back(node);
  }
  for (auto& layer : sets.layers) std::sort(layer.begin(), layer.end());
  return sets;
}

/// Calls fn(u', v', hop) for every cross-product pair whose max endpoint hop
/// equals `layer`, in lexicographic (u', v') order within each block.
template <typename Fn>
void for_each_layer_pair(const HopSets& su, const HopSets& sv, int layer, Fn&& fn) {
  // max(hop_u, hop_v) == layer: u' at `layer` with v' at <= layer, plus
  // u' at < layer with v' exactly at `layer`.
  for (NodeId a : su.layers[static_cast<std::size_t>(layer)]) {
    for (int hv = 1; hv <= layer; ++hv) {
      for (NodeId b : sv.layers[static_cast<std::size_t>(hv)]) fn(a, b, layer);
    }
  }
  for (int hu = 1; hu < layer; ++hu) {
    for (NodeId a : su.layers[static_cast<std::size_t>(hu)]) {
      for (NodeId b : sv.layers[static_cast<std::size_t>(layer)]) fn(a, b, layer);
    }
  }
}

bool observed_in_state_window(const TemporalGraph& graph, NodeId a, NodeId b, Time t,
                              Time delta) {
  const auto last = graph.last_pair_time(a, b, t);
  if (!last) return false;
  return delta <= 0.0 || *last >= t - delta;
}

}  // namespace

std::vector<CandidatePair> candidate_pairs(NodeId u, NodeId v, Time t, int k,
                                           const TemporalGraph& graph,
                                           const TreatmentRule& treatments,
                                           const CfSearchConfig& config) {
  if (k < 1 || k > config.k_max) throw Error("candidate_pairs: k out of range");
  const int factual = treatments(u, v, t);
  const HopSets su = hop_layers(graph, u, t, k, config.delta);
  const HopSets sv = hop_layers(graph, v, t, k, config.delta);
  std::vector<CandidatePair> out;
  for (int layer = 1; layer <= k; ++layer) {
    for_each_layer_pair(su, sv, layer, [&](NodeId a, NodeId b, int hop) {
      if (a == b) return;
      if (a == u && b == v) return;
      if (treatments(a, b, t) == factual) return;
      out.push_back({a, b, hop});
    });
  }
  std::sort(out.begin(), out.end(), [](const CandidatePair& x, const CandidatePair& y) {
    return std::tie(x.hop, x.u, x.v) < std::tie(y.hop, y.u, y.v);
  });
  return out;
}

CounterfactualAssignment select_counterfactual(NodeId u, NodeId v, Time t,
                                               const TemporalGraph& graph,
                                               const TreatmentRule& treatments,
                                               const ContextProjector& projector,
                                               const CfSearchConfig& config) {
  config.validate();
  CounterfactualAssignment out;
  out.u = u;
  out.v = v;
  out.t = t;

  const int factual = treatments(u, v, t);
  const HopSets su = hop_layers(graph, u, t, config.k_max, config.delta);
  const HopSets sv = hop_layers(graph, v, t, config.k_max, config.delta);

  const Vec hu = projector.embed(u, t, graph).vector;
  const Vec hv = projector.embed(v, t, graph).vector;
  std::unordered_map<NodeId, Vec> cache;
  auto embedding = [&](NodeId w) -> const Vec& {
    auto it = cache.find(w);
    if (it == cache.end()) {
      it = cache.emplace(w, projector.embed(w, t, graph).vector).first;
    }
    return it->second;
  };

  bool have_best = false;
  double best_sim = 0.0;
  int best_hop = 0;
  NodeId best_u = 0, best_v = 0;

  if (config.selection == CfSearchConfig::Selection::kUniformRandom) {
    // Similarity-free draw from the first layer that has a valid candidate.
    for (int layer = 1; layer <= config.k_max; ++layer) {
      std::vector<std::pair<NodeId, NodeId>> pool;
      for_each_layer_pair(su, sv, layer, [&](NodeId a, NodeId b, int) {
        if (a == b || (a == u && b == v)) return;
        if (treatments(a, b, t) == factual) return;
        pool.emplace_back(a, b);
      });
      if (pool.empty()) continue;
      std::sort(pool.begin(), pool.end());
      std::mt19937_64 gen(
          mix_seed(mix_seed(config.seed, u, v), std::bit_cast<std::uint64_t>(t)));
      const auto [a, b] = pool[uniform_index(gen, pool.size())];
      out.found = true;
      out.cf_u = a;
      out.cf_v = b;
      out.hop = layer;
      out.similarity = 0.5 * (cosine(hu, embedding(a)) + cosine(hv, embedding(b)));
      out.cf_observed = observed_in_state_window(graph, a, b, t, config.delta);
      return out;
    }
    return out;
  }

  for (int layer = 1; layer <= config.k_max; ++layer) {
    bool layer_hit = false;
    for_each_layer_pair(su, sv, layer, [&](NodeId a, NodeId b, int hop) {
      if (a == b || (a == u && b == v)) return;
      if (treatments(a, b, t) == factual) return;
      const double sim = 0.5 * (cosine(hu, embedding(a)) + cosine(hv, embedding(b)));
      layer_hit = true;
      const bool better =
          !have_best || sim > best_sim ||
          (sim == best_sim && std::tie(hop, a, b) < std::tie(best_hop, best_u, best_v));
      if (better) {
        have_best = true;
        best_sim = sim;
        best_hop = hop;
        best_u = a;
        best_v = b;
      }
    });
    if (layer_hit && !config.global_argmax) break;
  }

  if (have_best) {
    out.found = true;
    out.cf_u = best_u;
    out.cf_v = best_v;
    out.similarity = best_sim;
    out.hop = best_hop;
    out.cf_observed = observed_in_state_window(graph, best_u, best_v, t, config.delta);
  }
  return out;
}

std::size_t effective_workers(std::size_t requested) {
  std::size_t workers = requested;
  if (workers == 0) {
    workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }
  if (const char* cap = std::getenv("CODCL_WORKERS")) {
    const long parsed = std::strtol(cap, nullptr, 10);
    if (parsed > 0) workers = std::min<std::size_t>(workers, static_cast<std::size_t>(parsed));
  }
  return std::max<std::size_t>(1, workers);
}

AugmentResult augment_split(std::span<const TemporalEvent> events,
                            const TemporalGraph& graph, const TreatmentRule& treatments,
                            const ContextProjector& projector,
                            const CfSearchConfig& config, std::size_t workers) {
  config.validate();
  AugmentResult result;
  result.assignments.resize(events.size());
  result.stats.hop_histogram.assign(static_cast<std::size_t>(config.k_max) + 1, 0);
  result.stats.total = events.size();
  if (events.empty()) return result;

  const std::size_t pool = std::min(effective_workers(workers), events.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= events.size()) break;
      const TemporalEvent& e = events[i];
      result.assignments[i] = select_counterfactual(
          e.src, e.dst, strict_past_cutoff(e.timestamp), graph, treatments, projector,
          config);
      // Report the original event time; the strict cutoff is internal.
      result.assignments[i].t = e.timestamp;
    }
  };
  if (pool <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (std::size_t w = 0; w < pool; ++w) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }

  double similarity_sum = 0.0;
  for (const CounterfactualAssignment& a : result.assignments) {
    if (!a.found) continue;
    ++result.stats.found;
    similarity_sum += a.similarity;
    ++result.stats.hop_histogram[static_cast<std::size_t>(a.hop)];
  }
  result.stats.coverage =
      result.stats.total == 0
          ? 0.0
          : static_cast<double>(result.stats.found) / static_cast<double>(result.stats.total);
  result.stats.mean_similarity =
      result.stats.found == 0 ? 0.0 : similarity_sum / static_cast<double>(result.stats.found);
  return result;
}

}  // namespace codcl
