#include "codcl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "codcl/rng.hpp"

namespace codcl {

void SyntheticConfig::validate() const {
  if (nodes < 4) throw ConfigError("synthetic generator needs at least 4 nodes");
  if (communities == 0 || communities > nodes) {
    throw ConfigError("community count must lie in [1, nodes]");
  }
  if (!(duration > 0.0)) throw ConfigError("duration must be positive");
  if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0)) {
    throw ConfigError("warmup fraction must lie in (0, 1)");
  }
  if (!(intra_prob >= 0.0 && intra_prob <= 1.0)) {
    throw ConfigError("intra-community probability must lie in [0, 1]");
  }
  if (!(base_rate > 0.0 && base_rate <= 1.0)) {
    throw ConfigError("base rate must lie in (0, 1]");
  }
  if (base_rate * std::exp(effect) > 1.0) {
    throw ConfigError("infeasible rates: base_rate * exp(effect) exceeds 1");
  }
}

double SyntheticStats::rate_ratio() const {
  if (treated_candidates == 0 || untreated_candidates == 0 || untreated_accepted == 0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double treated_rate = static_cast<double>(treated_accepted) /
                              static_cast<double>(treated_candidates);
  const double untreated_rate = static_cast<double>(untreated_accepted) /
                                static_cast<double>(untreated_candidates);
  return treated_rate / untreated_rate;
}

namespace {

struct PairSampler {
  const SyntheticConfig& cfg;
  const std::vector<int>& community;
  const std::vector<std::vector<NodeId>>& members;

  std::pair<NodeId, NodeId> draw(std::mt19937_64& gen) const {
    const NodeId u = static_cast<NodeId>(uniform_index(gen, cfg.nodes));
    const bool intra = uniform01(gen) < cfg.intra_prob || cfg.communities == 1;
    for (int attempt = 0; attempt < 64; ++attempt) {
      NodeId v;
      if (intra) {
        const auto& pool = members[static_cast<std::size_t>(community[u])];
        v = pool[uniform_index(gen, pool.size())];
      } else {
        v = static_cast<NodeId>(uniform_index(gen, cfg.nodes));
        if (community[v] == community[u]) continue;
      }
      if (v != u) return {u, v};
    }
    // Dense fallback: next distinct node.
    return {u, (u + 1) % static_cast<NodeId>(cfg.nodes)};
  }
};

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  config.validate();
  SyntheticData data;
  data.num_nodes = config.nodes;
  data.community.resize(config.nodes);
  std::vector<std::vector<NodeId>> members(config.communities);
  for (std::size_t i = 0; i < config.nodes; ++i) {
    const int c = static_cast<int>(i * config.communities / config.nodes);
    data.community[i] = c;
    members[static_cast<std::size_t>(c)].push_back(static_cast<NodeId>(i));
  }

  std::mt19937_64 gen(mix_seed(seed, 0x5e11e71cULL));
  PairSampler sampler{config, data.community, members};

  // Candidate stream: warmup pairs in [0, Tw] (always accepted), then thinned
  // main-phase pairs in (Tw, T].
  const double t_warm = config.warmup_fraction * config.duration;
  struct Candidate {
    double t;
    NodeId u, v;
    bool warmup;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(config.warmup_edges + config.candidate_events);
  for (std::size_t i = 0; i < config.warmup_edges; ++i) {
    auto [u, v] = sampler.draw(gen);
    candidates.push_back({uniform_range(gen, 0.0, t_warm), u, v, true});
  }
  for (std::size_t i = 0; i < config.candidate_events; ++i) {
    auto [u, v] = sampler.draw(gen);
    candidates.push_back({uniform_range(gen, std::nextafter(t_warm, config.duration),
                                        config.duration),
                          u, v, false});
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.t < b.t; });

  // Live cumulative neighbor sets over accepted events.
  std::vector<std::unordered_set<NodeId>> neighbors(config.nodes);
  auto common_count = [&](NodeId u, NodeId v) {
    const auto& su = neighbors[u].size() <= neighbors[v].size() ? neighbors[u]
                                                                : neighbors[v];
    const auto& sv = neighbors[u].size() <= neighbors[v].size() ? neighbors[v]
                                                                : neighbors[u];
    std::size_t count = 0;
    for (NodeId w : su) count += sv.count(w);
    return static_cast<double>(count);
  };

  const double accept_treated = config.base_rate * std::exp(config.effect);
  for (const Candidate& c : candidates) {
    const bool treated = common_count(c.u, c.v) >= config.planted_threshold;
    bool accept = c.warmup;
    if (!c.warmup) {
      if (treated) {
        ++data.stats.treated_candidates;
      } else {
        ++data.stats.untreated_candidates;
      }
      const double p = treated ? accept_treated : config.base_rate;
      accept = uniform01(gen) < p;
      if (accept) {
        if (treated) {
          ++data.stats.treated_accepted;
        } else {
          ++data.stats.untreated_accepted;
        }
      }
    }
    if (!accept) continue;
    TemporalEvent ev;
    ev.src = c.u;
    ev.dst = c.v;
    ev.timestamp = c.t;
    data.events.push_back(std::move(ev));
    data.event_treated.push_back(treated ? 1 : 0);
    neighbors[c.u].insert(c.v);
    neighbors[c.v].insert(c.u);
  }
  if (data.events.empty()) throw Error("synthetic generator produced no events");
  return data;
}

std::vector<TemporalEvent> generate_regular_temporal(std::size_t nodes, std::size_t degree,
                                                     double duration, std::uint64_t seed) {
  if (degree >= nodes || (nodes * degree) % 2 != 0 || degree % 2 != 0) {
    throw ConfigError(
        "d-regular generator needs even degree < nodes (circulant seed graph)");
  }
  std::mt19937_64 gen(mix_seed(seed, 0x4e97a12fULL));

  // Circulant seed graph (exactly d-regular and simple), then randomized by
  // degree-preserving double-edge swaps.
  std::vector<std::pair<NodeId, NodeId>> edges;
  auto key = [](NodeId a, NodeId b) {
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
  };
  std::unordered_set<std::uint64_t> present;
  for (NodeId u = 0; u < nodes; ++u) {
    for (std::size_t off = 1; off <= degree / 2; ++off) {
      const NodeId v = static_cast<NodeId>((u + off) % nodes);
      if (present.insert(key(u, v)).second) edges.emplace_back(u, v);
    }
  }
  const std::size_t swaps = edges.size() * 20;
  for (std::size_t s = 0; s < swaps; ++s) {
    const std::size_t i = uniform_index(gen, edges.size());
    const std::size_t j = uniform_index(gen, edges.size());
    if (i == j) continue;
    auto [a, b] = edges[i];
    auto [c, d] = edges[j];
    if (uniform01(gen) < 0.5) std::swap(c, d);
    // Propose (a,d) and (c,b).
    if (a == d || c == b) continue;
    if (present.count(key(a, d)) || present.count(key(c, b))) continue;
    present.erase(key(a, b));
    present.erase(key(c, d));
    present.insert(key(a, d));
    present.insert(key(c, b));
    edges[i] = {a, d};
    edges[j] = {c, b};
  }

  std::vector<TemporalEvent> events;
  events.reserve(edges.size());
  for (const auto& [a, b] : edges) {
    TemporalEvent ev;
    ev.src = a;
    ev.dst = b;
    ev.timestamp = uniform_range(gen, 0.0, duration);
    events.push_back(std::move(ev));
  }
  return events;
}

}  // namespace codcl
