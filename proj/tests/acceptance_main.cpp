// Acceptance suite: every exit criterion runs at its stated tolerance and
// prints one [PASS]/[FAIL] line. The process exits nonzero when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "codcl/checkpoint.hpp"
#include "codcl/pipeline.hpp"
#include "oracles.hpp"

using namespace codcl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// --------------------------------------------------------------------------
// 1. Graph-query oracle suite.

Outcome criterion_graph_queries() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t nodes = 8 + uniform_index(gen, 53);        // <= 60
    const std::size_t count = 20 + uniform_index(gen, 481);      // <= 500
    const auto events = oracle::random_events(nodes, count, 60.0, 900 + trial);
    const TemporalGraph g(events, nodes);
    for (int q = 0; q < 12; ++q) {
      const NodeId u = static_cast<NodeId>(uniform_index(gen, nodes));
      NodeId v = static_cast<NodeId>(uniform_index(gen, nodes));
      while (v == u) v = static_cast<NodeId>(uniform_index(gen, nodes));
      const Time t = std::floor(uniform01(gen) * 70.0);
      const Time delta = q % 2 == 0 ? 0.0 : 1.0 + std::floor(uniform01(gen) * 20.0);

      const auto nw = g.neighbors_window(u, t, delta);
      const auto nw_ref = oracle::neighbors(events, u, t, delta);
      if (std::vector<NodeId>(nw_ref.begin(), nw_ref.end()) != nw) {
        return {false, "neighbors_window mismatch"};
      }
      if (g.common_neighbor_count(u, v, t, delta) !=
          oracle::common_neighbors(events, u, v, t, delta)) {
        return {false, "common_neighbor_count mismatch"};
      }
      const auto kh = g.khop_nodes(u, t, 3, delta);
      const auto kh_ref = oracle::khop(events, u, t, 3, delta);
      if (kh.size() != kh_ref.size()) return {false, "khop size mismatch"};
      for (const auto& [node, hop] : kh) {
        const auto it = kh_ref.find(node);
        if (it == kh_ref.end() || it->second != hop) {
          return {false, "khop distance mismatch"};
        }
      }
      if (g.degree_at(u, t) != oracle::neighbors(events, u, t, 0.0).size()) {
        return {false, "degree_at mismatch"};
      }
    }
  }
  const double seconds = elapsed_s(start);
  return {seconds < 60.0,
          "200 graphs x 4 query kinds vs linear-scan oracles, " + fmt(seconds) + " s"};
}

// --------------------------------------------------------------------------
// 2. Treatment suite.

Outcome criterion_treatments() {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + uniform_index(gen, 60);
    std::vector<double> values(n);
    for (double& v : values) v = std::floor(uniform01(gen) * 25.0);
    const double p = 0.5 + uniform01(gen) * 99.0;
    if (global_threshold(values, p) != oracle::percentile(values, p)) {
      return {false, "nearest-rank percentile mismatch"};
    }
  }

  const auto events = oracle::random_events(40, 400, 60.0, 31);
  const TemporalGraph g(events, 40);
  TreatmentConfig cumulative;
  TreatmentConfig decay;
  decay.intensity_mode = IntensityMode::kExponentialDecay;
  decay.lambda = 0.0;
  for (NodeId u = 0; u < 40; ++u) {
    for (NodeId v = u + 1; v < 40; v += 3) {
      const double a = interaction_intensity(u, v, g, cumulative);
      const double b = interaction_intensity(u, v, g, decay);
      if (std::abs(a - b) > 1e-12) return {false, "lambda=0 decay != cumulative"};
    }
  }

  TreatmentConfig cfg;
  cfg.delta = 10.0;
  cfg = resolve_thresholds(cfg, g, events);
  const TreatmentKind kinds[] = {
      TreatmentKind::kDynamicInteraction,  TreatmentKind::kCommonNeighbors,
      TreatmentKind::kDegreeSimilarity,    TreatmentKind::kTemporalProximity,
      TreatmentKind::kActivitySynchrony,   TreatmentKind::kInteractionFrequency,
      TreatmentKind::kKCoreTemporal,
  };
  std::mt19937_64 qgen(37);
  for (int q = 0; q < 10000; ++q) {
    const NodeId u = static_cast<NodeId>(uniform_index(qgen, 40));
    const NodeId v = static_cast<NodeId>(uniform_index(qgen, 40));
    const Time t = std::floor(uniform01(qgen) * 70.0);
    const TreatmentKind kind = kinds[q % 7];
    const auto [su, tu] = treatment_statistic(kind, u, v, t, 1.0, g, cfg);
    const auto [sv, tv] = treatment_statistic(kind, v, u, t, 1.0, g, cfg);
    const int a = su >= tu ? 1 : 0;
    const int b = sv >= tv ? 1 : 0;
    if (a != b) return {false, "treatment symmetry violated: " + to_string(kind)};
  }
  return {true,
          "1000 percentile multisets, lambda=0 identity at 1e-12, 10^4 symmetric "
          "queries over 7 kinds"};
}

// --------------------------------------------------------------------------
// 3. Counterfactual search suite.

Outcome criterion_search() {
  std::mt19937_64 gen(41);
  std::size_t found = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 10 + uniform_index(gen, 12);
    auto events = oracle::random_events(n, 60 + uniform_index(gen, 80), 20.0,
                                        4000 + trial);
    std::vector<double> feats(n * 3);
    std::mt19937_64 fgen(mix_seed(77, trial));
    for (double& x : feats) x = uniform_range(fgen, -1.0, 1.0);
    const TemporalGraph g(events, n, feats, 3);
    TreatmentConfig tcfg;
    const TreatmentRule rule(g, tcfg, 1.0);
    const ContextProjector proj = ContextProjector::identity(3);
    CfSearchConfig cfg;
    cfg.k_max = 1 + static_cast<int>(uniform_index(gen, 3));

    const NodeId u = static_cast<NodeId>(uniform_index(gen, n));
    NodeId v = static_cast<NodeId>(uniform_index(gen, n));
    while (v == u) v = static_cast<NodeId>(uniform_index(gen, n));
    const Time t = 5.0 + std::floor(uniform01(gen) * 20.0);

    const auto want = oracle::select_exhaustive(g, rule, proj, u, v, t, cfg.k_max, 0.0);
    const auto got = select_counterfactual(u, v, t, g, rule, proj, cfg);
    if (got.found != want.found) return {false, "feasibility mismatch"};
    if (!got.found) continue;
    ++found;
    if (got.hop != want.hop) return {false, "hop not layer-minimal"};
    if (std::abs(got.similarity - want.similarity) > 1e-9) {
      return {false, "similarity not within-layer maximal"};
    }
    if (rule(got.cf_u, got.cf_v, t) == rule(u, v, t)) {
      return {false, "treatment opposition violated"};
    }

    // Coverage over this instance's event list equals the feasibility count.
    if (trial % 20 == 0) {
      const AugmentResult aug = augment_split(events, g, rule, proj, cfg, 2);
      std::size_t feasible = 0;
      for (const TemporalEvent& e : events) {
        feasible += oracle::select_exhaustive(g, rule, proj, e.src, e.dst,
                                              strict_past_cutoff(e.timestamp), cfg.k_max,
                                              0.0)
                        .found;
      }
      if (aug.stats.found != feasible) return {false, "coverage != feasibility count"};
    }
  }
  return {true, "100 instances exhaustively verified (" + std::to_string(found) +
                    " with counterfactuals), coverage = feasibility"};
}

// --------------------------------------------------------------------------
// 4. Gradient check.

Outcome criterion_gradients() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> features = {0.5, -0.25, 1.0, 0.75, -0.5, 0.25};
  const TemporalGraph g({oracle::ev(0, 1, 1.0), oracle::ev(1, 2, 2.0),
                         oracle::ev(0, 2, 3.0), oracle::ev(0, 1, 4.0)},
                        3, features, 2);
  ModelConfig mc;
  mc.feature_dim = 2;
  mc.time_dim = 3;
  mc.hidden_dim = 4;
  mc.embed_dim = 3;
  mc.recent_neighbors = 2;
  const ModelParameters params = ModelParameters::initialized(mc, 12345);

  double worst = 0.0;
  for (const double alpha : {0.0, 0.5, 1.0}) {
    for (const bool with_cf : {false, true}) {
      TrainConfig cfg;
      cfg.alpha = alpha;
      cfg.tau = 0.8;
      std::vector<TrainExample> batch(2);
      batch[0] = {0, 1, 5.0, 2, with_cf, 0, 2, true};
      batch[1] = {1, 2, 4.5, 0, with_cf, 0, 1, false};
      const auto result = oracle::finite_difference_check(params, g, batch, cfg, 1e-5);
      worst = std::max(worst, result.worst_rel_error);
      if (result.worst_rel_error > 1e-4) {
        return {false, "rel error " + fmt(result.worst_rel_error) + " in " +
                           result.worst_tensor + " at alpha " + fmt(alpha)};
      }
    }
  }
  const double seconds = elapsed_s(start);
  return {seconds < 30.0, "worst relative error " + fmt(worst) + " over 6 settings, " +
                              fmt(seconds) + " s"};
}

// --------------------------------------------------------------------------
// 5. Loss-value oracles.

Outcome criterion_loss_values() {
  const double lf = factual_loss(std::vector{0.0}, std::vector{0.0});
  if (std::abs(lf - 2.0 * std::log(2.0)) > 1e-10) {
    return {false, "factual loss at zero scores: " + fmt(lf)};
  }
  ContrastiveItem item;
  item.z_pos = {1.0, 0.0};
  item.z_cf = {0.8, 0.6};                      // cos = 0.8
  item.z_neg = {-0.2, std::sqrt(1.0 - 0.04)};  // cos = -0.2
  item.cf_observed = true;
  const double lc = contrastive_loss(std::vector{item}, 1.0);
  if (std::abs(lc - 0.313262) > 1e-5) {
    return {false, "contrastive hand value: " + fmt(lc)};
  }
  return {true, "2 ln 2 within 1e-10, hand triple 0.313262 within 1e-5"};
}

// --------------------------------------------------------------------------
// 6. Metric oracles.

Outcome criterion_metrics() {
  std::mt19937_64 gen(53);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 50 + uniform_index(gen, 150);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = std::floor(uniform01(gen) * 30.0) / 30.0;
      labels[i] = uniform01(gen) < 0.35 ? 1 : 0;
      (labels[i] ? has_pos : has_neg) = true;
    }
    if (!has_pos) labels[0] = 1;
    if (!has_neg) labels[n - 1] = 0;
    if (std::abs(average_precision(scores, labels) -
                 oracle::average_precision(scores, labels)) > 1e-9) {
      return {false, "AP oracle mismatch"};
    }
    if (std::abs(auc_roc(scores, labels) - oracle::auc_trapezoid(scores, labels)) >
        1e-9) {
      return {false, "AUC oracle mismatch"};
    }
  }
  if (average_precision(std::vector{0.9, 0.8, 0.1}, std::vector{1, 1, 0}) != 1.0) {
    return {false, "perfect AP"};
  }
  if (auc_roc(std::vector{0.9, 0.8, 0.1, 0.0}, std::vector{1, 1, 0, 0}) != 1.0) {
    return {false, "perfect AUC"};
  }
  if (auc_roc(std::vector{0.4, 0.4, 0.4, 0.4}, std::vector{1, 0, 1, 0}) != 0.5) {
    return {false, "all-tied AUC"};
  }
  const double inverted =
      average_precision(std::vector{0.9, 0.8, 0.7, 0.0}, std::vector{0, 0, 0, 1});
  if (inverted != 0.25) return {false, "inverted AP"};
  return {true, "100 random vectors at 1e-9 plus exact closed forms"};
}

// --------------------------------------------------------------------------
// Shared synthetic dataset helpers for criteria 7-10.

TemporalGraph planted_dataset(std::size_t nodes, std::size_t candidates,
                              std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.nodes = nodes;
  cfg.communities = nodes / 50 == 0 ? 4 : nodes / 50;
  cfg.warmup_edges = nodes * 2;
  cfg.candidate_events = candidates;
  cfg.base_rate = 0.25;
  cfg.effect = 1.0;
  cfg.planted_threshold = 1.0;
  const SyntheticData data = generate_synthetic(cfg, seed);
  return TemporalGraph(data.events, data.num_nodes);
}

PipelineConfig acceptance_pipeline() {
  PipelineConfig cfg;
  cfg.treatment.percentile_p = 50.0;
  cfg.search.k_max = 2;
  cfg.search.embed_dim = 8;
  cfg.model.time_dim = 8;
  cfg.model.hidden_dim = 32;
  cfg.model.embed_dim = 16;
  cfg.model.recent_neighbors = 10;
  cfg.train.alpha = 0.9;
  cfg.train.tau = 1.0;
  cfg.train.batch_size = 256;
  cfg.train.epochs = 12;
  cfg.train.patience = 3;
  cfg.workers = 0;  // default pool, capped by CODCL_WORKERS
  return cfg;
}

// --------------------------------------------------------------------------
// 7. Leakage and determinism.

Outcome criterion_leakage_determinism() {
  const TemporalGraph raw = planted_dataset(120, 2000, 5);
  PipelineConfig cfg = acceptance_pipeline();
  cfg.train.epochs = 3;
  cfg.train.patience = 2;
  cfg.seeds = {1};

  // (a) theta and augmentation: full-dataset pipeline inputs vs a graph that
  // never contained validation/test events.
  const DataContext data = prepare_data(raw, cfg, 1);
  const AssignResult t_full = assign_all(data.train_events, data.train_graph,
                                         cfg.treatment);
  TemporalGraph stripped = raw.restricted_to(data.train_events);
  std::size_t dim = 0;
  auto feats = degree_bucket_features(stripped, &dim);
  stripped = stripped.with_node_features(std::move(feats), dim);
  const AssignResult t_stripped =
      assign_all(data.train_events, stripped, cfg.treatment);
  if (t_full.theta != t_stripped.theta) return {false, "theta changed"};
  for (std::size_t i = 0; i < t_full.assignments.size(); ++i) {
    if (t_full.assignments[i].statistic != t_stripped.assignments[i].statistic ||
        t_full.assignments[i].treatment != t_stripped.assignments[i].treatment) {
      return {false, "treatment assignments changed"};
    }
  }
  const ContextProjector proj = ContextProjector::seeded(
      data.featured.feature_dim(), cfg.search.embed_dim, cfg.search.seed);
  const TreatmentRule rule_full(data.train_graph, t_full.resolved, t_full.theta);
  const TreatmentRule rule_stripped(stripped, t_stripped.resolved, t_stripped.theta);
  const AugmentResult a_full =
      augment_split(data.train_events, data.train_graph, rule_full, proj, cfg.search, 1);
  const AugmentResult a_stripped =
      augment_split(data.train_events, stripped, rule_stripped, proj, cfg.search, 3);
  for (std::size_t i = 0; i < a_full.assignments.size(); ++i) {
    const auto& x = a_full.assignments[i];
    const auto& y = a_stripped.assignments[i];
    if (x.found != y.found || x.cf_u != y.cf_u || x.cf_v != y.cf_v ||
        x.similarity != y.similarity || x.hop != y.hop ||
        x.cf_observed != y.cf_observed) {
      return {false, "augmentation changed"};
    }
  }

  // (b) EvalReport bitwise equal across worker counts.
  PipelineConfig narrow = cfg;
  narrow.workers = 1;
  PipelineConfig wide = cfg;
  wide.workers = 4;
  const EvalReport r1 = run_experiment(raw, narrow);
  const EvalReport r4 = run_experiment(raw, wide);
  if (r1.to_text(false) != r4.to_text(false)) {
    return {false, "EvalReport changed with worker count"};
  }

  // (c) equal-seed checkpoints bitwise equal.
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "codcl_acceptance";
  fs::create_directories(dir);
  const AugmentResult augmentation = augment_split(
      data.train_events, data.train_graph, rule_full, proj, cfg.search, 2);
  const TrainedModel m1 = train_model(data, augmentation, cfg, 1);
  const TrainedModel m2 = train_model(data, augmentation, cfg, 1);
  const std::string p1 = (dir / "a.bin").string();
  const std::string p2 = (dir / "b.bin").string();
  save_checkpoint(p1, m1.params);
  save_checkpoint(p2, m2.params);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  fs::remove_all(dir);
  if (s1.str() != s2.str()) return {false, "equal-seed checkpoints differ"};
  return {true, "theta/augmentation stable under split deletion, report stable under "
                "worker counts, checkpoints bitwise equal"};
}

// --------------------------------------------------------------------------
// 8. Direction of effect.

Outcome criterion_direction_of_effect() {
  const auto start = std::chrono::steady_clock::now();
  const TemporalGraph raw = planted_dataset(500, 9000, 21);
  PipelineConfig cfg = acceptance_pipeline();
  cfg.seeds = {1, 2, 3, 4, 5};

  auto mean_ap = [&](const PipelineConfig& c) {
    return run_experiment(raw, c).transductive_ap().mean;
  };

  const double full = mean_ap(cfg);

  PipelineConfig no_cl = cfg;
  no_cl.train.disable_counterfactual = true;
  const double wo_cl = mean_ap(no_cl);

  PipelineConfig no_te = cfg;
  no_te.train.disable_time_encoding = true;
  const double wo_te = mean_ap(no_te);

  PipelineConfig no_contrast = cfg;
  no_contrast.train.disable_contrastive = true;
  const double wo_contrast = mean_ap(no_contrast);

  PipelineConfig no_sim = cfg;
  no_sim.train.disable_similarity = true;
  const double wo_sim = mean_ap(no_sim);

  const double seconds = elapsed_s(start);
  const std::string detail = "full " + fmt(full) + ", w/o CL " + fmt(wo_cl) +
                             ", w/o TE " + fmt(wo_te) + ", w/o contrast " +
                             fmt(wo_contrast) + ", w/o similarity " + fmt(wo_sim) +
                             ", " + fmt(seconds) + " s";
  if (seconds >= 1800.0) return {false, "over 30 min: " + detail};
  if (full < wo_cl) return {false, "augmented < baseline: " + detail};
  const double drop_cl = full - wo_cl;
  if (drop_cl < full - wo_te || drop_cl < full - wo_contrast ||
      drop_cl < full - wo_sim) {
    return {false, "w/o CL is not the largest drop: " + detail};
  }
  return {true, detail};
}

// --------------------------------------------------------------------------
// 9. Complexity scaling.

Outcome criterion_scaling() {
  auto mean_candidates = [](std::size_t degree) {
    const auto events = generate_regular_temporal(2000, degree, 100.0, 17);
    const TemporalGraph g(events, 2000);
    std::mt19937_64 gen(19);
    double total = 0.0;
    const int samples = 400;
    for (int i = 0; i < samples; ++i) {
      const NodeId u = static_cast<NodeId>(uniform_index(gen, 2000));
      total += static_cast<double>(g.khop_nodes(u, g.t_max(), 2, 0.0).size());
    }
    return total / samples;
  };
  const double at4 = mean_candidates(4);
  const double at8 = mean_candidates(8);
  const double ratio = at8 / at4;
  const double lo = 0.5 * 4.0, hi = 2.0 * 4.0;
  return {ratio >= lo && ratio <= hi,
          "mean 2-hop candidate set " + fmt(at4) + " (d=4) vs " + fmt(at8) +
              " (d=8), ratio " + fmt(ratio) + " in [" + fmt(lo) + ", " + fmt(hi) + "]"};
}

// --------------------------------------------------------------------------
// 10. Hyperparameter shape.

Outcome criterion_kmax_shape() {
  const TemporalGraph raw = planted_dataset(300, 5000, 33);
  PipelineConfig cfg = acceptance_pipeline();
  cfg.seeds = {1, 2, 3};
  double ap[4] = {0, 0, 0, 0};
  for (int k = 1; k <= 3; ++k) {
    PipelineConfig cell = cfg;
    cell.search.k_max = k;
    ap[k] = run_experiment(raw, cell).transductive_ap().mean;
  }
  const std::string detail = "AP(k=1) " + fmt(ap[1]) + ", AP(k=2) " + fmt(ap[2]) +
                             ", AP(k=3) " + fmt(ap[3]);
  if (ap[2] < ap[1] - 0.005) return {false, "no gain at k=2: " + detail};
  if (std::abs(ap[3] - ap[2]) > 0.02) return {false, "no saturation at k=3: " + detail};
  return {true, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "graph-query oracle suite", criterion_graph_queries},
      {2, "treatment suite", criterion_treatments},
      {3, "counterfactual search suite", criterion_search},
      {4, "gradient check", criterion_gradients},
      {5, "loss-value oracles", criterion_loss_values},
      {6, "metric oracles", criterion_metrics},
      {7, "leakage and determinism", criterion_leakage_determinism},
      {8, "direction of effect", criterion_direction_of_effect},
      {9, "complexity scaling", criterion_scaling},
      {10, "hyperparameter shape (k_max sweep)", criterion_kmax_shape},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& err) {
      outcome = {false, std::string("exception: ") + err.what()};
    }
    std::printf("[%s] criterion %2d (%s): %s\n", outcome.pass ? "PASS" : "FAIL",
                c.number, c.name, outcome.detail.c_str());
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
