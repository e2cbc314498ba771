#include "codcl/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "codcl/rng.hpp"

namespace codcl {

namespace {

// Seed-stream tags; every consumer derives its own independent stream.
constexpr std::uint64_t kMaskStream = 0x6d61736bULL;
constexpr std::uint64_t kInitStream = 0x696e6974ULL;
constexpr std::uint64_t kShuffleStream = 0x73687566ULL;
constexpr std::uint64_t kTrainNegStream = 0x746e6567ULL;
constexpr std::uint64_t kValNegStream = 0x76616c6eULL;
constexpr std::uint64_t kTransNegStream = 0x7472616eULL;
constexpr std::uint64_t kInducNegStream = 0x696e6475ULL;
constexpr std::uint64_t kRefreshStream = 0x72656672ULL;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(acc / static_cast<double>(values.size() - 1));
  }
  return s;
}

MetricSummary summarize_setting(const std::vector<SeedOutcome>& outcomes,
                                bool inductive, bool auc) {
  std::vector<double> values;
  for (const SeedOutcome& o : outcomes) {
    const SettingMetrics& m = inductive ? o.inductive : o.transductive;
    if (!m.applicable) continue;
    values.push_back(auc ? m.auc : m.ap);
  }
  return summarize(values);
}

}  // namespace

void PipelineConfig::validate() const {
  split.validate();
  treatment.validate();
  search.validate();
  model.validate();
  train.validate();
  if (!(inductive_fraction > 0.0 && inductive_fraction < 1.0)) {
    throw ConfigError("inductive fraction must lie in (0, 1)");
  }
  if (seeds.empty()) throw ConfigError("at least one seed is required");
}

MetricSummary EvalReport::transductive_ap() const {
  return summarize_setting(per_seed, false, false);
}
MetricSummary EvalReport::transductive_auc() const {
  return summarize_setting(per_seed, false, true);
}
MetricSummary EvalReport::inductive_ap() const {
  return summarize_setting(per_seed, true, false);
}
MetricSummary EvalReport::inductive_auc() const {
  return summarize_setting(per_seed, true, true);
}
MetricSummary EvalReport::coverage() const {
  std::vector<double> values;
  for (const SeedOutcome& o : per_seed) values.push_back(o.coverage);
  return summarize(values);
}

std::string EvalReport::to_text(bool include_timings) const {
  std::string out;
  auto line = [&](const std::string& key, const std::string& value) {
    out += key + ": " + value + "\n";
  };
  line("seeds", std::to_string(per_seed.size()));
  const auto tap = transductive_ap();
  const auto tauc = transductive_auc();
  line("transductive.ap.mean", format_double(tap.mean));
  line("transductive.ap.std", format_double(tap.stddev));
  line("transductive.auc.mean", format_double(tauc.mean));
  line("transductive.auc.std", format_double(tauc.stddev));
  const auto iap = inductive_ap();
  const auto iauc = inductive_auc();
  const bool any_inductive =
      std::any_of(per_seed.begin(), per_seed.end(),
                  [](const SeedOutcome& o) { return o.inductive.applicable; });
  if (any_inductive) {
    line("inductive.ap.mean", format_double(iap.mean));
    line("inductive.ap.std", format_double(iap.stddev));
    line("inductive.auc.mean", format_double(iauc.mean));
    line("inductive.auc.std", format_double(iauc.stddev));
  } else {
    line("inductive", "not-applicable");
  }
  line("coverage.mean", format_double(coverage().mean));
  for (const SeedOutcome& o : per_seed) {
    const std::string prefix = "seed." + std::to_string(o.seed);
    line(prefix + ".transductive.ap", format_double(o.transductive.ap));
    line(prefix + ".transductive.auc", format_double(o.transductive.auc));
    if (o.inductive.applicable) {
      line(prefix + ".inductive.ap", format_double(o.inductive.ap));
      line(prefix + ".inductive.auc", format_double(o.inductive.auc));
    } else {
      line(prefix + ".inductive", "not-applicable");
    }
    line(prefix + ".coverage", format_double(o.coverage));
    line(prefix + ".theta", format_double(o.theta));
    line(prefix + ".epochs", std::to_string(o.epochs_run));
    line(prefix + ".best_val_ap", format_double(o.best_val_ap));
    if (include_timings) {
      line(prefix + ".timing.split_s", format_double(o.seconds.split));
      line(prefix + ".timing.treat_s", format_double(o.seconds.treat));
      line(prefix + ".timing.augment_s", format_double(o.seconds.augment));
      line(prefix + ".timing.train_s", format_double(o.seconds.train));
      line(prefix + ".timing.evaluate_s", format_double(o.seconds.evaluate));
    }
  }
  return out;
}

std::string EvalReport::to_json_lines() const {
  std::string out;
  for (const SeedOutcome& o : per_seed) {
    for (const bool inductive : {false, true}) {
      const SettingMetrics& m = inductive ? o.inductive : o.transductive;
      nlohmann::json j;
      j["seed"] = o.seed;
      j["setting"] = inductive ? "inductive" : "transductive";
      j["applicable"] = m.applicable;
      if (m.applicable) {
        j["ap"] = m.ap;
        j["auc"] = m.auc;
        j["positives"] = m.positives;
      }
      j["coverage"] = o.coverage;
      j["theta"] = o.theta;
      j["epochs"] = o.epochs_run;
      out += j.dump() + "\n";
    }
  }
  return out;
}

std::vector<double> degree_bucket_features(const TemporalGraph& train_graph,
                                           std::size_t* feature_dim) {
  constexpr std::size_t kBuckets = 8;
  if (feature_dim != nullptr) *feature_dim = kBuckets;
  std::vector<double> features(train_graph.num_nodes() * kBuckets, 0.0);
  for (NodeId u = 0; u < train_graph.num_nodes(); ++u) {
    const double degree = static_cast<double>(train_graph.degree_at(u, train_graph.t_max()));
    const std::size_t bucket =
        std::min<std::size_t>(kBuckets - 1,
                              static_cast<std::size_t>(std::floor(std::log2(degree + 1.0))));
    features[u * kBuckets + bucket] = 1.0;
  }
  return features;
}

DataContext prepare_data(const TemporalGraph& raw, const PipelineConfig& config,
                         std::uint64_t seed) {
  DataContext ctx;
  ctx.split = chronological_split(raw.events(), config.split);
  ctx.mask = make_inductive_mask(ctx.split, config.inductive_fraction,
                                 mix_seed(seed, kMaskStream));
  ctx.train_events = remove_masked_training(ctx.split.train, ctx.mask);
  ctx.split.spec.inductive_mask = ctx.mask;

  TemporalGraph train_graph = raw.restricted_to(ctx.train_events);
  if (raw.feature_dim() == 0) {
    // Featureless dataset: derive degree buckets from the training split so
    // later splits cannot influence treatment or augmentation.
    std::size_t dim = 0;
    std::vector<double> features = degree_bucket_features(train_graph, &dim);
    ctx.train_graph = train_graph.with_node_features(features, dim);
    ctx.featured = raw.with_node_features(std::move(features), dim);
  } else {
    ctx.train_graph = std::move(train_graph);
    ctx.featured = raw;
  }
  return ctx;
}

namespace {

std::vector<TrainExample> assemble_examples(std::span<const TemporalEvent> events,
                                            std::span<const std::size_t> order,
                                            std::size_t begin, std::size_t end,
                                            const AugmentResult& augmentation,
                                            const TemporalGraph& graph,
                                            std::uint64_t neg_seed, bool use_cf) {
  std::vector<TemporalEvent> batch_events;
  batch_events.reserve(end - begin);
  for (std::size_t k = begin; k < end; ++k) batch_events.push_back(events[order[k]]);
  const std::vector<NegativeSample> negatives =
      sample_negatives(batch_events, graph, neg_seed);

  std::vector<TrainExample> examples(end - begin);
  for (std::size_t k = begin; k < end; ++k) {
    const std::size_t i = order[k];
    TrainExample& ex = examples[k - begin];
    ex.u = events[i].src;
    ex.v = events[i].dst;
    ex.t = events[i].timestamp;
    ex.neg_v = negatives[k - begin].v;
    if (use_cf && i < augmentation.assignments.size()) {
      const CounterfactualAssignment& cf = augmentation.assignments[i];
      if (cf.found) {
        ex.has_cf = true;
        ex.cf_u = cf.cf_u;
        ex.cf_v = cf.cf_v;
        ex.cf_observed = cf.cf_observed;
      }
    }
  }
  return examples;
}

}  // namespace

TrainedModel train_model(const DataContext& data, const AugmentResult& augmentation,
                         const PipelineConfig& config, std::uint64_t seed,
                         const TreatmentRule* rule, const ContextProjector* projector) {
  PipelineConfig cfg = config;
  cfg.model.feature_dim = data.featured.feature_dim();
  cfg.model.disable_time_encoding = cfg.train.disable_time_encoding;
  cfg.model.validate();
  cfg.train.validate();

  TrainedModel out{ModelParameters::initialized(cfg.model, mix_seed(seed, kInitStream))};
  AdamOptimizer optimizer(out.params, cfg.train);

  const std::span<const TemporalEvent> events = data.train_events;
  const bool use_cf = !cfg.train.disable_counterfactual;
  const AugmentResult* cf_source = &augmentation;
  AugmentResult refreshed;

  ModelParameters best_params = out.params;
  double best_ap = -1.0;
  int wait = 0;

  std::vector<std::size_t> order(events.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    if (use_cf && cfg.train.refresh_cf_per_epoch && rule != nullptr &&
        projector != nullptr && epoch > 0) {
      CfSearchConfig refresh_cfg = cfg.search;
      refresh_cfg.seed = mix_seed(cfg.search.seed, kRefreshStream,
                                  static_cast<std::uint64_t>(epoch));
      refreshed = augment_split(events, data.train_graph, *rule, *projector, refresh_cfg,
                                cfg.workers);
      cf_source = &refreshed;
    }

    std::mt19937_64 shuffle_gen(
        mix_seed(mix_seed(seed, kShuffleStream), static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[uniform_index(shuffle_gen, i)]);
    }

    EpochLog log;
    log.epoch = epoch;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < events.size(); begin += cfg.train.batch_size) {
      const std::size_t end = std::min(events.size(), begin + cfg.train.batch_size);
      const std::uint64_t neg_seed =
          mix_seed(mix_seed(seed, kTrainNegStream), static_cast<std::uint64_t>(epoch),
                   static_cast<std::uint64_t>(batches));
      const std::vector<TrainExample> batch = assemble_examples(
          events, order, begin, end, *cf_source, data.train_graph, neg_seed, use_cf);
      const LossBreakdown losses =
          train_step(out.params, optimizer, data.train_graph, batch, cfg.train);
      log.factual += losses.factual;
      log.contrastive += losses.contrastive;
      log.total += losses.total;
      ++batches;
    }
    if (batches > 0) {
      log.factual /= static_cast<double>(batches);
      log.contrastive /= static_cast<double>(batches);
      log.total /= static_cast<double>(batches);
    }

    const ScoredEvents val = score_events(out.params, data.featured, data.split.val,
                                          mix_seed(cfg.negatives_seed, kValNegStream),
                                          cfg.workers);
    log.val_ap = average_precision(val.scores, val.labels);
    out.log.push_back(log);
    out.epochs_run = epoch + 1;

    if (log.val_ap > best_ap) {
      best_ap = log.val_ap;
      best_params = out.params;
      wait = 0;
    } else if (++wait >= cfg.train.patience) {
      break;
    }
  }

  out.params = std::move(best_params);
  out.best_val_ap = best_ap;
  return out;
}

ScoredEvents score_events(const ModelParameters& params, const TemporalGraph& graph,
                          std::span<const TemporalEvent> events,
                          std::uint64_t negatives_seed, std::size_t workers) {
  ScoredEvents out;
  const std::size_t n = events.size();
  out.scores.assign(2 * n, 0.0);
  out.labels.assign(2 * n, 0);
  if (n == 0) return out;
  const std::vector<NegativeSample> negatives =
      sample_negatives(events, graph, negatives_seed);

  const std::size_t pool = std::min(effective_workers(workers), n);
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= n) break;
      const TemporalEvent& e = events[i];
      const Vec h_u = embed(e.src, e.timestamp, graph, params);
      const Vec h_v = embed(e.dst, e.timestamp, graph, params);
      const Vec h_n = embed(negatives[i].v, e.timestamp, graph, params);
      out.scores[i] = predict_score(edge_representation(h_u, h_v), params);
      out.scores[n + i] = predict_score(edge_representation(h_u, h_n), params);
      out.labels[i] = 1;
      out.labels[n + i] = 0;
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
  return out;
}

SeedOutcome run_single(const TemporalGraph& raw, const PipelineConfig& config,
                       std::uint64_t seed) {
  config.validate();
  SeedOutcome outcome;
  outcome.seed = seed;

  auto t0 = std::chrono::steady_clock::now();
  DataContext data = prepare_data(raw, config, seed);
  outcome.seconds.split = seconds_since(t0);

  const bool use_cf = !config.train.disable_counterfactual;
  AugmentResult augmentation;
  TreatmentConfig resolved = config.treatment;
  double theta = 0.0;
  ContextProjector projector = ContextProjector::seeded(
      data.featured.feature_dim(), config.search.embed_dim,
      config.search.seed != 0 ? config.search.seed : mix_seed(seed, 0x5ea5c4ULL));

  if (use_cf) {
    t0 = std::chrono::steady_clock::now();
    AssignResult treatments = assign_all(data.train_events, data.train_graph,
                                         config.treatment);
    theta = treatments.theta;
    resolved = treatments.resolved;
    outcome.seconds.treat = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    TreatmentRule rule(data.train_graph, resolved, theta);
    CfSearchConfig search_cfg = config.search;
    if (config.train.disable_similarity) {
      search_cfg.selection = CfSearchConfig::Selection::kUniformRandom;
      search_cfg.seed = mix_seed(seed, 0x44697373ULL);
    }
    augmentation = augment_split(data.train_events, data.train_graph, rule, projector,
                                 search_cfg, config.workers);
    outcome.seconds.augment = seconds_since(t0);
    outcome.coverage = augmentation.stats.coverage;
    outcome.mean_similarity = augmentation.stats.mean_similarity;
    outcome.theta = theta;
  }

  t0 = std::chrono::steady_clock::now();
  TreatmentRule rule(data.train_graph, resolved, theta);
  TrainedModel model = train_model(data, augmentation, config, seed, &rule, &projector);
  outcome.seconds.train = seconds_since(t0);
  outcome.epochs_run = model.epochs_run;
  outcome.best_val_ap = model.best_val_ap;

  t0 = std::chrono::steady_clock::now();
  evaluate_test(model.params, data, config, outcome);
  outcome.seconds.evaluate = seconds_since(t0);
  return outcome;
}

void evaluate_test(const ModelParameters& params, const DataContext& data,
                   const PipelineConfig& config, SeedOutcome& outcome) {
  // Transductive: both endpoints carried by surviving training events.
  std::unordered_set<NodeId> seen;
  for (const TemporalEvent& e : data.train_events) {
    seen.insert(e.src);
    seen.insert(e.dst);
  }
  std::unordered_set<NodeId> masked(data.mask.begin(), data.mask.end());
  std::vector<TemporalEvent> trans_events, induc_events;
  for (const TemporalEvent& e : data.split.test) {
    if (seen.count(e.src) && seen.count(e.dst)) trans_events.push_back(e);
    if (masked.count(e.src) || masked.count(e.dst)) induc_events.push_back(e);
  }
  auto evaluate_setting = [&](std::span<const TemporalEvent> events,
                              std::uint64_t stream) {
    SettingMetrics m;
    if (events.empty()) return m;
    const ScoredEvents scored =
        score_events(params, data.featured, events,
                     mix_seed(config.negatives_seed, stream), config.workers);
    m.applicable = true;
    m.positives = events.size();
    m.ap = average_precision(scored.scores, scored.labels);
    m.auc = auc_roc(scored.scores, scored.labels);
    return m;
  };
  outcome.transductive = evaluate_setting(trans_events, kTransNegStream);
  outcome.inductive = evaluate_setting(induc_events, kInducNegStream);
}

EvalReport run_experiment(const TemporalGraph& raw, const PipelineConfig& config) {
  config.validate();
  EvalReport report;
  for (std::uint64_t seed : config.seeds) {
    report.per_seed.push_back(run_single(raw, config, seed));
  }
  return report;
}

}  // namespace codcl
