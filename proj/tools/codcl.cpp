// codcl: counterfactual data augmentation and training for continuous-time
// dynamic link prediction. Every paper-style experiment is a subcommand over
// a declarative config file; equal config + seed reproduces artifacts
// bit-for-bit.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "codcl/checkpoint.hpp"
#include "codcl/config.hpp"
#include "codcl/pipeline.hpp"
#include "codcl/rng.hpp"

namespace fs = std::filesystem;
using namespace codcl;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool emit_csv = false;
  bool export_json = false;
};

std::string fmt(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string hex64(std::uint64_t value) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig load_config(const GlobalOptions& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) cfg = load_run_config(opts.config_path);
  if (opts.seed_set) cfg.pipeline.seeds = {opts.seed};
  return cfg;
}

std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a(dump_run_config(cfg)); }

std::uint64_t dataset_cache_key(const RunConfig& cfg) {
  const std::string bytes = read_file_bytes(cfg.dataset.path);
  std::string tag = cfg.dataset.columns + "|" +
                    (cfg.dataset.bipartite_override
                         ? (cfg.dataset.bipartite ? "b1" : "b0")
                         : "ba") +
                    "|" + (cfg.dataset.self_loops ? "s1" : "s0");
  return fnv1a(bytes) ^ fnv1a(tag);
}

void write_manifest(const fs::path& artifact, const std::string& command,
                    const RunConfig& cfg, bool with_dataset) {
  nlohmann::json j;
  j["tool"] = "codcl";
  j["format_version"] = 1;
  j["command"] = command;
  j["config_hash"] = hex64(config_hash(cfg));
  if (with_dataset && !cfg.dataset.path.empty()) {
    j["dataset"] = cfg.dataset.path;
    j["dataset_hash"] = hex64(fnv1a(read_file_bytes(cfg.dataset.path)));
  }
  j["seeds"] = cfg.pipeline.seeds;
  std::ofstream out(artifact.string() + ".manifest.json");
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Parsed-graph cache (the ingest artifact).

constexpr char kCacheMagic[7] = {'C', 'O', 'D', 'C', 'L', 'G', '1'};

template <typename T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error("graph cache truncated");
  return value;
}

fs::path cache_path(const GlobalOptions& opts, const RunConfig& cfg) {
  return fs::path(opts.out_dir) / "cache" /
         ("graph-" + hex64(dataset_cache_key(cfg)) + ".bin");
}

void save_graph_cache(const fs::path& path, const TemporalGraph& graph) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write graph cache: " + path.string());
  out.write(kCacheMagic, sizeof(kCacheMagic));
  put<std::uint64_t>(out, graph.num_nodes());
  put<std::uint64_t>(out, graph.num_events());
  put<std::uint64_t>(out, graph.edge_feature_dim());
  put<std::uint8_t>(out, graph.self_loops_enabled() ? 1 : 0);
  for (const TemporalEvent& e : graph.events()) {
    put<std::uint32_t>(out, e.src);
    put<std::uint32_t>(out, e.dst);
    put<double>(out, e.timestamp);
    put<double>(out, e.weight);
    put<std::int32_t>(out, e.label);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.edge_features.size()));
    for (double f : e.edge_features) put<double>(out, f);
  }
  for (NodeId u = 0; u < graph.num_nodes(); ++u) {
    const std::string& id = graph.original_id(u);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
}

TemporalGraph load_graph_cache(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open graph cache: " + path.string());
  char magic[7];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCacheMagic, sizeof(kCacheMagic)) != 0) {
    throw Error("not a codcl graph cache: " + path.string());
  }
  const auto num_nodes = get<std::uint64_t>(in);
  const auto num_events = get<std::uint64_t>(in);
  get<std::uint64_t>(in);  // edge feature dim, implied by the events
  const bool self_loops = get<std::uint8_t>(in) != 0;
  std::vector<TemporalEvent> events(num_events);
  for (auto& e : events) {
    e.src = get<std::uint32_t>(in);
    e.dst = get<std::uint32_t>(in);
    e.timestamp = get<double>(in);
    e.weight = get<double>(in);
    e.label = get<std::int32_t>(in);
    const auto nf = get<std::uint32_t>(in);
    e.edge_features.resize(nf);
    for (auto& f : e.edge_features) f = get<double>(in);
  }
  std::vector<std::string> ids(num_nodes);
  for (auto& id : ids) {
    const auto len = get<std::uint32_t>(in);
    id.resize(len);
    in.read(id.data(), len);
  }
  return TemporalGraph(std::move(events), num_nodes, {}, 0, std::move(ids), self_loops);
}

TemporalGraph require_graph(const GlobalOptions& opts, const RunConfig& cfg) {
  if (cfg.dataset.path.empty()) {
    throw ConfigError("dataset.path is not set; point the config at an event CSV");
  }
  const fs::path path = cache_path(opts, cfg);
  if (!fs::exists(path)) {
    throw Error("no ingest cache for this dataset/config; run `codcl ingest` first");
  }
  return load_graph_cache(path);
}

// ---------------------------------------------------------------------------
// Stage artifacts.

void write_treatments_csv(const fs::path& path, const AssignResult& result) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "u,v,t,statistic,theta,treatment\n";
  for (const TreatmentAssignment& a : result.assignments) {
    out << a.u << "," << a.v << "," << fmt(a.query_time) << "," << fmt(a.statistic) << ","
        << fmt(a.threshold) << "," << a.treatment << "\n";
  }
}

void write_augment_csv(const fs::path& path, const AugmentResult& result) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "u,v,t,cf_u,cf_v,similarity,hop,cf_observed\n";
  for (const CounterfactualAssignment& a : result.assignments) {
    out << a.u << "," << a.v << "," << fmt(a.t) << ",";
    if (a.found) {
      out << a.cf_u << "," << a.cf_v << "," << fmt(a.similarity) << "," << a.hop << ","
          << (a.cf_observed ? 1 : 0);
    } else {
      out << ",,,,";
    }
    out << "\n";
  }
}

AugmentResult read_augment_csv(const fs::path& path, int k_max) {
  std::ifstream in(path);
  if (!in) {
    throw Error("missing augmentation artifact " + path.string() +
                "; run `codcl augment` first");
  }
  AugmentResult result;
  result.stats.hop_histogram.assign(static_cast<std::size_t>(k_max) + 1, 0);
  std::string line;
  std::getline(in, line);  // header
  double similarity_sum = 0.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    fields.resize(8);
    CounterfactualAssignment a;
    a.u = static_cast<NodeId>(std::stoul(fields[0]));
    a.v = static_cast<NodeId>(std::stoul(fields[1]));
    a.t = std::stod(fields[2]);
    if (!fields[3].empty()) {
      a.found = true;
      a.cf_u = static_cast<NodeId>(std::stoul(fields[3]));
      a.cf_v = static_cast<NodeId>(std::stoul(fields[4]));
      a.similarity = std::stod(fields[5]);
      a.hop = std::stoi(fields[6]);
      a.cf_observed = fields[7] == "1";
      ++result.stats.found;
      similarity_sum += a.similarity;
      if (a.hop >= 0 && a.hop < static_cast<int>(result.stats.hop_histogram.size())) {
        ++result.stats.hop_histogram[static_cast<std::size_t>(a.hop)];
      }
    }
    result.assignments.push_back(a);
  }
  result.stats.total = result.assignments.size();
  result.stats.coverage =
      result.stats.total == 0
          ? 0.0
          : static_cast<double>(result.stats.found) / static_cast<double>(result.stats.total);
  result.stats.mean_similarity =
      result.stats.found == 0 ? 0.0
                              : similarity_sum / static_cast<double>(result.stats.found);
  return result;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

// ---------------------------------------------------------------------------
// Commands.

int cmd_ingest(const GlobalOptions& opts, RunConfig cfg, const std::string& path_arg) {
  if (!path_arg.empty()) cfg.dataset.path = path_arg;
  if (cfg.dataset.path.empty()) {
    throw ConfigError("no dataset given: pass a path or set dataset.path");
  }
  const IngestConfig ingest_cfg = resolve_ingest_config(cfg.dataset);
  const TemporalGraph graph = ingest_file(cfg.dataset.path, ingest_cfg);
  const fs::path cache = cache_path(opts, cfg);
  save_graph_cache(cache, graph);
  write_manifest(cache, "ingest", cfg, true);

  std::cout << "ingested " << graph.num_events() << " events, " << graph.num_nodes()
            << " nodes\n";
  std::cout << "time span: [" << fmt(graph.t_min()) << ", " << fmt(graph.t_max())
            << "]\n";
  std::cout << "edge feature dim: " << graph.edge_feature_dim() << "\n";
  std::cout << "node feature dim: " << graph.feature_dim()
            << (graph.feature_dim() == 0 ? " (degree buckets derived per run)" : "")
            << "\n";
  std::cout << "cache: " << cache.string() << "\n";
  return 0;
}

int cmd_treat(const GlobalOptions& opts, const RunConfig& cfg) {
  const TemporalGraph graph = require_graph(opts, cfg);
  const std::uint64_t seed = cfg.pipeline.seeds.front();
  const DataContext data = prepare_data(graph, cfg.pipeline, seed);
  const AssignResult result =
      assign_all(data.train_events, data.train_graph, cfg.pipeline.treatment);
  const fs::path path = fs::path(opts.out_dir) / "treatments.csv";
  write_treatments_csv(path, result);
  write_manifest(path, "treat", cfg, true);
  std::size_t treated = 0;
  for (const auto& a : result.assignments) treated += a.treatment;
  std::cout << "treatments: " << result.assignments.size() << " events, theta "
            << fmt(result.theta) << ", treated fraction "
            << fmt(result.assignments.empty()
                       ? 0.0
                       : static_cast<double>(treated) / result.assignments.size())
            << "\n";
  std::cout << "artifact: " << path.string() << "\n";
  return 0;
}

int cmd_augment(const GlobalOptions& opts, const RunConfig& cfg) {
  const fs::path treat_path = fs::path(opts.out_dir) / "treatments.csv";
  if (!fs::exists(treat_path)) {
    throw Error("missing treatment artifact " + treat_path.string() +
                "; run `codcl treat` first");
  }
  const TemporalGraph graph = require_graph(opts, cfg);
  const std::uint64_t seed = cfg.pipeline.seeds.front();
  const DataContext data = prepare_data(graph, cfg.pipeline, seed);
  const AssignResult treatments =
      assign_all(data.train_events, data.train_graph, cfg.pipeline.treatment);
  const TreatmentRule rule(data.train_graph, treatments.resolved, treatments.theta);
  const ContextProjector projector = ContextProjector::seeded(
      data.featured.feature_dim(), cfg.pipeline.search.embed_dim, cfg.pipeline.search.seed);
  const AugmentResult result =
      augment_split(data.train_events, data.train_graph, rule, projector,
                    cfg.pipeline.search, cfg.pipeline.workers);
  const fs::path path = fs::path(opts.out_dir) / "augment.csv";
  write_augment_csv(path, result);
  write_manifest(path, "augment", cfg, true);
  std::cout << "augmented " << result.stats.total << " events: coverage "
            << fmt(result.stats.coverage) << ", mean similarity "
            << fmt(result.stats.mean_similarity) << "\n";
  std::cout << "hop histogram:";
  for (std::size_t h = 1; h < result.stats.hop_histogram.size(); ++h) {
    std::cout << " " << h << ":" << result.stats.hop_histogram[h];
  }
  std::cout << "\nartifact: " << path.string() << "\n";
  return 0;
}

int cmd_train(const GlobalOptions& opts, const RunConfig& cfg) {
  const TemporalGraph graph = require_graph(opts, cfg);
  const std::uint64_t seed = cfg.pipeline.seeds.front();
  const DataContext data = prepare_data(graph, cfg.pipeline, seed);

  AugmentResult augmentation;
  if (!cfg.pipeline.train.disable_counterfactual) {
    augmentation = read_augment_csv(fs::path(opts.out_dir) / "augment.csv",
                                    cfg.pipeline.search.k_max);
    if (augmentation.assignments.size() != data.train_events.size()) {
      throw Error("augmentation artifact does not match the training split (" +
                  std::to_string(augmentation.assignments.size()) + " rows vs " +
                  std::to_string(data.train_events.size()) +
                  " events); re-run `codcl augment` with this config");
    }
    for (std::size_t i = 0; i < data.train_events.size(); ++i) {
      const auto& e = data.train_events[i];
      const auto& a = augmentation.assignments[i];
      if (a.u != e.src || a.v != e.dst || a.t != e.timestamp) {
        throw Error("augmentation artifact row " + std::to_string(i + 1) +
                    " does not match the training split; re-run `codcl augment`");
      }
    }
  }

  const AssignResult treatments =
      cfg.pipeline.train.disable_counterfactual
          ? AssignResult{}
          : assign_all(data.train_events, data.train_graph, cfg.pipeline.treatment);
  const TreatmentRule rule(data.train_graph,
                           cfg.pipeline.train.disable_counterfactual
                               ? cfg.pipeline.treatment
                               : treatments.resolved,
                           treatments.theta);
  const ContextProjector projector = ContextProjector::seeded(
      data.featured.feature_dim(), cfg.pipeline.search.embed_dim, cfg.pipeline.search.seed);

  const TrainedModel model =
      train_model(data, augmentation, cfg.pipeline, seed, &rule, &projector);

  const fs::path ckpt = fs::path(opts.out_dir) / "checkpoint.bin";
  save_checkpoint(ckpt.string(), model.params);
  write_manifest(ckpt, "train", cfg, true);
  if (opts.export_json) {
    export_parameters_json((fs::path(opts.out_dir) / "checkpoint.json").string(),
                           model.params);
  }

  std::string log_lines;
  for (const EpochLog& log : model.log) {
    nlohmann::json j;
    j["epoch"] = log.epoch;
    j["factual"] = log.factual;
    j["contrastive"] = log.contrastive;
    j["total"] = log.total;
    j["val_ap"] = log.val_ap;
    log_lines += j.dump() + "\n";
  }
  write_text(fs::path(opts.out_dir) / "train_log.jsonl", log_lines);

  SeedOutcome outcome;
  outcome.seed = seed;
  outcome.coverage = augmentation.stats.coverage;
  outcome.mean_similarity = augmentation.stats.mean_similarity;
  outcome.theta = treatments.theta;
  outcome.epochs_run = model.epochs_run;
  outcome.best_val_ap = model.best_val_ap;
  evaluate_test(model.params, data, cfg.pipeline, outcome);
  EvalReport report;
  report.per_seed.push_back(outcome);
  write_text(fs::path(opts.out_dir) / "train_report.txt", report.to_text(false));
  write_text(fs::path(opts.out_dir) / "train_report.jsonl", report.to_json_lines());

  std::cout << "trained " << model.epochs_run << " epochs, best val AP "
            << fmt(model.best_val_ap) << "\n";
  std::cout << report.to_text(true);
  std::cout << "artifact: " << ckpt.string() << "\n";
  return 0;
}

int cmd_eval(const GlobalOptions& opts, const RunConfig& cfg) {
  const fs::path ckpt = fs::path(opts.out_dir) / "checkpoint.bin";
  if (!fs::exists(ckpt)) {
    throw Error("missing checkpoint artifact " + ckpt.string() +
                "; run `codcl train` first");
  }
  const TemporalGraph graph = require_graph(opts, cfg);
  const std::uint64_t seed = cfg.pipeline.seeds.front();
  const DataContext data = prepare_data(graph, cfg.pipeline, seed);
  const ModelParameters params = load_checkpoint(ckpt.string());

  SeedOutcome outcome;
  outcome.seed = seed;
  evaluate_test(params, data, cfg.pipeline, outcome);
  EvalReport report;
  report.per_seed.push_back(outcome);
  const fs::path path = fs::path(opts.out_dir) / "eval_report.txt";
  write_text(path, report.to_text(false));
  write_text(fs::path(opts.out_dir) / "eval_report.jsonl", report.to_json_lines());
  write_manifest(path, "eval", cfg, true);

  if (opts.emit_csv) {
    std::ofstream csv(fs::path(opts.out_dir) / "eval_scores.csv");
    csv << "setting,score,label\n";
    std::unordered_set<NodeId> masked(data.mask.begin(), data.mask.end());
    auto emit = [&](const char* setting, std::span<const TemporalEvent> events,
                    std::uint64_t stream) {
      if (events.empty()) return;
      const ScoredEvents scored =
          score_events(params, data.featured, events,
                       mix_seed(cfg.pipeline.negatives_seed, stream), cfg.pipeline.workers);
      for (std::size_t i = 0; i < scored.scores.size(); ++i) {
        csv << setting << "," << fmt(scored.scores[i]) << "," << scored.labels[i] << "\n";
      }
    };
    std::unordered_set<NodeId> seen;
    for (const TemporalEvent& e : data.train_events) {
      seen.insert(e.src);
      seen.insert(e.dst);
    }
    std::vector<TemporalEvent> trans_events, induc_events;
    for (const TemporalEvent& e : data.split.test) {
      if (seen.count(e.src) && seen.count(e.dst)) trans_events.push_back(e);
      if (masked.count(e.src) || masked.count(e.dst)) induc_events.push_back(e);
    }
    emit("transductive", trans_events, 0x7472616eULL);
    emit("inductive", induc_events, 0x696e6475ULL);
  }

  std::cout << report.to_text(true);
  std::cout << "artifact: " << path.string() << "\n";
  return 0;
}

TemporalGraph load_or_ingest(const GlobalOptions& opts, const RunConfig& cfg) {
  const fs::path path = cache_path(opts, cfg);
  if (fs::exists(path)) return load_graph_cache(path);
  const TemporalGraph graph = ingest_file(cfg.dataset.path, resolve_ingest_config(cfg.dataset));
  save_graph_cache(path, graph);
  return graph;
}

int cmd_sweep(const GlobalOptions& opts, const RunConfig& cfg) {
  if (cfg.sweep.empty()) {
    throw ConfigError("sweep grid is empty: set sweep.p, sweep.k_max or sweep.alpha");
  }
  const TemporalGraph graph = load_or_ingest(opts, cfg);
  std::vector<double> ps = cfg.sweep.percentiles;
  std::vector<int> ks = cfg.sweep.k_max;
  std::vector<double> alphas = cfg.sweep.alphas;
  if (ps.empty()) ps = {cfg.pipeline.treatment.percentile_p};
  if (ks.empty()) ks = {cfg.pipeline.search.k_max};
  if (alphas.empty()) alphas = {cfg.pipeline.train.alpha};

  std::ostringstream csv;
  csv << "p,k_max,alpha,transductive_ap_mean,transductive_ap_std,transductive_auc_mean,"
         "transductive_auc_std,inductive_ap_mean,coverage_mean,status\n";
  std::printf("%8s %6s %6s %12s %12s %10s  %s\n", "p", "k_max", "alpha", "trans_ap",
              "trans_auc", "coverage", "status");
  bool any_failed = false;
  for (double p : ps) {
    for (int k : ks) {
      for (double alpha : alphas) {
        RunConfig cell = cfg;
        cell.pipeline.treatment.percentile_p = p;
        cell.pipeline.search.k_max = k;
        cell.pipeline.train.alpha = alpha;
        std::string status = "ok";
        EvalReport report;
        try {
          report = run_experiment(graph, cell.pipeline);
        } catch (const std::exception& err) {
          status = std::string("error: ") + err.what();
          any_failed = true;
        }
        const auto ap = report.transductive_ap();
        const auto auc = report.transductive_auc();
        const auto iap = report.inductive_ap();
        const auto cov = report.coverage();
        csv << fmt(p) << "," << k << "," << fmt(alpha) << "," << fmt(ap.mean) << ","
            << fmt(ap.stddev) << "," << fmt(auc.mean) << "," << fmt(auc.stddev) << ","
            << fmt(iap.mean) << "," << fmt(cov.mean) << "," << status << "\n";
        std::printf("%8g %6d %6g %12.5f %12.5f %10.4f  %s\n", p, k, alpha, ap.mean,
                    auc.mean, cov.mean, status.c_str());
      }
    }
  }
  const fs::path path = fs::path(opts.out_dir) / "sweep.csv";
  write_text(path, csv.str());
  write_manifest(path, "sweep", cfg, true);
  std::cout << "artifact: " << path.string() << "\n";
  return any_failed ? 1 : 0;
}

int cmd_ablate(const GlobalOptions& opts, const RunConfig& cfg) {
  const TemporalGraph graph = load_or_ingest(opts, cfg);
  struct Variant {
    const char* name;
    void (*apply)(TrainConfig&);
  };
  const Variant variants[] = {
      {"full", [](TrainConfig&) {}},
      {"no_counterfactual", [](TrainConfig& t) { t.disable_counterfactual = true; }},
      {"no_time_encoding", [](TrainConfig& t) { t.disable_time_encoding = true; }},
      {"no_contrastive", [](TrainConfig& t) { t.disable_contrastive = true; }},
      {"no_similarity", [](TrainConfig& t) { t.disable_similarity = true; }},
  };
  std::ostringstream csv;
  csv << "variant,seed,setting,ap,auc\n";
  std::printf("%-20s %12s %12s %12s\n", "variant", "trans_ap", "trans_auc", "induc_ap");
  for (const Variant& variant : variants) {
    RunConfig run = cfg;
    variant.apply(run.pipeline.train);
    const EvalReport report = run_experiment(graph, run.pipeline);
    for (const SeedOutcome& o : report.per_seed) {
      csv << variant.name << "," << o.seed << ",transductive," << fmt(o.transductive.ap)
          << "," << fmt(o.transductive.auc) << "\n";
      if (o.inductive.applicable) {
        csv << variant.name << "," << o.seed << ",inductive," << fmt(o.inductive.ap)
            << "," << fmt(o.inductive.auc) << "\n";
      }
    }
    std::printf("%-20s %12.5f %12.5f %12.5f\n", variant.name,
                report.transductive_ap().mean, report.transductive_auc().mean,
                report.inductive_ap().mean);
  }
  const fs::path path = fs::path(opts.out_dir) / "ablate.csv";
  write_text(path, csv.str());
  write_manifest(path, "ablate", cfg, true);
  std::cout << "artifact: " << path.string() << "\n";
  return 0;
}

int cmd_synth(const GlobalOptions& opts, const RunConfig& cfg) {
  const std::uint64_t seed = cfg.pipeline.seeds.front();
  const SyntheticData data = generate_synthetic(cfg.synth, seed);

  const fs::path csv_path = fs::path(opts.out_dir) / "synthetic.csv";
  fs::create_directories(csv_path.parent_path());
  std::ofstream csv(csv_path);
  csv << "src,dst,t,label\n";
  for (const TemporalEvent& e : data.events) {
    csv << e.src << "," << e.dst << "," << fmt(e.timestamp) << "," << e.label << "\n";
  }

  nlohmann::json truth;
  truth["num_nodes"] = data.num_nodes;
  truth["community"] = data.community;
  truth["event_treated"] = data.event_treated;
  truth["planted_threshold"] = cfg.synth.planted_threshold;
  truth["effect"] = cfg.synth.effect;
  truth["stats"] = {{"treated_candidates", data.stats.treated_candidates},
                    {"treated_accepted", data.stats.treated_accepted},
                    {"untreated_candidates", data.stats.untreated_candidates},
                    {"untreated_accepted", data.stats.untreated_accepted}};
  write_text(fs::path(opts.out_dir) / "synthetic_truth.json", truth.dump(2) + "\n");
  write_manifest(csv_path, "synth", cfg, false);

  std::cout << "generated " << data.events.size() << " events, " << data.num_nodes
            << " nodes\n";
  std::cout << "treated/untreated acceptance ratio: " << fmt(data.stats.rate_ratio())
            << "\n";
  std::cout << "artifact: " << csv_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"counterfactual augmentation pipeline for temporal link prediction"};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "run configuration file");
  auto* seed_opt = app.add_option("--seed", opts.seed, "override run.seeds with one seed");
  app.add_option("--out", opts.out_dir, "artifact output directory");
  app.add_flag("--emit-csv", opts.emit_csv, "also write score/label pairs");
  app.add_flag("--export-json", opts.export_json, "also dump parameters as JSON");

  std::string ingest_path;
  CLI::App* ingest = app.add_subcommand("ingest", "parse and cache an event CSV");
  ingest->add_option("path", ingest_path, "dataset path (overrides dataset.path)");
  CLI::App* treat = app.add_subcommand("treat", "assign treatments over the training split");
  CLI::App* augment = app.add_subcommand("augment", "search counterfactual pairs");
  CLI::App* train = app.add_subcommand("train", "train and checkpoint the model");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a saved checkpoint");
  CLI::App* sweep = app.add_subcommand("sweep", "grid over p / k_max / alpha");
  CLI::App* ablate = app.add_subcommand("ablate", "run the ablation variants");
  CLI::App* synth = app.add_subcommand("synth", "generate a planted synthetic dataset");

  CLI11_PARSE(app, argc, argv);
  opts.seed_set = seed_opt->count() > 0;

  const char* stage = "startup";
  try {
    fs::create_directories(opts.out_dir);
    RunConfig cfg = load_config(opts);
    if (ingest->parsed()) {
      stage = "ingest";
      return cmd_ingest(opts, cfg, ingest_path);
    }
    if (treat->parsed()) {
      stage = "treat";
      return cmd_treat(opts, cfg);
    }
    if (augment->parsed()) {
      stage = "augment";
      return cmd_augment(opts, cfg);
    }
    if (train->parsed()) {
      stage = "train";
      return cmd_train(opts, cfg);
    }
    if (eval->parsed()) {
      stage = "eval";
      return cmd_eval(opts, cfg);
    }
    if (sweep->parsed()) {
      stage = "sweep";
      return cmd_sweep(opts, cfg);
    }
    if (ablate->parsed()) {
      stage = "ablate";
      return cmd_ablate(opts, cfg);
    }
    if (synth->parsed()) {
      stage = "synth";
      return cmd_synth(opts, cfg);
    }
  } catch (const std::exception& err) {
    std::cerr << "codcl " << stage << ": " << err.what() << "\n";
    return 1;
  }
  return 0;
}
