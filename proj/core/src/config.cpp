#include "codcl/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace codcl {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_bool(const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("expected a boolean, got '" + value + "'");
}

double parse_double(const std::string& value) {
  double out;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("expected a number, got '" + value + "'");
  }
  return out;
}

long long parse_int(const std::string& value) {
  long long out;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("expected an integer, got '" + value + "'");
  }
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

IntensityMode parse_intensity_mode(const std::string& value) {
  if (value == "cumulative") return IntensityMode::kCumulative;
  if (value == "exponential-decay" || value == "decay") {
    return IntensityMode::kExponentialDecay;
  }
  throw ConfigError("unknown intensity mode: " + value);
}

IndicatorStat parse_indicator(const std::string& value) {
  if (value == "common-neighbors") return IndicatorStat::kCommonNeighbors;
  if (value == "intensity") return IndicatorStat::kIntensity;
  throw ConfigError("unknown indicator statistic: " + value);
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

RunConfig parse_run_config(std::istream& input) {
  RunConfig cfg;
  // Sentinel: search.delta inherits treatment.delta unless set explicitly.
  bool search_delta_set = false;

  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> schema = {
      {"dataset.path", [&](const std::string& v) { cfg.dataset.path = v; }},
      {"dataset.columns", [&](const std::string& v) { cfg.dataset.columns = v; }},
      {"dataset.bipartite",
       [&](const std::string& v) {
         cfg.dataset.bipartite_override = true;
         cfg.dataset.bipartite = parse_bool(v);
       }},
      {"dataset.self_loops",
       [&](const std::string& v) { cfg.dataset.self_loops = parse_bool(v); }},

      {"split.train_ratio",
       [&](const std::string& v) { cfg.pipeline.split.train = parse_double(v); }},
      {"split.val_ratio",
       [&](const std::string& v) { cfg.pipeline.split.val = parse_double(v); }},

      {"treatment.delta",
       [&](const std::string& v) { cfg.pipeline.treatment.delta = parse_double(v); }},
      {"treatment.mode",
       [&](const std::string& v) {
         cfg.pipeline.treatment.intensity_mode = parse_intensity_mode(v);
       }},
      {"treatment.lambda",
       [&](const std::string& v) { cfg.pipeline.treatment.lambda = parse_double(v); }},
      {"treatment.p",
       [&](const std::string& v) { cfg.pipeline.treatment.percentile_p = parse_double(v); }},
      {"treatment.indicator",
       [&](const std::string& v) {
         cfg.pipeline.treatment.indicator_stat = parse_indicator(v);
       }},
      {"treatment.kind",
       [&](const std::string& v) {
         cfg.pipeline.treatment.kind = treatment_kind_from_string(v);
       }},
      {"treatment.phi_threshold_compat",
       [&](const std::string& v) {
         cfg.pipeline.treatment.phi_threshold_compat = parse_bool(v);
       }},
      {"treatment.degree_gap",
       [&](const std::string& v) { cfg.pipeline.treatment.degree_gap = parse_double(v); }},
      {"treatment.proximity_threshold",
       [&](const std::string& v) {
         cfg.pipeline.treatment.proximity_threshold = parse_double(v);
       }},
      {"treatment.frequency_threshold",
       [&](const std::string& v) {
         cfg.pipeline.treatment.frequency_threshold = parse_double(v);
       }},
      {"treatment.core_order",
       [&](const std::string& v) {
         cfg.pipeline.treatment.core_order = static_cast<int>(parse_int(v));
       }},

      {"search.k_max",
       [&](const std::string& v) { cfg.pipeline.search.k_max = static_cast<int>(parse_int(v)); }},
      {"search.dim",
       [&](const std::string& v) {
         cfg.pipeline.search.embed_dim = static_cast<std::size_t>(parse_int(v));
       }},
      {"search.delta",
       [&](const std::string& v) {
         cfg.pipeline.search.delta = parse_double(v);
         search_delta_set = true;
       }},
      {"search.global_argmax",
       [&](const std::string& v) { cfg.pipeline.search.global_argmax = parse_bool(v); }},
      {"search.identity_maps",
       [&](const std::string& v) { cfg.pipeline.search.identity_maps = parse_bool(v); }},
      {"search.seed",
       [&](const std::string& v) {
         cfg.pipeline.search.seed = static_cast<std::uint64_t>(parse_int(v));
       }},

      {"model.time_dim",
       [&](const std::string& v) {
         cfg.pipeline.model.time_dim = static_cast<std::size_t>(parse_int(v));
       }},
      {"model.hidden",
       [&](const std::string& v) {
         cfg.pipeline.model.hidden_dim = static_cast<std::size_t>(parse_int(v));
       }},
      {"model.dim",
       [&](const std::string& v) {
         cfg.pipeline.model.embed_dim = static_cast<std::size_t>(parse_int(v));
       }},
      {"model.recent_k",
       [&](const std::string& v) {
         cfg.pipeline.model.recent_neighbors = static_cast<std::size_t>(parse_int(v));
       }},
      {"model.bn_momentum",
       [&](const std::string& v) { cfg.pipeline.model.bn_momentum = parse_double(v); }},
      {"model.bn_epsilon",
       [&](const std::string& v) { cfg.pipeline.model.bn_epsilon = parse_double(v); }},

      {"train.alpha",
       [&](const std::string& v) { cfg.pipeline.train.alpha = parse_double(v); }},
      {"train.tau", [&](const std::string& v) { cfg.pipeline.train.tau = parse_double(v); }},
      {"train.batch",
       [&](const std::string& v) {
         cfg.pipeline.train.batch_size = static_cast<std::size_t>(parse_int(v));
       }},
      {"train.rate",
       [&](const std::string& v) { cfg.pipeline.train.learning_rate = parse_double(v); }},
      {"train.epochs",
       [&](const std::string& v) { cfg.pipeline.train.epochs = static_cast<int>(parse_int(v)); }},
      {"train.patience",
       [&](const std::string& v) {
         cfg.pipeline.train.patience = static_cast<int>(parse_int(v));
       }},
      {"train.disable_counterfactual",
       [&](const std::string& v) {
         cfg.pipeline.train.disable_counterfactual = parse_bool(v);
       }},
      {"train.disable_time_encoding",
       [&](const std::string& v) {
         cfg.pipeline.train.disable_time_encoding = parse_bool(v);
       }},
      {"train.disable_contrastive",
       [&](const std::string& v) {
         cfg.pipeline.train.disable_contrastive = parse_bool(v);
       }},
      {"train.disable_similarity",
       [&](const std::string& v) {
         cfg.pipeline.train.disable_similarity = parse_bool(v);
       }},
      {"train.refresh_cf",
       [&](const std::string& v) {
         cfg.pipeline.train.refresh_cf_per_epoch = parse_bool(v);
       }},

      {"eval.inductive_fraction",
       [&](const std::string& v) { cfg.pipeline.inductive_fraction = parse_double(v); }},
      {"eval.negatives_seed",
       [&](const std::string& v) {
         cfg.pipeline.negatives_seed = static_cast<std::uint64_t>(parse_int(v));
       }},

      {"run.seeds",
       [&](const std::string& v) {
         cfg.pipeline.seeds.clear();
         for (const std::string& s : split_list(v)) {
           cfg.pipeline.seeds.push_back(static_cast<std::uint64_t>(parse_int(s)));
         }
       }},
      {"run.workers",
       [&](const std::string& v) {
         cfg.pipeline.workers = static_cast<std::size_t>(parse_int(v));
       }},

      {"sweep.p",
       [&](const std::string& v) {
         cfg.sweep.percentiles.clear();
         for (const std::string& s : split_list(v)) {
           cfg.sweep.percentiles.push_back(parse_double(s));
         }
       }},
      {"sweep.k_max",
       [&](const std::string& v) {
         cfg.sweep.k_max.clear();
         for (const std::string& s : split_list(v)) {
           cfg.sweep.k_max.push_back(static_cast<int>(parse_int(s)));
         }
       }},
      {"sweep.alpha",
       [&](const std::string& v) {
         cfg.sweep.alphas.clear();
         for (const std::string& s : split_list(v)) {
           cfg.sweep.alphas.push_back(parse_double(s));
         }
       }},

      {"synth.nodes",
       [&](const std::string& v) { cfg.synth.nodes = static_cast<std::size_t>(parse_int(v)); }},
      {"synth.communities",
       [&](const std::string& v) {
         cfg.synth.communities = static_cast<std::size_t>(parse_int(v));
       }},
      {"synth.duration",
       [&](const std::string& v) { cfg.synth.duration = parse_double(v); }},
      {"synth.warmup_fraction",
       [&](const std::string& v) { cfg.synth.warmup_fraction = parse_double(v); }},
      {"synth.warmup_edges",
       [&](const std::string& v) {
         cfg.synth.warmup_edges = static_cast<std::size_t>(parse_int(v));
       }},
      {"synth.events",
       [&](const std::string& v) {
         cfg.synth.candidate_events = static_cast<std::size_t>(parse_int(v));
       }},
      {"synth.base_rate",
       [&](const std::string& v) { cfg.synth.base_rate = parse_double(v); }},
      {"synth.beta", [&](const std::string& v) { cfg.synth.effect = parse_double(v); }},
      {"synth.theta",
       [&](const std::string& v) { cfg.synth.planted_threshold = parse_double(v); }},
      {"synth.intra_prob",
       [&](const std::string& v) { cfg.synth.intra_prob = parse_double(v); }},
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(input, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = schema.find(key);
    if (it == schema.end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                        key + "'");
    }
    try {
      it->second(value);
    } catch (const ConfigError& err) {
      throw ConfigError("config line " + std::to_string(line_no) + " (" + key +
                        "): " + err.what());
    }
  }

  if (!search_delta_set) cfg.pipeline.search.delta = cfg.pipeline.treatment.delta;
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_run_config(in);
}

std::string dump_run_config(const RunConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "dataset.path = " << cfg.dataset.path << "\n";
  out << "dataset.columns = " << cfg.dataset.columns << "\n";
  if (cfg.dataset.bipartite_override) {
    out << "dataset.bipartite = " << (cfg.dataset.bipartite ? "true" : "false") << "\n";
  }
  out << "dataset.self_loops = " << (cfg.dataset.self_loops ? "true" : "false") << "\n";
  out << "split.train_ratio = " << cfg.pipeline.split.train << "\n";
  out << "split.val_ratio = " << cfg.pipeline.split.val << "\n";
  const TreatmentConfig& t = cfg.pipeline.treatment;
  out << "treatment.delta = " << t.delta << "\n";
  out << "treatment.mode = "
      << (t.intensity_mode == IntensityMode::kCumulative ? "cumulative"
                                                         : "exponential-decay")
      << "\n";
  out << "treatment.lambda = " << t.lambda << "\n";
  out << "treatment.p = " << t.percentile_p << "\n";
  out << "treatment.indicator = "
      << (t.indicator_stat == IndicatorStat::kCommonNeighbors ? "common-neighbors"
                                                              : "intensity")
      << "\n";
  out << "treatment.kind = " << to_string(t.kind) << "\n";
  out << "treatment.phi_threshold_compat = " << (t.phi_threshold_compat ? "true" : "false")
      << "\n";
  out << "treatment.degree_gap = " << t.degree_gap << "\n";
  out << "treatment.proximity_threshold = " << t.proximity_threshold << "\n";
  out << "treatment.frequency_threshold = " << t.frequency_threshold << "\n";
  out << "treatment.core_order = " << t.core_order << "\n";
  const CfSearchConfig& s = cfg.pipeline.search;
  out << "search.k_max = " << s.k_max << "\n";
  out << "search.dim = " << s.embed_dim << "\n";
  out << "search.delta = " << s.delta << "\n";
  out << "search.global_argmax = " << (s.global_argmax ? "true" : "false") << "\n";
  out << "search.identity_maps = " << (s.identity_maps ? "true" : "false") << "\n";
  out << "search.seed = " << s.seed << "\n";
  const ModelConfig& m = cfg.pipeline.model;
  out << "model.time_dim = " << m.time_dim << "\n";
  out << "model.hidden = " << m.hidden_dim << "\n";
  out << "model.dim = " << m.embed_dim << "\n";
  out << "model.recent_k = " << m.recent_neighbors << "\n";
  out << "model.bn_momentum = " << m.bn_momentum << "\n";
  out << "model.bn_epsilon = " << m.bn_epsilon << "\n";
  const TrainConfig& tr = cfg.pipeline.train;
  out << "train.alpha = " << tr.alpha << "\n";
  out << "train.tau = " << tr.tau << "\n";
  out << "train.batch = " << tr.batch_size << "\n";
  out << "train.rate = " << tr.learning_rate << "\n";
  out << "train.epochs = " << tr.epochs << "\n";
  out << "train.patience = " << tr.patience << "\n";
  out << "train.disable_counterfactual = " << (tr.disable_counterfactual ? "true" : "false")
      << "\n";
  out << "train.disable_time_encoding = " << (tr.disable_time_encoding ? "true" : "false")
      << "\n";
  out << "train.disable_contrastive = " << (tr.disable_contrastive ? "true" : "false")
      << "\n";
  out << "train.disable_similarity = " << (tr.disable_similarity ? "true" : "false")
      << "\n";
  out << "train.refresh_cf = " << (tr.refresh_cf_per_epoch ? "true" : "false") << "\n";
  out << "eval.inductive_fraction = " << cfg.pipeline.inductive_fraction << "\n";
  out << "eval.negatives_seed = " << cfg.pipeline.negatives_seed << "\n";
  out << "run.seeds =";
  for (std::size_t i = 0; i < cfg.pipeline.seeds.size(); ++i) {
    out << (i == 0 ? " " : ",") << cfg.pipeline.seeds[i];
  }
  out << "\n";
  out << "run.workers = " << cfg.pipeline.workers << "\n";
  return out.str();
}

IngestConfig resolve_ingest_config(const DatasetConfig& dataset) {
  IngestConfig cfg;
  if (dataset.columns == "auto") {
    cfg = sniff_columns(dataset.path);
  } else if (dataset.columns == "jodie") {
    cfg.src_col = 0;
    cfg.dst_col = 1;
    cfg.time_col = 2;
    cfg.label_col = 3;
    cfg.features_from_remainder = true;
    cfg.has_header = true;
    cfg.bipartite = true;
  } else {
    const std::vector<std::string> roles = split_list(dataset.columns);
    if (roles.size() < 3) {
      throw ConfigError("dataset.columns must map at least src,dst,t");
    }
    cfg.src_col = cfg.dst_col = cfg.time_col = -1;
    for (std::size_t i = 0; i < roles.size(); ++i) {
      const std::string& r = roles[i];
      const int col = static_cast<int>(i);
      if (r == "src") {
        cfg.src_col = col;
      } else if (r == "dst") {
        cfg.dst_col = col;
      } else if (r == "t") {
        cfg.time_col = col;
      } else if (r == "label") {
        cfg.label_col = col;
      } else if (r == "weight") {
        cfg.weight_col = col;
      } else if (r == "skip") {
        // Column ignored.
      } else if (r == "feats") {
        if (i + 1 != roles.size()) {
          throw ConfigError("'feats' must be the last column role");
        }
        cfg.features_from_remainder = true;
      } else {
        throw ConfigError("unknown column role: " + r);
      }
    }
    if (cfg.src_col < 0 || cfg.dst_col < 0 || cfg.time_col < 0) {
      throw ConfigError("dataset.columns must include src, dst and t");
    }
    // Headerless when the first line already parses as data.
    std::ifstream in(dataset.path);
    if (!in) throw Error("cannot open dataset file: " + dataset.path);
    std::string first_line;
    if (!std::getline(in, first_line)) throw Error("empty input: " + dataset.path);
    std::stringstream probe(first_line);
    std::string field;
    int col = 0;
    bool numeric_time = false;
    while (std::getline(probe, field, ',')) {
      if (col == cfg.time_col) {
        double v;
        auto trimmed = trim(field);
        auto [p, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), v);
        numeric_time = ec == std::errc() && p == trimmed.data() + trimmed.size();
      }
      ++col;
    }
    cfg.has_header = !numeric_time;
  }
  if (dataset.bipartite_override) cfg.bipartite = dataset.bipartite;
  cfg.allow_self_loops = dataset.self_loops;
  return cfg;
}

}  // namespace codcl
