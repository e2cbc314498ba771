#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "codcl/temporal_graph.hpp"

namespace codcl {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_line(std::string_view line, char delim) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return fields;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool parse_double(std::string_view field, double& out) {
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && !field.empty();
}

bool numeric_field(std::string_view field) {
  double ignored;
  return parse_double(field, ignored);
}

}  // namespace

std::optional<IngestConfig> detect_columns(const std::string& header_line) {
  const auto raw = split_line(header_line, ',');
  std::vector<std::string> names;
  names.reserve(raw.size());
  for (auto f : raw) names.push_back(lower(f));

  IngestConfig cfg;
  cfg.src_col = cfg.dst_col = cfg.time_col = -1;

  for (int i = 0; i < static_cast<int>(names.size()); ++i) {
    const std::string& n = names[i];
    if (n == "user_id" || n == "src" || n == "source" || n == "u") {
      cfg.src_col = i;
    } else if (n == "item_id" || n == "dst" || n == "destination" || n == "v") {
      cfg.dst_col = i;
    } else if (n == "timestamp" || n == "t" || n == "time" || n == "ts") {
      cfg.time_col = i;
    } else if (n == "state_label" || n == "label" || n == "y") {
      cfg.label_col = i;
    } else if (n == "w" || n == "weight") {
      cfg.weight_col = i;
    }
  }
  if (cfg.src_col < 0 || cfg.dst_col < 0 || cfg.time_col < 0) return std::nullopt;

  // JODIE-style user/item streams carry trailing event features and use
  // disjoint id spaces for the two columns.
  const bool jodie = std::find(names.begin(), names.end(), "user_id") != names.end() &&
                     std::find(names.begin(), names.end(), "item_id") != names.end();
  cfg.features_from_remainder = true;
  cfg.bipartite = jodie;
  cfg.has_header = true;
  return cfg;
}

IngestConfig sniff_columns(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file: " + path);
  std::string first_line;
  if (!std::getline(in, first_line)) throw Error("empty input: " + path);
  if (auto cfg = detect_columns(first_line)) return *cfg;

  const auto fields = split_line(first_line, ',');
  const bool all_numeric =
      !fields.empty() && std::all_of(fields.begin(), fields.end(), numeric_field);
  if (!all_numeric) {
    throw Error("unrecognized header in " + path +
                "; map columns explicitly via dataset.columns");
  }
  // Headerless numeric rows: src,dst,t followed by optional label column.
  IngestConfig cfg;
  cfg.has_header = false;
  if (fields.size() >= 4) cfg.label_col = 3;
  return cfg;
}

TemporalGraph ingest_events(std::istream& input, const IngestConfig& config) {
  std::string line;
  std::size_t line_no = 0;
  if (config.has_header) {
    if (!std::getline(input, line)) throw Error("empty input");
    ++line_no;
  }

  int max_claimed = std::max({config.src_col, config.dst_col, config.time_col,
                              config.label_col, config.weight_col});
  for (int c : config.feature_cols) max_claimed = std::max(max_claimed, c);
  if (config.src_col < 0 || config.dst_col < 0 || config.time_col < 0) {
    throw ConfigError("ingest config must map src, dst and time columns");
  }

  std::unordered_map<std::string, NodeId> id_map;
  std::vector<std::string> original_ids;
  std::vector<TemporalEvent> events;
  std::size_t expected_cols = 0;
  std::size_t feature_count = 0;
  bool first_row = true;

  auto intern = [&](std::string key) -> NodeId {
    auto [it, inserted] = id_map.try_emplace(std::move(key),
                                             static_cast<NodeId>(original_ids.size()));
    if (inserted) original_ids.push_back(it->first);
    return it->second;
  };

  while (std::getline(input, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_line(line, config.delimiter);
    if (static_cast<int>(fields.size()) <= max_claimed) {
      throw ParseError(line_no, "expected at least " + std::to_string(max_claimed + 1) +
                                    " columns, got " + std::to_string(fields.size()));
    }
    if (first_row) {
      expected_cols = fields.size();
      if (config.features_from_remainder) {
        std::vector<bool> claimed(fields.size(), false);
        auto claim = [&](int c) {
          if (c >= 0 && c < static_cast<int>(fields.size())) claimed[c] = true;
        };
        claim(config.src_col);
        claim(config.dst_col);
        claim(config.time_col);
        claim(config.label_col);
        claim(config.weight_col);
        feature_count = std::count(claimed.begin(), claimed.end(), false);
      } else {
        feature_count = config.feature_cols.size();
      }
      first_row = false;
    } else if (fields.size() != expected_cols) {
      throw ParseError(line_no, "inconsistent column count: expected " +
                                    std::to_string(expected_cols) + ", got " +
                                    std::to_string(fields.size()));
    }

    TemporalEvent ev;
    const std::string src_key =
        config.bipartite ? "u:" + std::string(fields[config.src_col])
                         : std::string(fields[config.src_col]);
    const std::string dst_key =
        config.bipartite ? "i:" + std::string(fields[config.dst_col])
                         : std::string(fields[config.dst_col]);
    if (fields[config.src_col].empty() || fields[config.dst_col].empty()) {
      throw ParseError(line_no, "empty node id field");
    }
    ev.src = intern(src_key);
    ev.dst = intern(dst_key);

    if (!parse_double(fields[config.time_col], ev.timestamp)) {
      throw ParseError(line_no, "cannot parse timestamp '" +
                                    std::string(fields[config.time_col]) + "'");
    }
    if (!std::isfinite(ev.timestamp)) throw ParseError(line_no, "non-finite timestamp");
    if (ev.timestamp < 0.0) throw ParseError(line_no, "negative timestamp");

    if (config.label_col >= 0) {
      double label;
      if (!parse_double(fields[config.label_col], label)) {
        throw ParseError(line_no, "cannot parse label");
      }
      ev.label = label != 0.0 ? 1 : 0;
    }
    if (config.weight_col >= 0) {
      if (!parse_double(fields[config.weight_col], ev.weight)) {
        throw ParseError(line_no, "cannot parse weight");
      }
      if (!std::isfinite(ev.weight)) throw ParseError(line_no, "non-finite weight");
    }

    auto push_feature = [&](std::string_view field) {
      double value;
      if (!parse_double(field, value)) {
        throw ParseError(line_no, "cannot parse feature '" + std::string(field) + "'");
      }
      if (!std::isfinite(value)) throw ParseError(line_no, "non-finite feature value");
      ev.edge_features.push_back(value);
    };
    if (config.features_from_remainder) {
      for (std::size_t c = 0; c < fields.size(); ++c) {
        const int ci = static_cast<int>(c);
        if (ci == config.src_col || ci == config.dst_col || ci == config.time_col ||
            ci == config.label_col || ci == config.weight_col) {
          continue;
        }
        push_feature(fields[c]);
      }
    } else {
      for (int c : config.feature_cols) push_feature(fields[c]);
    }
    if (ev.edge_features.size() != feature_count) {
      throw ParseError(line_no, "inconsistent feature count");
    }

    if (ev.src == ev.dst && !config.allow_self_loops) {
      throw ParseError(line_no, "self-loop on node '" +
                                    std::string(fields[config.src_col]) +
                                    "' but self-loops are disabled");
    }
    events.push_back(std::move(ev));
  }

  if (events.empty()) throw Error("empty input");
  const std::size_t num_nodes = original_ids.size();
  return TemporalGraph(std::move(events), num_nodes, {}, 0, std::move(original_ids),
                       config.allow_self_loops);
}

TemporalGraph ingest_file(const std::string& path, const IngestConfig& config) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file: " + path);
  return ingest_events(in, config);
}

}  // namespace codcl
