#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "codcl/pipeline.hpp"
#include "codcl/synthetic.hpp"

namespace codcl {

struct DatasetConfig {
  std::string path;
  // "auto" (sniff the header), "jodie", or a comma-separated role list over
  // the leading columns: src,dst,t[,label][,weight][,feats].
  std::string columns = "auto";
  bool bipartite_override = false;
  bool bipartite = false;
  bool self_loops = false;
};

struct SweepConfig {
  std::vector<double> percentiles;
  std::vector<int> k_max;
  std::vector<double> alphas;
  bool empty() const { return percentiles.empty() && k_max.empty() && alphas.empty(); }
};

/// Declarative run configuration: flat `section.key = value` lines, one per
/// line, '#' comments. Unknown keys are rejected.
struct RunConfig {
  DatasetConfig dataset;
  PipelineConfig pipeline;
  SyntheticConfig synth;
  SweepConfig sweep;
};

RunConfig parse_run_config(std::istream& input);
RunConfig load_run_config(const std::string& path);

/// Canonical one-line-per-key dump of every setting (used for config hashing
/// and run manifests).
std::string dump_run_config(const RunConfig& config);

/// Resolves the dataset block into a concrete ingest column map, sniffing
/// the file header when columns = "auto".
IngestConfig resolve_ingest_config(const DatasetConfig& dataset);

/// FNV-1a hash of a byte string (config canonicalization, artifact cache keys).
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace codcl
