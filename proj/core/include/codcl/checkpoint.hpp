#pragma once

#include <string>

#include "codcl/model.hpp"

namespace codcl {

/// Binary checkpoint: magic "CODCL1", a versioned little-endian header with
/// the model shape, then every learnable tensor and normalization buffer as
/// named float64 records with explicit shapes.
void save_checkpoint(const std::string& path, const ModelParameters& params);
ModelParameters load_checkpoint(const std::string& path);

/// Plain-text JSON dump of the same tensors as nested arrays, for
/// cross-implementation comparison.
void export_parameters_json(const std::string& path, const ModelParameters& params);

}  // namespace codcl
