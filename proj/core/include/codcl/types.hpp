#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace codcl {

using NodeId = std::uint32_t;
using Time = double;

inline constexpr NodeId kInvalidNode = std::numeric_limits<NodeId>::max();

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input data; carries the 1-based line number.
struct ParseError : Error {
  ParseError(std::size_t line_no, const std::string& what)
      : Error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}
  std::size_t line;
};

/// Invalid configuration value or combination.
struct ConfigError : Error {
  using Error::Error;
};

/// One timestamped interaction between two nodes.
struct TemporalEvent {
  NodeId src = 0;
  NodeId dst = 0;
  Time timestamp = 0.0;
  double weight = 1.0;
  std::vector<double> edge_features;
  int label = 0;
};

/// Largest representable time strictly below t. History queries at this
/// cutoff exclude the event at t itself and everything simultaneous with it.
inline Time strict_past_cutoff(Time t) {
  return std::nextafter(t, -std::numeric_limits<Time>::infinity());
}

}  // namespace codcl
