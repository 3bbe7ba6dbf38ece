#pragma once

#include <set>
#include <string>

#include "isac/experiments.hpp"

namespace isac {

/// Result of reading a configuration: the effective settings plus the keys
/// that were set explicitly.
struct LoadedConfig {
  ExperimentConfig config;
  std::set<std::string> keys;
};

/// Parses configuration text. Two syntaxes are accepted:
///
///   # comment
///   [schedule]
///   pattern = "permuted"
///   span = 1e7
///   scenario.target.position = [300, 200]
///
/// where every value is a JSON literal (bare words are read as strings), or a
/// single JSON object whose nesting mirrors the dotted keys. Unknown keys and
/// ill-typed values throw ConfigError naming `origin`, the line and the key.
LoadedConfig parse_config(const std::string& text, const std::string& origin = "<config>");

/// Reads and parses a file; a missing file throws ConfigError naming the path.
LoadedConfig load_config_file(const std::string& path);

/// Every setting as `key = value` lines that parse back to the same configuration.
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace isac
