#pragma once

#include "synaug/experiment_spec.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace synaug {

/// Parsed run configuration.
///
/// Text format: `key = value` lines, `#` or `;` comments, and `[section]`
/// headers. Top-level keys are `seed` and `output_dir`; sections are
/// `[experiment]` (required, must set `kind`), `[world]`, `[synth]` and
/// `[train]`. Lists are comma separated; fairness cells are written as
/// `n0:n1` pairs, one per group.
struct RootConfig {
  ExperimentSpec spec;
  std::string output_dir;
  /// One `section.key = value` line per key filled from the kind defaults.
  std::vector<std::string> defaults_applied;

  std::uint64_t seed() const { return spec.seed; }
  /// Ignores defaults_applied.
  bool operator==(const RootConfig& other) const {
    return spec == other.spec && output_dir == other.output_dir;
  }
};

/// Throws ValidationError naming the line for unknown keys, type mismatches,
/// out-of-range values and a missing `[experiment]` section.
RootConfig parse_config(const std::string& text);

/// Reads and parses a file; a missing file is a ValidationError naming the path.
RootConfig load_config(const std::filesystem::path& path);

/// Canonical text listing every key; parse_config(serialize(c)) == c.
std::string serialize(const RootConfig& config);
/// Canonical text of the spec alone (no output_dir).
std::string serialize(const ExperimentSpec& spec);

} // namespace synaug
