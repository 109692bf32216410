#pragma once

#include "synaug/worldgen.hpp"

#include <cstdint>

namespace synaug {

/// What to do with cells already above the uniformization target.
enum class ExcessPolicy {
  Reject, ///< target below the largest cell is an error
  Keep,   ///< leave oversized cells untouched (no truncation)
};

struct UniformizationPlan {
  long target = 0;
  bool group_aware = false;
  /// Keyed by (class, group) when group_aware, by (class, 0) otherwise.
  CellCounts deficits;

  long total_deficit() const;
};

UniformizationPlan plan_uniformization(const Dataset& real, long target,
                                       bool group_aware,
                                       ExcessPolicy excess = ExcessPolicy::Reject);

/// Real samples are kept verbatim and in order; synthetic fill is appended.
///
/// Class-only plans on grouped data spread each class deficit as evenly as
/// possible over the groups, lowest group index first, since the generator
/// is not told the sensitive attribute.
Dataset uniformize(const Dataset& real, const SynthSpec& spec, long target,
                   bool group_aware, std::uint64_t seed,
                   ExcessPolicy excess = ExcessPolicy::Reject);

/// Replaces every real sample of the floor(fraction * K) lowest-index classes
/// with synthetic samples drawn for the same cells.
Dataset replace_classwise(const Dataset& real_uniform, double class_fraction,
                          const SynthSpec& spec, std::uint64_t seed);

/// Replaces round(fraction * n) randomly chosen real samples in every class.
Dataset replace_instancewise(const Dataset& real_uniform, double instance_fraction,
                             const SynthSpec& spec, std::uint64_t seed);

/// per_class real samples from each class; synthetic samples are ignored.
Dataset uniform_real_subsample(const Dataset& real, long per_class, std::uint64_t seed);

/// per_cell samples from each (class, group) cell.
Dataset group_balanced_subsample(const Dataset& data, long per_cell, std::uint64_t seed);

Dataset filter_origin(const Dataset& data, Origin origin);

} // namespace synaug
