#include "synaug/rebalance.hpp"

#include "synaug/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace synaug {

namespace {

void require_spec_matches(const Dataset& data, const SynthSpec& spec) {
  spec.validate();
  const WorldModel& w = *spec.world;
  if (w.dim != data.dim() || w.classes != data.classes() || w.groups != data.groups()) {
    throw ValidationError("synthetic generator shape does not match the dataset");
  }
}

void require_class_balanced(const Dataset& data, const char* op) {
  const auto counts = data.class_counts();
  if (std::adjacent_find(counts.begin(), counts.end(), std::not_equal_to<>()) !=
      counts.end()) {
    throw ValidationError(std::string(op) + ": input must be class-balanced");
  }
}

/// Sorted random subset of `take` positions out of `pool`.
std::vector<std::size_t> pick(std::vector<std::size_t> pool, long take, Rng& rng) {
  rng.shuffle(std::span<std::size_t>(pool));
  pool.resize(static_cast<std::size_t>(take));
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::map<CellKey, std::vector<std::size_t>> index_by_cell(const Dataset& data) {
  std::map<CellKey, std::vector<std::size_t>> by_cell;
  for (std::size_t i = 0; i < data.size(); ++i) {
    by_cell[cell_of(data[i])].push_back(i);
  }
  return by_cell;
}

} // namespace

long UniformizationPlan::total_deficit() const {
  long total = 0;
  for (const auto& [key, n] : deficits) {
    total += n;
  }
  return total;
}

UniformizationPlan plan_uniformization(const Dataset& real, long target,
                                       bool group_aware, ExcessPolicy excess) {
  UniformizationPlan plan;
  plan.target = target;
  plan.group_aware = group_aware;

  CellCounts have;
  if (group_aware) {
    have = real.cell_counts();
  } else {
    const auto counts = real.class_counts();
    have = per_class_cells(counts);
  }
  for (const auto& [key, n] : have) {
    if (n > target && excess == ExcessPolicy::Reject) {
      throw ValidationError("plan_uniformization: target " + std::to_string(target) +
                            " is below existing cell (" + std::to_string(key.first) +
                            ", " + std::to_string(key.second) + ") with " +
                            std::to_string(n) + " samples");
    }
    plan.deficits[key] = std::max(0L, target - n);
  }
  return plan;
}

Dataset uniformize(const Dataset& real, const SynthSpec& spec, long target,
                   bool group_aware, std::uint64_t seed, ExcessPolicy excess) {
  require_spec_matches(real, spec);
  const auto plan = plan_uniformization(real, target, group_aware, excess);

  CellCounts to_generate;
  if (group_aware || real.groups() == 0) {
    to_generate = plan.deficits;
  } else {
    const long groups = real.groups();
    for (const auto& [key, deficit] : plan.deficits) {
      for (long g = 0; g < groups; ++g) {
        to_generate[{key.first, static_cast<int>(g)}] =
            deficit / groups + (g < deficit % groups ? 1 : 0);
      }
    }
  }
  Dataset out = real;
  out.append(sample_synthetic(spec, to_generate, derive_seed(seed, "uniformize")));
  return out;
}

Dataset replace_classwise(const Dataset& real_uniform, double class_fraction,
                          const SynthSpec& spec, std::uint64_t seed) {
  if (!(class_fraction >= 0.0 && class_fraction <= 1.0)) {
    throw ValidationError("replace_classwise: fraction must lie in [0, 1]");
  }
  require_spec_matches(real_uniform, spec);
  require_class_balanced(real_uniform, "replace_classwise");
  const int replaced =
      static_cast<int>(std::floor(class_fraction * real_uniform.classes() + 1e-9));

  Dataset out(real_uniform.dim(), real_uniform.classes(), real_uniform.groups());
  CellCounts removed;
  for (const auto& s : real_uniform.samples()) {
    if (s.class_label < replaced) {
      ++removed[cell_of(s)];
    } else {
      out.add(s);
    }
  }
  out.append(sample_synthetic(spec, removed, derive_seed(seed, "replace-classwise")));
  return out;
}

Dataset replace_instancewise(const Dataset& real_uniform, double instance_fraction,
                             const SynthSpec& spec, std::uint64_t seed) {
  if (!(instance_fraction >= 0.0 && instance_fraction <= 1.0)) {
    throw ValidationError("replace_instancewise: fraction must lie in [0, 1]");
  }
  require_spec_matches(real_uniform, spec);
  require_class_balanced(real_uniform, "replace_instancewise");
  const long per_class = real_uniform.class_counts().front();
  const long swap = std::lround(instance_fraction * static_cast<double>(per_class));

  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(real_uniform.classes()));
  for (std::size_t i = 0; i < real_uniform.size(); ++i) {
    by_class[static_cast<std::size_t>(real_uniform[i].class_label)].push_back(i);
  }
  std::vector<bool> drop(real_uniform.size(), false);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    Rng rng(derive_seed(seed, "replace-instancewise-pick", c));
    for (std::size_t i : pick(by_class[c], swap, rng)) {
      drop[i] = true;
    }
  }
  Dataset out(real_uniform.dim(), real_uniform.classes(), real_uniform.groups());
  CellCounts removed;
  for (std::size_t i = 0; i < real_uniform.size(); ++i) {
    if (drop[i]) {
      ++removed[cell_of(real_uniform[i])];
    } else {
      out.add(real_uniform[i]);
    }
  }
  out.append(sample_synthetic(spec, removed, derive_seed(seed, "replace-instancewise")));
  return out;
}

Dataset uniform_real_subsample(const Dataset& real, long per_class, std::uint64_t seed) {
  if (per_class < 0) {
    throw ValidationError("uniform_real_subsample: per_class must be >= 0");
  }
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(real.classes()));
  for (std::size_t i = 0; i < real.size(); ++i) {
    if (real[i].origin == Origin::Real) {
      by_class[static_cast<std::size_t>(real[i].class_label)].push_back(i);
    }
  }
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (static_cast<long>(by_class[c].size()) < per_class) {
      throw ValidationError("uniform_real_subsample: class " + std::to_string(c) +
                            " has only " + std::to_string(by_class[c].size()) +
                            " real samples, " + std::to_string(per_class) + " requested");
    }
    Rng rng(derive_seed(seed, "uniform-real-subsample", c));
    const auto chosen = pick(by_class[c], per_class, rng);
    keep.insert(keep.end(), chosen.begin(), chosen.end());
  }
  std::sort(keep.begin(), keep.end());
  return real.subset(keep);
}

Dataset group_balanced_subsample(const Dataset& data, long per_cell, std::uint64_t seed) {
  if (per_cell < 0) {
    throw ValidationError("group_balanced_subsample: per_cell must be >= 0");
  }
  auto by_cell = index_by_cell(data);
  std::vector<std::size_t> keep;
  for (int c = 0; c < data.classes(); ++c) {
    for (int g = 0; g < data.group_slots(); ++g) {
      const auto& pool = by_cell[{c, g}];
      if (pool.empty() || static_cast<long>(pool.size()) < per_cell) {
        throw ValidationError("group_balanced_subsample: cell (" + std::to_string(c) +
                              ", " + std::to_string(g) + ") has " +
                              std::to_string(pool.size()) + " samples, " +
                              std::to_string(per_cell) + " requested");
      }
      Rng rng(derive_seed(seed, "group-balanced-subsample",
                          static_cast<std::uint64_t>(c * data.group_slots() + g)));
      const auto chosen = pick(pool, per_cell, rng);
      keep.insert(keep.end(), chosen.begin(), chosen.end());
    }
  }
  std::sort(keep.begin(), keep.end());
  return data.subset(keep);
}

Dataset filter_origin(const Dataset& data, Origin origin) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].origin == origin) {
      keep.push_back(i);
    }
  }
  return data.subset(keep);
}

} // namespace synaug
