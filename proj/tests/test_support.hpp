#pragma once

#include "synaug/worldgen.hpp"

#include <memory>
#include <vector>

namespace test_support {

/// World with class c mean at c * spacing on every axis, shared variance,
/// and gap direction along axis (c mod dim).
inline synaug::WorldModel grid_world(std::size_t dim, int classes, int groups,
                                     double variance = 1.0, double spacing = 3.0) {
  synaug::WorldModel w;
  w.dim = dim;
  w.classes = classes;
  w.groups = groups;
  for (int c = 0; c < classes; ++c) {
    for (int g = 0; g < w.group_slots(); ++g) {
      std::vector<double> mu(dim, c * spacing);
      if (dim > 1) {
        mu[1] += g * spacing;
      }
      w.means.push_back(mu);
      w.variances.emplace_back(dim, variance);
    }
    std::vector<double> delta(dim, 0.0);
    delta[static_cast<std::size_t>(c) % dim] = 1.0;
    w.gap_directions.push_back(delta);
  }
  w.validate();
  return w;
}

inline synaug::SynthSpec synth_for(const synaug::WorldModel& world, double gap, double quality = 1.0,
                                   int modes = 1) {
  synaug::SynthSpec s;
  s.world = std::make_shared<const synaug::WorldModel>(world);
  s.gap = gap;
  s.quality = quality;
  s.modes = modes;
  s.mode_seed = 99;
  return s;
}

inline std::vector<double> class_mean(const synaug::Dataset& data, int cls) {
  std::vector<double> mean(data.dim(), 0.0);
  long n = 0;
  for (const auto& s : data.samples()) {
    if (s.class_label != cls) {
      continue;
    }
    ++n;
    for (std::size_t j = 0; j < data.dim(); ++j) {
      mean[j] += s.features[j];
    }
  }
  for (double& m : mean) {
    m /= static_cast<double>(n);
  }
  return mean;
}

} // namespace test_support
