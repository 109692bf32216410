#include "synaug/worldgen.hpp"

#include "synaug/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace synaug {

const char* to_string(Origin origin) {
  return origin == Origin::Real ? "real" : "synthetic";
}

CellKey cell_of(const Sample& sample) {
  return {sample.class_label, sample.group_label.value_or(0)};
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

Dataset::Dataset(std::size_t dim, int classes, int groups)
    : dim_(dim), classes_(classes), groups_(groups) {
  if (classes < 1 || groups < 0) {
    throw ValidationError("Dataset: need classes >= 1 and groups >= 0");
  }
}

void Dataset::add(Sample sample) {
  if (sample.features.size() != dim_) {
    throw ValidationError("Dataset::add: feature length " +
                          std::to_string(sample.features.size()) +
                          " != dim " + std::to_string(dim_));
  }
  for (double v : sample.features) {
    if (!std::isfinite(v)) {
      throw ValidationError("Dataset::add: non-finite feature");
    }
  }
  if (sample.class_label < 0 || sample.class_label >= classes_) {
    throw ValidationError("Dataset::add: class label out of range");
  }
  if (groups_ == 0) {
    if (sample.group_label) {
      throw ValidationError("Dataset::add: group label on ungrouped dataset");
    }
  } else if (!sample.group_label || *sample.group_label < 0 ||
             *sample.group_label >= groups_) {
    throw ValidationError("Dataset::add: group label missing or out of range");
  }
  samples_.push_back(std::move(sample));
}

void Dataset::append(const Dataset& other) {
  if (!same_shape(other)) {
    throw ValidationError("Dataset::append: shape mismatch");
  }
  samples_.insert(samples_.end(), other.samples_.begin(), other.samples_.end());
}

bool Dataset::same_shape(const Dataset& other) const {
  return dim_ == other.dim_ && classes_ == other.classes_ &&
         groups_ == other.groups_;
}

std::vector<long> Dataset::class_counts() const {
  std::vector<long> counts(static_cast<std::size_t>(classes_), 0);
  for (const auto& s : samples_) {
    ++counts[static_cast<std::size_t>(s.class_label)];
  }
  return counts;
}

std::vector<long> Dataset::class_counts(Origin origin) const {
  std::vector<long> counts(static_cast<std::size_t>(classes_), 0);
  for (const auto& s : samples_) {
    if (s.origin == origin) {
      ++counts[static_cast<std::size_t>(s.class_label)];
    }
  }
  return counts;
}

CellCounts Dataset::cell_counts() const {
  CellCounts counts;
  for (int c = 0; c < classes_; ++c) {
    for (int g = 0; g < group_slots(); ++g) {
      counts[{c, g}] = 0;
    }
  }
  for (const auto& s : samples_) {
    ++counts[cell_of(s)];
  }
  return counts;
}

CellCounts Dataset::cell_counts(Origin origin) const {
  CellCounts counts;
  for (int c = 0; c < classes_; ++c) {
    for (int g = 0; g < group_slots(); ++g) {
      counts[{c, g}] = 0;
    }
  }
  for (const auto& s : samples_) {
    if (s.origin == origin) {
      ++counts[cell_of(s)];
    }
  }
  return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(dim_, classes_, groups_);
  out.samples_.reserve(indices.size());
  for (std::size_t i : indices) {
    out.samples_.push_back(samples_.at(i));
  }
  return out;
}

void Dataset::write_csv(std::ostream& out) const {
  for (std::size_t j = 0; j < dim_; ++j) {
    out << 'f' << j << ',';
  }
  out << "class,group,origin\n";
  char buf[32];
  for (const auto& s : samples_) {
    for (double v : s.features) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << s.class_label << ',';
    if (s.group_label) {
      out << *s.group_label;
    }
    out << ',' << to_string(s.origin) << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    fields.emplace_back();
  }
  return fields;
}

} // namespace

Dataset Dataset::read_csv(std::istream& in, int classes, int groups) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("Dataset::read_csv: missing header");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[header.size() - 3] != "class" ||
      header[header.size() - 2] != "group" || header.back() != "origin") {
    throw ValidationError("Dataset::read_csv: header must end with class,group,origin");
  }
  const std::size_t dim = header.size() - 3;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j] != "f" + std::to_string(j)) {
      throw ValidationError("Dataset::read_csv: unexpected column '" + header[j] + "'");
    }
  }
  Dataset out(dim, classes, groups);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const auto fields = split_csv_line(line);
    if (fields.size() != dim + 3) {
      throw ValidationError("Dataset::read_csv: line " + std::to_string(line_no) +
                            ": expected " + std::to_string(dim + 3) + " fields");
    }
    Sample s;
    s.features.resize(dim);
    try {
      for (std::size_t j = 0; j < dim; ++j) {
        s.features[j] = std::stod(fields[j]);
      }
      s.class_label = std::stoi(fields[dim]);
      if (!fields[dim + 1].empty()) {
        s.group_label = std::stoi(fields[dim + 1]);
      }
    } catch (const std::logic_error&) {
      throw ValidationError("Dataset::read_csv: line " + std::to_string(line_no) +
                            ": malformed number");
    }
    const std::string& origin = fields[dim + 2];
    if (origin == "real") {
      s.origin = Origin::Real;
    } else if (origin == "synthetic") {
      s.origin = Origin::Synthetic;
    } else {
      throw ValidationError("Dataset::read_csv: line " + std::to_string(line_no) +
                            ": unknown origin '" + origin + "'");
    }
    try {
      out.add(std::move(s));
    } catch (const ValidationError& e) {
      throw ValidationError("Dataset::read_csv: line " + std::to_string(line_no) +
                            ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// WorldModel
// ---------------------------------------------------------------------------

std::size_t WorldModel::cell_index(int cls, int group) const {
  if (cls < 0 || cls >= classes || group < 0 || group >= group_slots()) {
    throw ValidationError("WorldModel: cell (" + std::to_string(cls) + ", " +
                          std::to_string(group) + ") out of range");
  }
  return static_cast<std::size_t>(cls * group_slots() + group);
}

void WorldModel::validate() const {
  const auto cells = static_cast<std::size_t>(classes * group_slots());
  if (dim == 0 || classes < 1 || means.size() != cells ||
      variances.size() != cells ||
      gap_directions.size() != static_cast<std::size_t>(classes)) {
    throw ValidationError("WorldModel: inconsistent shape");
  }
  for (std::size_t i = 0; i < cells; ++i) {
    if (means[i].size() != dim || variances[i].size() != dim) {
      throw ValidationError("WorldModel: cell vector length mismatch");
    }
    for (double v : variances[i]) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw ValidationError("WorldModel: variances must be strictly positive");
      }
    }
  }
  for (const auto& delta : gap_directions) {
    if (delta.size() != dim) {
      throw ValidationError("WorldModel: gap direction length mismatch");
    }
    double norm2 = 0.0;
    for (double v : delta) {
      norm2 += v * v;
    }
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-9) {
      throw ValidationError("WorldModel: gap direction must have unit norm");
    }
  }
}

namespace {

std::vector<double> random_unit(Rng& rng, std::size_t dim, std::size_t begin,
                                std::size_t end) {
  std::vector<double> v(dim, 0.0);
  double norm2 = 0.0;
  while (norm2 < 1e-12) {
    norm2 = 0.0;
    for (std::size_t j = begin; j < end; ++j) {
      v[j] = rng.normal();
      norm2 += v[j] * v[j];
    }
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) {
    x *= inv;
  }
  return v;
}

std::vector<std::vector<double>> random_gap_directions(Rng& rng, std::size_t dim,
                                                       int classes) {
  std::vector<std::vector<double>> dirs;
  for (int c = 0; c < classes; ++c) {
    dirs.push_back(random_unit(rng, dim, 0, dim));
  }
  return dirs;
}

void check_counts(const WorldModel& world, const CellCounts& counts) {
  for (const auto& [key, n] : counts) {
    if (n < 0) {
      throw ValidationError("negative count for cell (" + std::to_string(key.first) +
                            ", " + std::to_string(key.second) + ")");
    }
    (void)world.cell_index(key.first, key.second);
  }
}

std::optional<int> group_for(const WorldModel& world, int g) {
  return world.groups > 0 ? std::optional<int>(g) : std::nullopt;
}

} // namespace

WorldModel make_class_world(const ClassWorldParams& params, std::uint64_t seed) {
  if (params.dim == 0 || params.classes < 2 || params.separation < 0.0 ||
      !(params.variance_lo > 0.0) || params.variance_hi < params.variance_lo) {
    throw ValidationError("make_class_world: invalid parameters");
  }
  Rng rng(derive_seed(seed, "class-world"));
  WorldModel world;
  world.dim = params.dim;
  world.classes = params.classes;
  world.groups = 0;
  for (int c = 0; c < params.classes; ++c) {
    std::vector<double> mu(params.dim), var(params.dim);
    for (std::size_t j = 0; j < params.dim; ++j) {
      mu[j] = params.separation * rng.normal();
      var[j] = rng.uniform(params.variance_lo, params.variance_hi);
    }
    world.means.push_back(std::move(mu));
    world.variances.push_back(std::move(var));
  }
  Rng gap_rng(derive_seed(seed, "gap-directions"));
  world.gap_directions = random_gap_directions(gap_rng, params.dim, params.classes);
  world.validate();
  return world;
}

std::vector<long> make_longtail_counts(const LongTailProfile& profile) {
  if (profile.classes < 2) {
    throw ValidationError("make_longtail_counts: need at least 2 classes");
  }
  if (profile.n_max < 1) {
    throw ValidationError("make_longtail_counts: n_max must be >= 1");
  }
  if (!(profile.imbalance_factor >= 1.0)) {
    throw ValidationError("make_longtail_counts: imbalance factor must be >= 1");
  }
  std::vector<long> counts(static_cast<std::size_t>(profile.classes));
  const double last = static_cast<double>(profile.classes - 1);
  for (int k = 0; k < profile.classes; ++k) {
    const double scale = std::pow(profile.imbalance_factor, -k / last);
    counts[static_cast<std::size_t>(k)] =
        std::lround(static_cast<double>(profile.n_max) * scale);
  }
  return counts;
}

CellCounts per_class_cells(std::span<const long> counts) {
  CellCounts cells;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    cells[{static_cast<int>(c), 0}] = counts[c];
  }
  return cells;
}

CellCounts uniform_cells(const WorldModel& world, long per_cell) {
  CellCounts cells;
  for (int c = 0; c < world.classes; ++c) {
    for (int g = 0; g < world.group_slots(); ++g) {
      cells[{c, g}] = per_cell;
    }
  }
  return cells;
}

Dataset sample_real(const WorldModel& world, const CellCounts& counts,
                    std::uint64_t seed) {
  check_counts(world, counts);
  Dataset out = world.empty_dataset();
  for (const auto& [key, n] : counts) {
    const auto [c, g] = key;
    const std::size_t cell = world.cell_index(c, g);
    const auto& mu = world.means[cell];
    const auto& var = world.variances[cell];
    Rng rng(derive_seed(seed, "real", cell));
    for (long i = 0; i < n; ++i) {
      Sample s;
      s.features.resize(world.dim);
      for (std::size_t j = 0; j < world.dim; ++j) {
        s.features[j] = mu[j] + std::sqrt(var[j]) * rng.normal();
      }
      s.class_label = c;
      s.group_label = group_for(world, g);
      s.origin = Origin::Real;
      out.add(std::move(s));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SynthSpec
// ---------------------------------------------------------------------------

void SynthSpec::validate() const {
  if (!world) {
    throw ValidationError("SynthSpec: missing world model");
  }
  if (!(quality > 0.0 && quality <= 1.0)) {
    throw ValidationError("SynthSpec: quality must lie in (0, 1]");
  }
  if (modes < 1) {
    throw ValidationError("SynthSpec: modes must be >= 1");
  }
  if (gap < 0.0 || sensitivity < 0.0 || inflation < 0.0 || mode_offset < 0.0) {
    throw ValidationError("SynthSpec: gap, sensitivity, inflation, mode_offset must be >= 0");
  }
}

std::vector<double> SynthSpec::mode_offset_vector(int cls, int component) const {
  const std::size_t dim = world->dim;
  std::vector<double> out(dim, 0.0);
  if (modes == 1 || gap == 0.0 || mode_offset == 0.0) {
    return out;
  }
  Rng rng(derive_seed(mode_seed, "mode-offsets", static_cast<std::uint64_t>(cls)));
  std::vector<std::vector<double>> raw;
  std::vector<double> centre(dim, 0.0);
  for (int j = 0; j < modes; ++j) {
    raw.push_back(random_unit(rng, dim, 0, dim));
    for (std::size_t k = 0; k < dim; ++k) {
      centre[k] += raw.back()[k] / modes;
    }
  }
  double sum_norm2 = 0.0;
  for (auto& v : raw) {
    for (std::size_t k = 0; k < dim; ++k) {
      v[k] -= centre[k];
      sum_norm2 += v[k] * v[k];
    }
  }
  const double rms = std::sqrt(sum_norm2 / modes);
  const double scale = rms > 0.0 ? mode_offset * gap / rms : 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    out[k] = raw[static_cast<std::size_t>(component)][k] * scale;
  }
  return out;
}

Dataset sample_synthetic(const SynthSpec& spec, const CellCounts& counts,
                         std::uint64_t seed) {
  spec.validate();
  const WorldModel& world = *spec.world;
  check_counts(world, counts);
  const double shift = spec.shift_magnitude();
  const double noise_scale = std::sqrt(spec.variance_scale());

  std::map<int, std::vector<std::vector<double>>> offsets;
  Dataset out = world.empty_dataset();
  for (const auto& [key, n] : counts) {
    const auto [c, g] = key;
    if (n == 0) {
      continue;
    }
    auto& class_offsets = offsets[c];
    if (class_offsets.empty()) {
      for (int j = 0; j < spec.modes; ++j) {
        class_offsets.push_back(spec.mode_offset_vector(c, j));
      }
    }
    const std::size_t cell = world.cell_index(c, g);
    const auto& mu = world.means[cell];
    const auto& var = world.variances[cell];
    const auto& delta = world.gap_directions[static_cast<std::size_t>(c)];
    Rng rng(derive_seed(seed, "synthetic", cell));
    for (long i = 0; i < n; ++i) {
      const auto& eps =
          class_offsets[spec.modes == 1 ? 0 : rng.below(static_cast<std::size_t>(spec.modes))];
      Sample s;
      s.features.resize(world.dim);
      for (std::size_t j = 0; j < world.dim; ++j) {
        const double sd = std::sqrt(var[j]);
        s.features[j] = mu[j] + sd * (shift * delta[j] + eps[j]) +
                        sd * noise_scale * rng.normal();
      }
      s.class_label = c;
      s.group_label = group_for(world, g);
      s.origin = Origin::Synthetic;
      out.add(std::move(s));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spurious world
// ---------------------------------------------------------------------------

std::array<long, 4> SpuriousProfile::expected_cells() const {
  std::array<long, 4> cells{};
  for (int c = 0; c < 2; ++c) {
    const long n = class_counts[static_cast<std::size_t>(c)];
    const long majority = std::lround(p * static_cast<double>(n));
    // Majority background of class c is background c.
    cells[static_cast<std::size_t>(2 * c + c)] = majority;
    cells[static_cast<std::size_t>(2 * c + (1 - c))] = n - majority;
  }
  return cells;
}

void SpuriousProfile::validate() const {
  if (!(p >= 0.5 && p <= 1.0)) {
    throw ValidationError("SpuriousProfile: p must lie in [0.5, 1]");
  }
  if (class_counts[0] < 0 || class_counts[1] < 0) {
    throw ValidationError("SpuriousProfile: class counts must be nonnegative");
  }
  if (core_strength < 0.0 || background_strength < 0.0) {
    throw ValidationError("SpuriousProfile: strengths must be nonnegative");
  }
}

SpuriousWorld make_spurious_world(const SpuriousProfile& profile, std::size_t dim,
                                  std::uint64_t seed) {
  profile.validate();
  if (dim < 2) {
    throw ValidationError("make_spurious_world: dim must be >= 2");
  }
  const std::size_t split = dim / 2;
  Rng rng(derive_seed(seed, "spurious-world"));
  const auto core_dir = random_unit(rng, dim, 0, split);
  const auto bg_dir = random_unit(rng, dim, split, dim);

  WorldModel world;
  world.dim = dim;
  world.classes = 2;
  world.groups = 2;
  for (int c = 0; c < 2; ++c) {
    for (int b = 0; b < 2; ++b) {
      std::vector<double> mu(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        mu[j] = (2 * c - 1) * profile.core_strength * core_dir[j] +
                (2 * b - 1) * profile.background_strength * bg_dir[j];
      }
      world.means.push_back(std::move(mu));
      world.variances.emplace_back(dim, 1.0);
    }
  }
  Rng gap_rng(derive_seed(seed, "gap-directions"));
  world.gap_directions = random_gap_directions(gap_rng, dim, 2);
  world.validate();

  // Background drawn per sample, so cell sizes are binomial around p * n.
  Rng bg_rng(derive_seed(seed, "spurious-backgrounds"));
  CellCounts counts;
  for (int c = 0; c < 2; ++c) {
    counts[{c, 0}] = 0;
    counts[{c, 1}] = 0;
    for (long i = 0; i < profile.class_counts[static_cast<std::size_t>(c)]; ++i) {
      const bool majority = bg_rng.uniform() < profile.p;
      const int b = majority ? c : 1 - c;
      ++counts[{c, b}];
    }
  }
  Dataset train = sample_real(world, counts, derive_seed(seed, "spurious-train"));
  return {std::move(world), std::move(train)};
}

// ---------------------------------------------------------------------------
// Fairness world
// ---------------------------------------------------------------------------

FairnessWorld make_fairness_world(std::span<const std::array<long, 2>> cells,
                                  std::size_t dim, std::uint64_t seed,
                                  const FairnessGeometry& geometry) {
  if (cells.size() < 2) {
    throw ValidationError("make_fairness_world: need at least 2 groups");
  }
  if (dim < 2) {
    throw ValidationError("make_fairness_world: dim must be >= 2");
  }
  for (std::size_t g = 0; g < cells.size(); ++g) {
    if (cells[g][0] < 0 || cells[g][1] < 0) {
      throw ValidationError("make_fairness_world: negative count in group " +
                            std::to_string(g));
    }
    if (cells[g][0] + cells[g][1] == 0) {
      throw ValidationError("make_fairness_world: group " + std::to_string(g) +
                            " is empty");
    }
  }
  const int groups = static_cast<int>(cells.size());
  Rng rng(derive_seed(seed, "fairness-world"));
  const auto class_dir = random_unit(rng, dim, 0, dim);

  WorldModel world;
  world.dim = dim;
  world.classes = 2;
  world.groups = groups;
  std::vector<std::vector<double>> group_class_dirs, group_dirs;
  for (int g = 0; g < groups; ++g) {
    auto tilt = random_unit(rng, dim, 0, dim);
    std::vector<double> u(dim);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      u[j] = class_dir[j] + geometry.direction_spread * tilt[j];
      norm2 += u[j] * u[j];
    }
    for (double& x : u) {
      x /= std::sqrt(norm2);
    }
    group_class_dirs.push_back(std::move(u));
    group_dirs.push_back(random_unit(rng, dim, 0, dim));
  }
  for (int c = 0; c < 2; ++c) {
    for (int g = 0; g < groups; ++g) {
      std::vector<double> mu(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        mu[j] = (2 * c - 1) * geometry.class_strength * group_class_dirs[g][j] +
                geometry.group_strength * group_dirs[g][j];
      }
      world.means.push_back(std::move(mu));
      world.variances.emplace_back(dim, 1.0);
    }
  }
  Rng gap_rng(derive_seed(seed, "gap-directions"));
  world.gap_directions = random_gap_directions(gap_rng, dim, 2);
  world.validate();

  CellCounts counts;
  for (int g = 0; g < groups; ++g) {
    counts[{0, g}] = cells[static_cast<std::size_t>(g)][0];
    counts[{1, g}] = cells[static_cast<std::size_t>(g)][1];
  }
  Dataset train = sample_real(world, counts, derive_seed(seed, "fairness-train"));
  return {std::move(world), std::move(train)};
}

// ---------------------------------------------------------------------------
// Toy 2D
// ---------------------------------------------------------------------------

WorldModel toy2d_world(double sigma) {
  if (!(sigma > 0.0)) {
    throw ValidationError("toy2d_world: sigma must be positive");
  }
  WorldModel world;
  world.dim = 2;
  world.classes = 2;
  world.groups = 2;
  for (int c = 0; c < 2; ++c) {
    for (int g = 0; g < 2; ++g) {
      world.means.push_back({2.0 * c - 1.0, 2.0 * g - 1.0});
      world.variances.push_back({sigma * sigma, sigma * sigma});
    }
  }
  world.gap_directions = {{1.0, 0.0}, {1.0, 0.0}};
  world.validate();
  return world;
}

Dataset make_toy2d(const std::array<long, 4>& counts, std::uint64_t seed,
                   double sigma) {
  const WorldModel world = toy2d_world(sigma);
  CellCounts cells;
  for (int c = 0; c < 2; ++c) {
    for (int g = 0; g < 2; ++g) {
      const long n = counts[static_cast<std::size_t>(2 * c + g)];
      if (n < 0) {
        throw ValidationError("make_toy2d: negative count");
      }
      cells[{c, g}] = n;
    }
  }
  return sample_real(world, cells, seed);
}

} // namespace synaug
