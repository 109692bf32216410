#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace synaug {

/// Thrown for any violated precondition on inputs (bad counts, out-of-range
/// knobs, malformed files). The CLI maps it to exit code 1.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class Origin : std::uint8_t { Real, Synthetic };

const char* to_string(Origin origin);

struct Sample {
  std::vector<double> features;
  int class_label = 0;
  std::optional<int> group_label;
  Origin origin = Origin::Real;

  bool operator==(const Sample&) const = default;
};

/// (class, group) key. Ungrouped data uses group 0 for every sample.
using CellKey = std::pair<int, int>;
using CellCounts = std::map<CellKey, long>;

class Dataset {
public:
  Dataset() = default;
  /// groups == 0 means ungrouped: samples must not carry a group label.
  Dataset(std::size_t dim, int classes, int groups);

  /// Appends after validating the sample against (K, G, d).
  void add(Sample sample);
  void append(const Dataset& other);

  std::size_t dim() const { return dim_; }
  int classes() const { return classes_; }
  int groups() const { return groups_; }
  /// Number of group slots per class; 1 for ungrouped data.
  int group_slots() const { return groups_ > 0 ? groups_ : 1; }

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const std::vector<Sample>& samples() const { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  std::vector<long> class_counts() const;
  std::vector<long> class_counts(Origin origin) const;
  CellCounts cell_counts() const;
  CellCounts cell_counts(Origin origin) const;

  bool same_shape(const Dataset& other) const;
  Dataset subset(std::span<const std::size_t> indices) const;

  /// CSV with header `f0..f{d-1},class,group,origin`; empty group field for
  /// ungrouped samples.
  void write_csv(std::ostream& out) const;
  static Dataset read_csv(std::istream& in, int classes, int groups);

  bool operator==(const Dataset&) const = default;

private:
  std::size_t dim_ = 0;
  int classes_ = 0;
  int groups_ = 0;
  std::vector<Sample> samples_;
};

CellKey cell_of(const Sample& sample);

// ---------------------------------------------------------------------------
// Ground-truth world
// ---------------------------------------------------------------------------

/// Per-(class, group) Gaussian with diagonal covariance, plus one unit gap
/// direction per class used by the synthetic generator.
struct WorldModel {
  std::size_t dim = 0;
  int classes = 0;
  int groups = 0;
  std::vector<std::vector<double>> means;          // [cell]
  std::vector<std::vector<double>> variances;      // [cell]
  std::vector<std::vector<double>> gap_directions; // [class]

  int group_slots() const { return groups > 0 ? groups : 1; }
  std::size_t cell_index(int cls, int group) const;
  const std::vector<double>& mean(int cls, int group) const {
    return means[cell_index(cls, group)];
  }
  const std::vector<double>& variance(int cls, int group) const {
    return variances[cell_index(cls, group)];
  }
  Dataset empty_dataset() const { return {dim, classes, groups}; }

  /// Throws ValidationError on non-positive variances, non-unit gap
  /// directions, or inconsistent shapes.
  void validate() const;
};

struct ClassWorldParams {
  std::size_t dim = 20;
  int classes = 20;
  /// Standard deviation of each class-mean coordinate.
  double separation = 0.5;
  double variance_lo = 0.75;
  double variance_hi = 1.25;
};

/// Ungrouped K-class world with randomly placed class means.
WorldModel make_class_world(const ClassWorldParams& params, std::uint64_t seed);

struct LongTailProfile {
  long n_max = 500;
  double imbalance_factor = 100.0;
  int classes = 100;
};

/// count(k) = round(n_max * IF^(-k/(K-1))).
std::vector<long> make_longtail_counts(const LongTailProfile& profile);

/// Maps per-class counts onto group 0 cells.
CellCounts per_class_cells(std::span<const long> counts);
CellCounts uniform_cells(const WorldModel& world, long per_cell);

Dataset sample_real(const WorldModel& world, const CellCounts& counts,
                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

/// Parametric stand-in for a class-conditional generative model.
///
/// Class-c samples come from an m-component mixture. Component j has mean
///   mu + sigma * (shift(q) * delta_c + eps_{c,j})
/// and covariance variance_scale(q) * Sigma, where
///   shift(q) = gap * (1 + sensitivity * (1 - q)),
///   variance_scale(q) = 1 + inflation * (1 - q).
/// Offsets eps are measured in per-coordinate standard deviations, are fixed
/// by mode_seed, average to zero over j, and have RMS norm mode_offset * gap.
struct SynthSpec {
  std::shared_ptr<const WorldModel> world;
  double gap = 0.5;
  double quality = 1.0;
  int modes = 1;
  double sensitivity = 1.0;
  double inflation = 0.0;
  double mode_offset = 0.25;
  std::uint64_t mode_seed = 0;

  double shift_magnitude() const { return gap * (1.0 + sensitivity * (1.0 - quality)); }
  double variance_scale() const { return 1.0 + inflation * (1.0 - quality); }
  void validate() const;

  /// Whitened offset of mixture component j for class c.
  std::vector<double> mode_offset_vector(int cls, int component) const;
};

Dataset sample_synthetic(const SynthSpec& spec, const CellCounts& counts,
                         std::uint64_t seed);

// ---------------------------------------------------------------------------
// Spurious-correlation world
// ---------------------------------------------------------------------------

/// Two classes, two backgrounds. The group label is the background; the four
/// (class, background) cells are the evaluation groups. Class c's majority
/// background is background c.
struct SpuriousProfile {
  double p = 0.95;
  std::array<long, 2> class_counts{1000, 1000};
  /// Mean separation (half-distance, in sigma) in the class block.
  double core_strength = 1.0;
  /// Mean separation (half-distance, in sigma) in the background block.
  double background_strength = 2.5;

  /// Expected counts in (c0b0, c0b1, c1b0, c1b1) order.
  std::array<long, 4> expected_cells() const;
  void validate() const;
};

struct SpuriousWorld {
  WorldModel world;
  Dataset train;
};

SpuriousWorld make_spurious_world(const SpuriousProfile& profile, std::size_t dim,
                                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Fairness world
// ---------------------------------------------------------------------------

/// Binary class label with G sensitive groups. Group g shifts the features
/// along its own direction and slightly rotates its class direction, so the
/// optimal rule differs per group.
struct FairnessGeometry {
  double class_strength = 1.5;
  double group_strength = 1.5;
  double direction_spread = 0.6;

  bool operator==(const FairnessGeometry&) const = default;
};

struct FairnessWorld {
  WorldModel world;
  Dataset train;
};

/// cells[g] = {count of class 0, count of class 1} in group g.
FairnessWorld make_fairness_world(std::span<const std::array<long, 2>> cells,
                                  std::size_t dim, std::uint64_t seed,
                                  const FairnessGeometry& geometry = {});

// ---------------------------------------------------------------------------
// Toy 2D
// ---------------------------------------------------------------------------

/// Class means at x = -1 / +1, group offsets at y = -1 / +1, shared isotropic
/// covariance. The fair decision boundary is the vertical line x = 0.
WorldModel toy2d_world(double sigma = 0.6);

/// counts in (c0g0, c0g1, c1g0, c1g1) order.
Dataset make_toy2d(const std::array<long, 4>& counts, std::uint64_t seed,
                   double sigma = 0.6);

} // namespace synaug
