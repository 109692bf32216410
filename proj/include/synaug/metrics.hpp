#pragma once

#include "synaug/nnkit.hpp"
#include "synaug/worldgen.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace synaug {

/// Argmax per row, ties to the lower class index.
std::vector<int> predict(const Model& model, const Matrix& features);
std::vector<int> predict(const Model& model, const Dataset& data);

double accuracy(const Model& model, const Dataset& data);
std::vector<double> per_class_accuracy(const Model& model, const Dataset& data);

/// Buckets follow train counts: Many > 100, Medium in [20, 100], Few < 20.
/// Each bucket is the mean per-class accuracy of its classes; absent when
/// the bucket has no class.
struct ShotSplit {
  std::optional<double> many;
  std::optional<double> medium;
  std::optional<double> few;

  bool operator==(const ShotSplit&) const = default;
};

enum class Shot { Many, Medium, Few };
Shot shot_bucket(long train_count);

ShotSplit shot_split_accuracy(const Model& model, const Dataset& test,
                              std::span<const long> train_counts);
ShotSplit shot_split_from_class_accuracy(std::span<const double> class_accuracy,
                                         std::span<const long> train_counts);

/// Which partition group_accuracy ranges over.
enum class GroupBy {
  Group,     ///< the group label
  ClassCell, ///< (class, group) cells, e.g. (bird type, background)
};

struct GroupAccuracy {
  double worst = 0.0;
  double mean = 0.0; // unweighted over groups
  std::vector<double> per_group;
};

GroupAccuracy group_accuracy(const Model& model, const Dataset& data,
                             GroupBy by = GroupBy::Group);
GroupAccuracy group_accuracy_from_predictions(const Dataset& data,
                                              std::span<const int> predictions,
                                              GroupBy by = GroupBy::Group);

/// Max pairwise gaps across groups of the positive-prediction rate (DP) and of
/// the true-positive rate (EO); ED averages the max gaps of the TPR and FPR.
/// A metric is absent when some group lacks the stratum it conditions on.
struct Fairness {
  std::optional<double> dp;
  std::optional<double> ed;
  std::optional<double> eo;

  bool operator==(const Fairness&) const = default;
};

Fairness fairness_metrics(const Model& model, const Dataset& data, int positive_class = 1);
Fairness fairness_from_predictions(const Dataset& data, std::span<const int> predictions,
                                   int positive_class = 1);

struct ProbeConfig {
  int epochs = 500;
  double learning_rate = 0.1;
  double train_fraction = 0.8;

  bool operator==(const ProbeConfig&) const = default;
};

/// Held-out accuracy of a fresh affine real-vs-synthetic classifier trained on
/// frozen embeddings with a stratified split. 0.5 means no detectable gap.
double domain_probe(const Model& model, const Dataset& real, const Dataset& synthetic,
                    const ProbeConfig& config, std::uint64_t seed);

/// Angle in degrees between the decision boundary of a 2-class linear model
/// on 2D inputs and the vertical axis.
double boundary_angle(const Model& model);

/// `e0..e{h-1},class,group,origin`, one row per sample in dataset order.
void export_embeddings(const Model& model, const Dataset& data, std::ostream& out);

struct MetricsReport {
  double overall_accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  ShotSplit shots;
  std::optional<double> worst_group;
  std::optional<double> mean_group;
  std::vector<double> per_group_accuracy;
  Fairness fairness;
  std::optional<double> domain_probe;
  std::optional<double> boundary_angle;

  bool operator==(const MetricsReport&) const = default;
};

struct EvaluateOptions {
  std::optional<std::vector<long>> train_counts;
  bool groups = false;
  GroupBy group_by = GroupBy::Group;
  bool fairness = false;
  int positive_class = 1;
};

MetricsReport evaluate(const Model& model, const Dataset& test, const EvaluateOptions& options);

/// Fixed field names; absent values are null.
std::string to_json(const MetricsReport& report);

} // namespace synaug
