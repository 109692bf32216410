#pragma once

#include "synaug/experiment_spec.hpp"
#include "synaug/metrics.hpp"

#include <cstdint>
#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace synaug {

struct RunRecord {
  std::string spec_hash;
  std::uint64_t seed = 0;
  int replicate = 0;
  std::string condition;
  MetricsReport metrics;
  /// Wall-clock time of the run; logged, never written to result files.
  double seconds = 0.0;
};

struct RunOptions {
  /// Replicates run concurrently on this many threads.
  int jobs = 1;
  std::function<void(const std::string&)> log;
};

/// Stable across re-serialization of the same spec.
std::string spec_hash(const ExperimentSpec& spec);
std::uint64_t replicate_seed(const ExperimentSpec& spec, int replicate);

// Each driver returns records ordered by (condition, replicate), with
// conditions in the driver's fixed order.
std::vector<RunRecord> run_replacement(const ExperimentSpec& spec, const RunOptions& options = {});
std::vector<RunRecord> run_ablation(const ExperimentSpec& spec, const RunOptions& options = {});
std::vector<RunRecord> run_quality_sweep(const ExperimentSpec& spec, const RunOptions& options = {});
std::vector<RunRecord> run_longtail(const ExperimentSpec& spec, const RunOptions& options = {});
std::vector<RunRecord> run_fairness(const ExperimentSpec& spec, const RunOptions& options = {});
std::vector<RunRecord> run_spurious(const ExperimentSpec& spec, const RunOptions& options = {});
std::vector<RunRecord> run_toy2d(const ExperimentSpec& spec, const RunOptions& options = {});
std::vector<RunRecord> run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

/// The world, default real training set and balanced real test set of one
/// replicate, built from the same seed streams the drivers use.
struct GeneratedWorld {
  WorldModel world;
  Dataset train;
  Dataset test;
};
GeneratedWorld generate_world(const ExperimentSpec& spec, int replicate = 0);

/// Condition labels used by the drivers.
std::string replacement_condition(bool classwise, double fraction);
std::string quality_condition(double quality);
std::string longtail_condition(bool synaug, double imbalance_factor);

/// Scenario cell counts in (c0g0, c0g1, c1g0, c1g1) order.
struct Toy2dScenario {
  std::string name;
  std::array<long, 4> cells;
};
std::vector<Toy2dScenario> toy2d_scenarios(long major, long minor);

/// (metric name, value) pairs present in a report, in fixed order.
std::vector<std::pair<std::string, double>> report_metrics(const MetricsReport& report);

/// Header `experiment,condition,seed,metric,value`.
void write_records_csv(ExperimentKind kind, const std::vector<RunRecord>& records,
                       std::ostream& out);

/// Per-condition median and interquartile range of every metric.
std::string summary_json(const ExperimentSpec& spec, const std::vector<RunRecord>& records);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};
/// Linear-interpolation quantiles; throws on empty input.
Quartiles quartiles(std::vector<double> values);

/// Median of one metric over all records of a condition; nullopt if absent.
std::optional<double> condition_median(const std::vector<RunRecord>& records,
                                       const std::string& condition, const std::string& metric);

} // namespace synaug
