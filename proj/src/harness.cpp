#include "synaug/harness.hpp"

#include "synaug/config.hpp"
#include "synaug/rebalance.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <memory>
#include <ostream>
#include <thread>

namespace synaug {

namespace {

using Clock = std::chrono::steady_clock;

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Short decimal form for condition labels (0.5, 0.25, 100).
std::string label_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// Everything one replicate needs, derived from spec and replicate index.
struct Replicate {
  const ExperimentSpec& spec;
  int index;
  std::uint64_t seed;

  std::uint64_t stream(std::string_view label) const { return derive_seed(seed, label); }
  std::uint64_t stream(std::string_view label, std::uint64_t i) const {
    return derive_seed(seed, label, i);
  }

  TrainConfig train_config(bool mixup) const {
    TrainConfig cfg = spec.train;
    cfg.seed = stream("train");
    if (!mixup) {
      cfg.mixup_alpha = 0.0;
    }
    return cfg;
  }

  TrainConfig head_stage_config() const {
    TrainConfig cfg = head_config(spec.train);
    cfg.epochs = spec.head.epochs;
    cfg.learning_rate = spec.train.learning_rate * spec.head.lr_scale;
    cfg.momentum = spec.head.momentum;
    cfg.batch_size = spec.head.batch_size;
    cfg.sampler = Sampler::Shuffle;
    cfg.seed = stream("head");
    return cfg;
  }

  Model fresh_model(std::size_t dim, int classes) const {
    return init_model({dim, spec.hidden, classes}, stream("model-init"));
  }

  SynthSpec synth(const WorldModel& world) const {
    SynthSpec s;
    s.world = std::make_shared<const WorldModel>(world);
    s.gap = spec.synth.gap;
    s.quality = spec.synth.quality;
    s.modes = spec.synth.modes;
    s.sensitivity = spec.synth.sensitivity;
    s.inflation = spec.synth.inflation;
    s.mode_offset = spec.synth.mode_offset;
    s.mode_seed = stream("synth-modes");
    return s;
  }

  ExcessPolicy excess() const { return spec.keep_excess ? ExcessPolicy::Keep : ExcessPolicy::Reject; }
};

long largest_cell(const Dataset& data, bool by_cell) {
  long best = 0;
  if (by_cell) {
    for (const auto& [key, n] : data.cell_counts()) {
      best = std::max(best, n);
    }
  } else {
    for (long n : data.class_counts()) {
      best = std::max(best, n);
    }
  }
  return best;
}

/// The balanced head stage needs every class (cell) present in the real data.
long smallest_class(const Dataset& data) {
  const auto counts = data.class_counts();
  const auto it = std::min_element(counts.begin(), counts.end());
  if (*it == 0) {
    throw ValidationError("class " + std::to_string(it - counts.begin()) +
                          " has no real training samples (raise n_max or lower the imbalance "
                          "factor)");
  }
  return *it;
}

long smallest_cell(const Dataset& data) {
  long best = -1;
  for (const auto& [key, n] : data.cell_counts()) {
    if (n == 0) {
      throw ValidationError("cell (" + std::to_string(key.first) + ", " +
                            std::to_string(key.second) + ") has no real training samples");
    }
    best = best < 0 ? n : std::min(best, n);
  }
  return best;
}

long target_for(const ExperimentSpec& spec, const Dataset& real, bool by_cell) {
  return spec.target > 0 ? spec.target : largest_cell(real, by_cell);
}

SpuriousProfile spurious_profile(const ExperimentSpec& spec) {
  SpuriousProfile profile;
  profile.p = spec.world.spurious_p;
  profile.class_counts = {spec.world.spurious_per_class, spec.world.spurious_per_class};
  profile.core_strength = spec.world.core_strength;
  profile.background_strength = spec.world.background_strength;
  return profile;
}

WorldModel class_world(const Replicate& r) {
  ClassWorldParams params;
  params.dim = r.spec.world.dim;
  params.classes = r.spec.world.classes;
  params.separation = r.spec.world.separation;
  return make_class_world(params, r.stream("world"));
}

Dataset balanced_test(const WorldModel& world, long per_cell, const Replicate& r) {
  return sample_real(world, uniform_cells(world, per_cell), r.stream("test-data"));
}

RunRecord make_record(const Replicate& r, const std::string& hash, std::string condition,
                      MetricsReport metrics, Clock::time_point start) {
  RunRecord rec;
  rec.spec_hash = hash;
  rec.seed = r.seed;
  rec.replicate = r.index;
  rec.condition = std::move(condition);
  rec.metrics = std::move(metrics);
  rec.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return rec;
}

using ReplicateFn = std::function<std::vector<RunRecord>(const Replicate&, const std::string&)>;

/// Runs every replicate (possibly on several threads) and merges the records
/// condition-major, replicate-minor.
std::vector<RunRecord> run_replicates(const ExperimentSpec& spec, const RunOptions& options,
                                      const ReplicateFn& fn) {
  validate(spec);
  const std::string hash = spec_hash(spec);
  const int n = spec.replicates;
  std::vector<std::vector<RunRecord>> per_rep(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};

  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        const Replicate r{spec, i, replicate_seed(spec, i)};
        per_rep[static_cast<std::size_t>(i)] = fn(r, hash);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int jobs = std::clamp(options.jobs, 1, n);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int j = 0; j < jobs; ++j) {
      threads.emplace_back(worker);
    }
    for (auto& t : threads) {
      t.join();
    }
  }
  for (const auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }

  std::vector<RunRecord> out;
  const std::size_t conditions = per_rep.front().size();
  for (std::size_t c = 0; c < conditions; ++c) {
    for (auto& records : per_rep) {
      out.push_back(std::move(records[c]));
    }
  }
  if (options.log) {
    for (const auto& rec : out) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2fs", rec.seconds);
      options.log(std::string(to_string(spec.kind)) + " " + rec.condition + " replicate " +
                  std::to_string(rec.replicate) + " accuracy " +
                  format_number(rec.metrics.overall_accuracy) + " (" + buf + ")");
    }
  }
  return out;
}

} // namespace

std::string spec_hash(const ExperimentSpec& spec) {
  const std::string text = serialize(spec);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t replicate_seed(const ExperimentSpec& spec, int replicate) {
  return derive_seed(spec.seed, "replicate", static_cast<std::uint64_t>(replicate));
}

GeneratedWorld generate_world(const ExperimentSpec& spec, int replicate) {
  validate(spec);
  const Replicate r{spec, replicate, replicate_seed(spec, replicate)};
  const auto& w = spec.world;
  switch (spec.kind) {
  case ExperimentKind::Replacement: {
    WorldModel world = class_world(r);
    Dataset train = sample_real(world, uniform_cells(world, w.n_max), r.stream("train-data"));
    Dataset test = balanced_test(world, w.test_per_class, r);
    return {std::move(world), std::move(train), std::move(test)};
  }
  case ExperimentKind::Ablation:
  case ExperimentKind::QualitySweep:
  case ExperimentKind::LongTail: {
    WorldModel world = class_world(r);
    const auto counts = make_longtail_counts({w.n_max, w.imbalance_factor, w.classes});
    Dataset train = sample_real(world, per_class_cells(counts), r.stream("train-data"));
    Dataset test = balanced_test(world, w.test_per_class, r);
    return {std::move(world), std::move(train), std::move(test)};
  }
  case ExperimentKind::Fairness: {
    FairnessWorld fw =
        make_fairness_world(w.fairness_cells, w.dim, r.stream("world"), w.fairness_geometry);
    CellCounts cells;
    for (std::size_t g = 0; g < w.fairness_cells.size(); ++g) {
      cells[{0, static_cast<int>(g)}] = w.fairness_cells[g][0];
      cells[{1, static_cast<int>(g)}] = w.fairness_cells[g][1];
    }
    Dataset train = sample_real(fw.world, cells, r.stream("train-data"));
    Dataset test = balanced_test(fw.world, w.test_per_cell, r);
    return {std::move(fw.world), std::move(train), std::move(test)};
  }
  case ExperimentKind::Spurious: {
    SpuriousWorld sw = make_spurious_world(spurious_profile(spec), w.dim, r.stream("world"));
    Dataset test = balanced_test(sw.world, w.test_per_cell, r);
    return {std::move(sw.world), std::move(sw.train), std::move(test)};
  }
  case ExperimentKind::Toy2D: {
    WorldModel world = toy2d_world(w.toy_sigma);
    Dataset train = make_toy2d(toy2d_scenarios(w.toy_major, w.toy_minor).front().cells,
                               r.stream("train-data", 0), w.toy_sigma);
    Dataset test = balanced_test(world, w.test_per_cell, r);
    return {std::move(world), std::move(train), std::move(test)};
  }
  }
  throw ValidationError("generate_world: unknown experiment kind");
}

std::string replacement_condition(bool classwise, double fraction) {
  return std::string(classwise ? "classwise@" : "instancewise@") + label_number(fraction);
}

std::string quality_condition(double quality) {
  return "q=" + label_number(quality);
}

std::string longtail_condition(bool synaug, double imbalance_factor) {
  return std::string(synaug ? "synaug" : "ce") + "@IF=" + label_number(imbalance_factor);
}

std::vector<Toy2dScenario> toy2d_scenarios(long major, long minor) {
  if (major < 1 || minor < 1) {
    throw ValidationError("toy2d_scenarios: counts must be >= 1");
  }
  return {
      {"balanced", {major, major, major, major}},
      // Group totals differ, class totals stay equal.
      {"group_imbalanced", {major, minor, major, minor}},
      // Class totals differ, group totals stay equal.
      {"class_imbalanced", {2 * major - minor, major, minor, major}},
      {"both", {major, major, major, minor}},
  };
}

std::vector<RunRecord> run_replacement(const ExperimentSpec& spec, const RunOptions& options) {
  return run_replicates(spec, options, [](const Replicate& r, const std::string& hash) {
    const auto start = Clock::now();
    const WorldModel world = class_world(r);
    const Dataset real =
        sample_real(world, uniform_cells(world, r.spec.world.n_max), r.stream("train-data"));
    const Dataset test = balanced_test(world, r.spec.world.test_per_class, r);
    const SynthSpec synth = r.synth(world);
    const Model init = r.fresh_model(world.dim, world.classes);
    const TrainConfig cfg = r.train_config(false);

    std::vector<RunRecord> out;
    for (int classwise = 1; classwise >= 0; --classwise) {
      for (std::size_t i = 0; i < r.spec.sweep.size(); ++i) {
        const double f = r.spec.sweep[i];
        const Dataset data = classwise
                                 ? replace_classwise(real, f, synth, r.stream("synth", i))
                                 : replace_instancewise(real, f, synth, r.stream("synth", i));
        const Model model = train(init, data, cfg).model;
        out.push_back(make_record(r, hash, replacement_condition(classwise != 0, f),
                                  evaluate(model, test, {}), start));
      }
    }
    return out;
  });
}

std::vector<RunRecord> run_ablation(const ExperimentSpec& spec, const RunOptions& options) {
  return run_replicates(spec, options, [](const Replicate& r, const std::string& hash) {
    const auto start = Clock::now();
    const WorldModel world = class_world(r);
    const auto counts = make_longtail_counts(
        {r.spec.world.n_max, r.spec.world.imbalance_factor, r.spec.world.classes});
    const Dataset real = sample_real(world, per_class_cells(counts), r.stream("train-data"));
    const Dataset test = balanced_test(world, r.spec.world.test_per_class, r);
    const long target = target_for(r.spec, real, false);
    EvaluateOptions eval;
    eval.train_counts = counts;

    SynthSpec single = r.synth(world);
    single.modes = 1;
    const SynthSpec diverse = r.synth(world);
    const Dataset data_a = uniformize(real, single, target, false, r.stream("synth"), r.excess());
    const Dataset data_b = uniformize(real, diverse, target, false, r.stream("synth"), r.excess());
    const Model init = r.fresh_model(world.dim, world.classes);

    std::vector<RunRecord> out;
    const Model model_a = train(init, data_a, r.train_config(false)).model;
    out.push_back(make_record(r, hash, "a_uniform", evaluate(model_a, test, eval), start));
    const Model model_b = train(init, data_b, r.train_config(false)).model;
    out.push_back(make_record(r, hash, "b_modifier", evaluate(model_b, test, eval), start));
    const Model model_c = train(init, data_b, r.train_config(true)).model;
    out.push_back(make_record(r, hash, "c_mixup", evaluate(model_c, test, eval), start));

    const Dataset head_data = uniform_real_subsample(real, smallest_class(real), r.stream("subsample"));
    const TrainConfig head_cfg = r.head_stage_config();
    const Model model_d = retrain_head(model_c, head_data, head_cfg).model;
    out.push_back(make_record(r, hash, "d_retrain", evaluate(model_d, test, eval), start));
    const Model model_e = finetune_head(model_c, head_data, head_cfg).model;
    out.push_back(make_record(r, hash, "e_finetune", evaluate(model_e, test, eval), start));
    return out;
  });
}

std::vector<RunRecord> run_quality_sweep(const ExperimentSpec& spec, const RunOptions& options) {
  return run_replicates(spec, options, [](const Replicate& r, const std::string& hash) {
    const auto start = Clock::now();
    const WorldModel world = class_world(r);
    const auto counts = make_longtail_counts(
        {r.spec.world.n_max, r.spec.world.imbalance_factor, r.spec.world.classes});
    const Dataset real = sample_real(world, per_class_cells(counts), r.stream("train-data"));
    const Dataset test = balanced_test(world, r.spec.world.test_per_class, r);
    const long target = target_for(r.spec, real, false);
    const Dataset head_data = uniform_real_subsample(real, smallest_class(real), r.stream("subsample"));
    const Model init = r.fresh_model(world.dim, world.classes);
    EvaluateOptions eval;
    eval.train_counts = counts;

    std::vector<RunRecord> out;
    for (double q : r.spec.sweep) {
      SynthSpec synth = r.synth(world);
      synth.quality = q;
      const Dataset data = uniformize(real, synth, target, false, r.stream("synth"), r.excess());
      Model model = train(init, data, r.train_config(true)).model;
      model = finetune_head(std::move(model), head_data, r.head_stage_config()).model;
      out.push_back(make_record(r, hash, quality_condition(q), evaluate(model, test, eval), start));
    }
    return out;
  });
}

std::vector<RunRecord> run_longtail(const ExperimentSpec& spec, const RunOptions& options) {
  return run_replicates(spec, options, [](const Replicate& r, const std::string& hash) {
    const auto start = Clock::now();
    const WorldModel world = class_world(r);
    const Dataset test = balanced_test(world, r.spec.world.test_per_class, r);
    const SynthSpec synth = r.synth(world);
    const Model init = r.fresh_model(world.dim, world.classes);

    std::vector<RunRecord> out;
    for (std::size_t i = 0; i < r.spec.imbalance_factors.size(); ++i) {
      const double factor = r.spec.imbalance_factors[i];
      const auto counts =
          make_longtail_counts({r.spec.world.n_max, factor, r.spec.world.classes});
      const Dataset real =
          sample_real(world, per_class_cells(counts), r.stream("train-data", i));
      EvaluateOptions eval;
      eval.train_counts = counts;

      const Model ce = train(init, real, r.train_config(false)).model;
      out.push_back(make_record(r, hash, longtail_condition(false, factor),
                                evaluate(ce, test, eval), start));

      const Dataset data = uniformize(real, synth, target_for(r.spec, real, false), false,
                                      r.stream("synth", i), r.excess());
      Model model = train(init, data, r.train_config(true)).model;
      const Dataset head_data =
          uniform_real_subsample(real, smallest_class(real), r.stream("subsample", i));
      model = finetune_head(std::move(model), head_data, r.head_stage_config()).model;
      out.push_back(make_record(r, hash, longtail_condition(true, factor),
                                evaluate(model, test, eval), start));
    }
    return out;
  });
}

std::vector<RunRecord> run_fairness(const ExperimentSpec& spec, const RunOptions& options) {
  return run_replicates(spec, options, [](const Replicate& r, const std::string& hash) {
    const auto start = Clock::now();
    const auto& cells = r.spec.world.fairness_cells;
    const FairnessWorld fw = make_fairness_world(cells, r.spec.world.dim, r.stream("world"),
                                                 r.spec.world.fairness_geometry);
    const WorldModel& world = fw.world;
    CellCounts train_cells;
    for (std::size_t g = 0; g < cells.size(); ++g) {
      train_cells[{0, static_cast<int>(g)}] = cells[g][0];
      train_cells[{1, static_cast<int>(g)}] = cells[g][1];
    }
    const Dataset real = sample_real(world, train_cells, r.stream("train-data"));
    const Dataset test = balanced_test(world, r.spec.world.test_per_cell, r);
    const SynthSpec synth = r.synth(world);
    const Model init = r.fresh_model(world.dim, world.classes);
    const TrainConfig head_cfg = r.head_stage_config();
    EvaluateOptions eval;
    eval.groups = true;
    eval.fairness = true;

    std::vector<RunRecord> out;
    const Model erm = train(init, real, r.train_config(false)).model;
    out.push_back(make_record(r, hash, "erm", evaluate(erm, test, eval), start));

    const Dataset aware = uniformize(real, synth, target_for(r.spec, real, true), true,
                                     r.stream("synth"), r.excess());
    Model synaug = train(init, aware, r.train_config(true)).model;
    const Dataset cell_subsample =
        group_balanced_subsample(real, smallest_cell(real), r.stream("subsample"));
    synaug = finetune_head(std::move(synaug), cell_subsample, head_cfg).model;
    out.push_back(make_record(r, hash, "synaug", evaluate(synaug, test, eval), start));

    const Dataset blind = uniformize(real, synth, target_for(r.spec, real, false), false,
                                     r.stream("synth"), r.excess());
    Model synaug_blind = train(init, blind, r.train_config(true)).model;
    const Dataset class_subsample =
        uniform_real_subsample(real, smallest_class(real), r.stream("subsample"));
    synaug_blind = finetune_head(std::move(synaug_blind), class_subsample, head_cfg).model;
    out.push_back(make_record(r, hash, "synaug_no_attr", evaluate(synaug_blind, test, eval), start));

    if (r.spec.resampling) {
      TrainConfig rs = r.train_config(false);
      rs.sampler = Sampler::GroupBalanced;
      const Model erm_rs = train(init, real, rs).model;
      out.push_back(make_record(r, hash, "erm+rs", evaluate(erm_rs, test, eval), start));
      TrainConfig rs_mix = r.train_config(true);
      rs_mix.sampler = Sampler::GroupBalanced;
      Model synaug_rs = train(init, aware, rs_mix).model;
      synaug_rs = finetune_head(std::move(synaug_rs), cell_subsample, head_cfg).model;
      out.push_back(make_record(r, hash, "synaug+rs", evaluate(synaug_rs, test, eval), start));
    }
    return out;
  });
}

std::vector<RunRecord> run_spurious(const ExperimentSpec& spec, const RunOptions& options) {
  return run_replicates(spec, options, [](const Replicate& r, const std::string& hash) {
    const auto start = Clock::now();
    const SpuriousWorld sw =
        make_spurious_world(spurious_profile(r.spec), r.spec.world.dim, r.stream("world"));
    const WorldModel& world = sw.world;
    const Dataset& real = sw.train;
    const Dataset test = balanced_test(world, r.spec.world.test_per_cell, r);
    const SynthSpec synth = r.synth(world);
    const Model init = r.fresh_model(world.dim, world.classes);
    EvaluateOptions eval;
    eval.groups = true;
    eval.group_by = GroupBy::ClassCell;

    std::vector<RunRecord> out;
    const Model base = train(init, real, r.train_config(false)).model;
    out.push_back(make_record(r, hash, "base", evaluate(base, test, eval), start));

    const Dataset data = uniformize(real, synth, target_for(r.spec, real, true), true,
                                    r.stream("synth"), r.excess());
    const Model synaug = train(init, data, r.train_config(true)).model;
    out.push_back(make_record(r, hash, "synaug", evaluate(synaug, test, eval), start));

    const Dataset head_data =
        group_balanced_subsample(real, smallest_cell(real), r.stream("subsample"));
    const TrainConfig head_cfg = r.head_stage_config();
    const Model retrained = retrain_head(synaug, head_data, head_cfg).model;
    out.push_back(make_record(r, hash, "synaug+retrain", evaluate(retrained, test, eval), start));
    const Model finetuned = finetune_head(synaug, head_data, head_cfg).model;
    out.push_back(make_record(r, hash, "synaug+finetune", evaluate(finetuned, test, eval), start));
    return out;
  });
}

std::vector<RunRecord> run_toy2d(const ExperimentSpec& spec, const RunOptions& options) {
  return run_replicates(spec, options, [](const Replicate& r, const std::string& hash) {
    const auto start = Clock::now();
    const double sigma = r.spec.world.toy_sigma;
    const WorldModel world = toy2d_world(sigma);
    const Dataset test = balanced_test(world, r.spec.world.test_per_cell, r);
    const Model init = r.fresh_model(2, 2);
    EvaluateOptions eval;
    eval.groups = true;

    std::vector<RunRecord> out;
    const auto scenarios = toy2d_scenarios(r.spec.world.toy_major, r.spec.world.toy_minor);
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      const Dataset data = make_toy2d(scenarios[i].cells, r.stream("train-data", i), sigma);
      const Model model = train(init, data, r.train_config(false)).model;
      MetricsReport report = evaluate(model, test, eval);
      report.boundary_angle = boundary_angle(model);
      out.push_back(make_record(r, hash, scenarios[i].name, std::move(report), start));
    }
    return out;
  });
}

std::vector<RunRecord> run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  switch (spec.kind) {
  case ExperimentKind::Replacement:
    return run_replacement(spec, options);
  case ExperimentKind::Ablation:
    return run_ablation(spec, options);
  case ExperimentKind::QualitySweep:
    return run_quality_sweep(spec, options);
  case ExperimentKind::LongTail:
    return run_longtail(spec, options);
  case ExperimentKind::Fairness:
    return run_fairness(spec, options);
  case ExperimentKind::Spurious:
    return run_spurious(spec, options);
  case ExperimentKind::Toy2D:
    return run_toy2d(spec, options);
  }
  throw ValidationError("run_experiment: unknown experiment kind");
}

std::vector<std::pair<std::string, double>> report_metrics(const MetricsReport& report) {
  std::vector<std::pair<std::string, double>> out;
  auto add = [&out](const char* name, const std::optional<double>& v) {
    if (v) {
      out.emplace_back(name, *v);
    }
  };
  out.emplace_back("accuracy", report.overall_accuracy);
  add("many", report.shots.many);
  add("medium", report.shots.medium);
  add("few", report.shots.few);
  add("worst_group", report.worst_group);
  add("mean_group", report.mean_group);
  add("dp", report.fairness.dp);
  add("ed", report.fairness.ed);
  add("eo", report.fairness.eo);
  add("domain_probe", report.domain_probe);
  add("boundary_angle", report.boundary_angle);
  return out;
}

void write_records_csv(ExperimentKind kind, const std::vector<RunRecord>& records,
                       std::ostream& out) {
  out << "experiment,condition,seed,metric,value\n";
  for (const auto& rec : records) {
    for (const auto& [name, value] : report_metrics(rec.metrics)) {
      out << to_string(kind) << ',' << rec.condition << ',' << rec.seed << ',' << name << ','
          << format_number(value) << '\n';
    }
  }
}

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) {
    throw ValidationError("quartiles: empty input");
  }
  std::sort(values.begin(), values.end());
  auto at = [&values](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

std::optional<double> condition_median(const std::vector<RunRecord>& records,
                                       const std::string& condition, const std::string& metric) {
  std::vector<double> values;
  for (const auto& rec : records) {
    if (rec.condition != condition) {
      continue;
    }
    for (const auto& [name, value] : report_metrics(rec.metrics)) {
      if (name == metric) {
        values.push_back(value);
      }
    }
  }
  if (values.empty()) {
    return std::nullopt;
  }
  return quartiles(std::move(values)).median;
}

std::string summary_json(const ExperimentSpec& spec, const std::vector<RunRecord>& records) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["experiment"] = to_string(spec.kind);
  j["spec_hash"] = spec_hash(spec);
  j["seed"] = spec.seed;
  j["replicates"] = spec.replicates;

  std::vector<std::string> order;
  for (const auto& rec : records) {
    if (std::find(order.begin(), order.end(), rec.condition) == order.end()) {
      order.push_back(rec.condition);
    }
  }
  ordered_json conditions = ordered_json::array();
  for (const auto& condition : order) {
    std::vector<std::string> metric_order;
    std::map<std::string, std::vector<double>> values;
    for (const auto& rec : records) {
      if (rec.condition != condition) {
        continue;
      }
      for (const auto& [name, value] : report_metrics(rec.metrics)) {
        if (!values.count(name)) {
          metric_order.push_back(name);
        }
        values[name].push_back(value);
      }
    }
    ordered_json metrics = ordered_json::object();
    for (const auto& name : metric_order) {
      const auto& v = values[name];
      const Quartiles q = quartiles(v);
      ordered_json m;
      m["median"] = q.median;
      m["q1"] = q.q1;
      m["q3"] = q.q3;
      m["n"] = v.size();
      metrics[name] = std::move(m);
    }
    ordered_json entry;
    entry["condition"] = condition;
    entry["metrics"] = std::move(metrics);
    conditions.push_back(std::move(entry));
  }
  j["conditions"] = std::move(conditions);
  return j.dump(2) + "\n";
}

} // namespace synaug
