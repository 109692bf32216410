#include "synaug/cli.hpp"

#include "synaug/config.hpp"
#include "synaug/harness.hpp"
#include "synaug/rebalance.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

namespace synaug {

namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 1;
};

struct Context {
  RootConfig config;
  fs::path out_dir;
  std::ostream& out;
  std::ostream& err;
  std::ofstream log_file;

  void log(const std::string& line) {
    err << line << '\n';
    if (log_file) {
      log_file << line << '\n';
    }
  }
};

fs::path resolve_out_dir(const Common& common, const RootConfig& config) {
  if (!common.out.empty()) {
    return common.out;
  }
  if (!config.output_dir.empty()) {
    return config.output_dir;
  }
  if (const char* env = std::getenv(kOutputEnv); env != nullptr && *env != '\0') {
    return env;
  }
  return "out";
}

Dataset read_dataset(const fs::path& path, const WorldModel& world) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open data file '" + path.string() + "'");
  }
  try {
    return Dataset::read_csv(in, world.classes, world.groups);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Model read_model(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open model file '" + path.string() + "'");
  }
  try {
    return load_model(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  return f;
}

void write_text(const fs::path& path, const std::string& text) {
  auto f = open_output(path);
  f << text;
}

template <typename Writer> void write_with(const fs::path& path, Writer&& writer) {
  auto f = open_output(path);
  writer(f);
}

/// Seed streams of the CLI pipeline, shared with replicate 0 of the drivers.
std::uint64_t stream(const RootConfig& config, std::string_view label) {
  return derive_seed(replicate_seed(config.spec, 0), label);
}

SynthSpec synth_for(const RootConfig& config, const WorldModel& world) {
  const auto& s = config.spec.synth;
  SynthSpec spec;
  spec.world = std::make_shared<const WorldModel>(world);
  spec.gap = s.gap;
  spec.quality = s.quality;
  spec.modes = s.modes;
  spec.sensitivity = s.sensitivity;
  spec.inflation = s.inflation;
  spec.mode_offset = s.mode_offset;
  spec.mode_seed = stream(config, "synth-modes");
  return spec;
}

long uniform_target(const RootConfig& config, const Dataset& real) {
  if (config.spec.target > 0) {
    return config.spec.target;
  }
  long best = 0;
  if (real.groups() > 0) {
    for (const auto& [key, n] : real.cell_counts()) {
      best = std::max(best, n);
    }
  } else {
    for (long n : real.class_counts()) {
      best = std::max(best, n);
    }
  }
  return best;
}

Dataset uniformized(const RootConfig& config, const WorldModel& world, const Dataset& real) {
  return uniformize(real, synth_for(config, world), uniform_target(config, real),
                    real.groups() > 0, stream(config, "synth"),
                    config.spec.keep_excess ? ExcessPolicy::Keep : ExcessPolicy::Reject);
}

Dataset balanced_real_subset(const RootConfig& config, const Dataset& real) {
  if (real.groups() > 0) {
    long smallest = -1;
    for (const auto& [key, n] : real.cell_counts()) {
      smallest = smallest < 0 ? n : std::min(smallest, n);
    }
    return group_balanced_subsample(real, smallest, stream(config, "subsample"));
  }
  const auto counts = real.class_counts();
  const auto smallest = std::min_element(counts.begin(), counts.end());
  if (*smallest == 0) {
    throw ValidationError("class " + std::to_string(smallest - counts.begin()) +
                          " has no real samples; fine-tuning needs at least one per class");
  }
  return uniform_real_subsample(real, *smallest, stream(config, "subsample"));
}

void echo_defaults(Context& ctx) {
  for (const auto& line : ctx.config.defaults_applied) {
    ctx.log("default: " + line);
  }
}

int run_gen(Context& ctx) {
  const GeneratedWorld gw = generate_world(ctx.config.spec);
  write_with(ctx.out_dir / "train.csv", [&](std::ostream& f) { gw.train.write_csv(f); });
  write_with(ctx.out_dir / "test.csv", [&](std::ostream& f) { gw.test.write_csv(f); });
  const Dataset uniform = uniformized(ctx.config, gw.world, gw.train);
  write_with(ctx.out_dir / "train_uniform.csv", [&](std::ostream& f) { uniform.write_csv(f); });
  ctx.log("gen: " + std::to_string(gw.train.size()) + " train, " +
          std::to_string(gw.test.size()) + " test, " + std::to_string(uniform.size()) +
          " uniformized samples in " + ctx.out_dir.string());
  return 0;
}

int run_train(Context& ctx, const fs::path& data_path) {
  const auto& spec = ctx.config.spec;
  const WorldModel world = generate_world(spec).world;
  const Dataset data = read_dataset(data_path, world);
  const Dataset real = filter_origin(data, Origin::Real);
  if (real.empty()) {
    throw ValidationError(data_path.string() + ": no real samples");
  }

  const Dataset uniform = uniformized(ctx.config, world, real);
  TrainConfig cfg = spec.train;
  cfg.seed = stream(ctx.config, "train");
  const Model init =
      init_model({world.dim, spec.hidden, world.classes}, stream(ctx.config, "model-init"));
  TrainResult full = train(init, uniform, cfg);

  TrainConfig head = head_config(spec.train);
  head.epochs = spec.head.epochs;
  head.learning_rate = spec.train.learning_rate * spec.head.lr_scale;
  head.momentum = spec.head.momentum;
  head.batch_size = spec.head.batch_size;
  head.sampler = Sampler::Shuffle;
  head.seed = stream(ctx.config, "head");
  TrainResult tuned = finetune_head(full.model, balanced_real_subset(ctx.config, real), head);

  write_with(ctx.out_dir / "model.bin", [&](std::ostream& f) { save_model(tuned.model, f); });
  write_with(ctx.out_dir / "loss.csv",
             [&](std::ostream& f) { write_loss_trace(full.loss_trace, f); });
  write_with(ctx.out_dir / "head_loss.csv",
             [&](std::ostream& f) { write_loss_trace(tuned.loss_trace, f); });
  ctx.log("train: " + std::to_string(real.size()) + " real + " +
          std::to_string(uniform.size() - real.size()) + " synthetic samples; model written to " +
          (ctx.out_dir / "model.bin").string());
  return 0;
}

int run_eval(Context& ctx, const fs::path& model_path, const fs::path& data_path,
             const std::string& train_path) {
  const auto& spec = ctx.config.spec;
  const WorldModel world = generate_world(spec).world;
  const Model model = read_model(model_path);
  const Dataset test = read_dataset(data_path, world);
  if (model.input_dim() != test.dim() || model.classes() != test.classes()) {
    throw ValidationError("model shape does not match the data in '" + data_path.string() + "'");
  }
  EvaluateOptions options;
  if (!train_path.empty()) {
    options.train_counts = filter_origin(read_dataset(train_path, world), Origin::Real).class_counts();
  }
  if (test.groups() > 0) {
    options.groups = true;
    options.group_by =
        spec.kind == ExperimentKind::Spurious ? GroupBy::ClassCell : GroupBy::Group;
    options.fairness = test.classes() == 2;
  }
  MetricsReport report = evaluate(model, test, options);
  if (spec.kind == ExperimentKind::Toy2D && model.extractor.empty()) {
    report.boundary_angle = boundary_angle(model);
  }
  const std::string json = to_json(report) + "\n";
  write_text(ctx.out_dir / "metrics.json", json);
  ctx.out << json;
  return 0;
}

int run_experiment_cmd(Context& ctx, int jobs) {
  const auto& spec = ctx.config.spec;
  RunOptions options;
  options.jobs = jobs;
  options.log = [&ctx](const std::string& line) { ctx.log(line); };
  const auto records = run_experiment(spec, options);
  const std::string name = to_string(spec.kind);
  write_with(ctx.out_dir / (name + ".csv"),
             [&](std::ostream& f) { write_records_csv(spec.kind, records, f); });
  write_text(ctx.out_dir / (name + "_summary.json"), summary_json(spec, records));
  ctx.log("experiment: " + std::to_string(records.size()) + " records written to " +
          ctx.out_dir.string());
  return 0;
}

int run_probe(Context& ctx, const std::string& model_path, const std::string& data_path) {
  const auto& spec = ctx.config.spec;
  const GeneratedWorld gw = generate_world(spec);
  Dataset mixed = data_path.empty() ? uniformized(ctx.config, gw.world, gw.train)
                                    : read_dataset(data_path, gw.world);
  const Dataset real = filter_origin(mixed, Origin::Real);
  const Dataset synthetic = filter_origin(mixed, Origin::Synthetic);
  Model model;
  if (model_path.empty()) {
    // Raw inputs as embeddings.
    model.head = init_affine(gw.world.dim, 2, stream(ctx.config, "probe-model"));
  } else {
    model = read_model(model_path);
    if (model.input_dim() != gw.world.dim) {
      throw ValidationError("model input dimension does not match the world");
    }
  }
  const double acc = domain_probe(model, real, synthetic, spec.probe, stream(ctx.config, "probe"));
  nlohmann::ordered_json j;
  j["domain_probe"] = acc;
  j["real"] = real.size();
  j["synthetic"] = synthetic.size();
  const std::string json = j.dump(2) + "\n";
  write_text(ctx.out_dir / "probe.json", json);
  ctx.out << json;
  return 0;
}

void add_common(CLI::App* cmd, Common& common, bool jobs) {
  cmd->add_option("--config,--spec", common.config, "Configuration file")->required();
  cmd->add_option("--seed", common.seed, "Global seed (overrides the config)");
  cmd->add_option("--out", common.out,
                  std::string("Output directory (default: config output_dir, then $") +
                      kOutputEnv + ", then ./out)");
  if (jobs) {
    cmd->add_option("--jobs", common.jobs, "Replicates run in parallel")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }
}

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic uniformization, domain Mixup and last-layer fine-tuning lab"};
  app.name(args.empty() ? "synaug" : fs::path(args.front()).filename().string());
  app.require_subcommand(1);

  Common common;
  std::string data, model, train_data;

  auto* gen = app.add_subcommand("gen", "Write train, test and uniformized datasets");
  add_common(gen, common, false);

  auto* train_cmd = app.add_subcommand("train", "Uniformize, train with Mixup, fine-tune the head");
  add_common(train_cmd, common, false);
  train_cmd->add_option("--data", data, "Training CSV")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a model on a dataset");
  add_common(eval, common, false);
  eval->add_option("--model", model, "Model checkpoint")->required();
  eval->add_option("--data", data, "Test CSV")->required();
  eval->add_option("--train-data", train_data, "Training CSV for shot splits");

  auto* experiment = app.add_subcommand("experiment", "Run an experiment driver");
  add_common(experiment, common, true);

  auto* probe = app.add_subcommand("probe", "Real-vs-synthetic domain probe");
  add_common(probe, common, false);
  probe->add_option("--model", model, "Model checkpoint (default: raw inputs)");
  probe->add_option("--data", data, "CSV with real and synthetic rows (default: generated)");

  std::vector<std::string> reversed(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    if (app.get_subcommands().empty()) {
      err << app.help();
    }
    return 1;
  }

  try {
    RootConfig config = load_config(common.config);
    if (common.seed) {
      config.spec.seed = *common.seed;
    }
    const fs::path out_dir = resolve_out_dir(common, config);
    fs::create_directories(out_dir);
    Context ctx{std::move(config), out_dir, out, err, std::ofstream(out_dir / "run.log")};
    echo_defaults(ctx);
    if (gen->parsed()) {
      return run_gen(ctx);
    }
    if (train_cmd->parsed()) {
      return run_train(ctx, data);
    }
    if (eval->parsed()) {
      return run_eval(ctx, model, data, train_data);
    }
    if (experiment->parsed()) {
      return run_experiment_cmd(ctx, common.jobs);
    }
    return run_probe(ctx, model, data);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

} // namespace synaug
