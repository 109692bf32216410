#include "synaug/cli.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "synaug");
  std::ostringstream out, err;
  const int code = synaug::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name)
      : dir(fs::temp_directory_path() / ("synaug-cli-" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }

  fs::path write(const std::string& file, const std::string& text) const {
    std::ofstream(dir / file) << text;
    return dir / file;
  }
};

const char* kToy = "[experiment]\nkind = toy2d\nreplicates = 2\n[world]\ntoy_major = 30\n"
                   "toy_minor = 5\ntest_per_cell = 20\n[train]\nepochs = 5\n";

const char* kLongtail = "[experiment]\nkind = longtail\nreplicates = 1\nimbalance_factors = 10\n"
                        "[world]\ndim = 4\nclasses = 4\nn_max = 40\nimbalance_factor = 10\n"
                        "test_per_class = 10\n"
                        "[train]\nhidden = 6\nepochs = 3\nhead_epochs = 2\n";

} // namespace

TEST_SUITE("cli") {

TEST_CASE("experiment writes CSV and summary") {
  Scratch s("experiment");
  const auto cfg = s.write("toy.ini", kToy);
  const auto r = run({"experiment", "--config", cfg.string(), "--out", (s.dir / "o").string()});
  REQUIRE(r.code == 0);
  const std::string csv = slurp(s.dir / "o" / "toy2d.csv");
  CHECK(csv.rfind("experiment,condition,seed,metric,value\n", 0) == 0);
  const auto summary = nlohmann::json::parse(slurp(s.dir / "o" / "toy2d_summary.json"));
  CHECK(summary["conditions"].size() == 4);
  CHECK(fs::exists(s.dir / "o" / "run.log"));
  // Defaults applied are echoed.
  CHECK(r.err.find("train.learning_rate") != std::string::npos);
  // --jobs does not change results.
  const auto p = run({"experiment", "--config", cfg.string(), "--out", (s.dir / "p").string(),
                      "--jobs", "2"});
  REQUIRE(p.code == 0);
  CHECK(slurp(s.dir / "p" / "toy2d.csv") == csv);
}

TEST_CASE("--seed overrides the config and is reproducible") {
  Scratch s("seed");
  const auto cfg = s.write("toy.ini", kToy);
  auto go = [&](const std::string& seed, const std::string& sub) {
    REQUIRE(run({"experiment", "--config", cfg.string(), "--seed", seed, "--out",
                 (s.dir / sub).string()})
                .code == 0);
    return slurp(s.dir / sub / "toy2d.csv");
  };
  const auto a = go("11", "a");
  CHECK(a == go("11", "b"));
  CHECK(a != go("12", "c"));
  CHECK(a.find(",11,") == std::string::npos); // seed column holds per-replicate seeds
}

TEST_CASE("missing config file exits 1 naming the path") {
  const auto r = run({"experiment", "--config", "/nonexistent/where.ini"});
  CHECK(r.code == 1);
  CHECK(r.err.find("/nonexistent/where.ini") != std::string::npos);
}

TEST_CASE("bad config value exits 1 naming the line") {
  Scratch s("badcfg");
  const auto cfg = s.write("bad.ini", "[experiment]\nkind = toy2d\n[train]\nmixup_alpha = -1\n");
  const auto r = run({"gen", "--config", cfg.string(), "--out", s.dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("line 4") != std::string::npos);
}

TEST_CASE("usage errors exit 1, help exits 0") {
  const auto unknown = run({"frobnicate"});
  CHECK(unknown.code == 1);
  CHECK_FALSE(unknown.err.empty());
  const auto none = run({});
  CHECK(none.code == 1);
  CHECK(none.err.find("experiment") != std::string::npos);
  CHECK(run({"experiment"}).code == 1); // --config required
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("probe") != std::string::npos);
  CHECK(run({"train", "--help"}).code == 0);
}

TEST_CASE("gen, train, eval, probe") {
  Scratch s("flow");
  const auto cfg = s.write("lt.ini", kLongtail);
  const std::string out = (s.dir / "o").string();
  REQUIRE(run({"gen", "--config", cfg.string(), "--out", out}).code == 0);
  for (const char* f : {"train.csv", "test.csv", "train_uniform.csv"}) {
    CHECK(fs::exists(s.dir / "o" / f));
  }
  const auto train_csv = (s.dir / "o" / "train.csv").string();
  REQUIRE(run({"train", "--config", cfg.string(), "--out", out, "--data", train_csv}).code == 0);
  const auto model = (s.dir / "o" / "model.bin").string();
  CHECK(fs::exists(model));
  CHECK(slurp(s.dir / "o" / "loss.csv").rfind("epoch,loss\n1,", 0) == 0);
  CHECK(fs::exists(s.dir / "o" / "head_loss.csv"));

  const auto ev = run({"eval", "--config", cfg.string(), "--out", out, "--model", model,
                       "--data", (s.dir / "o" / "test.csv").string(), "--train-data", train_csv});
  REQUIRE(ev.code == 0);
  const auto metrics = nlohmann::json::parse(slurp(s.dir / "o" / "metrics.json"));
  CHECK(metrics["overall_accuracy"].get<double>() >= 0.0);
  CHECK(metrics["many_shot"].is_null()); // n_max 40 is medium-shot
  CHECK_FALSE(metrics["few_shot"].is_null());
  CHECK(nlohmann::json::parse(ev.out) == metrics);

  REQUIRE(run({"probe", "--config", cfg.string(), "--out", out, "--model", model}).code == 0);
  const auto probe = nlohmann::json::parse(slurp(s.dir / "o" / "probe.json"));
  CHECK(probe["domain_probe"].get<double>() >= 0.0);
  CHECK(probe["domain_probe"].get<double>() <= 1.0);

  // Identical invocations produce identical bytes.
  const std::string first = slurp(s.dir / "o" / "model.bin");
  REQUIRE(run({"train", "--config", cfg.string(), "--out", out, "--data", train_csv}).code == 0);
  CHECK(slurp(s.dir / "o" / "model.bin") == first);

  CHECK(run({"eval", "--config", cfg.string(), "--out", out, "--model", "/nonexistent.bin",
             "--data", train_csv})
            .code == 1);
}

TEST_CASE("runtime failure exits 2") {
  Scratch s("diverge");
  const auto cfg = s.write("d.ini", std::string(kLongtail) + "learning_rate = 1e200\n");
  REQUIRE(run({"gen", "--config", cfg.string(), "--out", s.dir.string()}).code == 0);
  const auto r = run({"train", "--config", cfg.string(), "--out", s.dir.string(), "--data",
                      (s.dir / "train.csv").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("non-finite") != std::string::npos);
}

TEST_CASE("output directory falls back to the environment variable") {
  Scratch s("env");
  const auto cfg = s.write("toy.ini", kToy);
  const auto target = s.dir / "from-env";
  ::setenv(synaug::kOutputEnv, target.c_str(), 1);
  const auto r = run({"gen", "--config", cfg.string()});
  ::unsetenv(synaug::kOutputEnv);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(target / "train.csv"));
}

TEST_CASE("installed binary maps exit codes") {
  const std::string bin = SYNAUG_CLI_PATH;
  CHECK(std::system((bin + " --help > /dev/null 2>&1").c_str()) == 0);
  const int missing = std::system((bin + " gen --config /nonexistent.ini > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(missing) == 1);
}

} // TEST_SUITE
