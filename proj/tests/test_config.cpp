#include "synaug/config.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

using namespace synaug;

TEST_SUITE("config") {

TEST_CASE("kind defaults fill missing keys and are reported") {
  const auto cfg = parse_config("seed = 7\n[experiment]\nkind = longtail\n[train]\n");
  CHECK(cfg.seed() == 7);
  ExperimentSpec expected = default_spec(ExperimentKind::LongTail);
  expected.seed = 7;
  CHECK(cfg.spec == expected);
  CHECK(cfg.output_dir.empty());
  auto has = [&](const std::string& prefix) {
    return std::any_of(cfg.defaults_applied.begin(), cfg.defaults_applied.end(),
                       [&](const std::string& line) { return line.rfind(prefix, 0) == 0; });
  };
  CHECK(has("train.epochs = "));
  CHECK(has("train.mixup_alpha = "));
  CHECK(has("synth.gap = "));
  CHECK_FALSE(has("experiment.kind"));
}

TEST_CASE("values override defaults") {
  const auto cfg = parse_config(R"(# comment
output_dir = results
[experiment]
kind = fairness   ; trailing comment
replicates = 3
resampling = true
[world]
fairness_cells = 10:20, 30:40
[synth]
gap = 0.25
[train]
hidden = 8, 4
sampler = group_balanced
)");
  CHECK(cfg.output_dir == "results");
  CHECK(cfg.spec.kind == ExperimentKind::Fairness);
  CHECK(cfg.spec.replicates == 3);
  CHECK(cfg.spec.resampling);
  CHECK(cfg.spec.world.fairness_cells == std::vector<std::array<long, 2>>{{10, 20}, {30, 40}});
  CHECK(cfg.spec.synth.gap == 0.25);
  CHECK(cfg.spec.hidden == std::vector<std::size_t>{8, 4});
  CHECK(cfg.spec.train.sampler == Sampler::GroupBalanced);
}

TEST_CASE("out-of-range value names key and line") {
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nkind = ablation\n[train]\nmixup_alpha = -1\n"),
                       doctest::Contains("line 4"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nkind = ablation\n[train]\nmixup_alpha = -1\n"),
                       doctest::Contains("mixup_alpha"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nkind = quality_sweep\n\nsweep = 0.5, 2\n"),
                       doctest::Contains("line 4"), ValidationError);
}

TEST_CASE("unknown keys, sections and malformed values") {
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nkind = toy2d\nbogus = 1\n"),
                       doctest::Contains("line 3"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nkind = toy2d\n[nope]\n"),
                       doctest::Contains("line 3"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nkind = toy2d\n[train]\nepochs = ten\n"),
                       doctest::Contains("line 4"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nkind = toy2d\n[train]\nepochs = 3.5\n"),
                       doctest::Contains("line 4"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nkind = toy2d\nreplicates = 2\nreplicates = 3\n"),
                       doctest::Contains("line 4"), ValidationError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nkind = nosuch\n"), doctest::Contains("line 2"),
                       ValidationError);
  CHECK_THROWS_AS(parse_config("[experiment\nkind = toy2d\n"), ValidationError);
  CHECK_THROWS_AS(parse_config("[experiment]\nkind toy2d\n"), ValidationError);
}

TEST_CASE("missing experiment section or kind") {
  CHECK_THROWS_WITH_AS(parse_config("seed = 1\n"), doctest::Contains("[experiment]"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(parse_config("[experiment]\nreplicates = 2\n"), doctest::Contains("kind"),
                       ValidationError);
}

TEST_CASE("serialize round trip for every kind") {
  for (auto kind : {ExperimentKind::Replacement, ExperimentKind::Ablation,
                    ExperimentKind::QualitySweep, ExperimentKind::LongTail,
                    ExperimentKind::Fairness, ExperimentKind::Spurious, ExperimentKind::Toy2D}) {
    RootConfig cfg;
    cfg.spec = default_spec(kind);
    cfg.spec.seed = 12345678901234ULL;
    cfg.spec.synth.gap = 0.1 + 0.2; // not exactly representable in short form
    cfg.output_dir = "some/dir";
    const std::string text = serialize(cfg);
    const RootConfig back = parse_config(text);
    CHECK(back == cfg);
    CHECK(back.defaults_applied.empty());
    CHECK(serialize(back) == text);
  }
}

TEST_CASE("load_config reports a missing file by path") {
  const auto missing = std::filesystem::temp_directory_path() / "synaug-no-such-config.ini";
  CHECK_THROWS_WITH_AS(load_config(missing), doctest::Contains(missing.string().c_str()), ValidationError);

  const auto path = std::filesystem::temp_directory_path() / "synaug-config-test.ini";
  {
    std::ofstream(path) << "[experiment]\nkind = spurious\n";
  }
  CHECK(load_config(path).spec.kind == ExperimentKind::Spurious);
  std::filesystem::remove(path);
}

} // TEST_SUITE
