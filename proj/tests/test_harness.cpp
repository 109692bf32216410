#include "synaug/harness.hpp"

#include "synaug/config.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <set>
#include <sstream>

using namespace synaug;

namespace {

/// Small and fast variant of a kind's defaults.
ExperimentSpec tiny(ExperimentKind kind, int replicates) {
  ExperimentSpec s = default_spec(kind);
  s.replicates = replicates;
  s.world.dim = 4;
  if (kind != ExperimentKind::Fairness && kind != ExperimentKind::Spurious &&
      kind != ExperimentKind::Toy2D) {
    s.world.classes = 5;
  }
  if (kind == ExperimentKind::Toy2D) {
    s.world.dim = 2;
  } else {
    s.hidden = {6};
  }
  s.world.n_max = 40;
  s.world.imbalance_factor = 10.0;
  if (kind == ExperimentKind::LongTail) {
    s.imbalance_factors = {10.0, 5.0, 2.0};
  }
  s.world.test_per_class = 10;
  s.world.test_per_cell = 10;
  s.world.spurious_per_class = 60;
  s.world.fairness_cells = {{30, 30}, {20, 6}};
  s.world.toy_major = 20;
  s.world.toy_minor = 4;
  s.train.epochs = 2;
  s.head.epochs = 2;
  return s;
}

std::set<std::string> conditions(const std::vector<RunRecord>& records) {
  std::set<std::string> out;
  for (const auto& r : records) {
    out.insert(r.condition);
  }
  return out;
}

double median_of(const std::vector<RunRecord>& records, const std::string& condition,
                 const std::string& metric) {
  const auto m = condition_median(records, condition, metric);
  REQUIRE(m.has_value());
  return *m;
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("record counts per driver") {
  {
    auto s = tiny(ExperimentKind::Replacement, 3);
    CHECK(s.sweep.size() == 5);
    const auto rec = run_replacement(s);
    CHECK(rec.size() == 30);
    CHECK(rec.front().condition == "classwise@0");
    CHECK(rec.back().condition == "instancewise@1");
  }
  {
    const auto rec = run_ablation(tiny(ExperimentKind::Ablation, 5));
    CHECK(rec.size() == 25);
    CHECK(conditions(rec) ==
          std::set<std::string>{"a_uniform", "b_modifier", "c_mixup", "d_retrain", "e_finetune"});
  }
  CHECK(run_quality_sweep(tiny(ExperimentKind::QualitySweep, 3)).size() == 15);
  {
    auto s = tiny(ExperimentKind::LongTail, 5);
    CHECK(s.imbalance_factors.size() == 3);
    const auto rec = run_longtail(s);
    CHECK(rec.size() == 30);
    CHECK(conditions(rec).count("synaug@IF=10") == 1);
  }
  {
    auto s = tiny(ExperimentKind::Fairness, 5);
    CHECK(run_fairness(s).size() == 15);
    s.resampling = true;
    s.replicates = 1;
    CHECK(conditions(run_fairness(s)) ==
          std::set<std::string>{"erm", "synaug", "synaug_no_attr", "erm+rs", "synaug+rs"});
  }
  CHECK(run_spurious(tiny(ExperimentKind::Spurious, 5)).size() == 20);
  {
    auto s = tiny(ExperimentKind::Toy2D, 20);
    const auto rec = run_toy2d(s);
    CHECK(rec.size() == 80);
    for (const auto& r : rec) {
      CHECK(r.metrics.boundary_angle.has_value());
    }
  }
}

TEST_CASE("records are ordered condition-major with per-replicate seeds") {
  const auto s = tiny(ExperimentKind::Toy2D, 3);
  const auto rec = run_experiment(s);
  REQUIRE(rec.size() == 12);
  for (std::size_t i = 0; i < rec.size(); ++i) {
    CHECK(rec[i].replicate == static_cast<int>(i % 3));
    CHECK(rec[i].seed == replicate_seed(s, rec[i].replicate));
  }
  CHECK(rec[0].condition == "balanced");
  CHECK(rec[3].condition == "group_imbalanced");
  CHECK(replicate_seed(s, 0) != replicate_seed(s, 1));
}

TEST_CASE("toy2d scenarios keep the intended totals") {
  const auto sc = toy2d_scenarios(200, 20);
  REQUIRE(sc.size() == 4);
  auto class_total = [](const Toy2dScenario& t, int c) { return t.cells[2 * c] + t.cells[2 * c + 1]; };
  auto group_total = [](const Toy2dScenario& t, int g) { return t.cells[g] + t.cells[2 + g]; };
  CHECK(class_total(sc[1], 0) == class_total(sc[1], 1));
  CHECK(group_total(sc[1], 0) != group_total(sc[1], 1));
  CHECK(class_total(sc[2], 0) != class_total(sc[2], 1));
  CHECK(group_total(sc[2], 0) == group_total(sc[2], 1));
  CHECK_THROWS_AS(toy2d_scenarios(0, 1), ValidationError);
}

TEST_CASE("replacement at fraction 0 leaves both modes identical") {
  auto s = tiny(ExperimentKind::Replacement, 2);
  s.sweep = {0.0};
  const auto rec = run_replacement(s);
  REQUIRE(rec.size() == 4);
  CHECK(rec[0].condition == "classwise@0");
  CHECK(rec[2].condition == "instancewise@0");
  CHECK(rec[0].metrics == rec[2].metrics);
  CHECK(rec[1].metrics == rec[3].metrics);
}

TEST_CASE("IF = 1: no deficit, so CE and SYNAuG agree within a point") {
  ExperimentSpec s = default_spec(ExperimentKind::LongTail);
  s.imbalance_factors = {1.0};
  s.replicates = 5;
  RunOptions opts;
  opts.jobs = 4;
  const auto rec = run_longtail(s, opts);
  const double ce = median_of(rec, "ce@IF=1", "accuracy");
  const double syn = median_of(rec, "synaug@IF=1", "accuracy");
  MESSAGE("ce " << ce << " synaug " << syn);
  CHECK(std::abs(ce - syn) <= 0.01);
}

TEST_CASE("balanced fairness world: the three conditions agree") {
  ExperimentSpec s = default_spec(ExperimentKind::Fairness);
  s.world.fairness_cells = {{200, 200}, {200, 200}, {200, 200}, {200, 200}};
  s.replicates = 5;
  RunOptions opts;
  opts.jobs = 4;
  const auto rec = run_fairness(s, opts);
  const double erm = median_of(rec, "erm", "accuracy");
  for (const std::string c : {"synaug", "synaug_no_attr"}) {
    const double v = median_of(rec, c, "accuracy");
    MESSAGE(c << " " << v << " vs erm " << erm);
    CHECK(std::abs(v - erm) <= 0.01);
  }
}

TEST_CASE("spurious p = 0.5: worst group tracks the mean") {
  ExperimentSpec s = default_spec(ExperimentKind::Spurious);
  s.world.spurious_p = 0.5 + 1e-9; // domain is (0.5, 1]
  s.replicates = 5;
  RunOptions opts;
  opts.jobs = 4;
  const auto rec = run_spurious(s, opts);
  const double worst = median_of(rec, "base", "worst_group");
  const double mean = median_of(rec, "base", "mean_group");
  MESSAGE("worst " << worst << " mean " << mean);
  CHECK(mean - worst <= 0.05);
}

TEST_CASE("determinism and thread-count independence") {
  const auto s = tiny(ExperimentKind::Ablation, 4);
  const auto a = run_experiment(s);
  RunOptions par;
  par.jobs = 3;
  const auto b = run_experiment(s, par);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].condition == b[i].condition);
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].metrics == b[i].metrics);
  }
  std::ostringstream ca, cb;
  write_records_csv(s.kind, a, ca);
  write_records_csv(s.kind, b, cb);
  CHECK(ca.str() == cb.str());
  CHECK(summary_json(s, a) == summary_json(s, b));

  auto other = s;
  other.seed = 1;
  CHECK_FALSE(run_experiment(other).front().metrics == a.front().metrics);
}

TEST_CASE("spec hash is stable and sensitive") {
  const auto s = default_spec(ExperimentKind::LongTail);
  CHECK(spec_hash(s) == spec_hash(parse_config(serialize(s)).spec));
  CHECK(spec_hash(s).size() == 16);
  auto t = s;
  t.synth.gap = 0.51;
  CHECK(spec_hash(s) != spec_hash(t));
}

TEST_CASE("quartiles use linear interpolation") {
  const auto q = quartiles({4.0, 1.0, 3.0, 2.0});
  CHECK(q.median == doctest::Approx(2.5));
  CHECK(q.q1 == doctest::Approx(1.75));
  CHECK(q.q3 == doctest::Approx(3.25));
  const auto one = quartiles({7.0});
  CHECK(one.q1 == 7.0);
  CHECK(one.q3 == 7.0);
  CHECK_THROWS_AS(quartiles({}), ValidationError);
}

TEST_CASE("CSV and summary formats") {
  const auto s = tiny(ExperimentKind::Toy2D, 2);
  const auto rec = run_experiment(s);
  std::ostringstream csv;
  write_records_csv(s.kind, rec, csv);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "experiment,condition,seed,metric,value");
  std::getline(lines, line);
  CHECK(line.rfind("toy2d,balanced," + std::to_string(rec[0].seed) + ",accuracy,", 0) == 0);
  long rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
  }
  // accuracy, worst_group, mean_group, boundary_angle per record.
  CHECK(rows + 1 == static_cast<long>(rec.size()) * 4);

  const auto j = nlohmann::ordered_json::parse(summary_json(s, rec));
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) {
    keys.push_back(k);
  }
  CHECK(keys == std::vector<std::string>{"experiment", "spec_hash", "seed", "replicates",
                                         "conditions"});
  CHECK(j["experiment"] == "toy2d");
  REQUIRE(j["conditions"].size() == 4);
  const auto& acc = j["conditions"][0]["metrics"]["accuracy"];
  CHECK(acc["n"] == 2);
  CHECK(acc["q1"].get<double>() <= acc["median"].get<double>());
  CHECK(acc["median"].get<double>() <= acc["q3"].get<double>());
}

TEST_CASE("invalid specs are rejected before running") {
  auto s = tiny(ExperimentKind::Toy2D, 1);
  s.hidden = {4};
  CHECK_THROWS_AS(run_experiment(s), ValidationError);
  auto r = tiny(ExperimentKind::Replacement, 1);
  r.sweep = {1.5};
  CHECK_THROWS_AS(run_experiment(r), ValidationError);
  auto f = tiny(ExperimentKind::Fairness, 1);
  f.world.classes = 3;
  CHECK_THROWS_AS(run_experiment(f), ValidationError);
}

TEST_CASE("generate_world matches each kind's shape") {
  const auto toy = generate_world(tiny(ExperimentKind::Toy2D, 1));
  CHECK(toy.train.groups() == 2);
  CHECK(toy.test.cell_counts().at({1, 1}) == 10);
  const auto lt = generate_world(tiny(ExperimentKind::LongTail, 1));
  CHECK(lt.train.classes() == 5);
  CHECK(lt.test.class_counts() == std::vector<long>(5, 10));
  CHECK(generate_world(tiny(ExperimentKind::LongTail, 2), 1).train !=
        generate_world(tiny(ExperimentKind::LongTail, 2), 0).train);
}

} // TEST_SUITE
