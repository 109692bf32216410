#include "synaug/rebalance.hpp"

#include "synaug/rng.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace synaug;
using test_support::grid_world;
using test_support::synth_for;

namespace {

Dataset ungrouped(const WorldModel& world, const std::vector<long>& counts, std::uint64_t seed) {
  return sample_real(world, per_class_cells(counts), seed);
}

long count_origin(const Dataset& d, Origin o) {
  return static_cast<long>(std::count_if(d.samples().begin(), d.samples().end(),
                                         [o](const Sample& s) { return s.origin == o; }));
}

} // namespace

TEST_SUITE("rebalance") {

TEST_CASE("plan: class deficits") {
  const auto world = grid_world(2, 3, 0);
  const Dataset real = ungrouped(world, {500, 50, 5}, 1);
  const auto plan = plan_uniformization(real, 500, false);
  CHECK(plan.deficits.at({0, 0}) == 0);
  CHECK(plan.deficits.at({1, 0}) == 450);
  CHECK(plan.deficits.at({2, 0}) == 495);
  CHECK(plan.total_deficit() == 945);
  CHECK_THROWS_AS(plan_uniformization(real, 100, false), ValidationError);
  const auto kept = plan_uniformization(real, 100, false, ExcessPolicy::Keep);
  CHECK(kept.deficits.at({0, 0}) == 0);
  CHECK(kept.deficits.at({2, 0}) == 95);
}

TEST_CASE("plan: group-aware deficits") {
  const auto world = grid_world(2, 2, 2);
  const Dataset real = sample_real(world, {{{0, 0}, 100}, {{0, 1}, 100}, {{1, 0}, 80}, {{1, 1}, 20}}, 1);
  const auto plan = plan_uniformization(real, 100, true);
  CHECK(plan.deficits.at({0, 0}) == 0);
  CHECK(plan.deficits.at({0, 1}) == 0);
  CHECK(plan.deficits.at({1, 0}) == 20);
  CHECK(plan.deficits.at({1, 1}) == 80);

  // Class-only plan on grouped data: class 1 has 100 of a 200 target.
  const auto flat = plan_uniformization(real, 200, false);
  CHECK(flat.deficits.at({1, 0}) == 100);
  CHECK(flat.deficits.size() == 2);
}

TEST_CASE("uniformize: invariants over imbalance factors") {
  const auto world = grid_world(3, 10, 0);
  const auto spec = synth_for(world, 0.5);
  for (double factor : {1.0, 10.0, 100.0}) {
    const auto counts = make_longtail_counts({300, factor, 10});
    const Dataset real = ungrouped(world, counts, 2);
    const Dataset out = uniformize(real, spec, 300, false, 3);
    for (long n : out.class_counts()) {
      CHECK(n == 300);
    }
    // Real prefix kept verbatim and in order.
    REQUIRE(out.size() >= real.size());
    for (std::size_t i = 0; i < real.size(); ++i) {
      CHECK(out[i] == real[i]);
    }
    const auto real_counts = out.class_counts(Origin::Real);
    const auto synth_counts = out.class_counts(Origin::Synthetic);
    for (std::size_t k = 0; k < counts.size(); ++k) {
      CHECK(real_counts[k] == counts[k]);
      CHECK(synth_counts[k] == 300 - counts[k]);
    }
  }
}

TEST_CASE("uniformize: class-only fill spreads evenly over groups") {
  const auto world = grid_world(2, 2, 3);
  const Dataset real = sample_real(world, {{{0, 0}, 10}, {{1, 2}, 3}}, 1);
  const Dataset out = uniformize(real, synth_for(world, 0.2), 10, false, 4);
  const auto synth = out.cell_counts(Origin::Synthetic);
  // Class 1 deficit 7 over 3 groups: 3, 2, 2.
  CHECK(synth.at({1, 0}) == 3);
  CHECK(synth.at({1, 1}) == 2);
  CHECK(synth.at({1, 2}) == 2);
  CHECK(synth.at({0, 0}) == 0);

  const Dataset aware = uniformize(real, synth_for(world, 0.2), 10, true, 4);
  for (const auto& [key, n] : aware.cell_counts()) {
    CHECK(n == 10);
  }
}

TEST_CASE("uniformize: shape mismatch is rejected") {
  const auto world = grid_world(2, 2, 0);
  const auto other = grid_world(3, 2, 0);
  const Dataset real = ungrouped(world, {5, 2}, 1);
  CHECK_THROWS_AS(uniformize(real, synth_for(other, 0.1), 5, false, 1), ValidationError);
}

TEST_CASE("class-wise replacement") {
  const auto world = grid_world(2, 4, 0);
  const auto spec = synth_for(world, 0.3);
  const Dataset real = ungrouped(world, {20, 20, 20, 20}, 1);
  const Dataset half = replace_classwise(real, 0.5, spec, 2);
  CHECK(half.class_counts() == std::vector<long>{20, 20, 20, 20});
  CHECK(half.class_counts(Origin::Real) == std::vector<long>{0, 0, 20, 20});
  CHECK(replace_classwise(real, 0.0, spec, 2) == real);
  CHECK(count_origin(replace_classwise(real, 1.0, spec, 2), Origin::Real) == 0);
  // floor(0.3 * 4) = 1 class.
  CHECK(replace_classwise(real, 0.3, spec, 2).class_counts(Origin::Real)[0] == 0);
  CHECK(replace_classwise(real, 0.3, spec, 2).class_counts(Origin::Real)[1] == 20);
  CHECK_THROWS_AS(replace_classwise(real, 1.5, spec, 2), ValidationError);
  const Dataset ragged = ungrouped(world, {20, 10, 20, 20}, 1);
  CHECK_THROWS_AS(replace_classwise(ragged, 0.5, spec, 2), ValidationError);
}

TEST_CASE("instance-wise replacement") {
  const auto world = grid_world(2, 3, 0);
  const auto spec = synth_for(world, 0.3);
  const Dataset real = ungrouped(world, {500, 500, 500}, 1);
  const Dataset out = replace_instancewise(real, 0.99, spec, 5);
  CHECK(out.class_counts() == std::vector<long>{500, 500, 500});
  CHECK(out.class_counts(Origin::Real) == std::vector<long>{5, 5, 5});
  CHECK(replace_instancewise(real, 0.0, spec, 5) == real);
  const Dataset some = replace_instancewise(real, 0.25, spec, 5);
  CHECK(some.class_counts(Origin::Real) == std::vector<long>{375, 375, 375});
  // Kept real samples are a subset of the originals.
  for (const auto& s : some.samples()) {
    if (s.origin == Origin::Real) {
      CHECK(std::find(real.samples().begin(), real.samples().end(), s) != real.samples().end());
    }
  }
  CHECK_THROWS_AS(replace_instancewise(real, -0.1, spec, 5), ValidationError);
}

TEST_CASE("balanced real subsample") {
  const auto world = grid_world(2, 3, 0);
  Dataset mixed = ungrouped(world, {50, 10, 4}, 1);
  mixed = uniformize(mixed, synth_for(world, 0.3), 50, false, 2);
  const Dataset sub = uniform_real_subsample(mixed, 4, 3);
  CHECK(sub.class_counts() == std::vector<long>{4, 4, 4});
  CHECK(count_origin(sub, Origin::Synthetic) == 0);
  CHECK(uniform_real_subsample(mixed, 4, 3) == sub);
  CHECK(uniform_real_subsample(mixed, 0, 3).empty());
  CHECK_THROWS_WITH_AS(uniform_real_subsample(mixed, 5, 3), doctest::Contains("class 2"),
                       ValidationError);
  CHECK_THROWS_AS(uniform_real_subsample(mixed, -1, 3), ValidationError);
}

TEST_CASE("group-balanced subsample") {
  const auto world = grid_world(2, 2, 2);
  const Dataset real =
      sample_real(world, {{{0, 0}, 30}, {{0, 1}, 8}, {{1, 0}, 30}, {{1, 1}, 12}}, 1);
  const Dataset sub = group_balanced_subsample(real, 8, 2);
  for (const auto& [key, n] : sub.cell_counts()) {
    CHECK(n == 8);
  }
  CHECK_THROWS_AS(group_balanced_subsample(real, 9, 2), ValidationError);
  const Dataset hole = sample_real(world, {{{0, 0}, 3}, {{1, 0}, 3}, {{1, 1}, 3}}, 1);
  CHECK_THROWS_WITH_AS(group_balanced_subsample(hole, 1, 2), doctest::Contains("cell (0, 1)"),
                       ValidationError);
}

TEST_CASE("filter by origin") {
  const auto world = grid_world(2, 2, 0);
  const Dataset real = ungrouped(world, {6, 2}, 1);
  const Dataset out = uniformize(real, synth_for(world, 0.3), 6, false, 2);
  CHECK(filter_origin(out, Origin::Real) == real);
  CHECK(filter_origin(out, Origin::Synthetic).size() == 4);
}

} // TEST_SUITE
