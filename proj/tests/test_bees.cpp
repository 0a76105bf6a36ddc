#include <cmath>
#include <map>

#include "doctest.h"
#include "support/test_instances.hpp"
#include "tesp/bees.hpp"
#include "tesp/io.hpp"
#include "tesp/scout.hpp"

using namespace tesp;
using tesp::testing::make_tri3;
using tesp::testing::make_two_bus;

TEST_SUITE_BEGIN("bees");

TEST_CASE("bee params invariants") {
  BeeParams ok;
  ok.validate();
  BeeParams bad = ok;
  bad.ne = 3;  // ne > nb
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.nrb = 20;  // nre < nrb
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.ngh = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("random_plan is uniform over per-row counts") {
  Instance inst = make_two_bus(2);
  Rng rng(404);
  std::map<int, int> counts;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) ++counts[random_plan(inst, rng).counts[0]];
  // 5 sigma around the uniform expectation draws/3
  const double expect = draws / 3.0;
  const double sigma = std::sqrt(draws * (1.0 / 3.0) * (2.0 / 3.0));
  for (int k = 0; k <= 2; ++k) {
    CHECK(std::fabs(counts[k] - expect) <= 5.0 * sigma);
  }

  Instance none = make_two_bus(0);
  Rng rng2(1);
  CHECK(random_plan(none, rng2) == PlanVector::zeros(none));
}

TEST_CASE("neighbour with radius one changes exactly one row by one") {
  const Instance tri = make_tri3();
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const PlanVector y = random_plan(tri, rng);
    const PlanVector z = neighbour(tri, y, 1, rng);
    CHECK(plan_distance(y, z) == 1);
  }
}

TEST_CASE("neighbour respects the radius, bounds and directional consistency") {
  const Instance tri = make_tri3();
  Rng rng(12);
  for (int i = 0; i < 10000; ++i) {
    const PlanVector y = random_plan(tri, rng);
    const int ngh = 1 + static_cast<int>(rng.below(8));
    const PlanVector z = neighbour(tri, y, ngh, rng);
    const int d = plan_distance(y, z);
    CHECK(d >= 1);
    CHECK(d <= ngh);
    for (int r = 0; r < tri.num_rows(); ++r) {
      CHECK(z.counts[r] >= 0);
      CHECK(z.counts[r] <= tri.rights_of_way[r].max_new_circuits);
    }
  }
}

TEST_CASE("neighbour reachable counts on a single row") {
  // One row at count 1 of 3: directional moves reach {0, 2, 3}, never 1.
  Instance inst = make_two_bus(3);
  Rng rng(900);
  std::map<int, int> seen;
  for (int i = 0; i < 4000; ++i) {
    const PlanVector z = neighbour(inst, PlanVector{{1}}, 8, rng);
    ++seen[z.counts[0]];
  }
  CHECK(seen.count(0));
  CHECK(seen.count(2));
  CHECK(seen.count(3));
  CHECK_FALSE(seen.count(1));
}

TEST_CASE("heuristic fitness follows the cut estimate with an early exit") {
  Instance inst;
  inst.name = "pair";
  inst.num_intervals = 1;
  inst.buses = {Bus{0, {0}, 20.0, {500}, 2000.0, 0.0}, Bus{1, {10}, 0.0, {500}, 2000.0, 0.0}};
  inst.rights_of_way = {RightOfWay{0, 1, 1, 1, 2.0, 1.0, 6.0, 0.0},
                        RightOfWay{0, 1, 1, 1, 3.0, 1.0, 6.0, 0.0}};
  inst.prepare();

  auto cut = std::make_shared<BendersCut>();
  cut->coeffs = {4.0, 1.0};
  cut->rhs = 7.0;
  const CutSnapshot cuts = {cut};

  const PlanVector y{{1, 0}};
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(heuristic_fitness(inst, y, cuts, inf) == doctest::Approx(2.0 + 3.0));
  // Early exit: master cost alone already beats the incumbent.
  CHECK(heuristic_fitness(inst, y, cuts, 1.5) == doctest::Approx(2.0));
  // Empty snapshot and empty plan: zero.
  CHECK(heuristic_fitness(inst, PlanVector::zeros(inst), {}, inf) == doctest::Approx(0.0));
}

TEST_CASE("heuristic underestimates everywhere and is exact at generators") {
  const Instance tri = make_tri3();
  CutPool pool;
  Incumbent inc;
  Scout scout(tri, pool, inc);
  while (!scout.done()) scout.step(64);
  const CutSnapshot cuts = pool.snapshot();
  const OracleResult oracle = brute_force(tri);
  const double inf = std::numeric_limits<double>::infinity();

  for (const auto& [plan, fitness] : oracle.table) {
    const double h = heuristic_fitness(tri, plan, cuts, inf);
    CHECK(h <= fitness + 1e-6 * (1.0 + std::fabs(fitness)));
  }
  for (const auto& cut : cuts) {
    const PlanVector& gen = cut->generated_at;
    if (gen.counts.empty()) continue;
    double truth = 0.0;
    for (const auto& [plan, fitness] : oracle.table)
      if (plan == gen) truth = fitness;
    const double h = heuristic_fitness(tri, gen, cuts, inf);
    CHECK(h == doctest::Approx(truth).epsilon(1e-6));
  }

  // Monotone refinement: a snapshot prefix never scores higher.
  const CutSnapshot half(cuts.begin(), cuts.begin() + cuts.size() / 2);
  for (const auto& [plan, fitness] : oracle.table) {
    CHECK(heuristic_fitness(tri, plan, half, inf) <=
          heuristic_fitness(tri, plan, cuts, inf) + 1e-9);
  }
}

TEST_CASE("worker_step never replaces an optimal site") {
  const Instance tri = make_tri3();
  const OracleResult oracle = brute_force(tri);
  CutPool pool;
  Incumbent inc;
  Scout scout(tri, pool, inc);
  while (!scout.done()) scout.step(64);

  SubproblemEvaluator ev(tri);
  Rng rng(555);
  Site site{oracle.plan, oracle.objective, 0, 8};
  for (int i = 0; i < 50; ++i) {
    const auto out = worker_step(tri, site, 10, 8, pool.snapshot(), oracle.objective,
                                 {site.center}, ev, rng);
    CHECK_FALSE(out.improved.has_value());
  }
}

TEST_CASE("worker_step with no cuts evaluates the cheapest drawn master cost") {
  const Instance tri = make_tri3();
  SubproblemEvaluator ev(tri);
  const PlanVector start = PlanVector::all_in(tri);
  Site site{start, true_fitness(tri, start), 0, 8};

  Rng rng(777);
  Rng replay = rng;  // identical stream reproduces the drawn sample
  const auto out = worker_step(tri, site, 10, 8, {}, std::numeric_limits<double>::infinity(),
                               {site.center}, ev, rng);
  REQUIRE(out.evaluated.has_value());

  double cheapest = std::numeric_limits<double>::infinity();
  PlanVector expect;
  for (int i = 0; i < 10; ++i) {
    const PlanVector cand = neighbour(tri, site.center, 8, replay);
    if (cand == site.center) continue;
    const double c = master_cost(tri, cand);
    if (c < cheapest) {
      cheapest = c;
      expect = cand;
    }
  }
  CHECK(out.evaluated->first == expect);
  CHECK(out.lp_solves == 1);
}

TEST_CASE("worker_step replays deterministically with a rich pool") {
  const Instance tri = make_tri3();
  CutPool pool;
  Incumbent inc;
  Scout scout(tri, pool, inc);
  while (!scout.done()) scout.step(64);
  const CutSnapshot cuts = pool.snapshot();

  SubproblemEvaluator ev(tri);
  const PlanVector start = PlanVector::zeros(tri);
  Site site{start, true_fitness(tri, start), 0, 8};
  Rng rng(31);
  Rng replay = rng;
  const auto out = worker_step(tri, site, 10, 8, cuts, inc.value(), {site.center}, ev, rng);

  double best_h = std::numeric_limits<double>::infinity();
  PlanVector expect;
  for (int i = 0; i < 10; ++i) {
    const PlanVector cand = neighbour(tri, site.center, 8, replay);
    if (cand == site.center) continue;
    const double h = heuristic_fitness(tri, cand, cuts, inc.value());
    if (h < best_h) {
      best_h = h;
      expect = cand;
    }
  }
  if (best_h < site.fitness) {
    REQUIRE(out.evaluated.has_value());
    CHECK(out.evaluated->first == expect);
  } else {
    CHECK_FALSE(out.evaluated.has_value());
  }
}

TEST_CASE("baseline finds a self-paying candidate immediately") {
  // Installing the one candidate saves 8 MW of 500-cost curtailment for 100.
  Instance inst;
  inst.name = "bargain";
  inst.num_intervals = 1;
  inst.buses = {Bus{0, {0}, 30.0, {500}, 2000.0, 0.0}, Bus{1, {16}, 0.0, {500}, 2000.0, 0.0}};
  inst.rights_of_way = {RightOfWay{0, 1, 1, 1, 100.0, 1.0, 8.0, 0.0}};
  inst.prepare();
  const OracleResult oracle = brute_force(inst);

  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Incumbent inc;
    run_bees_baseline(inst, BeeParams{}, -1.0, 1, seed, inc);
    if (std::fabs(inc.value() - oracle.objective) <= 1e-6 * (1.0 + oracle.objective)) ++hits;
  }
  CHECK(hits >= 4);
}

TEST_CASE("baseline reaches the tri3 optimum on most seeds") {
  const Instance tri = make_tri3();
  const OracleResult oracle = brute_force(tri);
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Incumbent inc;
    const BaselineStats stats = run_bees_baseline(tri, BeeParams{}, -1.0, 40, seed, inc);
    CHECK(stats.iterations == 40);
    if (std::fabs(inc.value() - oracle.objective) <=
        1e-6 * (1.0 + std::fabs(oracle.objective)))
      ++hits;
  }
  CHECK(hits >= 4);
}

TEST_CASE("elite and best labels coincide when parameters degenerate") {
  const Instance tri = make_tri3();
  BeeParams elite;
  elite.ne = 1;
  elite.nb = 1;
  elite.nre = 5;
  elite.nrb = 5;
  BeeParams best = elite;
  best.ne = 0;  // the single site is now a plain best site

  Incumbent a, b;
  run_bees_baseline(tri, elite, -1.0, 12, 99, a);
  run_bees_baseline(tri, best, -1.0, 12, 99, b);
  REQUIRE(a.trace().size() == b.trace().size());
  for (std::size_t i = 0; i < a.trace().size(); ++i)
    CHECK(a.trace()[i].incumbent == doctest::Approx(b.trace()[i].incumbent));
}

TEST_SUITE_END();
