#include <cmath>

#include "doctest.h"
#include "support/test_instances.hpp"
#include "tesp/io.hpp"
#include "tesp/orchestrator.hpp"

using namespace tesp;
using tesp::testing::make_tri3;

namespace {

bool close(double a, double b, double tol = 1e-6) {
  return std::fabs(a - b) <= tol * (1.0 + std::fabs(b));
}

}  // namespace

TEST_SUITE_BEGIN("orchestrator");

TEST_CASE("empty decision space proves immediately with one evaluation") {
  Instance inst;
  inst.name = "nochoice";
  inst.num_intervals = 2;
  inst.buses = {Bus{0, {0, 0}, 15.0, {900, 900}, 2000.0, 0.0},
                Bus{1, {6, 11}, 0.0, {900, 900}, 2000.0, 0.0}};
  inst.rights_of_way = {RightOfWay{0, 1, 1, 0, 500.0, 1.0, 8.0, 0.0}};
  inst.prepare();

  RunConfig cfg;
  cfg.mode = Mode::kBbha;
  const RunReport rep = run(inst, cfg);
  CHECK(rep.proven_optimal);
  CHECK(rep.exit_reason == "proven");
  CHECK(rep.lp_solves == 1);
  CHECK(rep.plan == PlanVector::zeros(inst));
  CHECK(close(rep.objective, true_fitness(inst, PlanVector::zeros(inst))));
}

TEST_CASE("bbha proves the tri3 optimum for any seed") {
  const Instance tri = make_tri3();
  const OracleResult oracle = brute_force(tri);
  for (std::uint64_t seed : {1u, 7u, 42u}) {
    RunConfig cfg;
    cfg.mode = Mode::kBbha;
    cfg.seed = seed;
    const RunReport rep = run(tri, cfg);
    REQUIRE(rep.proven_optimal);
    CHECK(close(rep.objective, oracle.objective));
    CHECK(rep.plan == oracle.plan);
    CHECK(rep.lower_bound >= rep.objective - 1e-6 * (1.0 + std::fabs(rep.objective)));
  }
}

TEST_CASE("benders and bbha agree; both match the oracle on generated instances") {
  for (std::uint64_t seed : {4u, 21u}) {
    const Instance inst = generate_instance(5, 2, 4, seed);
    const OracleResult oracle = brute_force(inst);
    RunConfig benders;
    benders.mode = Mode::kBenders;
    const RunReport rb = run(inst, benders);
    RunConfig bbha;
    bbha.mode = Mode::kBbha;
    const RunReport rh = run(inst, bbha);
    REQUIRE(rb.proven_optimal);
    REQUIRE(rh.proven_optimal);
    CHECK(close(rb.objective, oracle.objective));
    CHECK(close(rh.objective, oracle.objective));
    CHECK(rb.plan == oracle.plan);
    CHECK(rh.plan == oracle.plan);
  }
}

TEST_CASE("incumbent trace is monotone and bounded below by the lower bound") {
  const Instance tri = make_tri3();
  RunConfig cfg;
  cfg.mode = Mode::kBbha;
  cfg.seed = 3;
  const RunReport rep = run(tri, cfg);
  double last = std::numeric_limits<double>::infinity();
  for (const auto& p : rep.trace) {
    CHECK(p.incumbent <= last + 1e-9);
    if (std::isfinite(p.incumbent)) last = p.incumbent;
    CHECK(p.lower_bound <= rep.objective + 1e-6 * (1.0 + std::fabs(rep.objective)));
  }
  CHECK(rep.trace.back().incumbent == doctest::Approx(rep.objective));
}

TEST_CASE("zero budget returns the best initial random plan") {
  const Instance tri = make_tri3();
  RunConfig cfg;
  cfg.mode = Mode::kBbha;
  cfg.budget.time_limit_s = 0.0;
  cfg.seed = 11;
  const RunReport rep = run(tri, cfg);
  CHECK(rep.has_incumbent);
  CHECK(rep.exit_reason == "time_limit");
  CHECK(rep.iterations == 0);
  CHECK(rep.lp_solves <= cfg.bees.initial_population() + 1);  // + the do-nothing seed

  RunConfig bcfg;
  bcfg.mode = Mode::kBenders;
  bcfg.budget.time_limit_s = 0.0;
  const RunReport brep = run(tri, bcfg);
  CHECK(brep.has_incumbent);
  CHECK(brep.plan == PlanVector::zeros(tri));
}

TEST_CASE("bees mode needs a budget and respects iteration limits") {
  const Instance tri = make_tri3();
  RunConfig cfg;
  cfg.mode = Mode::kBees;
  CHECK_THROWS_AS(run(tri, cfg), std::invalid_argument);

  cfg.budget.max_iterations = 5;
  const RunReport rep = run(tri, cfg);
  CHECK(rep.iterations == 5);
  CHECK(rep.exit_reason == "iteration_limit");
  CHECK(rep.has_incumbent);
  CHECK(rep.lower_bound == 0.0);
  CHECK_FALSE(rep.proven_optimal);
  CHECK(rep.cut_count == 0);
}

TEST_CASE("worker threads do not change the outcome") {
  const Instance tri = make_tri3();
  RunConfig one;
  one.mode = Mode::kBbha;
  one.seed = 13;
  RunConfig two = one;
  two.threads = 2;
  const RunReport a = run(tri, one);
  const RunReport b = run(tri, two);
  CHECK(a.objective == b.objective);
  CHECK(a.plan == b.plan);
  CHECK(a.lp_solves == b.lp_solves);
  CHECK(a.cut_count == b.cut_count);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("identical seeds reproduce identical runs") {
  const Instance tri = make_tri3();
  RunConfig cfg;
  cfg.mode = Mode::kBbha;
  cfg.seed = 2024;
  cfg.budget.max_iterations = 4;
  const RunReport a = run(tri, cfg);
  const RunReport b = run(tri, cfg);
  CHECK(a.objective == b.objective);
  CHECK(a.lp_solves == b.lp_solves);
  CHECK(a.cut_count == b.cut_count);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].incumbent == b.trace[i].incumbent);
    CHECK(a.trace[i].source == b.trace[i].source);
  }
}

TEST_CASE("scout lower bound never exceeds any plan's true fitness") {
  const Instance tri = make_tri3();
  RunConfig cfg;
  cfg.mode = Mode::kBbha;
  cfg.seed = 9;
  const RunReport rep = run(tri, cfg);
  Rng rng(64);
  for (int i = 0; i < 10; ++i) {
    PlanVector y = PlanVector::zeros(tri);
    for (int r = 0; r < tri.num_rows(); ++r)
      y.counts[r] = static_cast<int>(rng.below(tri.rights_of_way[r].max_new_circuits + 1));
    const double fitness = true_fitness(tri, y);
    CHECK(rep.lower_bound <= fitness + 1e-6 * (1.0 + std::fabs(fitness)));
  }
}

TEST_CASE("cut sharing is visible through source tags") {
  const Instance tri = make_tri3();
  RunConfig cfg;
  cfg.mode = Mode::kBbha;
  cfg.seed = 5;
  const RunReport rep = run(tri, cfg);
  CHECK(rep.cut_count == static_cast<long>(rep.cuts.size()));
  bool saw_init = false, saw_scout = false;
  for (const auto& cut : rep.cuts) {
    const bool known = cut->source.rfind("init", 0) == 0 || cut->source.rfind("worker", 0) == 0 ||
                       cut->source == "scout";
    CHECK(known);
    saw_init |= cut->source.rfind("init", 0) == 0;
    saw_scout |= cut->source == "scout";
  }
  CHECK(saw_init);
  CHECK(saw_scout);
}

TEST_CASE("pre-seeded cuts prove with no more evaluations") {
  const Instance inst = generate_instance(4, 2, 2, 33);
  RunConfig cfg;
  cfg.mode = Mode::kBenders;
  const RunReport first = run(inst, cfg);
  REQUIRE(first.proven_optimal);

  RunConfig warm = cfg;
  warm.seed_cuts = first.cuts;
  const RunReport second = run(inst, warm);
  REQUIRE(second.proven_optimal);
  CHECK(second.lp_solves <= first.lp_solves);
  CHECK(close(second.objective, first.objective));
}

TEST_CASE("scaled_trapz basics") {
  const std::vector<TracePoint> single = {{0.0, 10.0, 0.0, "x"}};
  CHECK(scaled_trapz({single}, 5.0) == std::vector<double>{1.0});

  std::vector<TracePoint> high = {{0.0, 10.0, 0.0, "x"}};
  std::vector<TracePoint> low = {{0.0, 5.0, 0.0, "x"}};
  const auto scores = scaled_trapz({high, low}, 8.0);
  CHECK(scores[0] == doctest::Approx(1.0));
  CHECK(scores[1] == doctest::Approx(0.5));

  // Improvements reduce the integral.
  std::vector<TracePoint> improving = {{0.0, 10.0, 0.0, "x"}, {4.0, 2.0, 0.0, "x"}};
  const auto s2 = scaled_trapz({high, improving}, 8.0);
  CHECK(s2[1] == doctest::Approx((10.0 * 4.0 + 2.0 * 4.0) / 80.0));

  CHECK_THROWS_AS(scaled_trapz({}, 1.0), std::invalid_argument);
  const std::vector<TracePoint> never = {{0.0, std::numeric_limits<double>::infinity(), 0.0, "x"}};
  CHECK_THROWS_AS(scaled_trapz({never}, 1.0), std::invalid_argument);
}

TEST_CASE("trace csv round trips") {
  const Instance tri = make_tri3();
  RunConfig cfg;
  cfg.mode = Mode::kBenders;
  const RunReport rep = run(tri, cfg);
  const std::string csv = trace_to_csv(rep.trace);
  const auto parsed = parse_trace_csv(csv);
  REQUIRE(parsed.size() == rep.trace.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].time_s == doctest::Approx(rep.trace[i].time_s));
    CHECK(parsed[i].incumbent == doctest::Approx(rep.trace[i].incumbent));
    CHECK(parsed[i].source == rep.trace[i].source);
  }
  CHECK_THROWS_AS(parse_trace_csv("bogus\n"), std::invalid_argument);
}

TEST_CASE("report document carries the documented keys") {
  const Instance tri = make_tri3();
  RunConfig cfg;
  cfg.mode = Mode::kBbha;
  const RunReport rep = run(tri, cfg);
  const std::string text = report_to_text(rep);
  CHECK(text.rfind("tesp-report 1\n", 0) == 0);
  for (const char* key : {"instance:", "mode:", "proven_optimal:", "objective:", "plan:",
                          "lower_bound:", "gap_rel:", "iterations:", "cuts:",
                          "subproblem_lp_solves:", "wall_time_s:", "exit_reason:"})
    CHECK(text.find(key) != std::string::npos);
  CHECK(text.find("mode: bbha") != std::string::npos);
  CHECK(text.find("proven_optimal: true") != std::string::npos);
}

TEST_CASE("tune ranks parameter sets and flags the defaults") {
  const Instance tri = make_tri3();
  BeeParams defaults;
  const auto rows = tune(tri, {defaults}, 3.0, {1});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].mean_scaled_trapz == doctest::Approx(1.0));
  CHECK(rows[0].published_defaults);

  BeeParams other = defaults;
  other.nre = 6;
  const auto two = tune(tri, {defaults, other}, 2.0, {1, 2});
  CHECK(two.size() == 2);
  CHECK(two[0].mean_scaled_trapz <= two[1].mean_scaled_trapz);

  // A set with no recruitment at all is degenerate but accepted: the scout
  // alone does the searching and the row simply ranks on its own merits.
  BeeParams no_recruits = defaults;
  no_recruits.nre = 0;
  no_recruits.nrb = 0;
  const auto with_degenerate = tune(tri, {defaults, no_recruits}, 1.0, {1});
  CHECK(with_degenerate.size() == 2);

  BeeParams bad = defaults;
  bad.ne = 5;
  CHECK_THROWS_AS(tune(tri, {bad}, 1.0, {1}), std::invalid_argument);
  CHECK_THROWS_AS(tune(tri, {}, 1.0, {1}), std::invalid_argument);

  const std::string csv = tune_table_to_csv("tri3", two);
  CHECK(csv.rfind("scenario,ne,nb,nre,nrb,objective,iterations,scaled_trapz\n", 0) == 0);
}

TEST_CASE("invalid instances are rejected") {
  Instance broken = make_tri3();
  broken.buses[0].demand.pop_back();
  RunConfig cfg;
  CHECK_THROWS_AS(run(broken, cfg), std::invalid_argument);
}

TEST_SUITE_END();
