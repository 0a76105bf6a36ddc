#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support/test_instances.hpp"
#include "tesp/io.hpp"
#include "tesp/subproblem.hpp"

using namespace tesp;
using tesp::testing::make_tri3;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot open ", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("profiles are normalized 48-sample shapes") {
  const auto& profiles = demand_profiles();
  CHECK(profiles.size() == 5);
  for (const auto& p : profiles) {
    double mx = 0.0;
    for (double v : p.samples) {
      CHECK(v >= 0.0);
      mx = std::max(mx, v);
    }
    CHECK(mx == doctest::Approx(1.0));
  }
  CHECK(find_profile("flat") != nullptr);
  CHECK(find_profile("long_peak") != nullptr);
  CHECK(find_profile("no_such") == nullptr);
}

TEST_CASE("profile application strides the 48 samples") {
  const DemandProfile* flat = find_profile("flat");
  const auto d = apply_profile(*flat, 42.0, 6);
  for (double v : d) CHECK(v == doctest::Approx(42.0));

  const DemandProfile* lp = find_profile("long_peak");
  const auto d48 = apply_profile(*lp, 10.0, 48);
  for (int t = 0; t < 48; ++t) CHECK(d48[t] == doctest::Approx(10.0 * lp->samples[t]));
  const auto d4 = apply_profile(*lp, 10.0, 4);
  CHECK(d4[0] == doctest::Approx(10.0 * lp->samples[0]));
  CHECK(d4[1] == doctest::Approx(10.0 * lp->samples[12]));
}

TEST_CASE("round trip through the document form") {
  const Instance tri = make_tri3();
  const InstanceDoc doc = InstanceDoc::from_instance(tri);
  const std::string text = serialize(doc);
  const InstanceDoc again = parse_instance_doc(text);
  CHECK(serialize(again) == text);

  const Instance parsed = again.to_instance();
  CHECK(parsed.name == tri.name);
  CHECK(parsed.num_intervals == tri.num_intervals);
  REQUIRE(parsed.buses.size() == tri.buses.size());
  for (std::size_t k = 0; k < tri.buses.size(); ++k) {
    CHECK(parsed.buses[k].demand == tri.buses[k].demand);
    CHECK(parsed.buses[k].curtailment_cost == tri.buses[k].curtailment_cost);
    CHECK(parsed.buses[k].max_storage == tri.buses[k].max_storage);
  }
  REQUIRE(parsed.rights_of_way.size() == tri.rights_of_way.size());
  for (std::size_t r = 0; r < tri.rights_of_way.size(); ++r) {
    CHECK(parsed.rights_of_way[r].circuit_cost == tri.rights_of_way[r].circuit_cost);
    CHECK(parsed.rights_of_way[r].big_m == tri.rights_of_way[r].big_m);
  }
  CHECK(validate_instance(parsed).empty());
}

TEST_CASE("shipped tri3 file is canonical and matches the in-code twin") {
  const std::string text = read_file(std::string(TESP_SOURCE_DIR) + "/instances/tri3.tesp");
  CHECK(serialize(parse_instance_doc(text)) == text);
  const Instance parsed = parse_instance(text);
  const Instance tri = make_tri3();
  CHECK(parsed.num_intervals == tri.num_intervals);
  REQUIRE(parsed.buses.size() == tri.buses.size());
  for (std::size_t k = 0; k < tri.buses.size(); ++k)
    CHECK(parsed.buses[k].demand == tri.buses[k].demand);
  for (std::size_t r = 0; r < tri.rights_of_way.size(); ++r)
    CHECK(parsed.rights_of_way[r].circuit_cost == tri.rights_of_way[r].circuit_cost);
  CHECK(validate_instance(parsed).empty());
}

TEST_CASE("profile demand spec survives round trips unexpanded") {
  const std::string text =
      "tespinst 1\n"
      "section meta\n"
      "name proftest\n"
      "intervals 4\n"
      "section buses\n"
      "bus 0 demand 0 0 0 0 gen 50 curtail 1000 storage_cost 2000 storage_max 0\n"
      "bus 1 profile short_peak peak 30 gen 0 curtail 1500 storage_cost 2000 storage_max 10\n"
      "section rights_of_way\n"
      "row 0 1 existing 1 max_new 2 cost 12345.5 susceptance 1.25 flow_limit 11\n"
      "end\n";
  const InstanceDoc doc = parse_instance_doc(text);
  CHECK(serialize(doc) == text);
  const Instance inst = doc.to_instance();
  const DemandProfile* p = find_profile("short_peak");
  CHECK(inst.buses[1].demand == apply_profile(*p, 30.0, 4));
  CHECK(inst.buses[1].curtailment_cost == std::vector<double>(4, 1500.0));
}

TEST_CASE("parse errors name the offending entity and line") {
  const std::string missing =
      "tespinst 1\nsection meta\nname x\nintervals 1\nsection buses\n"
      "bus 0 demand 1 gen 0 curtail 10 storage_cost 0 storage_max 0\n"
      "section rights_of_way\n"
      "row 0 1 existing 1 max_new 0 cost 5 flow_limit 3\n"
      "end\n";
  try {
    parse_instance_doc(missing);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string what = e.what();
    CHECK(what.find("right_of_way 0") != std::string::npos);
    CHECK(what.find("susceptance") != std::string::npos);
    CHECK(what.find("line 8") != std::string::npos);
  }

  CHECK_THROWS_AS(parse_instance_doc("tespinst 2\nend\n"), ParseError);
  CHECK_THROWS_AS(parse_instance_doc("tespinst 1\nsection meta\nname x\n"), ParseError);
  CHECK_THROWS_AS(parse_instance_doc(
                      "tespinst 1\nsection meta\nname x\nintervals notanumber\nend\n"),
                  ParseError);
  CHECK_THROWS_AS(
      parse_instance_doc("tespinst 1\nsection meta\nname x\nintervals 1\nsection buses\n"
                         "bus 0 profile nope peak 3 gen 0 curtail 1 storage_cost 0 storage_max 0\n"
                         "section rights_of_way\nend\n")
          .to_instance(),
      ParseError);
}

TEST_CASE("generator produces valid deterministic instances") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const Instance inst = generate_instance(4 + seed % 3, 2, seed % 2 ? 4 : 1, seed);
    const auto report = validate_instance(inst);
    for (const auto& v : report) MESSAGE("seed ", seed, " ", v.entity, ": ", v.message);
    CHECK(report.empty());
    CHECK(inst.total_slots <= 12);
    CHECK(inst.total_slots >= 1);
  }
  const Instance a = generate_instance(5, 2, 4, 1234);
  const Instance b = generate_instance(5, 2, 4, 1234);
  CHECK(serialize(InstanceDoc::from_instance(a)) == serialize(InstanceDoc::from_instance(b)));
}

TEST_CASE("generator hits its curtailment calibration targets") {
  for (std::uint64_t seed : {3u, 11u, 19u}) {
    const Instance inst = generate_instance(5, 2, 4, seed);
    SubproblemEvaluator ev(inst);
    const double total = inst.total_demand();
    double curtailed0 = 0.0, curtailed1 = 0.0;
    for (double r : ev.evaluate(PlanVector::zeros(inst), "t").op.curtailment) curtailed0 += r;
    for (double r : ev.evaluate(PlanVector::all_in(inst), "t").op.curtailment) curtailed1 += r;
    CHECK(curtailed0 / total >= 0.20);
    CHECK(curtailed1 / total <= 0.005);
  }
}

TEST_CASE("brute force enumerates the symmetry-reduced plan space") {
  const Instance tri = make_tri3();
  const OracleResult res = brute_force(tri);
  CHECK(res.table.size() == 3 * 2 * 3);
  for (const auto& [plan, fitness] : res.table) CHECK(res.objective <= fitness + 1e-9);
  CHECK(master_cost(tri, res.plan) + evaluate_plan(tri, res.plan).first.cost ==
        doctest::Approx(res.objective));

  Instance lone;
  lone.name = "single";
  lone.num_intervals = 1;
  lone.buses = {Bus{0, {3}, 5.0, {100}, 2000.0, 0.0}};
  lone.prepare();
  const OracleResult single = brute_force(lone);
  CHECK(single.table.size() == 1);
  CHECK(single.objective == doctest::Approx(0.0));
}

TEST_CASE("brute force prefers all-in when every circuit strictly pays") {
  // Demand outstrips even the all-in capacity, so each extra circuit saves
  // 4 MW of curtailment at 500 each against a cost of 1.
  Instance inst;
  inst.name = "monotone";
  inst.num_intervals = 1;
  inst.buses = {Bus{0, {0}, 40.0, {500}, 2000.0, 0.0}, Bus{1, {20}, 0.0, {500}, 2000.0, 0.0}};
  inst.rights_of_way = {RightOfWay{0, 1, 1, 3, 1.0, 1.0, 4.0, 0.0}};
  inst.prepare();
  const OracleResult res = brute_force(inst);
  CHECK(res.plan == PlanVector::all_in(inst));
  CHECK(res.objective == doctest::Approx(3.0 + 4.0 * 500.0));
}

TEST_CASE("brute force refuses oversized instances") {
  Instance inst = make_tri3();
  inst.rights_of_way[0].max_new_circuits = 11;
  inst.prepare();
  CHECK_THROWS_AS(brute_force(inst), std::invalid_argument);
}

TEST_SUITE_END();
