#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "tesp/model.hpp"

namespace tesp {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Normalized 24h demand shapes sampled at 30-minute steps. Applied to an
// instance with T intervals by striding: d_t = peak * samples[floor(t*48/T)].
struct DemandProfile {
  std::string name;
  std::array<double, 48> samples;  // max sample is exactly 1
};

const std::vector<DemandProfile>& demand_profiles();
const DemandProfile* find_profile(const std::string& name);
std::vector<double> apply_profile(const DemandProfile& profile, double peak, int T);

// Document form of an instance file. Keeps the demand spec as written
// (explicit series or profile reference) so that serialization round-trips
// byte-for-byte.
struct BusDoc {
  int id = 0;
  bool demand_is_profile = false;
  std::string profile;               // when demand_is_profile
  double peak = 0.0;                 // when demand_is_profile
  std::vector<double> demand;        // when explicit
  double max_generation = 0.0;
  std::vector<double> curtailment_cost;  // length 1 (uniform) or T
  double storage_unit_cost = 0.0;
  double max_storage = 0.0;
};

struct RowDoc {
  int from = 0, to = 0;
  int existing = 0, max_new = 0;
  double cost = 0.0, susceptance = 0.0, flow_limit = 0.0;
};

struct InstanceDoc {
  std::string name;
  int intervals = 1;
  std::vector<BusDoc> buses;
  std::vector<RowDoc> rows;

  Instance to_instance() const;  // resolves profiles and prepares
  static InstanceDoc from_instance(const Instance& inst);
};

// Parser for the versioned "tespinst 1" format; errors carry the line number
// and the entity being read. '#' starts a comment. serialize() emits the
// canonical form: keyword order fixed, shortest round-trip numbers, no
// comments, so canonical files survive parse -> serialize byte-for-byte.
InstanceDoc parse_instance_doc(const std::string& text);
std::string serialize(const InstanceDoc& doc);
Instance parse_instance(const std::string& text);

// Desk-scale synthetic instance: a random spanning tree of existing
// corridors plus candidate rights of way, with demand, capacities and
// candidate costs calibrated by LP so the do-nothing plan curtails at least
// 20% of energy while the all-in plan curtails (essentially) none.
// Deterministic in the seed. Slot budget defaults to the brute-force guard.
Instance generate_instance(int buses, int spare_rows, int T, std::uint64_t seed,
                           int max_slots = 12);

struct OracleResult {
  double objective = 0.0;
  PlanVector plan;
  std::vector<std::pair<PlanVector, double>> table;  // every normalized plan
};

// Ground-truth enumeration over per-right-of-way circuit counts (the
// symmetry-reduced plan space). Guarded to instances with at most 12 slots.
OracleResult brute_force(const Instance& inst);

}  // namespace tesp
