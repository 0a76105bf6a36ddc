#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tesp {

// Problem data for one bus. `demand` and `curtailment_cost` are per-interval
// series of length T (the instance's num_intervals).
struct Bus {
  int id = 0;
  std::vector<double> demand;            // MW per interval
  double max_generation = 0.0;           // MW
  std::vector<double> curtailment_cost;  // currency per MW per interval
  double storage_unit_cost = 0.0;        // currency per MWh of capacity
  double max_storage = 0.0;              // MWh
};

// A corridor between two buses. Up to max_new_circuits identical circuits
// may be installed on it, each with the given cost, susceptance and thermal
// limit. big_m is derived in Instance::prepare(); a row belongs to the
// existing set when existing_circuits > 0 and to the candidate set when
// max_new_circuits > 0 (both may hold).
struct RightOfWay {
  int from_bus = 0;
  int to_bus = 0;
  int existing_circuits = 0;
  int max_new_circuits = 0;
  double circuit_cost = 0.0;  // currency per installed circuit
  double susceptance = 0.0;   // per unit
  double flow_limit = 0.0;    // MW per circuit
  double big_m = 0.0;         // MW; 0 means "derive in prepare()"
};

// Immutable after prepare(): all solver code takes `const Instance&`.
struct Instance {
  std::string name;
  int num_intervals = 1;  // T; the time grid is cyclic
  std::vector<Bus> buses;
  std::vector<RightOfWay> rights_of_way;

  // Derived by prepare(): flat slot layout for the binary plan space.
  // Slot (row r, position p in 0..max_new-1) lives at slot_offset[r] + p.
  std::vector<int> slot_offset;  // size rights_of_way.size() + 1
  int total_slots = 0;

  // Fills slot offsets and derives big_m for rows that have none. The bound
  // is gamma_ij * L * max(flow_limit/susceptance), L = number of buses, a
  // path-length bound on the achievable angle spread, so an uninstalled
  // circuit's voltage-law rows can never bind.
  void prepare();

  int num_buses() const { return static_cast<int>(buses.size()); }
  int num_rows() const { return static_cast<int>(rights_of_way.size()); }
  int slots_in_row(int r) const { return rights_of_way[r].max_new_circuits; }
  double total_demand() const;

  bool prepared() const { return slot_offset.size() == rights_of_way.size() + 1; }
};

// Candidate-circuit installation assignment in symmetry-normalized form:
// within a right of way circuits are installed in position order, so the
// per-row count is a complete description. Slot (r, p) carries value 1 iff
// p < counts[r].
struct PlanVector {
  std::vector<int> counts;  // one entry per right of way

  bool operator==(const PlanVector&) const = default;

  static PlanVector zeros(const Instance& inst) {
    return PlanVector{std::vector<int>(inst.rights_of_way.size(), 0)};
  }
  static PlanVector all_in(const Instance& inst);

  bool slot_value(const Instance& inst, int flat_slot) const;
  std::vector<std::uint8_t> to_slots(const Instance& inst) const;
  int total_circuits() const;
  std::string to_string() const;  // "r0:c0 r1:c1 ..." for reports
};

struct Violation {
  std::string entity;   // e.g. "bus 3", "right_of_way 2"
  std::string message;  // names the broken invariant
};

// Report-returning validation; empty report iff every model invariant
// holds. Never throws.
std::vector<Violation> validate_instance(const Instance& inst);

// Investment part of the master objective: sum of circuit_cost over
// installed slots. Throws std::invalid_argument on dimension mismatch.
double master_cost(const Instance& inst, const PlanVector& y);

// Packs the ones of a raw per-slot binary vector into the lowest positions
// of each right of way. Count per row (and hence master_cost) is preserved.
PlanVector normalize_plan(const Instance& inst, const std::vector<std::uint8_t>& raw);

// Plan-space distance used by the neighbourhood move: Hamming distance
// between normalized forms, which is the sum of per-row count differences.
int plan_distance(const PlanVector& a, const PlanVector& b);

}  // namespace tesp
