#include "tesp/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tesp {

void Instance::prepare() {
  slot_offset.assign(rights_of_way.size() + 1, 0);
  for (std::size_t r = 0; r < rights_of_way.size(); ++r) {
    slot_offset[r + 1] = slot_offset[r] + std::max(0, rights_of_way[r].max_new_circuits);
  }
  total_slots = slot_offset.back();

  double max_ratio = 0.0;
  for (const auto& row : rights_of_way) {
    if (row.susceptance > 0.0) {
      max_ratio = std::max(max_ratio, row.flow_limit / row.susceptance);
    }
  }
  const double spread = static_cast<double>(std::max<std::size_t>(buses.size(), 1)) * max_ratio;
  for (auto& row : rights_of_way) {
    if (row.big_m <= 0.0) row.big_m = std::max(1.0, row.susceptance * spread);
  }
}

double Instance::total_demand() const {
  double s = 0.0;
  for (const auto& b : buses) {
    s = std::accumulate(b.demand.begin(), b.demand.end(), s);
  }
  return s;
}

PlanVector PlanVector::all_in(const Instance& inst) {
  PlanVector y;
  y.counts.reserve(inst.rights_of_way.size());
  for (const auto& row : inst.rights_of_way) y.counts.push_back(row.max_new_circuits);
  return y;
}

bool PlanVector::slot_value(const Instance& inst, int flat_slot) const {
  const auto it = std::upper_bound(inst.slot_offset.begin(), inst.slot_offset.end(), flat_slot);
  const int r = static_cast<int>(it - inst.slot_offset.begin()) - 1;
  return flat_slot - inst.slot_offset[r] < counts[r];
}

std::vector<std::uint8_t> PlanVector::to_slots(const Instance& inst) const {
  std::vector<std::uint8_t> out(inst.total_slots, 0);
  for (std::size_t r = 0; r < counts.size(); ++r) {
    for (int p = 0; p < counts[r]; ++p) out[inst.slot_offset[r] + p] = 1;
  }
  return out;
}

int PlanVector::total_circuits() const {
  return std::accumulate(counts.begin(), counts.end(), 0);
}

std::string PlanVector::to_string() const {
  std::ostringstream os;
  for (std::size_t r = 0; r < counts.size(); ++r) {
    if (r) os << ' ';
    os << r << ':' << counts[r];
  }
  return os.str();
}

namespace {

std::string bus_name(int k) { return "bus " + std::to_string(k); }

std::string row_name(const Instance& inst, int r) {
  const auto& row = inst.rights_of_way[r];
  return "right_of_way " + std::to_string(r) + " (" + std::to_string(row.from_bus) + "-" +
         std::to_string(row.to_bus) + ")";
}

// Union-find over bus indices for the connectivity check.
struct Dsu {
  std::vector<int> parent;
  explicit Dsu(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<Violation> validate_instance(const Instance& inst) {
  std::vector<Violation> report;
  const auto add = [&](std::string entity, std::string msg) {
    report.push_back({std::move(entity), std::move(msg)});
  };

  const int T = inst.num_intervals;
  if (T < 1) add("instance", "num_intervals must be >= 1");

  const int K = inst.num_buses();
  for (int k = 0; k < K; ++k) {
    const Bus& b = inst.buses[k];
    if (b.id != k) add(bus_name(k), "bus ids must be 0..n-1 in order");
    if (T >= 1 && static_cast<int>(b.demand.size()) != T)
      add(bus_name(k), "demand length does not match num_intervals");
    if (T >= 1 && static_cast<int>(b.curtailment_cost.size()) != T)
      add(bus_name(k), "curtailment_cost length does not match num_intervals");
    for (double d : b.demand)
      if (!(d >= 0.0)) {
        add(bus_name(k), "demand entries must be >= 0");
        break;
      }
    for (double a : b.curtailment_cost)
      if (!(a > 0.0)) {
        add(bus_name(k), "curtailment_cost entries must be > 0");
        break;
      }
    if (!(b.max_generation >= 0.0)) add(bus_name(k), "max_generation must be >= 0");
    if (!(b.max_storage >= 0.0)) add(bus_name(k), "max_storage must be >= 0");
    if (!(b.storage_unit_cost >= 0.0)) add(bus_name(k), "storage_unit_cost must be >= 0");
  }

  double max_ratio = 0.0;
  for (const auto& row : inst.rights_of_way) {
    if (row.susceptance > 0.0) max_ratio = std::max(max_ratio, row.flow_limit / row.susceptance);
  }

  for (int r = 0; r < inst.num_rows(); ++r) {
    const RightOfWay& row = inst.rights_of_way[r];
    if (row.from_bus == row.to_bus) add(row_name(inst, r), "self-loop: from_bus equals to_bus");
    if (row.from_bus < 0 || row.from_bus >= K || row.to_bus < 0 || row.to_bus >= K)
      add(row_name(inst, r), "bus index out of range");
    if (row.existing_circuits < 0) add(row_name(inst, r), "existing_circuits must be >= 0");
    if (row.max_new_circuits < 0) add(row_name(inst, r), "max_new_circuits must be >= 0");
    if (!(row.flow_limit > 0.0)) add(row_name(inst, r), "flow_limit must be > 0");
    if (!(row.susceptance > 0.0)) add(row_name(inst, r), "susceptance must be > 0");
    if (row.big_m > 0.0 && row.susceptance > 0.0) {
      const double needed = row.susceptance * static_cast<double>(K) * max_ratio;
      if (row.big_m + 1e-9 < needed)
        add(row_name(inst, r), "big_m below the derived angle-spread bound");
    }
  }

  // Buses that generate or consume must sit in one component of the graph
  // formed by existing plus candidate rights of way.
  if (K > 0) {
    Dsu dsu(K);
    for (const auto& row : inst.rights_of_way) {
      if (row.from_bus < 0 || row.from_bus >= K || row.to_bus < 0 || row.to_bus >= K) continue;
      if (row.existing_circuits > 0 || row.max_new_circuits > 0) dsu.unite(row.from_bus, row.to_bus);
    }
    int root = -1;
    for (int k = 0; k < K; ++k) {
      const Bus& b = inst.buses[k];
      const bool active = b.max_generation > 0.0 ||
                          std::any_of(b.demand.begin(), b.demand.end(), [](double d) { return d > 0.0; });
      if (!active) continue;
      if (root < 0) root = dsu.find(k);
      else if (dsu.find(k) != root) {
        add(bus_name(k), "disconnected from the other active buses");
      }
    }
  }

  return report;
}

double master_cost(const Instance& inst, const PlanVector& y) {
  if (y.counts.size() != inst.rights_of_way.size())
    throw std::invalid_argument("master_cost: plan does not match instance dimensions");
  double cost = 0.0;
  for (std::size_t r = 0; r < y.counts.size(); ++r) {
    const auto& row = inst.rights_of_way[r];
    if (y.counts[r] < 0 || y.counts[r] > row.max_new_circuits)
      throw std::invalid_argument("master_cost: circuit count out of range on right_of_way " +
                                  std::to_string(r));
    cost += row.circuit_cost * y.counts[r];
  }
  return cost;
}

PlanVector normalize_plan(const Instance& inst, const std::vector<std::uint8_t>& raw) {
  if (static_cast<int>(raw.size()) != inst.total_slots)
    throw std::invalid_argument("normalize_plan: raw vector does not match instance slot count");
  PlanVector y;
  y.counts.resize(inst.rights_of_way.size(), 0);
  for (std::size_t r = 0; r < y.counts.size(); ++r) {
    int ones = 0;
    for (int p = inst.slot_offset[r]; p < inst.slot_offset[r + 1]; ++p) ones += raw[p] ? 1 : 0;
    y.counts[r] = ones;
  }
  return y;
}

int plan_distance(const PlanVector& a, const PlanVector& b) {
  int d = 0;
  for (std::size_t r = 0; r < a.counts.size(); ++r) d += std::abs(a.counts[r] - b.counts[r]);
  return d;
}

}  // namespace tesp
