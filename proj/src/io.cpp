#include "tesp/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

#include "tesp/rng.hpp"
#include "tesp/subproblem.hpp"

namespace tesp {

namespace {

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::array<double, 48> ramp_profile(std::initializer_list<std::pair<int, double>> anchors) {
  // piecewise-constant fill between anchor indices
  std::array<double, 48> out{};
  auto it = anchors.begin();
  double cur = it->second;
  for (int i = 0; i < 48; ++i) {
    if (it != anchors.end() && i >= it->first) {
      cur = it->second;
      ++it;
    }
    out[i] = cur;
  }
  return out;
}

}  // namespace

const std::vector<DemandProfile>& demand_profiles() {
  static const std::vector<DemandProfile> profiles = [] {
    std::vector<DemandProfile> p;
    std::array<double, 48> flat{};
    flat.fill(1.0);
    p.push_back({"flat", flat});

    // Broad daytime plateau.
    p.push_back({"long_peak",
                 ramp_profile({{0, 0.35}, {12, 0.45}, {13, 0.55}, {14, 0.65}, {15, 0.75},
                               {16, 0.85}, {17, 0.95}, {18, 1.0}, {36, 0.92}, {37, 0.84},
                               {38, 0.76}, {39, 0.68}, {40, 0.6}, {41, 0.55}, {42, 0.5},
                               {43, 0.47}, {44, 0.44}, {45, 0.42}, {46, 0.41}, {47, 0.4}})});

    // Narrow evening peak.
    p.push_back({"short_peak",
                 ramp_profile({{0, 0.3}, {34, 0.5}, {35, 0.75}, {36, 1.0}, {40, 0.8},
                               {41, 0.6}, {42, 0.45}, {43, 0.35}, {44, 0.3}})});

    // Morning and evening peaks with a midday dip; stand-in residential shapes.
    p.push_back({"sgsc_summer",
                 ramp_profile({{0, 0.45}, {12, 0.55}, {13, 0.65}, {14, 0.7}, {16, 0.65},
                               {17, 0.6}, {18, 0.55}, {30, 0.6}, {31, 0.65}, {32, 0.75},
                               {33, 0.85}, {34, 0.95}, {35, 1.0}, {38, 0.95}, {39, 0.9},
                               {40, 0.8}, {41, 0.7}, {42, 0.6}, {43, 0.55}, {44, 0.5},
                               {45, 0.48}, {46, 0.46}, {47, 0.45}})});
    p.push_back({"sgsc_winter",
                 ramp_profile({{0, 0.4}, {11, 0.5}, {12, 0.65}, {13, 0.8}, {14, 0.85},
                               {15, 0.8}, {16, 0.7}, {17, 0.55}, {30, 0.6}, {31, 0.7},
                               {32, 0.8}, {33, 0.9}, {34, 1.0}, {37, 0.95}, {38, 0.9},
                               {39, 0.8}, {40, 0.7}, {41, 0.6}, {42, 0.55}, {43, 0.5},
                               {44, 0.45}, {45, 0.42}, {46, 0.41}, {47, 0.4}})});
    return p;
  }();
  return profiles;
}

const DemandProfile* find_profile(const std::string& name) {
  for (const auto& p : demand_profiles())
    if (p.name == name) return &p;
  return nullptr;
}

std::vector<double> apply_profile(const DemandProfile& profile, double peak, int T) {
  std::vector<double> out(T);
  for (int t = 0; t < T; ++t) out[t] = peak * profile.samples[(t * 48) / T];
  return out;
}

Instance InstanceDoc::to_instance() const {
  Instance inst;
  inst.name = name;
  inst.num_intervals = intervals;
  for (const auto& b : buses) {
    Bus bus;
    bus.id = b.id;
    if (b.demand_is_profile) {
      const DemandProfile* p = find_profile(b.profile);
      if (!p) throw ParseError("bus " + std::to_string(b.id) + ": unknown profile " + b.profile);
      bus.demand = apply_profile(*p, b.peak, intervals);
    } else {
      bus.demand = b.demand;
    }
    if (b.curtailment_cost.size() == 1)
      bus.curtailment_cost.assign(intervals, b.curtailment_cost[0]);
    else
      bus.curtailment_cost = b.curtailment_cost;
    bus.max_generation = b.max_generation;
    bus.storage_unit_cost = b.storage_unit_cost;
    bus.max_storage = b.max_storage;
    inst.buses.push_back(std::move(bus));
  }
  for (const auto& r : rows) {
    inst.rights_of_way.push_back(
        RightOfWay{r.from, r.to, r.existing, r.max_new, r.cost, r.susceptance, r.flow_limit, 0.0});
  }
  inst.prepare();
  return inst;
}

InstanceDoc InstanceDoc::from_instance(const Instance& inst) {
  InstanceDoc doc;
  doc.name = inst.name;
  doc.intervals = inst.num_intervals;
  for (const auto& b : inst.buses) {
    BusDoc bd;
    bd.id = b.id;
    bd.demand = b.demand;
    bd.max_generation = b.max_generation;
    const bool uniform = std::all_of(b.curtailment_cost.begin(), b.curtailment_cost.end(),
                                     [&](double v) { return v == b.curtailment_cost.front(); });
    if (uniform && !b.curtailment_cost.empty())
      bd.curtailment_cost = {b.curtailment_cost.front()};
    else
      bd.curtailment_cost = b.curtailment_cost;
    bd.storage_unit_cost = b.storage_unit_cost;
    bd.max_storage = b.max_storage;
    doc.buses.push_back(std::move(bd));
  }
  for (const auto& r : inst.rights_of_way) {
    doc.rows.push_back(RowDoc{r.from_bus, r.to_bus, r.existing_circuits, r.max_new_circuits,
                              r.circuit_cost, r.susceptance, r.flow_limit});
  }
  return doc;
}

namespace {

struct Tokenizer {
  std::vector<std::pair<int, std::vector<std::string>>> lines;  // (line number, tokens)

  explicit Tokenizer(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      std::istringstream ls(line);
      std::vector<std::string> toks;
      std::string t;
      while (ls >> t) toks.push_back(t);
      if (!toks.empty()) lines.push_back({no, std::move(toks)});
    }
  }
};

[[noreturn]] void fail(int line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

double parse_num(int line, const std::string& tok, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) fail(line, what + ": malformed number '" + tok + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(line, what + ": malformed number '" + tok + "'");
  }
}

int parse_int(int line, const std::string& tok, const std::string& what) {
  const double v = parse_num(line, tok, what);
  if (v != std::floor(v)) fail(line, what + ": expected integer, got '" + tok + "'");
  return static_cast<int>(v);
}

bool is_number(const std::string& tok) {
  char* end = nullptr;
  std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size() && !tok.empty();
}

}  // namespace

InstanceDoc parse_instance_doc(const std::string& text) {
  Tokenizer tz(text);
  if (tz.lines.empty()) throw ParseError("line 1: empty document");
  std::size_t at = 0;
  const auto& [hline, htoks] = tz.lines[at];
  if (htoks.size() != 2 || htoks[0] != "tespinst" || htoks[1] != "1")
    fail(hline, "expected header 'tespinst 1'");
  ++at;

  InstanceDoc doc;
  std::string section;
  bool saw_end = false;
  for (; at < tz.lines.size(); ++at) {
    const int line = tz.lines[at].first;
    const auto& toks = tz.lines[at].second;
    if (toks[0] == "section") {
      if (toks.size() != 2) fail(line, "section line needs a name");
      section = toks[1];
      if (section != "meta" && section != "buses" && section != "rights_of_way")
        fail(line, "unknown section '" + section + "'");
      continue;
    }
    if (toks[0] == "end") {
      saw_end = true;
      if (at + 1 != tz.lines.size()) fail(tz.lines[at + 1].first, "content after 'end'");
      break;
    }
    if (section == "meta") {
      if (toks[0] == "name" && toks.size() == 2) doc.name = toks[1];
      else if (toks[0] == "intervals" && toks.size() == 2)
        doc.intervals = parse_int(line, toks[1], "intervals");
      else
        fail(line, "meta entries are 'name <id>' or 'intervals <T>'");
    } else if (section == "buses") {
      if (toks[0] != "bus" || toks.size() < 2) fail(line, "expected 'bus <id> ...'");
      BusDoc b;
      b.id = parse_int(line, toks[1], "bus id");
      const std::string who = "bus " + toks[1];
      std::size_t i = 2;
      const auto take_numbers = [&](const std::string& field) {
        std::vector<double> vals;
        while (i < toks.size() && is_number(toks[i]))
          vals.push_back(parse_num(line, toks[i++], who + " " + field));
        if (vals.empty()) fail(line, who + ": " + field + " needs at least one value");
        return vals;
      };
      std::set<std::string> seen;
      while (i < toks.size()) {
        const std::string key = toks[i++];
        if (!seen.insert(key).second) fail(line, who + ": duplicate field '" + key + "'");
        if (key == "demand") {
          b.demand = take_numbers("demand");
          b.demand_is_profile = false;
        } else if (key == "profile") {
          if (i + 2 >= toks.size() + 1 || i >= toks.size()) fail(line, who + ": profile needs a name");
          b.profile = toks[i++];
          if (i >= toks.size() || toks[i] != "peak") fail(line, who + ": profile needs 'peak <MW>'");
          ++i;
          if (i >= toks.size()) fail(line, who + ": missing peak value");
          b.peak = parse_num(line, toks[i++], who + " peak");
          b.demand_is_profile = true;
        } else if (key == "gen") {
          if (i >= toks.size()) fail(line, who + ": missing gen value");
          b.max_generation = parse_num(line, toks[i++], who + " gen");
        } else if (key == "curtail") {
          b.curtailment_cost = take_numbers("curtail");
        } else if (key == "storage_cost") {
          if (i >= toks.size()) fail(line, who + ": missing storage_cost value");
          b.storage_unit_cost = parse_num(line, toks[i++], who + " storage_cost");
        } else if (key == "storage_max") {
          if (i >= toks.size()) fail(line, who + ": missing storage_max value");
          b.max_storage = parse_num(line, toks[i++], who + " storage_max");
        } else {
          fail(line, who + ": unknown field '" + key + "'");
        }
      }
      if (!b.demand_is_profile && b.demand.empty()) fail(line, who + ": missing demand");
      if (b.curtailment_cost.empty()) fail(line, who + ": missing curtail");
      doc.buses.push_back(std::move(b));
    } else if (section == "rights_of_way") {
      if (toks[0] != "row" || toks.size() < 3) fail(line, "expected 'row <from> <to> ...'");
      RowDoc r;
      r.from = parse_int(line, toks[1], "row from");
      r.to = parse_int(line, toks[2], "row to");
      const std::string who = "right_of_way " + std::to_string(doc.rows.size()) + " (" + toks[1] +
                              "-" + toks[2] + ")";
      std::set<std::string> seen;
      std::size_t i = 3;
      while (i + 1 < toks.size() + 1 && i < toks.size()) {
        const std::string key = toks[i++];
        if (i >= toks.size()) fail(line, who + ": missing value for '" + key + "'");
        if (!seen.insert(key).second) fail(line, who + ": duplicate field '" + key + "'");
        const std::string val = toks[i++];
        if (key == "existing") r.existing = parse_int(line, val, who + " existing");
        else if (key == "max_new") r.max_new = parse_int(line, val, who + " max_new");
        else if (key == "cost") r.cost = parse_num(line, val, who + " cost");
        else if (key == "susceptance") r.susceptance = parse_num(line, val, who + " susceptance");
        else if (key == "flow_limit") r.flow_limit = parse_num(line, val, who + " flow_limit");
        else fail(line, who + ": unknown field '" + key + "'");
      }
      for (const char* req : {"existing", "max_new", "cost", "susceptance", "flow_limit"})
        if (!seen.count(req)) fail(line, who + ": missing " + std::string(req));
      doc.rows.push_back(r);
    } else {
      fail(line, "content before any section");
    }
  }
  if (!saw_end) throw ParseError("line " + std::to_string(tz.lines.back().first) +
                                 ": missing 'end' terminator");
  if (doc.name.empty()) throw ParseError("line 1: meta section must set a name");
  return doc;
}

std::string serialize(const InstanceDoc& doc) {
  std::string out = "tespinst 1\nsection meta\n";
  out += "name " + doc.name + "\n";
  out += "intervals " + std::to_string(doc.intervals) + "\n";
  out += "section buses\n";
  for (const auto& b : doc.buses) {
    out += "bus " + std::to_string(b.id);
    if (b.demand_is_profile) {
      out += " profile " + b.profile + " peak " + num(b.peak);
    } else {
      out += " demand";
      for (double v : b.demand) out += " " + num(v);
    }
    out += " gen " + num(b.max_generation);
    out += " curtail";
    for (double v : b.curtailment_cost) out += " " + num(v);
    out += " storage_cost " + num(b.storage_unit_cost);
    out += " storage_max " + num(b.max_storage);
    out += "\n";
  }
  out += "section rights_of_way\n";
  for (const auto& r : doc.rows) {
    out += "row " + std::to_string(r.from) + " " + std::to_string(r.to);
    out += " existing " + std::to_string(r.existing);
    out += " max_new " + std::to_string(r.max_new);
    out += " cost " + num(r.cost);
    out += " susceptance " + num(r.susceptance);
    out += " flow_limit " + num(r.flow_limit);
    out += "\n";
  }
  out += "end\n";
  return out;
}

Instance parse_instance(const std::string& text) { return parse_instance_doc(text).to_instance(); }

namespace {

double curtailed_fraction(SubproblemEvaluator& ev, const Instance& inst, const PlanVector& y) {
  const auto res = ev.evaluate(y, "calibration");
  double curtailed = 0.0;
  for (double r : res.op.curtailment) curtailed += r;
  const double total = inst.total_demand();
  return total > 0.0 ? curtailed / total : 0.0;
}

}  // namespace

Instance generate_instance(int buses, int spare_rows, int T, std::uint64_t seed, int max_slots) {
  if (buses < 2) throw std::invalid_argument("generate_instance: need at least 2 buses");
  if (T < 1) throw std::invalid_argument("generate_instance: need at least 1 interval");
  Rng rng(mix_seed(seed, 0xa11ce));

  Instance inst;
  inst.name = "gen" + std::to_string(buses) + "x" + std::to_string(T) + "s" + std::to_string(seed);
  inst.num_intervals = T;

  const int gen_buses = buses >= 5 ? 2 : 1;
  const auto& profiles = demand_profiles();
  double total_peak = 0.0;
  for (int k = 0; k < buses; ++k) {
    Bus b;
    b.id = k;
    const bool generates = k == 0 || (gen_buses == 2 && k == buses / 2);
    if (generates) {
      b.demand.assign(T, 0.0);
    } else {
      const double peak = rng.in(25.0, 60.0);
      const auto& prof = profiles[rng.below(profiles.size())];
      b.demand = apply_profile(prof, peak, T);
      total_peak += peak;
      if (rng.unit() < 0.5) b.max_storage = rng.in(0.2, 0.6) * peak * std::max(1, T / 4);
    }
    b.curtailment_cost.assign(T, rng.in(1500.0, 6000.0));
    b.storage_unit_cost = 2000.0;
    inst.buses.push_back(std::move(b));
  }
  const double gen_cap = total_peak * rng.in(1.3, 1.8) / gen_buses;
  inst.buses[0].max_generation = gen_cap;
  if (gen_buses == 2) inst.buses[buses / 2].max_generation = gen_cap;

  // Random spanning tree of existing corridors.
  std::set<std::pair<int, int>> used;
  for (int k = 1; k < buses; ++k) {
    const int j = static_cast<int>(rng.below(k));
    RightOfWay row;
    row.from_bus = std::min(j, k);
    row.to_bus = std::max(j, k);
    row.existing_circuits = 1;
    row.susceptance = rng.in(0.8, 3.0);
    row.flow_limit = rng.in(0.15, 0.3) * total_peak;
    inst.rights_of_way.push_back(row);
    used.insert({row.from_bus, row.to_bus});
  }
  // Spare corridors (candidates only).
  int added = 0, guard = 0;
  while (added < spare_rows && ++guard < 200) {
    const int a = static_cast<int>(rng.below(buses));
    const int b = static_cast<int>(rng.below(buses));
    if (a == b) continue;
    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
    if (used.count(key)) continue;
    used.insert(key);
    RightOfWay row;
    row.from_bus = key.first;
    row.to_bus = key.second;
    row.existing_circuits = 0;
    row.susceptance = rng.in(0.8, 3.0);
    row.flow_limit = rng.in(0.1, 0.25) * total_peak;
    inst.rights_of_way.push_back(row);
    ++added;
  }

  // Distribute the candidate slot budget: every tree edge gets reinforced
  // first (so the all-in plan can always bypass the starved grid), the spare
  // corridors share what is left.
  int budget = max_slots;
  const int tree_edges = buses - 1;
  for (int r = 0; r < tree_edges && budget > 0; ++r) {
    const int n = 1 + static_cast<int>(rng.below(2));
    inst.rights_of_way[r].max_new_circuits = std::min(n, budget);
    budget -= inst.rights_of_way[r].max_new_circuits;
  }
  for (std::size_t r = tree_edges; r < inst.rights_of_way.size() && budget > 0; ++r) {
    const int n = 1 + static_cast<int>(rng.below(3));
    inst.rights_of_way[r].max_new_circuits = std::min(n, budget);
    budget -= inst.rights_of_way[r].max_new_circuits;
  }
  if (inst.total_slots == 0 && !inst.rights_of_way.empty()) {
    inst.rights_of_way[0].max_new_circuits = 1;
  }
  inst.prepare();

  // Capacity calibration: starve the existing grid until the do-nothing plan
  // curtails at least 20% of energy, then feed candidates until the all-in
  // plan serves (essentially) everything. The knobs overlap on reinforced
  // corridors, so alternate until both targets hold.
  const auto reprepare = [&inst] {
    for (auto& row : inst.rights_of_way) row.big_m = 0.0;  // re-derive after rescaling
    inst.prepare();
  };
  for (int outer = 0; outer < 8; ++outer) {
    for (int round = 0; round < 24; ++round) {
      SubproblemEvaluator ev(inst);
      if (curtailed_fraction(ev, inst, PlanVector::zeros(inst)) >= 0.20) break;
      for (auto& row : inst.rights_of_way)
        if (row.existing_circuits > 0) row.flow_limit *= 0.72;
      reprepare();
    }
    for (int round = 0; round < 24; ++round) {
      SubproblemEvaluator ev(inst);
      if (curtailed_fraction(ev, inst, PlanVector::all_in(inst)) <= 0.005) break;
      for (auto& row : inst.rights_of_way)
        if (row.max_new_circuits > 0) row.flow_limit *= 1.5;
      reprepare();
    }
    SubproblemEvaluator ev(inst);
    if (curtailed_fraction(ev, inst, PlanVector::zeros(inst)) >= 0.20 &&
        curtailed_fraction(ev, inst, PlanVector::all_in(inst)) <= 0.005)
      break;
  }

  // Price candidates off the achievable saving so that some, but usually not
  // all, of them pay for themselves.
  SubproblemEvaluator ev(inst);
  const double v0 = ev.evaluate(PlanVector::zeros(inst), "calibration").op.cost;
  const double v1 = ev.evaluate(PlanVector::all_in(inst), "calibration").op.cost;
  const double saving = std::max(1.0, v0 - v1);
  const int slots = std::max(1, inst.total_slots);
  for (auto& row : inst.rights_of_way) {
    if (row.max_new_circuits == 0) continue;
    row.circuit_cost = saving / slots * rng.in(0.35, 1.6);
  }
  inst.prepare();
  return inst;
}

OracleResult brute_force(const Instance& inst) {
  if (inst.total_slots > 12)
    throw std::invalid_argument("brute_force: instance exceeds the 12-slot oracle guard");
  SubproblemEvaluator ev(inst);
  OracleResult best;
  PlanVector y = PlanVector::zeros(inst);
  bool first = true;
  for (;;) {
    const double fitness = master_cost(inst, y) + ev.evaluate(y, "oracle").op.cost;
    best.table.push_back({y, fitness});
    if (first || fitness < best.objective) {
      best.objective = fitness;
      best.plan = y;
      first = false;
    }
    // odometer over per-row counts, lexicographic ascending
    std::size_t r = 0;
    for (; r < y.counts.size(); ++r) {
      if (y.counts[r] < inst.rights_of_way[r].max_new_circuits) {
        ++y.counts[r];
        break;
      }
      y.counts[r] = 0;
    }
    if (r == y.counts.size()) break;
  }
  return best;
}

}  // namespace tesp
