#include "tesp/subproblem.hpp"

#include <cmath>
#include <stdexcept>

namespace tesp {

namespace {

constexpr double kObjTol = 1e-6;   // relative objective tolerance
constexpr double kFeasTol = 1e-6;  // absolute MW/MWh tolerance

SubproblemLayout make_layout(const Instance& inst) {
  SubproblemLayout L;
  L.T = inst.num_intervals;
  L.K = inst.num_buses();
  for (int r = 0; r < inst.num_rows(); ++r) {
    if (inst.rights_of_way[r].existing_circuits > 0) L.existing_rows.push_back(r);
  }
  L.E0 = static_cast<int>(L.existing_rows.size());
  L.S = inst.total_slots;

  int v = 0;
  L.v_g = v; v += L.T * L.K;
  L.v_r = v; v += L.T * L.K;
  L.v_f0 = v; v += L.T * L.E0;
  L.v_fp = v; v += L.T * L.S;
  L.v_beta = v; v += L.T * L.K;
  L.v_l = v; v += L.T * L.K;
  L.v_theta = v; v += L.T * L.K;
  L.v_x = v; v += L.K;
  L.num_vars = v;

  int r = 0;
  L.r_kcl = r; r += L.T * L.K;
  L.r_kvl0 = r; r += L.T * L.E0;
  L.r_kvlp_up = r; r += L.T * L.S;
  L.r_kvlp_lo = r; r += L.T * L.S;
  L.r_th0_up = r; r += L.T * L.E0;
  L.r_th0_lo = r; r += L.T * L.E0;
  L.r_thp_up = r; r += L.T * L.S;
  L.r_thp_lo = r; r += L.T * L.S;
  L.r_storage = r; r += L.T * L.K;
  L.r_cap = r; r += L.T * L.K;
  L.num_rows = r;
  return L;
}

// Instance right-of-way index owning a given plan slot.
int slot_row(const Instance& inst, int s) {
  const auto it = std::upper_bound(inst.slot_offset.begin(), inst.slot_offset.end(), s);
  return static_cast<int>(it - inst.slot_offset.begin()) - 1;
}

LinearProgram build_template(const Instance& inst, const SubproblemLayout& L) {
  LinearProgram lp;
  lp.num_vars = L.num_vars;
  lp.objective.assign(L.num_vars, 0.0);
  lp.lower.assign(L.num_vars, 0.0);
  lp.upper.assign(L.num_vars, 0.0);
  lp.rows.resize(L.num_rows);

  const int T = L.T, K = L.K;
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) {
      const Bus& bus = inst.buses[k];
      lp.lower[L.g(t, k)] = 0.0;
      lp.upper[L.g(t, k)] = bus.max_generation;
      lp.lower[L.r(t, k)] = 0.0;
      lp.upper[L.r(t, k)] = bus.demand[t];
      lp.objective[L.r(t, k)] = bus.curtailment_cost[t];
      lp.lower[L.beta(t, k)] = -kInf;
      lp.upper[L.beta(t, k)] = kInf;
      lp.lower[L.l(t, k)] = 0.0;
      lp.upper[L.l(t, k)] = kInf;
      // Reference angle fixed at bus 0 removes the per-interval null space.
      lp.lower[L.theta(t, k)] = k == 0 ? 0.0 : -kInf;
      lp.upper[L.theta(t, k)] = k == 0 ? 0.0 : kInf;
    }
    for (int e = 0; e < L.E0; ++e) {
      lp.lower[L.f0(t, e)] = -kInf;
      lp.upper[L.f0(t, e)] = kInf;
    }
    for (int s = 0; s < L.S; ++s) {
      lp.lower[L.fp(t, s)] = -kInf;
      lp.upper[L.fp(t, s)] = kInf;
    }
  }
  for (int k = 0; k < K; ++k) {
    lp.lower[L.x(k)] = 0.0;
    lp.upper[L.x(k)] = inst.buses[k].max_storage;
    lp.objective[L.x(k)] = inst.buses[k].storage_unit_cost;
  }

  // Nodal balance: inflow - outflow + g + r - beta = d.
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) {
      auto& row = lp.rows[L.kcl(t, k)];
      row.sense = RowSense::kEq;
      row.rhs = inst.buses[k].demand[t];
      row.coeffs = {{L.g(t, k), 1.0}, {L.r(t, k), 1.0}, {L.beta(t, k), -1.0}};
      for (int e = 0; e < L.E0; ++e) {
        const auto& rw = inst.rights_of_way[L.existing_rows[e]];
        if (rw.to_bus == k) row.coeffs.push_back({L.f0(t, e), 1.0});
        else if (rw.from_bus == k) row.coeffs.push_back({L.f0(t, e), -1.0});
      }
      for (int s = 0; s < L.S; ++s) {
        const auto& rw = inst.rights_of_way[slot_row(inst, s)];
        if (rw.to_bus == k) row.coeffs.push_back({L.fp(t, s), 1.0});
        else if (rw.from_bus == k) row.coeffs.push_back({L.fp(t, s), -1.0});
      }
    }

    // Voltage law on existing corridors: f0 = gamma n0 (theta_i - theta_j).
    for (int e = 0; e < L.E0; ++e) {
      const auto& rw = inst.rights_of_way[L.existing_rows[e]];
      const double gn = rw.susceptance * rw.existing_circuits;
      auto& row = lp.rows[L.kvl0(t, e)];
      row.sense = RowSense::kEq;
      row.rhs = 0.0;
      row.coeffs = {{L.f0(t, e), 1.0}, {L.theta(t, rw.from_bus), -gn}, {L.theta(t, rw.to_bus), gn}};
    }

    // Voltage law on candidate circuits, |fp - gamma dtheta| <= M (1 - y),
    // expanded into the two <= rows.
    for (int s = 0; s < L.S; ++s) {
      const auto& rw = inst.rights_of_way[slot_row(inst, s)];
      auto& up = lp.rows[L.kvlp_up(t, s)];
      up.sense = RowSense::kLe;
      up.rhs = rw.big_m;
      up.coeffs = {{L.fp(t, s), 1.0}, {L.theta(t, rw.from_bus), -rw.susceptance},
                   {L.theta(t, rw.to_bus), rw.susceptance}};
      auto& lo = lp.rows[L.kvlp_lo(t, s)];
      lo.sense = RowSense::kLe;
      lo.rhs = rw.big_m;
      lo.coeffs = {{L.fp(t, s), -1.0}, {L.theta(t, rw.from_bus), rw.susceptance},
                   {L.theta(t, rw.to_bus), -rw.susceptance}};
    }

    // Thermal limits, |f| <= cap, as two rows each.
    for (int e = 0; e < L.E0; ++e) {
      const auto& rw = inst.rights_of_way[L.existing_rows[e]];
      const double cap = rw.existing_circuits * rw.flow_limit;
      auto& up = lp.rows[L.th0_up(t, e)];
      up.sense = RowSense::kLe;
      up.rhs = cap;
      up.coeffs = {{L.f0(t, e), 1.0}};
      auto& lo = lp.rows[L.th0_lo(t, e)];
      lo.sense = RowSense::kLe;
      lo.rhs = cap;
      lo.coeffs = {{L.f0(t, e), -1.0}};
    }
    for (int s = 0; s < L.S; ++s) {
      auto& up = lp.rows[L.thp_up(t, s)];
      up.sense = RowSense::kLe;
      up.rhs = 0.0;
      up.coeffs = {{L.fp(t, s), 1.0}};
      auto& lo = lp.rows[L.thp_lo(t, s)];
      lo.sense = RowSense::kLe;
      lo.rhs = 0.0;
      lo.coeffs = {{L.fp(t, s), -1.0}};
    }

    // Cyclic storage balance: interval 0 wraps to T-1.
    for (int k = 0; k < K; ++k) {
      auto& row = lp.rows[L.storage(t, k)];
      row.sense = RowSense::kEq;
      row.rhs = 0.0;
      if (t == 0) {
        if (T == 1) row.coeffs = {{L.beta(0, k), -1.0}};  // l cancels: beta must vanish
        else row.coeffs = {{L.l(0, k), 1.0}, {L.l(T - 1, k), -1.0}, {L.beta(0, k), -1.0}};
      } else {
        row.coeffs = {{L.l(t, k), 1.0}, {L.l(t - 1, k), -1.0}, {L.beta(t, k), -1.0}};
      }
      auto& capr = lp.rows[L.cap(t, k)];
      capr.sense = RowSense::kLe;
      capr.rhs = 0.0;
      capr.coeffs = {{L.l(t, k), 1.0}, {L.x(k), -1.0}};
    }
  }
  return lp;
}

}  // namespace

SubproblemEvaluator::SubproblemEvaluator(const Instance& inst)
    : inst_(inst), layout_(make_layout(inst)), lp_(build_template(inst, layout_)) {
  if (!inst.prepared()) throw std::invalid_argument("subproblem: instance not prepared");
  lp_.check_structure();
}

void SubproblemEvaluator::apply_plan(const PlanVector& y) {
  if (y.counts.size() != inst_.rights_of_way.size())
    throw std::invalid_argument("subproblem: plan does not match instance dimensions");
  const auto& L = layout_;
  for (int s = 0; s < L.S; ++s) {
    const int row = slot_row(inst_, s);
    const auto& rw = inst_.rights_of_way[row];
    const bool on = s - inst_.slot_offset[row] < y.counts[row];
    const double kvl_rhs = rw.big_m * (on ? 0.0 : 1.0);
    const double th_rhs = on ? rw.flow_limit : 0.0;
    for (int t = 0; t < L.T; ++t) {
      lp_.rows[L.kvlp_up(t, s)].rhs = kvl_rhs;
      lp_.rows[L.kvlp_lo(t, s)].rhs = kvl_rhs;
      lp_.rows[L.thp_up(t, s)].rhs = th_rhs;
      lp_.rows[L.thp_lo(t, s)].rhs = th_rhs;
    }
  }
}

SubproblemEvaluator::Result SubproblemEvaluator::evaluate(const PlanVector& y, std::string source) {
  apply_plan(y);
  ++lp_solves_;
  LpSolution sol = warm_.empty() ? solve_lp(lp_) : solve_lp(lp_, warm_);
  if (sol.status == LpStatus::kInfeasible)
    throw std::logic_error("subproblem: operational LP reported infeasible; "
                           "curtailment makes it feasible for every plan");
  if (sol.status != LpStatus::kOptimal)
    throw LpError(std::string("subproblem: LP finished ") + to_string(sol.status));
  warm_ = sol.basis;

  const auto& L = layout_;
  Result res;
  OperationalSolution& op = res.op;
  const auto grab = [&](int offset, int count) {
    return std::vector<double>(sol.primal.begin() + offset, sol.primal.begin() + offset + count);
  };
  op.generation = grab(L.v_g, L.T * L.K);
  op.curtailment = grab(L.v_r, L.T * L.K);
  op.flow_existing = grab(L.v_f0, L.T * L.E0);
  op.flow_candidate = grab(L.v_fp, L.T * L.S);
  op.storage_flow = grab(L.v_beta, L.T * L.K);
  op.storage_level = grab(L.v_l, L.T * L.K);
  op.phase_angle = grab(L.v_theta, L.T * L.K);
  op.storage_capacity = grab(L.v_x, L.K);
  op.cost = sol.objective;

  const double viol = check_operational(inst_, y, op);
  if (viol > kFeasTol)
    throw LpError("subproblem: operational solution violates the model by " + std::to_string(viol));

  // Cut assembly straight from the duals. Only the candidate voltage-law and
  // thermal rows carry plan-dependent right-hand sides; everything else lands
  // in the constant term. Bound duals are attributed by basis status so the
  // identity rhs - coeffs.y = v holds exactly at the generating plan.
  BendersCut& cut = res.cut;
  cut.coeffs.assign(L.S, 0.0);
  cut.source = std::move(source);
  cut.generated_at = y;

  double rhs = 0.0;
  for (int t = 0; t < L.T; ++t) {
    for (int k = 0; k < L.K; ++k) {
      rhs += inst_.buses[k].demand[t] * sol.row_dual[L.kcl(t, k)];
      const int rj = L.r(t, k);
      if (sol.basis.status[rj] == VarStatus::kAtUpper)
        rhs += inst_.buses[k].demand[t] * sol.reduced_cost[rj];
      const int gj = L.g(t, k);
      if (sol.basis.status[gj] == VarStatus::kAtUpper)
        rhs += inst_.buses[k].max_generation * sol.reduced_cost[gj];
    }
    for (int e = 0; e < L.E0; ++e) {
      const auto& rw = inst_.rights_of_way[L.existing_rows[e]];
      rhs += rw.existing_circuits * rw.flow_limit *
             (sol.row_dual[L.th0_up(t, e)] + sol.row_dual[L.th0_lo(t, e)]);
    }
    for (int s = 0; s < L.S; ++s) {
      const auto& rw = inst_.rights_of_way[slot_row(inst_, s)];
      const double pi_kvl = sol.row_dual[L.kvlp_up(t, s)] + sol.row_dual[L.kvlp_lo(t, s)];
      const double pi_th = sol.row_dual[L.thp_up(t, s)] + sol.row_dual[L.thp_lo(t, s)];
      rhs += rw.big_m * pi_kvl;
      cut.coeffs[s] += rw.big_m * pi_kvl - rw.flow_limit * pi_th;
    }
  }
  for (int k = 0; k < L.K; ++k) {
    const int xj = L.x(k);
    if (sol.basis.status[xj] == VarStatus::kAtUpper)
      rhs += inst_.buses[k].max_storage * sol.reduced_cost[xj];
  }
  cut.rhs = rhs;

  const double tight = cut.value_at(inst_, y);
  if (std::fabs(tight - op.cost) > kObjTol * (1.0 + std::fabs(op.cost)))
    throw std::logic_error("subproblem: cut is not tight at its generating plan");
  return res;
}

double SubproblemEvaluator::true_fitness(const PlanVector& y) {
  return master_cost(inst_, y) + evaluate(y, "adhoc").op.cost;
}

LinearProgram build_subproblem(const Instance& inst, const PlanVector& y) {
  if (y.counts.size() != inst.rights_of_way.size())
    throw std::invalid_argument("subproblem: plan does not match instance dimensions");
  const SubproblemLayout L = make_layout(inst);
  LinearProgram lp = build_template(inst, L);
  for (int s = 0; s < L.S; ++s) {
    const int row = slot_row(inst, s);
    const auto& rw = inst.rights_of_way[row];
    const bool on = s - inst.slot_offset[row] < y.counts[row];
    for (int t = 0; t < L.T; ++t) {
      lp.rows[L.kvlp_up(t, s)].rhs = rw.big_m * (on ? 0.0 : 1.0);
      lp.rows[L.kvlp_lo(t, s)].rhs = rw.big_m * (on ? 0.0 : 1.0);
      lp.rows[L.thp_up(t, s)].rhs = on ? rw.flow_limit : 0.0;
      lp.rows[L.thp_lo(t, s)].rhs = on ? rw.flow_limit : 0.0;
    }
  }
  return lp;
}

std::pair<OperationalSolution, BendersCut> evaluate_plan(const Instance& inst, const PlanVector& y) {
  SubproblemEvaluator ev(inst);
  auto res = ev.evaluate(y, "adhoc");
  return {std::move(res.op), std::move(res.cut)};
}

double true_fitness(const Instance& inst, const PlanVector& y) {
  SubproblemEvaluator ev(inst);
  return ev.true_fitness(y);
}

double check_operational(const Instance& inst, const PlanVector& y, const OperationalSolution& op) {
  const int T = inst.num_intervals;
  const int K = inst.num_buses();
  double worst = 0.0;
  const auto bump = [&](double v) { worst = std::max(worst, v); };

  std::vector<int> existing;
  for (int r = 0; r < inst.num_rows(); ++r)
    if (inst.rights_of_way[r].existing_circuits > 0) existing.push_back(r);
  const int E0 = static_cast<int>(existing.size());
  const int S = inst.total_slots;

  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) {
      const Bus& bus = inst.buses[k];
      const int tk = t * K + k;
      double balance = op.generation[tk] + op.curtailment[tk] - op.storage_flow[tk];
      for (int e = 0; e < E0; ++e) {
        const auto& rw = inst.rights_of_way[existing[e]];
        if (rw.to_bus == k) balance += op.flow_existing[t * E0 + e];
        else if (rw.from_bus == k) balance -= op.flow_existing[t * E0 + e];
      }
      for (int s = 0; s < S; ++s) {
        const auto& rw = inst.rights_of_way[slot_row(inst, s)];
        if (rw.to_bus == k) balance += op.flow_candidate[t * S + s];
        else if (rw.from_bus == k) balance -= op.flow_candidate[t * S + s];
      }
      bump(std::fabs(balance - bus.demand[t]));

      bump(std::max(0.0, -op.generation[tk]));
      bump(std::max(0.0, op.generation[tk] - bus.max_generation));
      bump(std::max(0.0, -op.curtailment[tk]));
      bump(std::max(0.0, op.curtailment[tk] - bus.demand[t]));
      bump(std::max(0.0, -op.storage_level[tk]));
      bump(std::max(0.0, op.storage_level[tk] - op.storage_capacity[k]));

      const int prev = t == 0 ? T - 1 : t - 1;
      bump(std::fabs(op.storage_level[tk] - op.storage_level[prev * K + k] -
                     op.storage_flow[tk]));
    }
    for (int e = 0; e < E0; ++e) {
      const auto& rw = inst.rights_of_way[existing[e]];
      const double f = op.flow_existing[t * E0 + e];
      const double dtheta = op.phase_angle[t * K + rw.from_bus] - op.phase_angle[t * K + rw.to_bus];
      bump(std::fabs(f - rw.susceptance * rw.existing_circuits * dtheta));
      bump(std::max(0.0, std::fabs(f) - rw.existing_circuits * rw.flow_limit));
    }
    for (int s = 0; s < S; ++s) {
      const int row = slot_row(inst, s);
      const auto& rw = inst.rights_of_way[row];
      const bool on = s - inst.slot_offset[row] < y.counts[row];
      const double f = op.flow_candidate[t * S + s];
      const double dtheta = op.phase_angle[t * K + rw.from_bus] - op.phase_angle[t * K + rw.to_bus];
      bump(std::max(0.0, std::fabs(f - rw.susceptance * dtheta) - rw.big_m * (on ? 0.0 : 1.0)));
      bump(std::max(0.0, std::fabs(f) - (on ? rw.flow_limit : 0.0)));
    }
  }
  for (int k = 0; k < K; ++k) {
    bump(std::max(0.0, -op.storage_capacity[k]));
    bump(std::max(0.0, op.storage_capacity[k] - inst.buses[k].max_storage));
  }

  double cost = 0.0;
  for (int k = 0; k < K; ++k) cost += inst.buses[k].storage_unit_cost * op.storage_capacity[k];
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < K; ++k) cost += inst.buses[k].curtailment_cost[t] * op.curtailment[t * K + k];
  bump(std::fabs(cost - op.cost) / (1.0 + std::fabs(op.cost)));
  return worst;
}

}  // namespace tesp
