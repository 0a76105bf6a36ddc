#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "tesp/lp.hpp"
#include "tesp/model.hpp"

namespace tesp {

// Canonical index layout of the operational LP for one instance. Variables
// and rows are grouped by family, each family laid out time-major, in the
// order listed here. Dual values are addressed through these indices, which
// is what keeps the cut assembly auditable.
//
// Variables: g, r, f0 (existing corridor flows), fp (candidate circuit
// flows, one per slot), beta, l, theta, x.
// Rows: nodal balance (=), voltage law existing (=), voltage law candidate
// upper/lower (<=), thermal existing upper/lower (<=), thermal candidate
// upper/lower (<=), storage balance (=, interval 0 is the cyclic wrap),
// level cap l - x <= 0.
struct SubproblemLayout {
  int T = 0, K = 0, E0 = 0, S = 0;
  std::vector<int> existing_rows;  // instance right-of-way index per e

  int v_g = 0, v_r = 0, v_f0 = 0, v_fp = 0, v_beta = 0, v_l = 0, v_theta = 0, v_x = 0;
  int num_vars = 0;
  int r_kcl = 0, r_kvl0 = 0, r_kvlp_up = 0, r_kvlp_lo = 0, r_th0_up = 0, r_th0_lo = 0,
      r_thp_up = 0, r_thp_lo = 0, r_storage = 0, r_cap = 0;
  int num_rows = 0;

  int g(int t, int k) const { return v_g + t * K + k; }
  int r(int t, int k) const { return v_r + t * K + k; }
  int f0(int t, int e) const { return v_f0 + t * E0 + e; }
  int fp(int t, int s) const { return v_fp + t * S + s; }
  int beta(int t, int k) const { return v_beta + t * K + k; }
  int l(int t, int k) const { return v_l + t * K + k; }
  int theta(int t, int k) const { return v_theta + t * K + k; }
  int x(int k) const { return v_x + k; }

  int kcl(int t, int k) const { return r_kcl + t * K + k; }
  int kvl0(int t, int e) const { return r_kvl0 + t * E0 + e; }
  int kvlp_up(int t, int s) const { return r_kvlp_up + t * S + s; }
  int kvlp_lo(int t, int s) const { return r_kvlp_lo + t * S + s; }
  int th0_up(int t, int e) const { return r_th0_up + t * E0 + e; }
  int th0_lo(int t, int e) const { return r_th0_lo + t * E0 + e; }
  int thp_up(int t, int s) const { return r_thp_up + t * S + s; }
  int thp_lo(int t, int s) const { return r_thp_lo + t * S + s; }
  int storage(int t, int k) const { return r_storage + t * K + k; }
  int cap(int t, int k) const { return r_cap + t * K + k; }
};

// Operational optimum for a fixed plan; mirrors the LP layout families.
struct OperationalSolution {
  std::vector<double> generation, curtailment, storage_flow, storage_level, phase_angle;
  std::vector<double> flow_existing, flow_candidate;
  std::vector<double> storage_capacity;
  double cost = 0.0;  // the subproblem objective v
};

// Optimality cut v >= rhs - coeffs . y, valid for every plan and tight at
// generated_at.
struct BendersCut {
  std::vector<double> coeffs;  // dense over plan slots
  double rhs = 0.0;
  std::string source;
  PlanVector generated_at;

  double value_at(const Instance& inst, const PlanVector& y) const {
    double acc = rhs;
    for (std::size_t r = 0; r < y.counts.size(); ++r) {
      const int off = inst.slot_offset[r];
      for (int p = 0; p < y.counts[r]; ++p) acc -= coeffs[off + p];
    }
    return acc;
  }
};

using CutSnapshot = std::vector<std::shared_ptr<const BendersCut>>;

// Append-only shared cut collection. Snapshots are cheap pointer copies and
// stay valid while workers append.
class CutPool {
 public:
  std::size_t append(BendersCut cut) {
    auto ptr = std::make_shared<const BendersCut>(std::move(cut));
    std::lock_guard lock(mu_);
    cuts_.push_back(std::move(ptr));
    return cuts_.size();
  }
  std::size_t append_all(const CutSnapshot& cuts) {
    std::lock_guard lock(mu_);
    for (const auto& c : cuts) cuts_.push_back(c);
    return cuts_.size();
  }
  std::size_t size() const {
    std::lock_guard lock(mu_);
    return cuts_.size();
  }
  CutSnapshot snapshot() const {
    std::lock_guard lock(mu_);
    return cuts_;
  }

 private:
  mutable std::mutex mu_;
  CutSnapshot cuts_;
};

// Builds the operational LP for each plan and assembles the optimality cut
// from its duals. Only right-hand sides depend on the plan, so one evaluator
// keeps a template LP plus the previous optimal basis for warm starts.
// Reentrant across instances of this class, not within one.
class SubproblemEvaluator {
 public:
  explicit SubproblemEvaluator(const Instance& inst);

  struct Result {
    OperationalSolution op;
    BendersCut cut;
  };

  Result evaluate(const PlanVector& y, std::string source);
  double true_fitness(const PlanVector& y);  // master_cost + subproblem optimum

  const SubproblemLayout& layout() const { return layout_; }
  long lp_solves() const { return lp_solves_; }

 private:
  const Instance& inst_;
  SubproblemLayout layout_;
  LinearProgram lp_;
  Basis warm_;
  long lp_solves_ = 0;

  void apply_plan(const PlanVector& y);
};

// One-shot forms of the evaluator surface.
LinearProgram build_subproblem(const Instance& inst, const PlanVector& y);
std::pair<OperationalSolution, BendersCut> evaluate_plan(const Instance& inst, const PlanVector& y);
double true_fitness(const Instance& inst, const PlanVector& y);

// Largest violation of the operational constraints and of the stated cost,
// measured directly against the instance data. Used as an independent check
// on every evaluation.
double check_operational(const Instance& inst, const PlanVector& y, const OperationalSolution& op);

}  // namespace tesp
