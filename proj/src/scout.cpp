#include "tesp/scout.hpp"

#include <algorithm>
#include <cmath>

#include "tesp/lp.hpp"

namespace tesp {

namespace {

constexpr double kIntTol = 1e-6;
constexpr double kObjTol = 1e-6;

// Master relaxation: slot variables boxed by the count intervals, the
// symmetry rows, v >= 0, and one row per cut.
LinearProgram build_relaxation(const Instance& inst, const CutSnapshot& cuts,
                               const std::vector<int>& lo, const std::vector<int>& hi) {
  LinearProgram lp;
  for (int r = 0; r < inst.num_rows(); ++r) {
    const auto& row = inst.rights_of_way[r];
    for (int p = 0; p < row.max_new_circuits; ++p) {
      const double lb = p < lo[r] ? 1.0 : 0.0;
      const double ub = p < hi[r] ? 1.0 : 0.0;
      lp.add_var(lb, ub, row.circuit_cost);
    }
  }
  const int v = lp.add_var(0.0, kInf, 1.0);
  for (int r = 0; r < inst.num_rows(); ++r) {
    for (int p = 0; p + 1 < inst.rights_of_way[r].max_new_circuits; ++p) {
      const int s = inst.slot_offset[r] + p;
      lp.add_row(RowSense::kGe, 0.0, {{s, 1.0}, {s + 1, -1.0}});
    }
  }
  for (const auto& cut : cuts) {
    std::vector<std::pair<int, double>> coeffs;
    coeffs.reserve(cut->coeffs.size() + 1);
    coeffs.push_back({v, 1.0});
    for (int s = 0; s < inst.total_slots; ++s) {
      if (cut->coeffs[s] != 0.0) coeffs.push_back({s, cut->coeffs[s]});
    }
    lp.add_row(RowSense::kGe, cut->rhs, std::move(coeffs));
  }
  return lp;
}

}  // namespace

Scout::Scout(const Instance& inst, CutPool& pool, Incumbent& incumbent, ScoutOptions options)
    : inst_(inst), pool_(pool), incumbent_(incumbent), opt_(options), evaluator_(inst) {
  Node root;
  root.lo.assign(inst.num_rows(), 0);
  root.hi.resize(inst.num_rows());
  for (int r = 0; r < inst.num_rows(); ++r) root.hi[r] = inst.rights_of_way[r].max_new_circuits;
  root.bound = 0.0;
  root.id = next_id_++;
  open_.insert({root.bound, std::move(root)});
}

void Scout::ingest_snapshot() {
  snapshot_ = pool_.snapshot();
  // Cuts are tight at their generating plan, so every foreign cut hands the
  // scout a known true value for free.
  for (; seen_cuts_ < snapshot_.size(); ++seen_cuts_) {
    const auto& cut = snapshot_[seen_cuts_];
    if (cut->generated_at.counts.empty()) continue;
    true_value_.emplace(cut->generated_at.counts, cut->value_at(inst_, cut->generated_at));
  }
}

double Scout::current_tree_bound() const {
  double lb = std::numeric_limits<double>::infinity();
  if (!open_.empty()) lb = std::min(lb, open_.begin()->first);
  for (const auto& n : plunge_) lb = std::min(lb, n.bound);
  return lb;
}

void Scout::finish_proof() {
  done_ = true;
  if (incumbent_.has_value()) {
    reported_lb_ = std::max(reported_lb_, incumbent_.value());
    incumbent_.report_lower_bound(reported_lb_, "scout");
  }
}

ScoutStatus Scout::status() const {
  ScoutStatus st;
  st.lower_bound = reported_lb_;
  st.incumbent_objective = incumbent_.has_value() ? incumbent_.value()
                                                  : std::numeric_limits<double>::infinity();
  st.nodes = nodes_;
  st.proven_optimal = done_;
  return st;
}

void Scout::branch(const Node& node, const std::vector<double>& yfrac) {
  // Most fractional slot; ties by larger circuit cost, then lower index.
  int best_slot = -1;
  double best_frac = kIntTol;
  double best_cost = -1.0;
  for (int r = 0; r < inst_.num_rows(); ++r) {
    const auto& row = inst_.rights_of_way[r];
    for (int p = 0; p < row.max_new_circuits; ++p) {
      const int s = inst_.slot_offset[r] + p;
      const double frac = std::fabs(yfrac[s] - std::round(yfrac[s]));
      if (frac > best_frac + 1e-12 ||
          (frac > best_frac - 1e-12 && row.circuit_cost > best_cost)) {
        best_frac = frac;
        best_cost = row.circuit_cost;
        best_slot = s;
      }
    }
  }
  if (best_slot < 0) return;  // numerically integral after all; caller handles
  const auto it = std::upper_bound(inst_.slot_offset.begin(), inst_.slot_offset.end(), best_slot);
  const int r = static_cast<int>(it - inst_.slot_offset.begin()) - 1;
  const int pos = best_slot - inst_.slot_offset[r];

  Node off = node;   // count <= pos
  off.hi[r] = pos;
  off.depth = node.depth + 1;
  off.id = next_id_++;
  Node on = node;    // count >= pos + 1
  on.lo[r] = pos + 1;
  on.depth = node.depth + 1;
  on.id = next_id_++;

  // Plunge toward the rounding of the branching variable.
  const bool prefer_on = yfrac[best_slot] >= 0.5;
  Node& preferred = prefer_on ? on : off;
  Node& other = prefer_on ? off : on;
  if (plunge_len_ < opt_.plunge_depth) {
    open_.insert({other.bound, std::move(other)});
    plunge_.push_back(std::move(preferred));
    ++plunge_len_;
  } else {
    open_.insert({other.bound, std::move(other)});
    open_.insert({preferred.bound, std::move(preferred)});
  }
}

bool Scout::process(Node node) {
  ++nodes_;
  for (;;) {
    if (budget_left_ <= 0) {
      // Out of budget mid-node: put the node back so no work is lost.
      open_.insert({node.bound, std::move(node)});
      return false;
    }
    if (deadline_ && std::chrono::steady_clock::now() >= *deadline_) {
      open_.insert({node.bound, std::move(node)});
      return false;
    }
    --budget_left_;
    const double inc = incumbent_.has_value() ? incumbent_.value()
                                              : std::numeric_limits<double>::infinity();

    LinearProgram lp = build_relaxation(inst_, snapshot_, node.lo, node.hi);
    const LpSolution sol = solve_lp(lp);
    if (sol.status == LpStatus::kInfeasible) return true;  // empty box, defensive
    if (sol.status != LpStatus::kOptimal)
      throw LpError(std::string("scout: relaxation finished ") + to_string(sol.status));
    node.bound = std::max(node.bound, sol.objective);

    if (node.bound >= inc - opt_.gap_rel * (1.0 + std::fabs(inc)))
      return true;  // dominated subtree

    bool integral = true;
    for (int s = 0; s < inst_.total_slots; ++s) {
      if (std::fabs(sol.primal[s] - std::round(sol.primal[s])) > kIntTol) {
        integral = false;
        break;
      }
    }
    if (!integral) {
      branch(node, sol.primal);
      return true;
    }

    PlanVector plan = PlanVector::zeros(inst_);
    for (int r = 0; r < inst_.num_rows(); ++r) {
      int count = 0;
      for (int p = 0; p < inst_.rights_of_way[r].max_new_circuits; ++p)
        count += std::round(sol.primal[inst_.slot_offset[r] + p]) != 0.0 ? 1 : 0;
      plan.counts[r] = count;
    }
    const double v_est = sol.primal[inst_.total_slots];

    const auto memo = true_value_.find(plan.counts);
    double v_true;
    if (memo != true_value_.end()) {
      v_true = memo->second;
      if (v_est < v_true - kObjTol * (1.0 + std::fabs(v_true))) {
        // The tight cut exists but predates this node's snapshot.
        ingest_snapshot();
        continue;
      }
    } else {
      if (evals_left_ <= 0) {  // out of evaluation budget for this slice
        open_.insert({node.bound, std::move(node)});
        return false;
      }
      --evals_left_;
      auto res = evaluator_.evaluate(plan, "scout");
      v_true = res.op.cost;
      true_value_.emplace(plan.counts, v_true);
      pool_.append(std::move(res.cut));
      ingest_snapshot();
      if (v_est < v_true - kObjTol * (1.0 + std::fabs(v_true))) continue;  // re-bound
    }

    incumbent_.offer(plan, master_cost(inst_, plan) + v_true, "scout");
    return true;  // integral relaxation optimum settles the whole subtree
  }
}

ScoutStatus Scout::step(long max_nodes,
                        std::optional<std::chrono::steady_clock::time_point> deadline,
                        long max_new_evals) {
  if (done_) return status();
  budget_left_ = max_nodes < 0 ? std::numeric_limits<long>::max() : max_nodes;
  evals_left_ = max_new_evals < 0 ? std::numeric_limits<long>::max() : max_new_evals;
  deadline_ = deadline;
  ingest_snapshot();

  while (budget_left_ > 0) {
    if (deadline_ && std::chrono::steady_clock::now() >= *deadline_) break;

    Node node;
    if (!plunge_.empty()) {
      node = std::move(plunge_.back());
      plunge_.pop_back();
    } else if (!open_.empty()) {
      plunge_len_ = 0;
      node = std::move(open_.begin()->second);
      open_.erase(open_.begin());
      // Stale best-bound entries dominated by the incumbent die here.
      const double inc = incumbent_.has_value() ? incumbent_.value()
                                                : std::numeric_limits<double>::infinity();
      if (node.bound >= inc - opt_.gap_rel * (1.0 + std::fabs(inc))) {
        open_.clear();
        plunge_.clear();
        finish_proof();
        break;
      }
    } else {
      finish_proof();
      break;
    }

    const bool completed = process(std::move(node));

    const double tree_lb = current_tree_bound();
    const double inc = incumbent_.has_value() ? incumbent_.value()
                                              : std::numeric_limits<double>::infinity();
    double lb = std::min(tree_lb, inc);
    if (std::isfinite(lb) && lb > reported_lb_) {
      reported_lb_ = lb;
      incumbent_.report_lower_bound(reported_lb_, "scout");
    }
    if (!completed) break;
    if (open_.empty() && plunge_.empty()) {
      finish_proof();
      break;
    }
  }
  return status();
}

ScoutStatus run_scout(const Instance& inst, CutPool& pool, Incumbent& incumbent, long max_nodes,
                      double time_limit_s, ScoutOptions options) {
  Scout scout(inst, pool, incumbent, options);
  std::optional<std::chrono::steady_clock::time_point> deadline;
  if (time_limit_s >= 0.0)
    deadline = std::chrono::steady_clock::now() +
               std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                   std::chrono::duration<double>(time_limit_s));
  long budget = max_nodes < 0 ? std::numeric_limits<long>::max() : max_nodes;
  while (!scout.done() && budget > 0) {
    const long chunk = std::min<long>(budget, 64);
    scout.step(chunk, deadline);
    budget -= chunk;
    if (deadline && std::chrono::steady_clock::now() >= *deadline) break;
  }
  return scout.status();
}

double relaxation_bound(const Instance& inst, const CutSnapshot& cuts,
                        const std::vector<std::int8_t>& partial) {
  if (static_cast<int>(partial.size()) != inst.total_slots)
    throw std::invalid_argument("relaxation_bound: assignment does not match slot count");
  std::vector<int> lo(inst.num_rows(), 0), hi(inst.num_rows());
  for (int r = 0; r < inst.num_rows(); ++r) {
    const auto& row = inst.rights_of_way[r];
    hi[r] = row.max_new_circuits;
    for (int p = 0; p < row.max_new_circuits; ++p) {
      const std::int8_t a = partial[inst.slot_offset[r] + p];
      if (a == 1) lo[r] = std::max(lo[r], p + 1);
      else if (a == 0) hi[r] = std::min(hi[r], p);
      else if (a != -1)
        throw std::invalid_argument("relaxation_bound: entries must be -1, 0 or 1");
    }
    if (lo[r] > hi[r])
      throw std::invalid_argument("relaxation_bound: assignment violates symmetry ordering on row " +
                                  std::to_string(r));
  }
  const LpSolution sol = solve_lp(build_relaxation(inst, cuts, lo, hi));
  if (sol.status != LpStatus::kOptimal)
    throw LpError(std::string("relaxation_bound: LP finished ") + to_string(sol.status));
  return sol.objective;
}

}  // namespace tesp
