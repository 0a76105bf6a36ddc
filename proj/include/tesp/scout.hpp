#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <vector>

#include "tesp/incumbent.hpp"
#include "tesp/subproblem.hpp"

namespace tesp {

struct ScoutStatus {
  double lower_bound = 0.0;
  double incumbent_objective = std::numeric_limits<double>::infinity();
  long nodes = 0;
  bool proven_optimal = false;
};

struct ScoutOptions {
  double gap_rel = 1e-7;  // relative optimality gap for pruning and proof
  int plunge_depth = 5;   // depth-first plunge length before best-bound pops
};

// Single-tree branch and bound over the binary master with lazy separation
// of Benders cuts at integer-feasible nodes. The tree is single-owner;
// only the cut pool (append/snapshot) and the incumbent are shared. step()
// makes the search cooperative so the orchestrator can interleave it with
// colony iterations deterministically.
class Scout {
 public:
  Scout(const Instance& inst, CutPool& pool, Incumbent& incumbent, ScoutOptions options = {});

  // Processes up to max_nodes node evaluations (cut rounds included);
  // stops early at the deadline, on proof of optimality, or after
  // max_new_evals fresh subproblem evaluations (-1: unlimited).
  ScoutStatus step(long max_nodes,
                   std::optional<std::chrono::steady_clock::time_point> deadline = {},
                   long max_new_evals = -1);
  bool done() const { return done_; }
  ScoutStatus status() const;
  long lp_solves() const { return evaluator_.lp_solves(); }

 private:
  struct Node {
    std::vector<int> lo, hi;  // per-right-of-way circuit count interval
    double bound = 0.0;       // inherited from the parent until solved
    int depth = 0;
    long id = 0;
  };

  void ingest_snapshot();           // memoize true values off cut generators
  bool process(Node node);          // false when the budget interrupted it
  void branch(const Node& node, const std::vector<double>& yfrac);
  double current_tree_bound() const;
  void finish_proof();

  const Instance& inst_;
  CutPool& pool_;
  Incumbent& incumbent_;
  ScoutOptions opt_;
  SubproblemEvaluator evaluator_;
  CutSnapshot snapshot_;
  std::size_t seen_cuts_ = 0;
  std::map<std::vector<int>, double> true_value_;  // plan counts -> subproblem optimum

  std::multimap<double, Node> open_;  // best-bound order
  std::vector<Node> plunge_;          // depth-first stack
  int plunge_len_ = 0;
  long next_id_ = 0;
  long nodes_ = 0;
  double reported_lb_ = 0.0;
  bool done_ = false;
  long budget_left_ = 0;
  long evals_left_ = 0;
  std::optional<std::chrono::steady_clock::time_point> deadline_;
};

// Runs the scout until proof, node budget, or deadline.
ScoutStatus run_scout(const Instance& inst, CutPool& pool, Incumbent& incumbent,
                      long max_nodes = -1, double time_limit_s = -1.0, ScoutOptions options = {});

// LP relaxation value of the master under a partial slot assignment
// (-1 free, 0, 1) against a cut snapshot; a valid lower bound for every
// completion. Throws std::invalid_argument when the assignment breaks the
// symmetry ordering.
double relaxation_bound(const Instance& inst, const CutSnapshot& cuts,
                        const std::vector<std::int8_t>& partial);

}  // namespace tesp
