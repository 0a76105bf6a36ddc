#pragma once

#include <optional>
#include <vector>

#include "tesp/incumbent.hpp"
#include "tesp/rng.hpp"
#include "tesp/subproblem.hpp"

namespace tesp {

// Colony parameters; defaults follow the published tuning table. stlim and
// the per-site neighbourhood shrink apply to the baseline algorithm only.
struct BeeParams {
  int ne = 1;    // elite sites
  int nb = 2;    // best sites (includes the elite ones)
  int nre = 10;  // recruits per elite site
  int nrb = 5;   // recruits per remaining best site
  int ngh = 8;   // maximum grouped-Hamming radius
  int stlim = 10;

  void validate() const;  // throws std::invalid_argument naming the relation
  int initial_population() const { return nre + nrb; }
};

// A flower patch: the plan under local search, its evaluated (never
// heuristic) fitness, and the baseline stagnation bookkeeping.
struct Site {
  PlanVector center;
  double fitness = 0.0;
  int stagnation = 0;
  int radius = 0;  // current neighbourhood size, baseline only
};

// Uniform plan: each right of way independently draws a circuit count.
PlanVector random_plan(const Instance& inst, Rng& rng);

// Grouped-Hamming move: at most ngh slot changes counted after
// normalization, each right of way moving in one direction only. Returns y
// unchanged only when no legal move exists.
PlanVector neighbour(const Instance& inst, const PlanVector& y, int ngh, Rng& rng);

// Piecewise-linear master estimate: master cost plus the clipped best cut
// value. Returns the bare master cost as soon as it exceeds the incumbent.
double heuristic_fitness(const Instance& inst, const PlanVector& y, const CutSnapshot& cuts,
                         double incumbent_value);

struct WorkerOutcome {
  std::optional<Site> improved;                          // replacement site if fitness improved
  std::optional<BendersCut> cut;                         // produced by the single evaluation
  std::optional<std::pair<PlanVector, double>> evaluated;  // plan and its true fitness
  int lp_solves = 0;
};

// One neighbourhood-search step at a site: draw `recruits` neighbours within
// ngh, screen them all heuristically, and spend at most one LP evaluation on
// the most promising one. Candidates equal to a current site center are
// skipped.
WorkerOutcome worker_step(const Instance& inst, const Site& site, int recruits, int ngh,
                          const CutSnapshot& cuts, double incumbent_value,
                          const std::vector<PlanVector>& site_centers,
                          SubproblemEvaluator& evaluator, Rng& rng);

struct BaselineStats {
  long iterations = 0;
  long lp_solves = 0;
};

// The plain Bees Algorithm with full (true-fitness) neighbourhood
// evaluation: no cut pool, no heuristic screening, per-site neighbourhood
// shrink and stagnation deletion. Improvements stream into `incumbent`.
BaselineStats run_bees_baseline(const Instance& inst, const BeeParams& params,
                                double time_limit_s, long max_iterations, std::uint64_t seed,
                                Incumbent& incumbent);

}  // namespace tesp
