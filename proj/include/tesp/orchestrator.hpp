#pragma once

#include <string>
#include <vector>

#include "tesp/bees.hpp"
#include "tesp/incumbent.hpp"
#include "tesp/scout.hpp"
#include "tesp/subproblem.hpp"

namespace tesp {

enum class Mode { kBenders, kBees, kBbha };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);  // throws std::invalid_argument

struct Budget {
  double time_limit_s = -1.0;  // < 0: none
  long max_iterations = -1;    // < 0: none
  bool bounded() const { return time_limit_s >= 0.0 || max_iterations >= 0; }
};

struct RunConfig {
  Mode mode = Mode::kBbha;
  BeeParams bees;
  Budget budget;
  double gap_rel = 1e-7;
  std::uint64_t seed = 1;
  int threads = 1;         // worker fan-out; results are thread-count invariant
  CutSnapshot seed_cuts;   // pre-seeded pool, e.g. from a previous run's report
};

struct RunReport {
  std::string instance_name;
  Mode mode = Mode::kBbha;
  bool has_incumbent = false;
  double objective = std::numeric_limits<double>::infinity();
  PlanVector plan;
  double lower_bound = 0.0;
  bool proven_optimal = false;
  long iterations = 0;
  long cut_count = 0;
  long lp_solves = 0;  // subproblem evaluations across scout, workers and init
  double wall_time_s = 0.0;
  std::string exit_reason;  // proven | time_limit | iteration_limit
  std::vector<TracePoint> trace;
  CutSnapshot cuts;  // final shared pool (empty in bees mode)
};

// Runs the configured mode: benders = scout only, bees = the baseline
// algorithm, bbha = scout plus worker colony with cut sharing at iteration
// boundaries. Single-threaded execution is deterministic in the seed;
// threads only change timing. Throws std::invalid_argument on an invalid
// instance or configuration.
RunReport run(const Instance& inst, const RunConfig& config);

// Solution-quality-over-time score: the piecewise-constant incumbent value
// integrated from each trace's first incumbent to the horizon, rescaled by
// the worst integral. Lower is better; the worst trace scores exactly 1.
// Throws std::invalid_argument on an empty trace list or a trace that never
// had an incumbent.
std::vector<double> scaled_trapz(const std::vector<std::vector<TracePoint>>& traces,
                                 double horizon_s);

struct TuneRow {
  BeeParams params;
  double mean_objective = 0.0;
  double mean_iterations = 0.0;
  double mean_scaled_trapz = 0.0;
  bool published_defaults = false;
};

// Grid evaluation: one bbha run per (params, seed) with the horizon as time
// budget, scores normalized across every trace, rows ranked by mean score.
std::vector<TuneRow> tune(const Instance& inst, const std::vector<BeeParams>& grid,
                          double horizon_s, const std::vector<std::uint64_t>& seeds,
                          int threads = 1);

// Trace stream: CSV with header time_s,incumbent,lower_bound,source.
std::string trace_to_csv(const std::vector<TracePoint>& trace);
std::vector<TracePoint> parse_trace_csv(const std::string& text);  // throws ParseError-style

// Report document ("tesp-report 1", key: value lines; schema in README).
std::string report_to_text(const RunReport& report);

// Tuning table CSV: scenario,ne,nb,nre,nrb,objective,iterations,scaled_trapz.
std::string tune_table_to_csv(const std::string& scenario, const std::vector<TuneRow>& rows);

}  // namespace tesp
