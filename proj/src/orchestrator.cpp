#include "tesp/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>

#include "tesp/io.hpp"

namespace tesp {

const char* to_string(Mode m) {
  switch (m) {
    case Mode::kBenders: return "benders";
    case Mode::kBees: return "bees";
    case Mode::kBbha: return "bbha";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "benders") return Mode::kBenders;
  if (s == "bees") return Mode::kBees;
  if (s == "bbha") return Mode::kBbha;
  throw std::invalid_argument("unknown mode '" + s + "' (expected benders, bees or bbha)");
}

namespace {

constexpr double kObjTol = 1e-6;

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<Incumbent::Clock::time_point> make_deadline(Incumbent::Clock::time_point start,
                                                          double limit_s) {
  if (limit_s < 0.0) return std::nullopt;
  return start + std::chrono::duration_cast<Incumbent::Clock::duration>(
                     std::chrono::duration<double>(limit_s));
}

bool past(const std::optional<Incumbent::Clock::time_point>& deadline) {
  return deadline && Incumbent::Clock::now() >= *deadline;
}

// Worker fan-out over the ranked sites. Outcomes land in slot order, so the
// result is identical for any thread count.
std::vector<WorkerOutcome> run_workers(const Instance& inst, const std::vector<Site>& sites,
                                       const BeeParams& params, const CutSnapshot& snapshot,
                                       double incumbent_value,
                                       std::vector<SubproblemEvaluator>& evaluators,
                                       std::vector<Rng>& rngs, int threads) {
  std::vector<PlanVector> centers;
  centers.reserve(sites.size());
  for (const auto& s : sites) centers.push_back(s.center);

  std::vector<WorkerOutcome> outcomes(sites.size());
  const auto work = [&](std::size_t w) {
    const int recruits = static_cast<int>(w) < params.ne ? params.nre : params.nrb;
    outcomes[w] = worker_step(inst, sites[w], recruits, params.ngh, snapshot, incumbent_value,
                              centers, evaluators[w], rngs[w]);
  };
  if (threads <= 1 || sites.size() <= 1) {
    for (std::size_t w = 0; w < sites.size(); ++w) work(w);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    const int n = std::min<int>(threads, static_cast<int>(sites.size()));
    for (int i = 0; i < n; ++i) {
      pool.emplace_back([&] {
        for (std::size_t w = next.fetch_add(1); w < sites.size(); w = next.fetch_add(1)) work(w);
      });
    }
    for (auto& t : pool) t.join();
  }
  return outcomes;
}

}  // namespace

RunReport run(const Instance& inst, const RunConfig& config) {
  {
    const auto violations = validate_instance(inst);
    if (!violations.empty()) {
      std::string msg = "invalid instance:";
      for (const auto& v : violations) msg += " [" + v.entity + ": " + v.message + "]";
      throw std::invalid_argument(msg);
    }
  }
  config.bees.validate();
  if (config.mode == Mode::kBees && !config.budget.bounded())
    throw std::invalid_argument("bees mode cannot prove optimality; set a time or iteration budget");

  const auto start = Incumbent::Clock::now();
  const auto deadline = make_deadline(start, config.budget.time_limit_s);
  Incumbent incumbent(start);

  RunReport report;
  report.instance_name = inst.name;
  report.mode = config.mode;

  if (config.mode == Mode::kBees) {
    const BaselineStats stats =
        run_bees_baseline(inst, config.bees, config.budget.time_limit_s,
                          config.budget.max_iterations, config.seed, incumbent);
    report.iterations = stats.iterations;
    report.lp_solves = stats.lp_solves;
    report.exit_reason = config.budget.max_iterations >= 0 &&
                                 stats.iterations >= config.budget.max_iterations
                             ? "iteration_limit"
                             : "time_limit";
  } else {
    CutPool pool;
    if (!config.seed_cuts.empty()) pool.append_all(config.seed_cuts);
    ScoutOptions sopt;
    sopt.gap_rel = config.gap_rel;
    Scout scout(inst, pool, incumbent, sopt);
    SubproblemEvaluator init_eval(inst);
    Rng init_rng(mix_seed(config.seed, 0x1717));

    long iterations = 0;
    std::string exit_reason;

    if (config.mode == Mode::kBenders) {
      // Seed the incumbent with the do-nothing plan so a budgeted run always
      // has a feasible answer and the trace starts immediately.
      const PlanVector zero = PlanVector::zeros(inst);
      auto res = init_eval.evaluate(zero, "init");
      incumbent.offer(zero, master_cost(inst, zero) + res.op.cost, "init");
      pool.append(std::move(res.cut));
      for (;;) {
        if (scout.done()) {
          exit_reason = "proven";
          break;
        }
        if (past(deadline)) {
          exit_reason = "time_limit";
          break;
        }
        if (config.budget.max_iterations >= 0 && iterations >= config.budget.max_iterations) {
          exit_reason = "iteration_limit";
          break;
        }
        scout.step(256, deadline);
        ++iterations;
      }
    } else {  // bbha
      // The embedded decomposition starts exactly like benders mode: the
      // do-nothing plan seeds the incumbent and the pool.
      std::map<std::vector<int>, double> first_eval;
      {
        const PlanVector zero = PlanVector::zeros(inst);
        auto res = init_eval.evaluate(zero, "init");
        const double fitness = master_cost(inst, zero) + res.op.cost;
        incumbent.offer(zero, fitness, "init");
        pool.append(std::move(res.cut));
        first_eval.emplace(zero.counts, fitness);
      }

      // Initialization: nre + nrb uniformly random sites, each evaluated once
      // (duplicates share the evaluation), every evaluation seeding the pool.
      // The scout runs alongside, taking a slice after each evaluation, and
      // the pending plans are evaluated most-promising-first under the
      // heuristic so the incumbent descends as the pool sharpens.
      std::vector<PlanVector> drawn;
      std::vector<PlanVector> pending;
      for (int i = 0; i < config.bees.initial_population(); ++i) {
        PlanVector y = random_plan(inst, init_rng);
        if (!first_eval.count(y.counts) &&
            std::none_of(pending.begin(), pending.end(),
                         [&](const PlanVector& p) { return p == y; }))
          pending.push_back(y);
        drawn.push_back(std::move(y));
      }
      int init_no = 0;
      while (!pending.empty()) {
        const CutSnapshot snapshot = pool.snapshot();
        const double inc_val = incumbent.value();
        std::size_t pick = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pending.size(); ++i) {
          const double h = heuristic_fitness(inst, pending[i], snapshot, inc_val);
          if (h < best) {
            best = h;
            pick = i;
          }
        }
        const PlanVector y = pending[pick];
        pending.erase(pending.begin() + pick);
        auto res = init_eval.evaluate(y, "init");
        const double fitness = master_cost(inst, y) + res.op.cost;
        res.cut.source = "init:" + std::to_string(init_no);
        pool.append(std::move(res.cut));
        incumbent.offer(y, fitness, "init:" + std::to_string(init_no));
        first_eval.emplace(y.counts, fitness);
        ++init_no;
        scout.step(64, deadline, 2);
      }
      std::vector<Site> sites;
      for (PlanVector& y : drawn) {
        const double fitness = first_eval.at(y.counts);
        sites.push_back(Site{std::move(y), fitness, 0, config.bees.ngh});
      }

      std::vector<SubproblemEvaluator> worker_evals;
      std::vector<Rng> worker_rngs;
      for (int w = 0; w < config.bees.nb; ++w) {
        worker_evals.emplace_back(inst);
        worker_rngs.emplace_back(mix_seed(config.seed, 0xb0b + w));
      }

      for (;;) {
        if (scout.done()) {
          exit_reason = "proven";
          break;
        }
        if (past(deadline)) {
          exit_reason = "time_limit";
          break;
        }
        if (config.budget.max_iterations >= 0 && iterations >= config.budget.max_iterations) {
          exit_reason = "iteration_limit";
          break;
        }

        std::stable_sort(sites.begin(), sites.end(),
                         [](const Site& a, const Site& b) { return a.fitness < b.fitness; });
        if (static_cast<int>(sites.size()) > config.bees.nb) sites.resize(config.bees.nb);

        const CutSnapshot snapshot = pool.snapshot();
        const double inc_val = incumbent.value();
        auto outcomes = run_workers(inst, sites, config.bees, snapshot, inc_val, worker_evals,
                                    worker_rngs, config.threads);

        long colony_lp = 0;
        for (std::size_t w = 0; w < outcomes.size(); ++w) {
          auto& out = outcomes[w];
          colony_lp += out.lp_solves;
          if (out.cut) {
            out.cut->source = "worker:" + std::to_string(w);
            pool.append(std::move(*out.cut));
          }
          if (out.evaluated)
            incumbent.offer(out.evaluated->first, out.evaluated->second,
                            "worker:" + std::to_string(w));
          if (out.improved) sites[w] = std::move(*out.improved);
        }

        // The scout's slice: it leads the search, so it gets the larger share
        // of the evaluation budget; the colony's worker step costs at most
        // one evaluation per site.
        scout.step(256 * (1 + colony_lp), deadline, std::max<long>(4, 3 * colony_lp));

        // Re-seed with the shared incumbent unless it already is a center.
        if (incumbent.has_value()) {
          const PlanVector b = incumbent.plan();
          const bool present = std::any_of(sites.begin(), sites.end(),
                                           [&](const Site& s) { return s.center == b; });
          if (!present) sites.push_back(Site{b, incumbent.value(), 0, config.bees.ngh});
        }
        ++iterations;
      }

      for (const auto& ev : worker_evals) report.lp_solves += ev.lp_solves();
    }

    report.iterations = iterations;
    report.exit_reason = exit_reason;
    report.lp_solves += scout.lp_solves() + init_eval.lp_solves();
    report.cut_count = static_cast<long>(pool.size());
    report.cuts = pool.snapshot();
    const ScoutStatus st = scout.status();
    report.lower_bound = st.lower_bound;
    report.proven_optimal = st.proven_optimal;
  }

  report.has_incumbent = incumbent.has_value();
  if (report.has_incumbent) {
    report.objective = incumbent.value();
    report.plan = incumbent.plan();
  }
  report.trace = incumbent.trace();
  report.wall_time_s = std::chrono::duration<double>(Incumbent::Clock::now() - start).count();

  if (report.has_incumbent &&
      report.objective < report.lower_bound - kObjTol * (1.0 + std::fabs(report.objective)))
    throw std::logic_error("run: incumbent fell below the reported lower bound");
  return report;
}

std::vector<double> scaled_trapz(const std::vector<std::vector<TracePoint>>& traces,
                                 double horizon_s) {
  if (traces.empty()) throw std::invalid_argument("scaled_trapz: no traces");
  std::vector<double> integrals;
  integrals.reserve(traces.size());
  for (const auto& trace : traces) {
    std::vector<std::pair<double, double>> steps;
    for (const auto& p : trace) {
      if (std::isfinite(p.incumbent)) steps.push_back({p.time_s, p.incumbent});
    }
    if (steps.empty()) throw std::invalid_argument("scaled_trapz: trace has no incumbent");
    double integral = 0.0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const double t0 = std::min(steps[i].first, horizon_s);
      const double t1 = i + 1 < steps.size() ? std::min(steps[i + 1].first, horizon_s) : horizon_s;
      if (t1 > t0) integral += steps[i].second * (t1 - t0);
    }
    integrals.push_back(integral);
  }
  const double worst = *std::max_element(integrals.begin(), integrals.end());
  std::vector<double> scores(integrals.size(), 1.0);
  if (worst > 0.0) {
    for (std::size_t i = 0; i < integrals.size(); ++i) scores[i] = integrals[i] / worst;
  }
  return scores;
}

std::vector<TuneRow> tune(const Instance& inst, const std::vector<BeeParams>& grid,
                          double horizon_s, const std::vector<std::uint64_t>& seeds,
                          int threads) {
  if (grid.empty()) throw std::invalid_argument("tune: empty parameter grid");
  if (seeds.empty()) throw std::invalid_argument("tune: need at least one seed");
  for (const auto& p : grid) p.validate();

  std::vector<std::vector<TracePoint>> traces;
  std::vector<TuneRow> rows;
  std::vector<std::vector<std::size_t>> trace_ids(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    TuneRow row;
    row.params = grid[g];
    row.published_defaults = grid[g].ne == 1 && grid[g].nb == 2 && grid[g].nre == 10 &&
                          grid[g].nrb == 5;
    double obj = 0.0, iters = 0.0;
    for (const std::uint64_t seed : seeds) {
      RunConfig cfg;
      cfg.mode = Mode::kBbha;
      cfg.bees = grid[g];
      cfg.budget.time_limit_s = horizon_s;
      cfg.seed = seed;
      cfg.threads = threads;
      const RunReport rep = run(inst, cfg);
      obj += rep.objective;
      iters += static_cast<double>(rep.iterations);
      trace_ids[g].push_back(traces.size());
      traces.push_back(rep.trace);
    }
    row.mean_objective = obj / seeds.size();
    row.mean_iterations = iters / seeds.size();
    rows.push_back(row);
  }

  const std::vector<double> scores = scaled_trapz(traces, horizon_s);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    for (const std::size_t id : trace_ids[g]) s += scores[id];
    rows[g].mean_scaled_trapz = s / trace_ids[g].size();
  }
  std::stable_sort(rows.begin(), rows.end(), [](const TuneRow& a, const TuneRow& b) {
    return a.mean_scaled_trapz < b.mean_scaled_trapz;
  });
  return rows;
}

std::string trace_to_csv(const std::vector<TracePoint>& trace) {
  std::string out = "time_s,incumbent,lower_bound,source\n";
  for (const auto& p : trace) {
    out += num(p.time_s) + "," + num(p.incumbent) + "," + num(p.lower_bound) + "," + p.source +
           "\n";
  }
  return out;
}

std::vector<TracePoint> parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "time_s,incumbent,lower_bound,source")
    throw std::invalid_argument("trace csv: missing or malformed header");
  std::vector<TracePoint> trace;
  int no = 1;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    TracePoint p;
    std::string t, inc, lb;
    if (!std::getline(ls, t, ',') || !std::getline(ls, inc, ',') || !std::getline(ls, lb, ',') ||
        !std::getline(ls, p.source))
      throw std::invalid_argument("trace csv: line " + std::to_string(no) + " is malformed");
    const auto parse = [&](const std::string& s) {
      if (s == "inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
      return std::stod(s);
    };
    p.time_s = parse(t);
    p.incumbent = parse(inc);
    p.lower_bound = parse(lb);
    trace.push_back(std::move(p));
  }
  return trace;
}

std::string report_to_text(const RunReport& r) {
  std::string out = "tesp-report 1\n";
  out += "instance: " + r.instance_name + "\n";
  out += std::string("mode: ") + to_string(r.mode) + "\n";
  out += std::string("proven_optimal: ") + (r.proven_optimal ? "true" : "false") + "\n";
  out += "objective: " + (r.has_incumbent ? num(r.objective) : std::string("none")) + "\n";
  out += "plan: " + (r.has_incumbent ? r.plan.to_string() : std::string("none")) + "\n";
  out += "lower_bound: " + num(r.lower_bound) + "\n";
  const double gap = r.has_incumbent && r.objective != 0.0
                         ? std::fabs(r.objective - r.lower_bound) / std::fabs(r.objective)
                         : 0.0;
  out += "gap_rel: " + num(gap) + "\n";
  out += "iterations: " + std::to_string(r.iterations) + "\n";
  out += "cuts: " + std::to_string(r.cut_count) + "\n";
  out += "subproblem_lp_solves: " + std::to_string(r.lp_solves) + "\n";
  out += "wall_time_s: " + num(r.wall_time_s) + "\n";
  out += "exit_reason: " + r.exit_reason + "\n";
  return out;
}

std::string tune_table_to_csv(const std::string& scenario, const std::vector<TuneRow>& rows) {
  std::string out = "scenario,ne,nb,nre,nrb,objective,iterations,scaled_trapz\n";
  for (const auto& r : rows) {
    out += scenario + "," + std::to_string(r.params.ne) + "," + std::to_string(r.params.nb) +
           "," + std::to_string(r.params.nre) + "," + std::to_string(r.params.nrb) + "," +
           num(r.mean_objective) + "," + num(r.mean_iterations) + "," +
           num(r.mean_scaled_trapz) + "\n";
  }
  return out;
}

}  // namespace tesp
