#include "tesp/bees.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tesp {

void BeeParams::validate() const {
  if (ne < 0 || nb < 1) throw std::invalid_argument("bee params: need nb >= 1 and ne >= 0");
  if (ne > nb) throw std::invalid_argument("bee params: ne <= nb is required");
  if (nre < nrb) throw std::invalid_argument("bee params: nre >= nrb is required");
  if (nrb < 0) throw std::invalid_argument("bee params: nrb >= 0 is required");
  if (ngh < 1) throw std::invalid_argument("bee params: ngh >= 1 is required");
  if (stlim < 1) throw std::invalid_argument("bee params: stlim >= 1 is required");
}

PlanVector random_plan(const Instance& inst, Rng& rng) {
  PlanVector y = PlanVector::zeros(inst);
  for (int r = 0; r < inst.num_rows(); ++r)
    y.counts[r] = static_cast<int>(rng.below(inst.rights_of_way[r].max_new_circuits + 1));
  return y;
}

PlanVector neighbour(const Instance& inst, const PlanVector& y, int ngh, Rng& rng) {
  PlanVector out = y;
  std::vector<int> dir(inst.num_rows(), 0);
  const int moves = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, ngh))));
  std::vector<std::pair<int, int>> legal;
  for (int step = 0; step < moves; ++step) {
    legal.clear();
    for (int r = 0; r < inst.num_rows(); ++r) {
      if (out.counts[r] < inst.rights_of_way[r].max_new_circuits && dir[r] >= 0)
        legal.push_back({r, +1});
      if (out.counts[r] > 0 && dir[r] <= 0) legal.push_back({r, -1});
    }
    if (legal.empty()) break;
    const auto [r, d] = legal[rng.below(legal.size())];
    out.counts[r] += d;
    dir[r] = d;
  }
  return out;
}

double heuristic_fitness(const Instance& inst, const PlanVector& y, const CutSnapshot& cuts,
                         double incumbent_value) {
  const double c = master_cost(inst, y);
  if (c > incumbent_value) return c;  // refinement cannot rescue a dominated master cost
  double v = 0.0;
  for (const auto& cut : cuts) v = std::max(v, cut->value_at(inst, y));
  return c + v;
}

WorkerOutcome worker_step(const Instance& inst, const Site& site, int recruits, int ngh,
                          const CutSnapshot& cuts, double incumbent_value,
                          const std::vector<PlanVector>& site_centers,
                          SubproblemEvaluator& evaluator, Rng& rng) {
  WorkerOutcome out;
  std::optional<PlanVector> best;
  double best_score = std::numeric_limits<double>::infinity();
  for (int i = 0; i < recruits; ++i) {
    PlanVector candidate = neighbour(inst, site.center, ngh, rng);
    if (std::any_of(site_centers.begin(), site_centers.end(),
                    [&](const PlanVector& c) { return c == candidate; }))
      continue;
    const double score = heuristic_fitness(inst, candidate, cuts, incumbent_value);
    if (score < best_score) {
      best_score = score;
      best = std::move(candidate);
    }
  }
  if (!best || best_score >= site.fitness) return out;

  auto res = evaluator.evaluate(*best, "worker");
  out.lp_solves = 1;
  const double fitness = master_cost(inst, *best) + res.op.cost;
  out.cut = std::move(res.cut);
  out.evaluated = {*best, fitness};
  if (fitness < site.fitness) {
    out.improved = Site{std::move(*best), fitness, 0, site.radius};
  }
  return out;
}

BaselineStats run_bees_baseline(const Instance& inst, const BeeParams& params,
                                double time_limit_s, long max_iterations, std::uint64_t seed,
                                Incumbent& incumbent) {
  params.validate();
  if (params.initial_population() == 0)
    throw std::invalid_argument("bee params: the baseline needs nre + nrb >= 1 workers");
  BaselineStats stats;
  SubproblemEvaluator evaluator(inst);
  Rng rng(mix_seed(seed, 0xbee5));

  std::optional<Incumbent::Clock::time_point> deadline;
  if (time_limit_s >= 0.0)
    deadline = Incumbent::Clock::now() + std::chrono::duration_cast<Incumbent::Clock::duration>(
                                             std::chrono::duration<double>(time_limit_s));
  const auto out_of_time = [&] {
    return deadline && Incumbent::Clock::now() >= *deadline;
  };

  const auto evaluate = [&](const PlanVector& y) {
    ++stats.lp_solves;
    const double fitness = master_cost(inst, y) + evaluator.evaluate(y, "bees").op.cost;
    incumbent.offer(y, fitness, "bees");
    return fitness;
  };

  const int ns = params.initial_population();
  std::vector<Site> sites;
  sites.reserve(ns);
  for (int i = 0; i < ns && !out_of_time(); ++i) {
    PlanVector y = random_plan(inst, rng);
    const double f = evaluate(y);
    sites.push_back(Site{std::move(y), f, 0, params.ngh});
  }

  while (!out_of_time() && (max_iterations < 0 || stats.iterations < max_iterations)) {
    std::stable_sort(sites.begin(), sites.end(),
                     [](const Site& a, const Site& b) { return a.fitness < b.fitness; });
    const int selected = std::min<int>(params.nb, static_cast<int>(sites.size()));
    std::vector<Site> survivors;
    for (int i = 0; i < selected && !out_of_time(); ++i) {
      Site site = sites[i];
      const int recruits = i < params.ne ? params.nre : params.nrb;
      PlanVector best_plan;
      double best_fitness = std::numeric_limits<double>::infinity();
      for (int w = 0; w < recruits && !out_of_time(); ++w) {
        PlanVector y = neighbour(inst, site.center, site.radius, rng);
        const double f = evaluate(y);
        if (f < best_fitness) {
          best_fitness = f;
          best_plan = std::move(y);
        }
      }
      if (best_fitness < site.fitness) {
        site.center = std::move(best_plan);
        site.fitness = best_fitness;
        site.stagnation = 0;
      } else {
        site.radius = std::max(1, static_cast<int>(std::ceil(0.8 * site.radius)));
        if (++site.stagnation >= params.stlim) continue;  // abandoned patch
      }
      survivors.push_back(std::move(site));
    }
    sites = std::move(survivors);
    while (static_cast<int>(sites.size()) < ns && !out_of_time()) {
      PlanVector y = random_plan(inst, rng);
      const double f = evaluate(y);
      sites.push_back(Site{std::move(y), f, 0, params.ngh});
    }
    ++stats.iterations;
  }
  return stats;
}

}  // namespace tesp
