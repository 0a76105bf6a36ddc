#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tesp/io.hpp"
#include "tesp/orchestrator.hpp"

namespace py = pybind11;
using namespace tesp;

namespace {

PlanVector plan_from_counts(const Instance& inst, std::vector<int> counts) {
  PlanVector y{std::move(counts)};
  if (y.counts.size() != inst.rights_of_way.size())
    throw std::invalid_argument("plan must have one count per right of way");
  return y;
}

std::vector<std::pair<double, double>> trace_pairs(const RunReport& r) {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : r.trace)
    if (std::isfinite(p.incumbent)) out.push_back({p.time_s, p.incumbent});
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Transmission expansion and storage planning solver core";

  py::class_<Instance>(m, "Instance")
      .def_readonly("name", &Instance::name)
      .def_readonly("num_intervals", &Instance::num_intervals)
      .def_property_readonly("num_buses", &Instance::num_buses)
      .def_property_readonly("num_rights_of_way", &Instance::num_rows)
      .def_readonly("total_slots", &Instance::total_slots)
      .def_property_readonly("max_new_circuits",
                             [](const Instance& i) {
                               std::vector<int> out;
                               for (const auto& r : i.rights_of_way) out.push_back(r.max_new_circuits);
                               return out;
                             })
      .def("__repr__", [](const Instance& i) {
        return "<Instance '" + i.name + "' buses=" + std::to_string(i.num_buses()) +
               " rows=" + std::to_string(i.num_rows()) + " T=" + std::to_string(i.num_intervals) +
               ">";
      });

  py::class_<RunReport>(m, "RunReport")
      .def_property_readonly("mode", [](const RunReport& r) { return std::string(to_string(r.mode)); })
      .def_readonly("objective", &RunReport::objective)
      .def_property_readonly("plan", [](const RunReport& r) { return r.plan.counts; })
      .def_readonly("lower_bound", &RunReport::lower_bound)
      .def_readonly("proven_optimal", &RunReport::proven_optimal)
      .def_readonly("iterations", &RunReport::iterations)
      .def_readonly("cut_count", &RunReport::cut_count)
      .def_readonly("lp_solves", &RunReport::lp_solves)
      .def_readonly("wall_time_s", &RunReport::wall_time_s)
      .def_readonly("exit_reason", &RunReport::exit_reason)
      .def_property_readonly("trace", &trace_pairs)
      .def("report_text", &report_to_text)
      .def("__repr__", [](const RunReport& r) {
        return "<RunReport " + std::string(to_string(r.mode)) + " objective=" +
               std::to_string(r.objective) + (r.proven_optimal ? " proven" : "") + ">";
      });

  m.def("parse_instance", [](const std::string& text) { return parse_instance(text); },
        py::arg("text"), "Parse a 'tespinst 1' document into an Instance");
  m.def("serialize_instance",
        [](const Instance& inst) { return serialize(InstanceDoc::from_instance(inst)); },
        py::arg("instance"), "Canonical text form of an instance");
  m.def("validate_instance",
        [](const Instance& inst) {
          std::vector<std::pair<std::string, std::string>> out;
          for (const auto& v : validate_instance(inst)) out.push_back({v.entity, v.message});
          return out;
        },
        py::arg("instance"), "List of (entity, message) violations; empty when valid");
  m.def("generate_instance", &generate_instance, py::arg("buses"), py::arg("spare_rows") = 2,
        py::arg("intervals") = 4, py::arg("seed") = 1, py::arg("max_slots") = 12,
        "Synthetic instance with calibrated curtailment targets");
  m.def("demand_profiles", [] {
    std::vector<std::string> names;
    for (const auto& p : demand_profiles()) names.push_back(p.name);
    return names;
  });

  m.def("master_cost",
        [](const Instance& inst, std::vector<int> counts) {
          return master_cost(inst, plan_from_counts(inst, std::move(counts)));
        },
        py::arg("instance"), py::arg("plan"));
  m.def("normalize_plan",
        [](const Instance& inst, const std::vector<int>& raw) {
          std::vector<std::uint8_t> bits(raw.size());
          for (std::size_t i = 0; i < raw.size(); ++i) bits[i] = raw[i] ? 1 : 0;
          return normalize_plan(inst, bits).counts;
        },
        py::arg("instance"), py::arg("slots"),
        "Pack raw per-slot bits into per-right-of-way counts");
  m.def("true_fitness",
        [](const Instance& inst, std::vector<int> counts) {
          return true_fitness(inst, plan_from_counts(inst, std::move(counts)));
        },
        py::arg("instance"), py::arg("plan"), "Master cost plus the operational LP optimum");
  m.def("evaluate_plan",
        [](const Instance& inst, std::vector<int> counts) {
          const auto [op, cut] = evaluate_plan(inst, plan_from_counts(inst, std::move(counts)));
          return py::make_tuple(op.cost, cut.coeffs, cut.rhs);
        },
        py::arg("instance"), py::arg("plan"),
        "Operational optimum and its optimality cut as (cost, coeffs, rhs)");
  m.def("brute_force",
        [](const Instance& inst) {
          const OracleResult res = brute_force(inst);
          std::vector<std::pair<std::vector<int>, double>> table;
          for (const auto& [plan, fitness] : res.table) table.push_back({plan.counts, fitness});
          return py::make_tuple(res.objective, res.plan.counts, table);
        },
        py::arg("instance"), "Ground-truth enumeration: (objective, plan, table)");

  m.def("run",
        [](const Instance& inst, const std::string& mode, std::uint64_t seed, double time_limit,
           long iter_limit, int ne, int nb, int nre, int nrb, int ngh, int stlim, double gap,
           int threads) {
          RunConfig cfg;
          cfg.mode = mode_from_string(mode);
          cfg.seed = seed;
          cfg.budget.time_limit_s = time_limit;
          cfg.budget.max_iterations = iter_limit;
          cfg.bees.ne = ne;
          cfg.bees.nb = nb;
          cfg.bees.nre = nre;
          cfg.bees.nrb = nrb;
          cfg.bees.ngh = ngh;
          cfg.bees.stlim = stlim;
          cfg.gap_rel = gap;
          cfg.threads = threads;
          py::gil_scoped_release release;
          return run(inst, cfg);
        },
        py::arg("instance"), py::arg("mode") = "bbha", py::arg("seed") = 1,
        py::arg("time_limit") = -1.0, py::arg("iter_limit") = -1, py::arg("ne") = 1,
        py::arg("nb") = 2, py::arg("nre") = 10, py::arg("nrb") = 5, py::arg("ngh") = 8,
        py::arg("stlim") = 10, py::arg("gap") = 1e-7, py::arg("threads") = 1,
        "Solve with benders, bees or bbha; deterministic in the seed");

  m.def("scaled_trapz",
        [](const std::vector<std::vector<std::pair<double, double>>>& traces, double horizon) {
          std::vector<std::vector<TracePoint>> full;
          for (const auto& t : traces) {
            std::vector<TracePoint> pts;
            for (const auto& [time, value] : t) pts.push_back({time, value, 0.0, ""});
            full.push_back(std::move(pts));
          }
          return scaled_trapz(full, horizon);
        },
        py::arg("traces"), py::arg("horizon"),
        "Normalized incumbent-over-time integrals; lower is better, worst scores 1");
}
