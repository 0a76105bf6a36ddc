#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tesp/io.hpp"
#include "tesp/orchestrator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNoImprovement = 3;

std::string read_stream(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string read_input(const std::string& path) {
  if (path.empty() || path == "-") return read_stream(std::cin);
  std::ifstream f(path, std::ios::binary);
  if (!f.good()) throw std::runtime_error("cannot open " + path);
  return read_stream(f);
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f.good()) throw std::runtime_error("cannot write " + path);
  f << content;
}

int print_violations(const std::vector<tesp::Violation>& report) {
  for (const auto& v : report) std::cerr << "invalid: " << v.entity << ": " << v.message << "\n";
  return report.empty() ? kExitOk : kExitValidation;
}

// Reshape demand to profile[t] * peak; the peak defaults to each bus's own.
void apply_profile_override(tesp::Instance& inst, const std::string& profile, double peak_mw) {
  const tesp::DemandProfile* p = tesp::find_profile(profile);
  if (!p) throw std::runtime_error("unknown profile '" + profile + "'");
  for (auto& bus : inst.buses) {
    const double own_peak = *std::max_element(bus.demand.begin(), bus.demand.end());
    if (own_peak <= 0.0) continue;
    const double peak = peak_mw > 0.0 ? peak_mw : own_peak;
    bus.demand = tesp::apply_profile(*p, peak, inst.num_intervals);
  }
  inst.prepare();
}

std::vector<tesp::BeeParams> parse_grid(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("grid file: empty");
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ',')) header.push_back(col);
  }
  const auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int c_ne = column("ne"), c_nb = column("nb"), c_nre = column("nre"), c_nrb = column("nrb");
  const int c_ngh = column("ngh"), c_stlim = column("stlim");
  if (c_ne < 0 || c_nb < 0 || c_nre < 0 || c_nrb < 0)
    throw std::runtime_error("grid file: header must contain ne,nb,nre,nrb");

  std::vector<tesp::BeeParams> grid;
  int no = 1;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < header.size())
      throw std::runtime_error("grid file: line " + std::to_string(no) + " is short");
    tesp::BeeParams p;
    p.ne = std::stoi(cells[c_ne]);
    p.nb = std::stoi(cells[c_nb]);
    p.nre = std::stoi(cells[c_nre]);
    p.nrb = std::stoi(cells[c_nrb]);
    if (c_ngh >= 0) p.ngh = std::stoi(cells[c_ngh]);
    if (c_stlim >= 0) p.stlim = std::stoi(cells[c_stlim]);
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("grid file: line " + std::to_string(no) + ": " + e.what());
    }
    grid.push_back(p);
  }
  return grid;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  }
  if (seeds.empty()) throw std::runtime_error("--seeds: need at least one seed");
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transmission expansion and storage planning solver"};
  app.require_subcommand(1);

  // ---- solve ----
  auto* solve = app.add_subcommand("solve", "Optimize an instance with benders, bees or bbha");
  std::string s_instance, s_mode = "bbha", s_profile, s_trace, s_report;
  double s_peak = 0.0, s_time = -1.0, s_gap = 1e-7;
  long s_iters = -1;
  int s_threads = 1;
  std::uint64_t s_seed = 1;
  tesp::BeeParams s_params;
  solve->add_option("--instance", s_instance, "Instance file ('-' for stdin)")->required();
  solve->add_option("--mode", s_mode, "benders | bees | bbha")
      ->check(CLI::IsMember({"benders", "bees", "bbha"}));
  solve->add_option("--profile", s_profile, "Reshape demand with a named profile");
  solve->add_option("--peak-mw", s_peak, "Peak demand used with --profile (default: per-bus peak)");
  solve->add_option("--ne", s_params.ne, "Elite sites");
  solve->add_option("--nb", s_params.nb, "Best sites");
  solve->add_option("--nre", s_params.nre, "Recruits per elite site");
  solve->add_option("--nrb", s_params.nrb, "Recruits per remaining best site");
  solve->add_option("--ngh", s_params.ngh, "Neighbourhood radius");
  solve->add_option("--stlim", s_params.stlim, "Stagnation limit (bees mode)");
  solve->add_option("--time-limit", s_time, "Wall-clock budget in seconds");
  solve->add_option("--iter-limit", s_iters, "Iteration budget");
  solve->add_option("--gap", s_gap, "Relative optimality gap");
  solve->add_option("--seed", s_seed, "Master random seed");
  solve->add_option("--threads", s_threads, "Worker threads (results are thread-invariant)");
  solve->add_option("--trace-out", s_trace, "Write the incumbent trace CSV here");
  solve->add_option("--report-out", s_report, "Write the report document here");

  // ---- tune ----
  auto* tunecmd = app.add_subcommand("tune", "Rank parameter sets or score existing traces");
  std::string t_instance, t_grid, t_out, t_seeds = "1,2,3";
  std::vector<std::string> t_replay;
  double t_horizon = 60.0;
  int t_threads = 1;
  tunecmd->add_option("--instance", t_instance, "Instance file");
  tunecmd->add_option("--grid", t_grid, "Parameter grid CSV (header ne,nb,nre,nrb[,ngh[,stlim]])");
  tunecmd->add_option("--horizon", t_horizon, "Per-run time budget and scoring horizon (s)");
  tunecmd->add_option("--seeds", t_seeds, "Comma-separated seeds");
  tunecmd->add_option("--threads", t_threads, "Worker threads per run");
  tunecmd->add_option("--out", t_out, "Output CSV path (default stdout)");
  tunecmd->add_option("--replay", t_replay, "Score existing trace CSV files instead of running");

  // ---- oracle ----
  auto* oraclecmd = app.add_subcommand("oracle", "Brute-force optimum over all normalized plans");
  std::string o_instance, o_table;
  oraclecmd->add_option("--instance", o_instance, "Instance file ('-' for stdin)")->required();
  oraclecmd->add_option("--table", o_table, "Write the full per-plan table CSV here");

  // ---- gen ----
  auto* gencmd = app.add_subcommand("gen", "Generate a synthetic desk-scale instance");
  int g_buses = 5, g_spare = 2, g_T = 4, g_slots = 12;
  std::uint64_t g_seed = 1;
  std::string g_out;
  gencmd->add_option("--buses", g_buses, "Number of buses (>= 2)");
  gencmd->add_option("--spare", g_spare, "Candidate-only corridors beyond the spanning tree");
  gencmd->add_option("--intervals", g_T, "Time intervals T");
  gencmd->add_option("--seed", g_seed, "Generator seed");
  gencmd->add_option("--slots", g_slots, "Candidate slot budget (12 keeps the oracle usable)");
  gencmd->add_option("--out", g_out, "Output path (default stdout)");

  // ---- validate ----
  auto* validatecmd = app.add_subcommand("validate", "Check an instance against the model rules");
  std::string v_instance;
  validatecmd->add_option("--instance", v_instance, "Instance file (default stdin)");

  try {
    app.parse(argc, argv);

    if (*solve) {
      if (s_params.ne > s_params.nb)
        throw CLI::ValidationError("--ne", "ne must not exceed nb");
      if (s_params.nre < s_params.nrb)
        throw CLI::ValidationError("--nre", "nre must be at least nrb");
      if (s_params.ngh < 1) throw CLI::ValidationError("--ngh", "ngh must be at least 1");

      tesp::Instance inst = tesp::parse_instance(read_input(s_instance));
      if (!s_profile.empty()) apply_profile_override(inst, s_profile, s_peak);
      if (const auto report = tesp::validate_instance(inst); !report.empty())
        return print_violations(report);

      tesp::RunConfig cfg;
      cfg.mode = tesp::mode_from_string(s_mode);
      cfg.bees = s_params;
      cfg.budget.time_limit_s = s_time;
      cfg.budget.max_iterations = s_iters;
      cfg.gap_rel = s_gap;
      cfg.seed = s_seed;
      cfg.threads = s_threads;
      const tesp::RunReport rep = tesp::run(inst, cfg);

      if (!s_trace.empty()) write_output(s_trace, tesp::trace_to_csv(rep.trace));
      const std::string report_text = tesp::report_to_text(rep);
      if (!s_report.empty()) write_output(s_report, report_text);
      std::cout << report_text;

      if (rep.proven_optimal) return kExitOk;
      const double do_nothing = tesp::true_fitness(inst, tesp::PlanVector::zeros(inst));
      const bool improved = rep.has_incumbent &&
                            rep.objective < do_nothing - 1e-6 * (1.0 + std::fabs(do_nothing));
      return improved ? kExitOk : kExitNoImprovement;
    }

    if (*tunecmd) {
      if (!t_replay.empty()) {
        std::vector<std::vector<tesp::TracePoint>> traces;
        for (const auto& path : t_replay) traces.push_back(tesp::parse_trace_csv(read_input(path)));
        const auto scores = tesp::scaled_trapz(traces, t_horizon);
        std::string out = "trace,scaled_trapz\n";
        for (std::size_t i = 0; i < scores.size(); ++i) {
          std::ostringstream ss;
          ss << t_replay[i] << "," << scores[i] << "\n";
          out += ss.str();
        }
        write_output(t_out, out);
        return kExitOk;
      }
      if (t_instance.empty() || t_grid.empty())
        throw CLI::ValidationError("--instance", "tune needs --instance and --grid (or --replay)");
      tesp::Instance inst = tesp::parse_instance(read_input(t_instance));
      if (const auto report = tesp::validate_instance(inst); !report.empty())
        return print_violations(report);
      const auto grid = parse_grid(read_input(t_grid));
      for (const auto& p : grid) {
        if (p.ne == 1 && p.nb == 2 && p.nre == 10 && p.nrb == 5)
          std::cerr << "note: grid row [ne 1, nb 2, nre 10, nrb 5] matches the published defaults\n";
      }
      const auto rows = tesp::tune(inst, grid, t_horizon, parse_seed_list(t_seeds), t_threads);
      write_output(t_out, tesp::tune_table_to_csv(inst.name, rows));
      return kExitOk;
    }

    if (*oraclecmd) {
      const tesp::Instance inst = tesp::parse_instance(read_input(o_instance));
      if (const auto report = tesp::validate_instance(inst); !report.empty())
        return print_violations(report);
      const tesp::OracleResult res = tesp::brute_force(inst);
      std::cout << "plans: " << res.table.size() << "\n";
      std::cout << "objective: " << res.objective << "\n";
      std::cout << "plan: " << res.plan.to_string() << "\n";
      if (!o_table.empty()) {
        std::string csv = "plan,fitness\n";
        for (const auto& [plan, fitness] : res.table) {
          std::ostringstream ss;
          ss << '"' << plan.to_string() << "\"," << fitness << "\n";
          csv += ss.str();
        }
        write_output(o_table, csv);
      }
      return kExitOk;
    }

    if (*gencmd) {
      const tesp::Instance inst = tesp::generate_instance(g_buses, g_spare, g_T, g_seed, g_slots);
      write_output(g_out, tesp::serialize(tesp::InstanceDoc::from_instance(inst)));
      return kExitOk;
    }

    if (*validatecmd) {
      const tesp::Instance inst = tesp::parse_instance(read_input(v_instance));
      const auto report = tesp::validate_instance(inst);
      if (report.empty()) std::cerr << "ok\n";
      return print_violations(report);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const tesp::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
