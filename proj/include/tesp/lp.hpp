#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace tesp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense : std::uint8_t { kLe, kGe, kEq };

// Bounded-variable LP in computational form: minimize c'x subject to row
// constraints and variable bounds (either side may be infinite).
struct LinearProgram {
  struct Row {
    RowSense sense = RowSense::kLe;
    double rhs = 0.0;
    std::vector<std::pair<int, double>> coeffs;  // (variable, coefficient)
  };

  int num_vars = 0;
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Row> rows;

  int add_var(double lb, double ub, double obj) {
    objective.push_back(obj);
    lower.push_back(lb);
    upper.push_back(ub);
    return num_vars++;
  }
  int add_row(RowSense sense, double rhs, std::vector<std::pair<int, double>> coeffs) {
    rows.push_back(Row{sense, rhs, std::move(coeffs)});
    return static_cast<int>(rows.size()) - 1;
  }
  int num_rows() const { return static_cast<int>(rows.size()); }

  // Throws std::invalid_argument on out-of-range variable references,
  // duplicate (row, variable) entries, or crossed bounds.
  void check_structure() const;
};

enum class LpStatus : std::uint8_t { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

const char* to_string(LpStatus s);

// Per-column basis state. Columns are the structural variables followed by
// one logical (slack) per row; a Basis is the warm-start handle.
enum class VarStatus : std::uint8_t { kBasic, kAtLower, kAtUpper, kNonbasicFree };

struct Basis {
  std::vector<VarStatus> status;  // size num_vars + num_rows
  bool empty() const { return status.empty(); }
};

// Dual sign convention (minimization): row_dual >= 0 on >=-rows, <= 0 on
// <=-rows, free on =-rows. reduced_cost[j] = c_j - a_j'pi; at an optimum it
// is >= 0 for columns at their lower bound and <= 0 at their upper bound,
// which is what attributes bound duals.
struct LpSolution {
  LpStatus status = LpStatus::kIterationLimit;
  double objective = 0.0;
  std::vector<double> primal;
  std::vector<double> row_dual;
  std::vector<double> reduced_cost;
  std::vector<double> row_activity;
  Basis basis;
  long iterations = 0;
  int factorizations = 0;

  double lower_dual(int j) const {
    return basis.status[j] == VarStatus::kAtLower && reduced_cost[j] > 0.0 ? reduced_cost[j] : 0.0;
  }
  double upper_dual(int j) const {
    return basis.status[j] == VarStatus::kAtUpper && reduced_cost[j] < 0.0 ? reduced_cost[j] : 0.0;
  }
};

class LpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Basis condition estimate blew past the configured threshold, or the
// factorization could not recover a usable basis.
class NumericalInstability : public LpError {
 public:
  using LpError::LpError;
};

struct SimplexOptions {
  long max_iterations = -1;        // -1: 50 * (rows + cols)
  int refactor_interval = 64;      // eta updates between refactorizations
  int bland_window = 100;          // degenerate pivots before Bland's rule
  double feas_tol = 1e-9;          // primal tolerance, relative to bound size
  double dual_tol = 1e-9;          // dual tolerance, relative to cost scale
  double condition_limit = 1e14;   // pivot-ratio estimate threshold
};

// Single-use solver context: construct, call solve() once, read the result.
// Many contexts may run in parallel over the same immutable LinearProgram.
class SimplexSolver {
 public:
  explicit SimplexSolver(const LinearProgram& lp, SimplexOptions options = {});
  ~SimplexSolver();
  SimplexSolver(const SimplexSolver&) = delete;
  SimplexSolver& operator=(const SimplexSolver&) = delete;

  LpSolution solve();
  LpSolution solve(const Basis& warm_start);

 private:
  struct Impl;
  Impl* impl_;
};

inline LpSolution solve_lp(const LinearProgram& lp, SimplexOptions options = {}) {
  return SimplexSolver(lp, options).solve();
}
inline LpSolution solve_lp(const LinearProgram& lp, const Basis& warm, SimplexOptions options = {}) {
  return SimplexSolver(lp, options).solve(warm);
}

// Dual objective rhs'pi plus bound terms from the reduced costs; equals the
// primal objective at any optimum (strong duality). Throws LpError when the
// solution is not optimal.
double dual_objective(const LinearProgram& lp, const LpSolution& sol);

// Deterministic fixed-format textual dump, for debugging and golden tests.
// Layout: header, objective, rows, bounds; numbers printed with %.17g.
std::string dump_lp(const LinearProgram& lp);

}  // namespace tesp
