#include "tesp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

namespace tesp {

void LinearProgram::check_structure() const {
  if (static_cast<int>(objective.size()) != num_vars || static_cast<int>(lower.size()) != num_vars ||
      static_cast<int>(upper.size()) != num_vars)
    throw std::invalid_argument("lp: objective/bound arrays out of sync with num_vars");
  for (int j = 0; j < num_vars; ++j) {
    if (lower[j] > upper[j])
      throw std::invalid_argument("lp: crossed bounds on variable " + std::to_string(j));
  }
  std::vector<int> seen(num_vars, -1);
  for (int i = 0; i < num_rows(); ++i) {
    for (const auto& [j, v] : rows[i].coeffs) {
      if (j < 0 || j >= num_vars)
        throw std::invalid_argument("lp: row " + std::to_string(i) + " references variable " +
                                    std::to_string(j));
      if (seen[j] == i)
        throw std::invalid_argument("lp: duplicate coefficient in row " + std::to_string(i) +
                                    " for variable " + std::to_string(j));
      seen[j] = i;
      (void)v;
    }
  }
}

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration-limit";
  }
  return "?";
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr double kPivotTol = 1e-9;     // smallest usable ratio-test pivot
constexpr double kDropTol = 1e-12;     // entries below this are treated as zero
constexpr double kSingularTol = 1e-11; // factorization pivot threshold

// LU factorization of a basis matrix. Row/column singletons are pivoted
// first (these incur no fill and keep their original numeric values); the
// remaining bump is factorized densely with partial pivoting and exported
// into the same pivot-sequence representation, so ftran/btran replay one
// uniform structure.
class BasisFactor {
 public:
  using SparseCol = std::vector<std::pair<int, double>>;

  bool factor(int m, const std::vector<const SparseCol*>& cols) {
    m_ = m;
    piv_row_.assign(m, -1);
    piv_col_.assign(m, -1);
    piv_val_.assign(m, 0.0);
    mults_.assign(m, {});
    urow_.assign(m, {});
    step_of_row_.assign(m, -1);
    if (m == 0) {
      cond_ = 1.0;
      return true;
    }

    // Row-wise mirror of the basis plus activity bookkeeping.
    std::vector<std::vector<std::pair<int, double>>> row_list(m);
    std::vector<int> row_cnt(m, 0), col_cnt(m, 0);
    std::vector<char> row_act(m, 1), col_act(m, 1);
    for (int j = 0; j < m; ++j) {
      for (const auto& [i, v] : *cols[j]) {
        if (std::fabs(v) <= kDropTol) continue;
        row_list[i].push_back({j, v});
        ++row_cnt[i];
        ++col_cnt[j];
      }
    }
    for (int i = 0; i < m; ++i)
      if (row_cnt[i] == 0) return false;
    for (int j = 0; j < m; ++j)
      if (col_cnt[j] == 0) return false;

    std::vector<int> sing_rows, sing_cols;
    for (int i = 0; i < m; ++i)
      if (row_cnt[i] == 1) sing_rows.push_back(i);
    for (int j = 0; j < m; ++j)
      if (col_cnt[j] == 1) sing_cols.push_back(j);

    int step = 0;
    double maxd = 0.0, mind = kInf;
    const auto record_diag = [&](double d) {
      maxd = std::max(maxd, std::fabs(d));
      mind = std::min(mind, std::fabs(d));
    };

    const auto deactivate = [&](int pr, int pc) {
      row_act[pr] = 0;
      col_act[pc] = 0;
      for (const auto& [j, v] : row_list[pr]) {
        (void)v;
        if (col_act[j] && --col_cnt[j] == 1) sing_cols.push_back(j);
      }
      for (const auto& [i, v] : *cols[pc]) {
        (void)v;
        if (std::fabs(v) <= kDropTol) continue;
        if (row_act[i] && --row_cnt[i] == 1) sing_rows.push_back(i);
      }
    };

    while (step < m) {
      int pr = -1, pc = -1;
      // Prefer column singletons (empty multiplier lists).
      while (!sing_cols.empty()) {
        const int j = sing_cols.back();
        sing_cols.pop_back();
        if (col_act[j] && col_cnt[j] == 1) {
          pc = j;
          for (const auto& [i, v] : *cols[j]) {
            if (std::fabs(v) <= kDropTol) continue;
            if (row_act[i]) { pr = i; break; }
          }
          break;
        }
      }
      if (pc < 0) {
        while (!sing_rows.empty()) {
          const int i = sing_rows.back();
          sing_rows.pop_back();
          if (row_act[i] && row_cnt[i] == 1) {
            pr = i;
            for (const auto& [j, v] : row_list[i]) {
              (void)v;
              if (col_act[j]) { pc = j; break; }
            }
            break;
          }
        }
      }
      if (pc < 0) break;  // no singletons left: bump time

      double d = 0.0;
      for (const auto& [i, v] : *cols[pc])
        if (i == pr) { d = v; break; }
      if (std::fabs(d) <= kSingularTol) return false;
      record_diag(d);

      piv_row_[step] = pr;
      piv_col_[step] = pc;
      piv_val_[step] = d;
      step_of_row_[pr] = step;
      for (const auto& [i, v] : *cols[pc]) {
        if (std::fabs(v) <= kDropTol || i == pr || !row_act[i]) continue;
        mults_[step].push_back({i, v / d});
      }
      for (const auto& [j, v] : row_list[pr]) {
        if (j == pc || !col_act[j]) continue;
        urow_[step].push_back({j, v});
      }
      deactivate(pr, pc);
      ++step;
    }

    // Dense bump over whatever rows/columns remain.
    const int nb = m - step;
    if (nb > 0) {
      std::vector<int> brows, bcols;
      brows.reserve(nb);
      bcols.reserve(nb);
      for (int i = 0; i < m; ++i)
        if (row_act[i]) brows.push_back(i);
      for (int j = 0; j < m; ++j)
        if (col_act[j]) bcols.push_back(j);
      std::vector<int> rpos(m, -1);
      for (int s = 0; s < nb; ++s) rpos[brows[s]] = s;
      std::vector<double> dmat(static_cast<std::size_t>(nb) * nb, 0.0);
      for (int s = 0; s < nb; ++s) {
        for (const auto& [i, v] : *cols[bcols[s]]) {
          if (std::fabs(v) <= kDropTol) continue;
          if (rpos[i] >= 0) dmat[static_cast<std::size_t>(rpos[i]) * nb + s] = v;
        }
      }
      std::vector<int> perm(nb);
      for (int s = 0; s < nb; ++s) perm[s] = s;
      for (int s = 0; s < nb; ++s) {
        int best = -1;
        double bestv = 0.0;
        for (int r = s; r < nb; ++r) {
          const double v = std::fabs(dmat[static_cast<std::size_t>(perm[r]) * nb + s]);
          if (v > bestv) { bestv = v; best = r; }
        }
        if (best < 0 || bestv <= kSingularTol) return false;
        std::swap(perm[s], perm[best]);
        double* prow = &dmat[static_cast<std::size_t>(perm[s]) * nb];
        const double d = prow[s];
        record_diag(d);
        const int k = step + s;
        piv_row_[k] = brows[perm[s]];
        piv_col_[k] = bcols[s];
        piv_val_[k] = d;
        step_of_row_[brows[perm[s]]] = k;
        for (int r = s + 1; r < nb; ++r) {
          double* irow = &dmat[static_cast<std::size_t>(perm[r]) * nb];
          const double f = irow[s] / d;
          if (std::fabs(f) <= kDropTol) continue;
          mults_[k].push_back({brows[perm[r]], f});
          for (int c = s + 1; c < nb; ++c) irow[c] -= f * prow[c];
          irow[s] = 0.0;
        }
        for (int c = s + 1; c < nb; ++c) {
          if (std::fabs(prow[c]) > kDropTol) urow_[k].push_back({bcols[c], prow[c]});
        }
      }
    }

    cond_ = mind > 0.0 ? maxd / mind : kInf;
    return true;
  }

  // v indexed by row on input; result indexed by basis position.
  void ftran(std::vector<double>& v, std::vector<double>& out) const {
    work_.assign(m_, 0.0);
    for (int k = 0; k < m_; ++k) {
      const double yk = v[piv_row_[k]];
      work_[k] = yk;
      if (yk != 0.0) {
        for (const auto& [i, mv] : mults_[k]) v[i] -= mv * yk;
      }
    }
    out.assign(m_, 0.0);
    for (int k = m_ - 1; k >= 0; --k) {
      double s = work_[k];
      for (const auto& [c, u] : urow_[k]) s -= u * out[c];
      out[piv_col_[k]] = s / piv_val_[k];
    }
  }

  // v indexed by basis position on input; result indexed by row.
  void btran(std::vector<double>& v, std::vector<double>& out) const {
    work_.assign(m_, 0.0);
    for (int k = 0; k < m_; ++k) {
      const double gk = v[piv_col_[k]] / piv_val_[k];
      work_[k] = gk;
      if (gk != 0.0) {
        for (const auto& [c, u] : urow_[k]) v[c] -= u * gk;
      }
    }
    // work_ holds U^{-T} v in pivot order; finish with the unit-upper L^T.
    ustep_.assign(m_, 0.0);
    out.assign(m_, 0.0);
    for (int k = m_ - 1; k >= 0; --k) {
      double s = work_[k];
      for (const auto& [i, mv] : mults_[k]) s -= mv * ustep_[step_of_row_[i]];
      ustep_[k] = s;
      out[piv_row_[k]] = s;
    }
  }

  double condition_estimate() const { return cond_; }

 private:
  int m_ = 0;
  std::vector<int> piv_row_, piv_col_;
  std::vector<double> piv_val_;
  std::vector<std::vector<std::pair<int, double>>> mults_;  // (row, multiplier)
  std::vector<std::vector<std::pair<int, double>>> urow_;   // (col position, value)
  std::vector<int> step_of_row_;
  double cond_ = 1.0;
  mutable std::vector<double> work_, ustep_;
};

struct Eta {
  int pos;                                    // basis position replaced
  double wp;                                  // pivot element w[pos]
  std::vector<std::pair<int, double>> w;      // other nonzeros of B^{-1} a_entering
};

}  // namespace

struct SimplexSolver::Impl {
  using SparseCol = std::vector<std::pair<int, double>>;

  const LinearProgram& lp;
  SimplexOptions opt;
  int n = 0, m = 0, N = 0;  // structurals, rows, total columns

  std::vector<SparseCol> cols;  // structurals then one logical per row
  std::vector<double> lb, ub, cost, rhs;

  std::vector<VarStatus> vstat;
  std::vector<int> basic;    // column at each basis position
  std::vector<int> pos_of;   // basis position per column, -1 if nonbasic
  std::vector<double> x;

  BasisFactor factor;
  std::vector<Eta> etas;
  long iterations = 0;
  long max_iterations = 0;
  int factorizations = 0;
  int cold_restarts = 0;
  int degen_streak = 0;
  bool bland = false;
  double cost_scale = 1.0;

  std::vector<double> work_row, work_pos, wcol, cB, pi;

  enum class PhaseResult { kDone, kUnbounded, kIterLimit };

  Impl(const LinearProgram& p, SimplexOptions o) : lp(p), opt(o) {
    lp.check_structure();
    n = lp.num_vars;
    m = lp.num_rows();
    N = n + m;
    max_iterations = opt.max_iterations >= 0 ? opt.max_iterations
                                             : 50L * (static_cast<long>(m) + n);

    cols.resize(N);
    lb.assign(N, 0.0);
    ub.assign(N, 0.0);
    cost.assign(N, 0.0);
    rhs.resize(m);
    for (int j = 0; j < n; ++j) {
      lb[j] = lp.lower[j];
      ub[j] = lp.upper[j];
      cost[j] = lp.objective[j];
      cost_scale = std::max(cost_scale, std::fabs(cost[j]));
    }
    for (int i = 0; i < m; ++i) {
      const auto& row = lp.rows[i];
      rhs[i] = row.rhs;
      for (const auto& [j, v] : row.coeffs) cols[j].push_back({i, v});
      const int s = n + i;
      cols[s] = {{i, 1.0}};
      switch (row.sense) {
        case RowSense::kLe: lb[s] = 0.0; ub[s] = kInf; break;
        case RowSense::kGe: lb[s] = -kInf; ub[s] = 0.0; break;
        case RowSense::kEq: lb[s] = 0.0; ub[s] = 0.0; break;
      }
    }
  }

  double feas_eps(double bound) const { return opt.feas_tol * (1.0 + std::fabs(bound)); }
  double dual_eps() const { return opt.dual_tol * cost_scale; }

  bool below_lb(int j) const { return x[j] < lb[j] - feas_eps(lb[j]); }
  bool above_ub(int j) const { return x[j] > ub[j] + feas_eps(ub[j]); }

  void set_cold_basis() {
    vstat.assign(N, VarStatus::kAtLower);
    x.assign(N, 0.0);
    pos_of.assign(N, -1);
    basic.resize(m);
    for (int j = 0; j < n; ++j) {
      if (std::isfinite(lb[j])) {
        vstat[j] = VarStatus::kAtLower;
        x[j] = lb[j];
      } else if (std::isfinite(ub[j])) {
        vstat[j] = VarStatus::kAtUpper;
        x[j] = ub[j];
      } else {
        vstat[j] = VarStatus::kNonbasicFree;
        x[j] = 0.0;
      }
    }
    for (int i = 0; i < m; ++i) {
      const int s = n + i;
      vstat[s] = VarStatus::kBasic;
      basic[i] = s;
      pos_of[s] = i;
    }
  }

  bool set_warm_basis(const Basis& warm) {
    if (static_cast<int>(warm.status.size()) != N) return false;
    std::vector<VarStatus> st = warm.status;
    int count = 0;
    for (int j = 0; j < N; ++j) {
      if (st[j] == VarStatus::kBasic) {
        ++count;
        continue;
      }
      // Repair nonbasic statuses that point at an absent bound.
      if (st[j] == VarStatus::kAtLower && !std::isfinite(lb[j]))
        st[j] = std::isfinite(ub[j]) ? VarStatus::kAtUpper : VarStatus::kNonbasicFree;
      else if (st[j] == VarStatus::kAtUpper && !std::isfinite(ub[j]))
        st[j] = std::isfinite(lb[j]) ? VarStatus::kAtLower : VarStatus::kNonbasicFree;
    }
    if (count != m) return false;
    vstat = std::move(st);
    x.assign(N, 0.0);
    pos_of.assign(N, -1);
    basic.clear();
    basic.reserve(m);
    for (int j = 0; j < N; ++j) {
      switch (vstat[j]) {
        case VarStatus::kBasic:
          pos_of[j] = static_cast<int>(basic.size());
          basic.push_back(j);
          break;
        case VarStatus::kAtLower: x[j] = lb[j]; break;
        case VarStatus::kAtUpper: x[j] = ub[j]; break;
        case VarStatus::kNonbasicFree: x[j] = 0.0; break;
      }
    }
    return true;
  }

  // Factorize the current basis and recompute basic values. Falls back to
  // the all-logical basis when the warm basis turns out singular.
  void refactorize() {
    std::vector<const SparseCol*> bc(m);
    for (int i = 0; i < m; ++i) bc[i] = &cols[basic[i]];
    if (!factor.factor(m, bc)) {
      if (++cold_restarts > 3)
        throw NumericalInstability("simplex: repeated singular basis factorizations");
      set_cold_basis();
      for (int i = 0; i < m; ++i) bc[i] = &cols[basic[i]];
      if (!factor.factor(m, bc))
        throw NumericalInstability("simplex: logical basis failed to factorize");
    }
    ++factorizations;
    etas.clear();
    if (factor.condition_estimate() > opt.condition_limit)
      throw NumericalInstability("simplex: basis condition estimate above limit");
    compute_basic_values();
  }

  void ftran_full(std::vector<double>& byrow, std::vector<double>& bypos) {
    factor.ftran(byrow, bypos);
    for (const Eta& e : etas) {
      const double t = bypos[e.pos] / e.wp;
      if (t != 0.0) {
        for (const auto& [j, wj] : e.w) bypos[j] -= t * wj;
      }
      bypos[e.pos] = t;
    }
  }

  void btran_full(std::vector<double>& bypos, std::vector<double>& byrow) {
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      double s = bypos[it->pos];
      for (const auto& [j, wj] : it->w) s -= wj * bypos[j];
      bypos[it->pos] = s / it->wp;
    }
    factor.btran(bypos, byrow);
  }

  void compute_basic_values() {
    work_row.assign(m, 0.0);
    for (int i = 0; i < m; ++i) work_row[i] = rhs[i];
    for (int j = 0; j < N; ++j) {
      if (vstat[j] == VarStatus::kBasic || x[j] == 0.0) continue;
      for (const auto& [i, v] : cols[j]) work_row[i] -= v * x[j];
    }
    std::vector<double> target = work_row;
    ftran_full(work_row, work_pos);
    // One step of iterative refinement keeps long factorizations honest.
    std::vector<double> resid = std::move(target);
    for (int p = 0; p < m; ++p) {
      const double xp = work_pos[p];
      if (xp == 0.0) continue;
      for (const auto& [i, v] : cols[basic[p]]) resid[i] -= v * xp;
    }
    std::vector<double> corr;
    ftran_full(resid, corr);
    for (int p = 0; p < m; ++p) work_pos[p] += corr[p];
    for (int i = 0; i < m; ++i) x[basic[i]] = work_pos[i];
  }

  // slack > 1 gives the acceptance checks hysteresis over the pivot-level
  // tolerance, so post-refactorization noise cannot ping-pong the phases.
  bool primal_feasible(double slack = 1.0) const {
    for (int i = 0; i < m; ++i) {
      const int j = basic[i];
      if (x[j] < lb[j] - slack * feas_eps(lb[j])) return false;
      if (x[j] > ub[j] + slack * feas_eps(ub[j])) return false;
    }
    return true;
  }

  // pi for the requested phase. Phase-1 costs are the classical composite
  // ones: -1 below the lower bound, +1 above the upper. Phase-2 duals get a
  // refinement pass; cut assembly needs them accurate.
  void compute_duals(bool phase1) {
    cB.assign(m, 0.0);
    for (int i = 0; i < m; ++i) {
      const int j = basic[i];
      if (phase1) {
        if (below_lb(j)) cB[i] = -1.0;
        else if (above_ub(j)) cB[i] = 1.0;
      } else {
        cB[i] = cost[j];
      }
    }
    std::vector<double> target = cB;
    btran_full(cB, pi);
    if (phase1) return;
    std::vector<double> resid = std::move(target);
    for (int p = 0; p < m; ++p) {
      double dot = 0.0;
      for (const auto& [i, v] : cols[basic[p]]) dot += v * pi[i];
      resid[p] -= dot;
    }
    std::vector<double> corr;
    btran_full(resid, corr);
    for (int i = 0; i < m; ++i) pi[i] += corr[i];
  }

  double reduced_cost(int j, bool phase1) const {
    double d = phase1 ? 0.0 : cost[j];
    for (const auto& [i, v] : cols[j]) d -= v * pi[i];
    return d;
  }

  // Returns the entering column, or -1 at (phase) optimality.
  int price(bool phase1, double* dq) const {
    const double tol = phase1 ? opt.dual_tol : dual_eps();
    int best = -1;
    double best_viol = tol;
    for (int j = 0; j < N; ++j) {
      if (vstat[j] == VarStatus::kBasic) continue;
      if (lb[j] == ub[j]) continue;  // fixed
      const double d = reduced_cost(j, phase1);
      double viol = 0.0;
      switch (vstat[j]) {
        case VarStatus::kAtLower: viol = -d; break;
        case VarStatus::kAtUpper: viol = d; break;
        case VarStatus::kNonbasicFree: viol = std::fabs(d); break;
        default: break;
      }
      if (viol > best_viol) {
        best = j;
        best_viol = viol;
        *dq = d;
        if (bland) break;  // lowest index wins under Bland's rule
      }
    }
    return best;
  }

  struct Ratio {
    double t = kInf;
    int pos = -1;          // leaving basis position; -1 none
    bool to_upper = false; // side the leaving variable lands on
    bool flip = false;     // entering variable reaches its other bound
  };

  // Blocking step length along the entering direction. In phase 1 a basic
  // variable that is outside its bounds blocks only where it regains
  // feasibility, in the classical composite manner.
  Ratio ratio_test(int q, double sigma, const std::vector<double>& w, bool phase1) const {
    Ratio best;
    const double range = ub[q] - lb[q];
    if (std::isfinite(range)) {
      best.t = range;
      best.flip = true;
    }
    for (int i = 0; i < m; ++i) {
      const double wi = w[i];
      if (std::fabs(wi) <= kPivotTol) continue;
      const int j = basic[i];
      const double delta = -sigma * wi;  // dx_j per unit of entering step
      double t = kInf;
      bool to_upper = false;
      if (phase1 && below_lb(j)) {
        if (delta > 0.0) { t = (lb[j] - x[j]) / delta; to_upper = false; }
      } else if (phase1 && above_ub(j)) {
        if (delta < 0.0) { t = (ub[j] - x[j]) / delta; to_upper = true; }
      } else if (delta < 0.0) {
        if (std::isfinite(lb[j])) { t = (lb[j] - x[j]) / delta; to_upper = false; }
      } else {
        if (std::isfinite(ub[j])) { t = (ub[j] - x[j]) / delta; to_upper = true; }
      }
      if (t < 0.0) t = 0.0;
      if (t < best.t - 1e-12 ||
          (t <= best.t + 1e-9 * (1.0 + best.t) && best.pos >= 0 &&
           std::fabs(wi) > std::fabs(w[best.pos]))) {
        best.t = t;
        best.pos = i;
        best.to_upper = to_upper;
        best.flip = false;
      }
    }
    return best;
  }

  void apply_step(int q, double sigma, double t, const std::vector<double>& w) {
    if (t != 0.0) {
      x[q] += sigma * t;
      for (int i = 0; i < m; ++i) {
        if (w[i] != 0.0) x[basic[i]] -= sigma * t * w[i];
      }
    }
  }

  void pivot(int q, int leave_pos, bool to_upper, const std::vector<double>& w) {
    const int lv = basic[leave_pos];
    x[lv] = to_upper ? ub[lv] : lb[lv];
    vstat[lv] = to_upper ? VarStatus::kAtUpper : VarStatus::kAtLower;
    if (!std::isfinite(x[lv])) {  // leaving a phase-1 block on an infinite side
      vstat[lv] = VarStatus::kNonbasicFree;
      x[lv] = 0.0;
    }
    pos_of[lv] = -1;
    vstat[q] = VarStatus::kBasic;
    basic[leave_pos] = q;
    pos_of[q] = leave_pos;

    Eta e;
    e.pos = leave_pos;
    e.wp = w[leave_pos];
    for (int i = 0; i < m; ++i) {
      if (i != leave_pos && std::fabs(w[i]) > kDropTol) e.w.push_back({i, w[i]});
    }
    etas.push_back(std::move(e));
  }

  PhaseResult run_phase(bool phase1) {
    bool fresh = etas.empty();
    for (;;) {
      if (iterations >= max_iterations) return PhaseResult::kIterLimit;
      if (static_cast<int>(etas.size()) >= opt.refactor_interval) {
        refactorize();
        fresh = true;
      }
      if (phase1 && primal_feasible()) return PhaseResult::kDone;

      compute_duals(phase1);
      double dq = 0.0;
      const int q = price(phase1, &dq);
      if (q < 0) {
        if (fresh) return PhaseResult::kDone;
        refactorize();
        fresh = true;
        continue;
      }

      const double sigma = dq < 0.0 ? 1.0 : -1.0;
      work_row.assign(m, 0.0);
      for (const auto& [i, v] : cols[q]) work_row[i] = v;
      ftran_full(work_row, wcol);

      const Ratio r = ratio_test(q, sigma, wcol, phase1);
      if (!std::isfinite(r.t)) {
        if (!phase1) {
          if (!fresh) {
            refactorize();
            fresh = true;
            continue;
          }
          return PhaseResult::kUnbounded;
        }
        // Composite phase 1 cannot be unbounded; force a refresh and retry.
        if (!fresh) {
          refactorize();
          fresh = true;
          continue;
        }
        throw NumericalInstability("simplex: unbounded phase-1 direction");
      }

      ++iterations;
      fresh = false;
      apply_step(q, sigma, r.t, wcol);
      if (r.flip) {
        vstat[q] = vstat[q] == VarStatus::kAtLower ? VarStatus::kAtUpper : VarStatus::kAtLower;
        x[q] = vstat[q] == VarStatus::kAtUpper ? ub[q] : lb[q];
      } else {
        pivot(q, r.pos, r.to_upper, wcol);
      }

      if (r.t <= 1e-10) {
        if (++degen_streak > opt.bland_window) bland = true;
      } else {
        degen_streak = 0;
        bland = false;
      }
    }
  }

  double primal_objective() const {
    double z = 0.0;
    for (int j = 0; j < n; ++j) z += cost[j] * x[j];
    return z;
  }

  LpSolution finalize(LpStatus status) {
    LpSolution sol;
    sol.status = status;
    sol.iterations = iterations;
    sol.factorizations = factorizations;
    sol.primal.assign(x.begin(), x.begin() + n);
    sol.objective = primal_objective();
    compute_duals(false);
    sol.row_dual.assign(pi.begin(), pi.end());
    sol.reduced_cost.resize(n);
    for (int j = 0; j < n; ++j) sol.reduced_cost[j] = reduced_cost(j, false);
    sol.row_activity.resize(m);
    for (int i = 0; i < m; ++i) sol.row_activity[i] = rhs[i] - x[n + i];
    sol.basis.status = vstat;
    return sol;
  }

  // Strong duality guard on optimal exits; catches any dual bookkeeping bug.
  void verify_optimal(const LpSolution& sol) const {
    double dual = 0.0;
    for (int i = 0; i < m; ++i) dual += rhs[i] * sol.row_dual[i];
    for (int j = 0; j < n; ++j) {
      if (vstat[j] == VarStatus::kAtLower && std::isfinite(lb[j]))
        dual += lb[j] * sol.reduced_cost[j];
      else if (vstat[j] == VarStatus::kAtUpper && std::isfinite(ub[j]))
        dual += ub[j] * sol.reduced_cost[j];
    }
    const double gap = std::fabs(dual - sol.objective);
    if (gap > 1e-6 * (1.0 + std::fabs(sol.objective) + cost_scale))
      throw NumericalInstability("simplex: strong duality violated at claimed optimum");
  }

  LpSolution run() {
    refactorize();
    for (int round = 0; round < 50; ++round) {
      if (!primal_feasible()) {
        const PhaseResult r = run_phase(true);
        if (r == PhaseResult::kIterLimit) return finalize(LpStatus::kIterationLimit);
        // Infeasibility is only declared beyond the loose threshold; small
        // residuals are numerical and phase 2 tolerates them.
        if (!primal_feasible(8.0)) return finalize(LpStatus::kInfeasible);
      }
      const PhaseResult r = run_phase(false);
      if (r == PhaseResult::kIterLimit) return finalize(LpStatus::kIterationLimit);
      if (r == PhaseResult::kUnbounded) return finalize(LpStatus::kUnbounded);
      refactorize();
      if (primal_feasible(8.0)) {
        compute_duals(false);
        double dq;
        if (price(false, &dq) < 0) {
          LpSolution sol = finalize(LpStatus::kOptimal);
          verify_optimal(sol);
          return sol;
        }
      }
    }
    throw NumericalInstability("simplex: failed to converge after repeated refreshes");
  }
};

SimplexSolver::SimplexSolver(const LinearProgram& lp, SimplexOptions options)
    : impl_(new Impl(lp, options)) {}

SimplexSolver::~SimplexSolver() { delete impl_; }

LpSolution SimplexSolver::solve() {
  impl_->set_cold_basis();
  return impl_->run();
}

LpSolution SimplexSolver::solve(const Basis& warm_start) {
  if (warm_start.empty() || !impl_->set_warm_basis(warm_start)) impl_->set_cold_basis();
  return impl_->run();
}

double dual_objective(const LinearProgram& lp, const LpSolution& sol) {
  if (sol.status != LpStatus::kOptimal)
    throw LpError("dual_objective: solution is not optimal");
  double dual = 0.0;
  for (int i = 0; i < lp.num_rows(); ++i) dual += lp.rows[i].rhs * sol.row_dual[i];
  for (int j = 0; j < lp.num_vars; ++j) {
    const VarStatus st = sol.basis.status[j];
    if (st == VarStatus::kAtLower && std::isfinite(lp.lower[j]))
      dual += lp.lower[j] * sol.reduced_cost[j];
    else if (st == VarStatus::kAtUpper && std::isfinite(lp.upper[j]))
      dual += lp.upper[j] * sol.reduced_cost[j];
  }
  return dual;
}

std::string dump_lp(const LinearProgram& lp) {
  std::string out = "lp 1\nminimize\n";
  for (int j = 0; j < lp.num_vars; ++j) out += "  c " + std::to_string(j) + " " + fmt(lp.objective[j]) + "\n";
  out += "rows " + std::to_string(lp.num_rows()) + "\n";
  for (int i = 0; i < lp.num_rows(); ++i) {
    const auto& row = lp.rows[i];
    const char* sense = row.sense == RowSense::kLe ? "<=" : row.sense == RowSense::kGe ? ">=" : "=";
    out += "  r " + std::to_string(i) + " " + sense + " " + fmt(row.rhs) + " :";
    for (const auto& [j, v] : row.coeffs) out += " " + std::to_string(j) + ":" + fmt(v);
    out += "\n";
  }
  out += "bounds\n";
  for (int j = 0; j < lp.num_vars; ++j)
    out += "  b " + std::to_string(j) + " " + fmt(lp.lower[j]) + " " + fmt(lp.upper[j]) + "\n";
  return out;
}

}  // namespace tesp
