#pragma once

#include <cmath>
#include <vector>

#include "tesp/lp.hpp"

// Brute-force LP oracle, independent of the simplex implementation: every
// candidate vertex is the solution of a square system formed by k rows taken
// at equality plus n-k variables pinned to a bound. Intended for small LPs
// whose variables all have finite bounds.
namespace tesp::testing {

struct VertexOracleResult {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
};

namespace detail {

// Solves sys * x = rhs by Gaussian elimination with partial pivoting.
// Returns false when the system is numerically singular.
inline bool solve_square(std::vector<std::vector<double>> sys, std::vector<double> rhs,
                         std::vector<double>& out) {
  const int k = static_cast<int>(rhs.size());
  for (int col = 0; col < k; ++col) {
    int piv = -1;
    double best = 1e-9;
    for (int r = col; r < k; ++r) {
      if (std::fabs(sys[r][col]) > best) {
        best = std::fabs(sys[r][col]);
        piv = r;
      }
    }
    if (piv < 0) return false;
    std::swap(sys[col], sys[piv]);
    std::swap(rhs[col], rhs[piv]);
    for (int r = col + 1; r < k; ++r) {
      const double f = sys[r][col] / sys[col][col];
      if (f == 0.0) continue;
      for (int c = col; c < k; ++c) sys[r][c] -= f * sys[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  out.assign(k, 0.0);
  for (int r = k - 1; r >= 0; --r) {
    double s = rhs[r];
    for (int c = r + 1; c < k; ++c) s -= sys[r][c] * out[c];
    out[r] = s / sys[r][r];
  }
  return true;
}

inline bool point_feasible(const LinearProgram& lp, const std::vector<double>& x, double tol) {
  for (int j = 0; j < lp.num_vars; ++j) {
    if (x[j] < lp.lower[j] - tol * (1.0 + std::fabs(lp.lower[j]))) return false;
    if (x[j] > lp.upper[j] + tol * (1.0 + std::fabs(lp.upper[j]))) return false;
  }
  for (const auto& row : lp.rows) {
    double a = 0.0;
    for (const auto& [j, v] : row.coeffs) a += v * x[j];
    const double slack = row.rhs - a;
    const double eps = tol * (1.0 + std::fabs(row.rhs));
    if (row.sense == RowSense::kLe && slack < -eps) return false;
    if (row.sense == RowSense::kGe && slack > eps) return false;
    if (row.sense == RowSense::kEq && std::fabs(slack) > eps) return false;
  }
  return true;
}

}  // namespace detail

inline VertexOracleResult enumerate_best_vertex(const LinearProgram& lp, double tol = 1e-8) {
  const int n = lp.num_vars;
  const int m = lp.num_rows();
  VertexOracleResult best;

  std::vector<int> row_set, var_set;
  std::vector<double> dense_row(n);

  // choose(list, k) iterates over index subsets via simple recursion.
  const auto for_subsets = [](int total, int k, auto&& body) {
    std::vector<int> pick;
    pick.reserve(k);
    auto rec = [&](auto&& self, int start) -> void {
      if (static_cast<int>(pick.size()) == k) {
        body(pick);
        return;
      }
      for (int i = start; i <= total - (k - static_cast<int>(pick.size())); ++i) {
        pick.push_back(i);
        self(self, i + 1);
        pick.pop_back();
      }
    };
    rec(rec, 0);
  };

  const auto consider = [&](const std::vector<double>& x) {
    if (!detail::point_feasible(lp, x, tol)) return;
    double obj = 0.0;
    for (int j = 0; j < n; ++j) obj += lp.objective[j] * x[j];
    if (!best.feasible || obj < best.objective) {
      best.feasible = true;
      best.objective = obj;
      best.x = x;
    }
  };

  for (int k = 0; k <= std::min(n, m); ++k) {
    for_subsets(m, k, [&](const std::vector<int>& rows) {
      const int free_needed = n - k;
      for_subsets(n, free_needed, [&](const std::vector<int>& pinned) {
        // pinned holds the variables fixed at a bound; iterate bound sides.
        const int combos = 1 << free_needed;
        for (int mask = 0; mask < combos; ++mask) {
          std::vector<double> x(n, 0.0);
          std::vector<char> is_pinned(n, 0);
          bool ok = true;
          for (int t = 0; t < free_needed; ++t) {
            const int j = pinned[t];
            const double b = (mask >> t) & 1 ? lp.upper[j] : lp.lower[j];
            if (!std::isfinite(b)) { ok = false; break; }
            x[j] = b;
            is_pinned[j] = 1;
          }
          if (!ok) continue;
          std::vector<int> free_vars;
          for (int j = 0; j < n; ++j)
            if (!is_pinned[j]) free_vars.push_back(j);
          if (static_cast<int>(free_vars.size()) != k) continue;
          if (k == 0) {
            consider(x);
            continue;
          }
          std::vector<std::vector<double>> sys(k, std::vector<double>(k, 0.0));
          std::vector<double> rv(k, 0.0);
          for (int r = 0; r < k; ++r) {
            const auto& row = lp.rows[rows[r]];
            double shift = row.rhs;
            std::fill(dense_row.begin(), dense_row.end(), 0.0);
            for (const auto& [j, v] : row.coeffs) dense_row[j] = v;
            for (int t = 0; t < static_cast<int>(pinned.size()); ++t)
              shift -= dense_row[pinned[t]] * x[pinned[t]];
            for (int c = 0; c < k; ++c) sys[r][c] = dense_row[free_vars[c]];
            rv[r] = shift;
          }
          std::vector<double> sol;
          if (!detail::solve_square(sys, rv, sol)) continue;
          for (int c = 0; c < k; ++c) x[free_vars[c]] = sol[c];
          consider(x);
        }
      });
    });
  }
  return best;
}

}  // namespace tesp::testing
