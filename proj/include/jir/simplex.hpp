#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "jir/common.hpp"

//
// Small dense two-phase simplex, enough for the exact converse LP: a few
// hundred rows and variables. Bland's rule, so no cycling.
//

namespace jir {

struct LpResult {
  bool feasible = false;
  bool bounded = true;
  double objective = kNaN;
  Vec x;
};

// min c.x  subject to  a_ub x <= b_ub,  a_eq x = b_eq,  x >= 0.
inline LpResult solve_lp(const Vec& c, const Mat& a_ub, const Vec& b_ub, const Mat& a_eq,
                         const Vec& b_eq) {
  constexpr double tol = 1e-9;
  const std::size_t n = c.size();
  const std::size_t m1 = a_ub.rows, m2 = a_eq.rows, m = m1 + m2;
  if (a_ub.rows > 0 && a_ub.cols != n) throw ConfigError("lp: a_ub column count mismatch");
  if (a_eq.rows > 0 && a_eq.cols != n) throw ConfigError("lp: a_eq column count mismatch");
  if (b_ub.size() != m1 || b_eq.size() != m2) throw ConfigError("lp: rhs length mismatch");

  // columns: structural | slack (one per ub row) | artificial (one per row)
  const std::size_t n_slack = m1;
  const std::size_t n_real = n + n_slack;
  const std::size_t N = n_real + m;
  std::vector<Vec> tab(m, Vec(N + 1, 0.0));
  for (std::size_t i = 0; i < m1; ++i) {
    double sign = b_ub[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tab[i][j] = sign * a_ub(i, j);
    tab[i][n + i] = sign;
    tab[i][N] = sign * b_ub[i];
  }
  for (std::size_t k = 0; k < m2; ++k) {
    std::size_t i = m1 + k;
    double sign = b_eq[k] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tab[i][j] = sign * a_eq(k, j);
    tab[i][N] = sign * b_eq[k];
  }
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    tab[i][n_real + i] = 1.0;
    basis[i] = n_real + i;
  }
  std::vector<char> dead(m, 0);

  auto pivot = [&](std::size_t row, std::size_t col) {
    double p = tab[row][col];
    for (double& v : tab[row]) v /= p;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == row) continue;
      double factor = tab[i][col];
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j <= N; ++j) tab[i][j] -= factor * tab[row][j];
      tab[i][col] = 0.0;
    }
    basis[row] = col;
  };

  // Bland: first improving column enters; smallest basic index leaves on
  // ratio ties. Returns false when the objective is unbounded below.
  auto run = [&](const Vec& cost, std::size_t col_limit) -> bool {
    for (std::size_t iter = 0; iter < 200000; ++iter) {
      std::size_t enter = N;
      for (std::size_t j = 0; j < col_limit; ++j) {
        double r = cost[j];
        for (std::size_t i = 0; i < m; ++i)
          if (!dead[i] && cost[basis[i]] != 0.0) r -= cost[basis[i]] * tab[i][j];
        if (r < -tol) {
          enter = j;
          break;
        }
      }
      if (enter == N) return true;
      std::size_t leave = m;
      double best_ratio = kInf;
      for (std::size_t i = 0; i < m; ++i) {
        if (dead[i] || tab[i][enter] <= tol) continue;
        double ratio = tab[i][N] / tab[i][enter];
        if (ratio < best_ratio || (ratio == best_ratio && (leave == m || basis[i] < basis[leave]))) {
          best_ratio = ratio;
          leave = i;
        }
      }
      if (leave == m) return false;
      pivot(leave, enter);
    }
    throw SolverError("lp: iteration cap hit", kNaN, kNaN, 200000);
  };

  // phase 1: minimize the artificial mass
  Vec cost1(N + 1, 0.0);
  for (std::size_t j = n_real; j < N; ++j) cost1[j] = 1.0;
  run(cost1, N);
  double art_mass = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] >= n_real) art_mass += tab[i][N];
  LpResult res;
  if (art_mass > 1e-7) return res;  // infeasible

  // pivot leftover (zero-valued) artificials out; all-zero rows are redundant
  for (std::size_t i = 0; i < m; ++i) {
    if (dead[i] || basis[i] < n_real) continue;
    std::size_t col = N;
    for (std::size_t j = 0; j < n_real; ++j)
      if (std::abs(tab[i][j]) > tol) {
        col = j;
        break;
      }
    if (col == N) {
      dead[i] = 1;
      continue;
    }
    pivot(i, col);
  }

  // phase 2: the real objective, artificial columns excluded
  Vec cost2(N + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) cost2[j] = c[j];
  res.feasible = true;
  res.bounded = run(cost2, n_real);
  res.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (!dead[i] && basis[i] < n) res.x[basis[i]] = tab[i][N];
  if (res.bounded) {
    res.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j) res.objective += c[j] * res.x[j];
  } else {
    res.objective = -kInf;
  }
  return res;
}

}  // namespace jir
