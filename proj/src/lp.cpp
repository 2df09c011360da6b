#include "desense/lp.hpp"

#include <cmath>
#include <stdexcept>

namespace desense {

namespace {
constexpr double kEps = 1e-9;
constexpr double kPivotEps = 1e-12;
}

LpSolution lp_solve(const LinearProgram& lp) {
  const int m = int(lp.rows.size());
  const int n = lp.nvars;
  for (const auto& row : lp.rows)
    if (int(row.a.size()) != n) throw std::invalid_argument("lp_solve: row width mismatch");

  // Column layout: [structural | slack/surplus | artificial], rhs kept apart.
  // Count columns against the normalized relation: negative-rhs rows are
  // sign-flipped below, which swaps '<' and '>'.
  int nslack = 0, nart = 0;
  for (const auto& row : lp.rows) {
    char rel = row.rel;
    if (row.rhs < 0.0) {
      if (rel == '<') rel = '>';
      else if (rel == '>') rel = '<';
    }
    if (rel == '<' || rel == '>') ++nslack;
    if (rel == '=' || rel == '>') ++nart;
  }
  const int ncols = n + nslack + nart;
  std::vector<std::vector<double>> T(m, std::vector<double>(ncols, 0.0));
  std::vector<double> rhs(m);
  std::vector<int> basis(m, -1);
  std::vector<bool> artificial(ncols, false);

  int scol = n, acol = n + nslack;
  for (int i = 0; i < m; ++i) {
    const auto& row = lp.rows[i];
    double sgn = row.rhs < 0.0 ? -1.0 : 1.0;  // keep rhs non-negative
    char rel = row.rel;
    if (sgn < 0.0 && rel == '<') rel = '>';
    else if (sgn < 0.0 && rel == '>') rel = '<';
    for (int j = 0; j < n; ++j) T[i][j] = sgn * row.a[j];
    rhs[i] = sgn * row.rhs;
    if (rel == '<') {
      T[i][scol] = 1.0;
      basis[i] = scol++;
    } else if (rel == '>') {
      T[i][scol++] = -1.0;
      T[i][acol] = 1.0;
      artificial[acol] = true;
      basis[i] = acol++;
    } else {
      T[i][acol] = 1.0;
      artificial[acol] = true;
      basis[i] = acol++;
    }
  }

  std::vector<bool> allowed(ncols, true);

  auto pivot = [&](int pr, int pc) {
    double piv = T[pr][pc];
    for (int j = 0; j < ncols; ++j) T[pr][j] /= piv;
    rhs[pr] /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == pr) continue;
      double f = T[i][pc];
      if (std::fabs(f) < kPivotEps) continue;
      for (int j = 0; j < ncols; ++j) T[i][j] -= f * T[pr][j];
      rhs[i] -= f * rhs[pr];
    }
    basis[pr] = pc;
  };

  // Bland: entering = lowest-index column with negative reduced cost;
  // leaving = lowest basis index among minimum-ratio rows.
  auto iterate = [&](const std::vector<double>& cost) -> bool {
    std::vector<double> y(m);
    for (;;) {
      for (int i = 0; i < m; ++i) y[i] = cost[basis[i]];
      int enter = -1;
      for (int j = 0; j < ncols && enter < 0; ++j) {
        if (!allowed[j]) continue;
        bool in_basis = false;
        for (int i = 0; i < m; ++i)
          if (basis[i] == j) { in_basis = true; break; }
        if (in_basis) continue;
        double cbar = cost[j];
        for (int i = 0; i < m; ++i) cbar -= y[i] * T[i][j];
        if (cbar < -kEps) enter = j;
      }
      if (enter < 0) return true;  // optimal for this phase
      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < m; ++i) {
        if (T[i][enter] > kPivotEps) {
          double ratio = rhs[i] / T[i][enter];
          if (leave < 0 || ratio < best - kPivotEps ||
              (std::fabs(ratio - best) <= kPivotEps && basis[i] < basis[leave])) {
            leave = i;
            best = ratio;
          }
        }
      }
      if (leave < 0) return false;  // unbounded direction
      pivot(leave, enter);
    }
  };

  LpSolution sol;

  if (nart > 0) {
    std::vector<double> phase1(ncols, 0.0);
    for (int j = 0; j < ncols; ++j)
      if (artificial[j]) phase1[j] = 1.0;
    if (!iterate(phase1)) throw std::logic_error("lp_solve: phase-1 unbounded");
    double infeas = 0.0;
    for (int i = 0; i < m; ++i)
      if (artificial[basis[i]]) infeas += rhs[i];
    if (infeas > 1e-7) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }
    // Drive leftover artificials out of the basis where possible.
    for (int i = 0; i < m; ++i) {
      if (!artificial[basis[i]]) continue;
      int pc = -1;
      for (int j = 0; j < ncols && pc < 0; ++j)
        if (!artificial[j] && std::fabs(T[i][j]) > 1e-8) pc = j;
      if (pc >= 0) pivot(i, pc);
    }
    for (int j = 0; j < ncols; ++j)
      if (artificial[j]) allowed[j] = false;
  }

  std::vector<double> cost(ncols, 0.0);
  for (int j = 0; j < n; ++j) cost[j] = lp.objective[j];
  if (!iterate(cost)) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }

  sol.status = LpStatus::Optimal;
  sol.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) sol.x[basis[i]] = rhs[i];
  sol.value = 0.0;
  for (int j = 0; j < n; ++j) sol.value += lp.objective[j] * sol.x[j];
  return sol;
}

}  // namespace desense
