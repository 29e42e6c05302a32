#include "mcsched/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mcsched {

namespace {
constexpr double kTol = 1e-9;
constexpr long kMaxPivots = 200000;
}  // namespace

LpSolution solve_lp(const LpProblem& problem) {
  const int n = problem.n_vars;
  const int m = static_cast<int>(problem.rows.size());
  if (static_cast<int>(problem.objective.size()) != n)
    throw std::invalid_argument("solve_lp: objective size mismatch");
  if (problem.rhs.size() != problem.rows.size())
    throw std::invalid_argument("solve_lp: rhs size mismatch");
  for (double b : problem.rhs)
    if (b < 0.0) throw std::invalid_argument("solve_lp: negative rhs; slack basis infeasible");
  for (const auto& row : problem.rows)
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("solve_lp: row size mismatch");

  const int width = n + m;  // structural + slack columns
  std::vector<std::vector<double>> tab(m, std::vector<double>(width + 1, 0.0));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) tab[i][j] = problem.rows[i][j];
    tab[i][n + i] = 1.0;
    tab[i][width] = problem.rhs[i];
  }
  std::vector<double> cost(width, 0.0);  // reduced costs
  for (int j = 0; j < n; ++j) cost[j] = problem.objective[j];
  double value = 0.0;
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  // Dantzig pricing with stability-aware ratio ties by default; permanent
  // switch to Bland's rule once the objective stalls, which restores the
  // termination guarantee under degeneracy.
  bool bland = false;
  long stall = 0;
  for (long pivot_count = 0; pivot_count < kMaxPivots; ++pivot_count) {
    int enter = -1;
    if (bland) {
      for (int j = 0; j < width; ++j)
        if (cost[j] > kTol) {
          enter = j;
          break;
        }
    } else {
      double best_cost = kTol;
      for (int j = 0; j < width; ++j)
        if (cost[j] > best_cost) {
          best_cost = cost[j];
          enter = j;
        }
    }
    if (enter < 0) {
      LpSolution sol;
      sol.value = value;
      sol.x.assign(n, 0.0);
      for (int i = 0; i < m; ++i)
        if (basis[i] < n) sol.x[basis[i]] = std::max(0.0, tab[i][width]);
      // guard against silent numerical corruption of the tableau
      for (int r = 0; r < m; ++r) {
        double activity = 0.0;
        for (int j = 0; j < n; ++j) activity += problem.rows[r][j] * sol.x[j];
        if (activity > problem.rhs[r] + 1e-6 * std::max(1.0, std::abs(problem.rhs[r])))
          throw std::runtime_error("solve_lp: extracted solution violates a constraint");
      }
      return sol;
    }

    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (tab[i][enter] <= kTol) continue;
      const double ratio = tab[i][width] / tab[i][enter];
      if (ratio < best_ratio - kTol) {
        best_ratio = ratio;
        leave = i;
      } else if (ratio < best_ratio + kTol && leave >= 0) {
        if (bland ? basis[i] < basis[leave] : tab[i][enter] > tab[leave][enter]) leave = i;
      }
    }
    if (leave < 0) {
      LpSolution sol;
      sol.bounded = false;
      return sol;
    }

    const double step = cost[enter] * (tab[leave][width] / tab[leave][enter]);
    if (!bland) {
      stall = step > 1e-12 ? 0 : stall + 1;
      if (stall > 500) bland = true;
    }

    // Pivot.
    const double piv = tab[leave][enter];
    for (int j = 0; j <= width; ++j) tab[leave][j] /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == leave) continue;
      const double factor = tab[i][enter];
      if (factor == 0.0) continue;
      for (int j = 0; j <= width; ++j) tab[i][j] -= factor * tab[leave][j];
    }
    const double cfac = cost[enter];
    value += cfac * tab[leave][width];
    for (int j = 0; j < width; ++j) cost[j] -= cfac * tab[leave][j];
    basis[leave] = enter;
  }
  throw std::runtime_error("solve_lp: pivot limit exceeded");
}

}  // namespace mcsched
