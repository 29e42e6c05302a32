#pragma once

#include <vector>

namespace mcsched {

// Small dense LP in standard inequality form:
//   maximize c.x  subject to  A x <= b,  x >= 0,  with  b >= 0,
// solved by primal tableau simplex from the slack basis with Bland's rule.
struct LpProblem {
  int n_vars = 0;
  std::vector<double> objective;          // size n_vars
  std::vector<std::vector<double>> rows;  // each of size n_vars
  std::vector<double> rhs;                // one per row, nonnegative
};

struct LpSolution {
  bool bounded = true;
  double value = 0.0;
  std::vector<double> x;
};

LpSolution solve_lp(const LpProblem& problem);

}  // namespace mcsched
