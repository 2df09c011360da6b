#pragma once
#include <vector>

namespace desense {

// Minimize c.x subject to the given rows and x >= 0.
struct LinearProgram {
  int nvars = 0;
  std::vector<double> objective;
  struct Row {
    std::vector<double> a;
    char rel;  // '<', '=', '>'
    double rhs;
  };
  std::vector<Row> rows;

  explicit LinearProgram(int nvars_ = 0) : nvars(nvars_), objective(nvars_, 0.0) {}
  void add_row(std::vector<double> a, char rel, double rhs) {
    rows.push_back({std::move(a), rel, rhs});
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> x;
  double value = 0.0;
};

// Dense two-phase simplex with Bland's rule (deterministic anti-cycling),
// tolerance 1e-9. Intended for the small design programs in this project.
LpSolution lp_solve(const LinearProgram& lp);

}  // namespace desense
