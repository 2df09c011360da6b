#pragma once
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "desense/de.hpp"
#include "desense/ensembles.hpp"

namespace desense {

struct RegularDesignProblem {
  long n = 0, k = 0;
  double c0 = 1.0;
  int dv_max = 50, dc_max = 50;
  PriorModel prior = PriorModel::spike_discrete(0.05, 1.0);

  void check() const;
};

struct PreferentialDesignProblem {
  long n_H = 0, n_L = 0, k_H = 0, k_L = 0;
  int dv_max = 50;
  int dc_H = 0, dc_L = 0;
  double beta_H = 0.0, beta_L = 0.0;  // 0 -> log(n/k) per partition
  int T = 4;

  void check() const;            // throws on invalid sizes or k_H/n_H <= k_L/n_L
  bool ratio_warning() const;    // true when k_H/n_H < 2 * k_L/n_L
  double effective_beta_H() const;
  double effective_beta_L() const;
};

struct ConstraintEntry {
  double value = 0.0, bound = 0.0;
  bool satisfied = false;
};

struct DesignResult {
  bool preferential = false;
  GeneratingPolynomial lambda, rho;                       // regular designs
  GeneratingPolynomial lambda_H, lambda_L, rho_H, rho_L;  // preferential designs
  long m = 0;
  double achieved_rate = 0.0;
  std::map<std::string, ConstraintEntry> constraints;
  DETrace de_validation;
  bool de_converged = false;  // validation trace reached the zero fixed point
  bool valid = false;
  std::string warning;
};

// Necessary conditions from the closed-form DE analysis:
// (a1^2 bound, a2 bound) = (n/k, n/(c0 k log(n/k))).
std::pair<double, double> thm1_bounds(long n, long k, double c0);

// Whether a single-degree (dv, dc) pair meets both bounds.
bool regular_pair_feasible(const RegularDesignProblem& problem, int dv, int dc);

// Grid search over single-degree pairs minimizing rate dv/dc subject to the
// closed-form bounds; the winner is validated by a full noiseless DE run
// (reported honestly in de_converged, not gated on).
DesignResult optimize_regular(const RegularDesignProblem& problem);

struct PrefConstraintReport {
  ConstraintEntry variance;  // C_V <= 1
  ConstraintEntry error;     // C_E <= 1
  ConstraintEntry priority;  // C_P <= 0
  bool satisfied = false;
};

PrefConstraintReport pref_constraints(const GeneratingPolynomial& lambda_H,
                                      const GeneratingPolynomial& lambda_L,
                                      const GeneratingPolynomial& rho_H,
                                      const GeneratingPolynomial& rho_L,
                                      const PreferentialDesignProblem& problem);

// Initialization program: minimize Sum l*lambda_H,l subject to the edge
// coupling, the variance constraint (bound 1/(dc_H^2+dc_L^2)), the error
// constraint, simplex membership and no degree-1 mass. A secondary pass
// concentrates each side at its pinned mean (deterministic tie-break).
// Throws std::runtime_error naming the binding constraint when infeasible.
std::pair<GeneratingPolynomial, GeneratingPolynomial> init_preferential(
    const PreferentialDesignProblem& problem);

struct AlternatingOutcome {
  GeneratingPolynomial updated;
  bool stalled = false;  // sub-problem infeasible; previous iterate kept
};

// One alternating-minimization sub-step: with the other side fixed, every
// constraint is affine in the free side's moment sums, so this is a linear
// program. The edge coupling pins the free side's mean degree, making the
// rate objective constant; the tie-break minimizes Sum lambda_l/sqrt(l).
AlternatingOutcome alternating_step(const GeneratingPolynomial& lambda_H,
                                    const GeneratingPolynomial& lambda_L, char which,
                                    const PreferentialDesignProblem& problem);

// Full pipeline: init, T alternating iterations, constraint report, and a
// noiseless DE validation requiring (E_H, V_H, V_L) < 1e-6 within 500 steps.
DesignResult design_preferential(const PreferentialDesignProblem& problem);

// Deterministic adjacent-degree mass shift moving the mean to `target`
// exactly; realizes a fractional-mean design at an integer measurement
// count. Mass never enters degree 1. Throws std::invalid_argument when the
// target is unreachable.
GeneratingPolynomial retarget_mean(const GeneratingPolynomial& poly, double target);

// Ensemble specs realizing a design result: m comes from the edge identity
// rounded up, then each variable-side distribution is retargeted so the
// counting identity holds exactly at that integer m.
RegularEnsembleSpec design_to_spec(const DesignResult& result, long n);
PreferentialEnsembleSpec design_to_spec(const DesignResult& result, long n_H, long n_L);

}  // namespace desense
