#include "desense/design.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "desense/lp.hpp"

namespace desense {

void RegularDesignProblem::check() const {
  if (!(k > 0 && k < n)) throw std::invalid_argument("design problem: need 0 < k < n");
  if (!(c0 > 0.0)) throw std::invalid_argument("design problem: c0 must be positive");
  if (dv_max < 2 || dc_max < 2)
    throw std::invalid_argument("design problem: degree caps must be >= 2");
  prior.check();
}

void PreferentialDesignProblem::check() const {
  if (n_L <= 0) throw std::invalid_argument("design problem: empty low-priority partition");
  if (n_H <= 0) throw std::invalid_argument("design problem: empty high-priority partition");
  if (!(k_H > 0 && k_H < n_H) || !(k_L > 0 && k_L < n_L))
    throw std::invalid_argument("design problem: need 0 < k < n per partition");
  if (dv_max < 2) throw std::invalid_argument("design problem: dv_max must be >= 2");
  if (dc_H < 1 || dc_L < 1)
    throw std::invalid_argument("design problem: check degrees must be >= 1");
  double rh = double(k_H) / n_H, rl = double(k_L) / n_L;
  if (!(rh > rl))
    throw std::invalid_argument(
        "design problem: preferential design assumes k_H/n_H > k_L/n_L strictly");
}

bool PreferentialDesignProblem::ratio_warning() const {
  return (double(k_H) / n_H) < 2.0 * (double(k_L) / n_L);
}

double PreferentialDesignProblem::effective_beta_H() const {
  return beta_H > 0.0 ? beta_H : std::log(double(n_H) / double(k_H));
}
double PreferentialDesignProblem::effective_beta_L() const {
  return beta_L > 0.0 ? beta_L : std::log(double(n_L) / double(k_L));
}

std::pair<double, double> thm1_bounds(long n, long k, double c0) {
  if (!(k > 0 && k < n)) throw std::invalid_argument("thm1_bounds: need 0 < k < n");
  if (!(c0 > 0.0)) throw std::invalid_argument("thm1_bounds: c0 must be positive");
  double lg = std::log(double(n) / double(k));
  if (!(lg > 0.0)) throw std::runtime_error("thm1_bounds: log(n/k) is zero (k = n)");
  return {double(n) / double(k), double(n) / (c0 * double(k) * lg)};
}

bool regular_pair_feasible(const RegularDesignProblem& problem, int dv, int dc) {
  auto [a1sq_bound, a2_bound] = thm1_bounds(problem.n, problem.k, problem.c0);
  double ratio = double(dc) / double(dv);  // a1^2 = a2 = dc/dv for single degrees
  return ratio <= a1sq_bound + 1e-12 && ratio <= a2_bound + 1e-12;
}

DesignResult optimize_regular(const RegularDesignProblem& problem) {
  problem.check();
  auto [a1sq_bound, a2_bound] = thm1_bounds(problem.n, problem.k, problem.c0);
  int best_dv = -1, best_dc = -1;
  double best_rate = 0.0;
  for (int dv = 2; dv <= problem.dv_max; ++dv) {
    for (int dc = 2; dc <= problem.dc_max; ++dc) {
      if (!regular_pair_feasible(problem, dv, dc)) continue;
      double rate = double(dv) / double(dc);
      if (best_dv < 0 || rate < best_rate - 1e-15) {
        best_dv = dv;
        best_dc = dc;
        best_rate = rate;
      }
    }
  }
  if (best_dv < 0) {
    double tightest = std::min(a1sq_bound, a2_bound);
    throw std::runtime_error(
        "optimize_regular: infeasible within degree caps; binding constraint: "
        "dc/dv <= " +
        std::to_string(tightest) + (a2_bound <= a1sq_bound ? " (a2 bound)" : " (a1^2 bound)"));
  }

  DesignResult res;
  res.preferential = false;
  res.lambda = GeneratingPolynomial::single(best_dv);
  res.rho = GeneratingPolynomial::single(best_dc);
  res.achieved_rate = best_rate;
  res.m = (long)std::ceil(double(problem.n) * best_rate - 1e-9);
  double ratio = double(best_dc) / double(best_dv);
  res.constraints["a1_squared"] = {ratio, a1sq_bound, ratio <= a1sq_bound + 1e-12};
  res.constraints["a2"] = {ratio, a2_bound, ratio <= a2_bound + 1e-12};

  RegularEnsembleSpec spec = design_to_spec(res, problem.n);
  DEConfig cfg;
  cfg.noise_variance = 0.0;
  const PriorModel& prior = problem.prior;
  res.de_validation = de_run(
      de_initial_state(prior),
      [&](DEStateRegular s) { return de_step_regular(s, spec, prior, cfg); }, cfg);
  res.de_converged = res.de_validation.at_zero();
  res.valid = true;
  for (auto& [name, c] : res.constraints) res.valid = res.valid && c.satisfied;
  return res;
}

PrefConstraintReport pref_constraints(const GeneratingPolynomial& lambda_H,
                                      const GeneratingPolynomial& lambda_L,
                                      const GeneratingPolynomial& rho_H,
                                      const GeneratingPolynomial& rho_L,
                                      const PreferentialDesignProblem& problem) {
  lambda_H.check();
  lambda_L.check();
  rho_H.check();
  rho_L.check();
  double S_H = lambda_H.mean_inv(), S_L = lambda_L.mean_inv();
  double T_H = lambda_H.mean_isqrt(), T_L = lambda_L.mean_isqrt();
  double kh = double(problem.k_H) / problem.n_H, kl = double(problem.k_L) / problem.n_L;
  double wH = problem.effective_beta_H() * kh, wL = problem.effective_beta_L() * kl;
  double rho_mean_sq = rho_H.mean() * rho_H.mean() + rho_L.mean() * rho_L.mean();
  double rho_sqrt_sq = rho_H.mean_sqrt() * rho_H.mean_sqrt() + rho_L.mean_sqrt() * rho_L.mean_sqrt();

  PrefConstraintReport rep;
  double cv = (wH * S_H * wH * S_H + wL * S_L * wL * S_L) * rho_mean_sq;
  rep.variance = {cv, 1.0, cv <= 1.0 + 1e-9};
  double ce = kh * T_H * T_H * rho_sqrt_sq;
  rep.error = {ce, 1.0, ce <= 1.0 + 1e-9};
  double cp = kh * T_H * T_H - kl * T_L * T_L;
  rep.priority = {cp, 0.0, cp <= 1e-9};
  rep.satisfied = rep.variance.satisfied && rep.error.satisfied && rep.priority.satisfied;
  return rep;
}

namespace {

// LP variables are fractions on degrees 2..dv_max for one or two sides.
struct DegreeVars {
  int dv_max;
  int count() const { return dv_max - 1; }
  int degree(int idx) const { return idx + 2; }
};

GeneratingPolynomial to_poly(const std::vector<double>& x, int offset, const DegreeVars& dv) {
  std::vector<std::pair<int, double>> pairs;
  double sum = 0.0;
  for (int i = 0; i < dv.count(); ++i) sum += std::max(0.0, x[offset + i]);
  for (int i = 0; i < dv.count(); ++i) {
    double v = std::max(0.0, x[offset + i]) / sum;
    if (v > 1e-12) pairs.push_back({dv.degree(i), v});
  }
  // renormalize the kept entries so the simplex invariant holds exactly
  double kept = 0.0;
  for (auto& [d, v] : pairs) kept += v;
  for (auto& [d, v] : pairs) v /= kept;
  return GeneratingPolynomial::from_pairs(pairs);
}

std::vector<double> row_sum(const DegreeVars& dv, int nsides, int side, double (*f)(double)) {
  std::vector<double> a(dv.count() * nsides, 0.0);
  for (int i = 0; i < dv.count(); ++i) a[side * dv.count() + i] = f(double(dv.degree(i)));
  return a;
}

double f_one(double) { return 1.0; }
double f_deg(double d) { return d; }
double f_isqrt(double d) { return 1.0 / std::sqrt(d); }

bool same_poly(const GeneratingPolynomial& a, const GeneratingPolynomial& b) {
  int dmax = std::max(a.max_degree(), b.max_degree());
  for (int d = 0; d <= dmax; ++d)
    if (std::abs(a.fraction(d) - b.fraction(d)) > 1e-12) return false;
  return true;
}

// Solve with tangent cuts enforcing (wH*S_H)^2 + (wL*S_L)^2 <= r where S is
// the mean-inverse sum of the indicated side(s); a side with fixed
// contribution passes it through fixed_sq.
struct CvCutSpec {
  double wH = 0.0, wL = 0.0, r = 0.0;
  int side_H = -1, side_L = -1;  // -1: that side is fixed
  double fixed_H = 0.0, fixed_L = 0.0;
};

LpSolution solve_with_cv_cuts(LinearProgram lp, const DegreeVars& dv, int nsides,
                              const CvCutSpec& cv) {
  for (int iter = 0; iter < 100; ++iter) {
    LpSolution sol = lp_solve(lp);
    if (sol.status != LpStatus::Optimal) return sol;
    double S_H = cv.fixed_H, S_L = cv.fixed_L;
    if (cv.side_H >= 0)
      for (int i = 0; i < dv.count(); ++i)
        S_H += sol.x[cv.side_H * dv.count() + i] / dv.degree(i);
    if (cv.side_L >= 0)
      for (int i = 0; i < dv.count(); ++i)
        S_L += sol.x[cv.side_L * dv.count() + i] / dv.degree(i);
    double g = cv.wH * S_H * cv.wH * S_H + cv.wL * S_L * cv.wL * S_L;
    if (g <= cv.r + 1e-12) return sol;
    // tangent of the convex quadratic at (S_H, S_L)
    std::vector<double> a(dv.count() * nsides, 0.0);
    double rhs = cv.r - g;
    if (cv.side_H >= 0)
      for (int i = 0; i < dv.count(); ++i)
        a[cv.side_H * dv.count() + i] = 2.0 * cv.wH * cv.wH * S_H / dv.degree(i);
    rhs += 2.0 * cv.wH * cv.wH * S_H * S_H;
    if (cv.side_L >= 0)
      for (int i = 0; i < dv.count(); ++i)
        a[cv.side_L * dv.count() + i] = 2.0 * cv.wL * cv.wL * S_L / dv.degree(i);
    rhs += 2.0 * cv.wL * cv.wL * S_L * S_L;
    lp.add_row(std::move(a), '<', rhs);
  }
  LpSolution fail;
  fail.status = LpStatus::Infeasible;
  return fail;
}

}  // namespace

std::pair<GeneratingPolynomial, GeneratingPolynomial> init_preferential(
    const PreferentialDesignProblem& problem) {
  problem.check();
  DegreeVars dv{problem.dv_max};
  const int D = dv.count();
  double kh = double(problem.k_H) / problem.n_H, kl = double(problem.k_L) / problem.n_L;

  CvCutSpec cv;
  cv.wH = problem.effective_beta_H() * kh;
  cv.wL = problem.effective_beta_L() * kl;
  cv.r = 1.0 / (double(problem.dc_H) * problem.dc_H + double(problem.dc_L) * problem.dc_L);
  cv.side_H = 0;
  cv.side_L = 1;

  LinearProgram base(2 * D);
  base.add_row(row_sum(dv, 2, 0, f_one), '=', 1.0);
  base.add_row(row_sum(dv, 2, 1, f_one), '=', 1.0);
  {
    std::vector<double> coupling(2 * D, 0.0);
    for (int i = 0; i < D; ++i) {
      coupling[i] = double(problem.n_H) * problem.dc_L * dv.degree(i);
      coupling[D + i] = -double(problem.n_L) * problem.dc_H * dv.degree(i);
    }
    base.add_row(std::move(coupling), '=', 0.0);
  }
  if (lp_solve(base).status != LpStatus::Optimal)
    throw std::runtime_error("init_preferential: infeasible; binding constraint: edge coupling");

  double error_bound =
      std::sqrt(double(problem.n_H) / (double(problem.k_H) * (problem.dc_H + problem.dc_L)));
  base.add_row(row_sum(dv, 2, 0, f_isqrt), '<', error_bound);

  LinearProgram stage1 = base;
  stage1.objective = row_sum(dv, 2, 0, f_deg);
  {
    LpSolution probe = lp_solve(stage1);
    if (probe.status != LpStatus::Optimal)
      throw std::runtime_error("init_preferential: infeasible; binding constraint: error bound");
  }
  LpSolution s1 = solve_with_cv_cuts(stage1, dv, 2, cv);
  if (s1.status != LpStatus::Optimal)
    throw std::runtime_error(
        "init_preferential: infeasible; binding constraint: variance bound");

  // Deterministic tie-break: among rate-optimal solutions, concentrate both
  // sides by minimizing the inverse-sqrt moment sums. The mean is pinned by
  // equality (snapped to an exact integer when the optimum sits on one) so
  // the tie-break cannot trade a strictly higher rate for a lower objective.
  double pinned = s1.value;
  if (std::abs(pinned - std::round(pinned)) <= 1e-7) pinned = std::round(pinned);
  LinearProgram stage2 = base;
  stage2.add_row(row_sum(dv, 2, 0, f_deg), '=', pinned);
  stage2.objective.assign(2 * D, 0.0);
  for (int i = 0; i < D; ++i) {
    stage2.objective[i] = 1.0 / std::sqrt(double(dv.degree(i)));
    stage2.objective[D + i] = 1.0 / std::sqrt(double(dv.degree(i)));
  }
  LpSolution s2 = solve_with_cv_cuts(stage2, dv, 2, cv);
  if (s2.status != LpStatus::Optimal) s2 = s1;

  return {to_poly(s2.x, 0, dv), to_poly(s2.x, D, dv)};
}

AlternatingOutcome alternating_step(const GeneratingPolynomial& lambda_H,
                                    const GeneratingPolynomial& lambda_L, char which,
                                    const PreferentialDesignProblem& problem) {
  problem.check();
  lambda_H.check(true);
  lambda_L.check(true);
  if (which != 'H' && which != 'L')
    throw std::invalid_argument("alternating_step: which must be 'H' or 'L'");
  DegreeVars dv{problem.dv_max};
  const int D = dv.count();
  double kh = double(problem.k_H) / problem.n_H, kl = double(problem.k_L) / problem.n_L;
  double wH = problem.effective_beta_H() * kh, wL = problem.effective_beta_L() * kl;
  double r = 1.0 / (double(problem.dc_H) * problem.dc_H + double(problem.dc_L) * problem.dc_L);
  double ce_bound =
      std::sqrt(1.0 / (kh * (double(problem.dc_H) + problem.dc_L)));  // on T_H

  const GeneratingPolynomial& fixed = (which == 'H') ? lambda_L : lambda_H;
  const GeneratingPolynomial& prev = (which == 'H') ? lambda_H : lambda_L;

  LinearProgram lp(D);
  lp.objective = row_sum(dv, 1, 0, f_isqrt);
  lp.add_row(row_sum(dv, 1, 0, f_one), '=', 1.0);

  // The edge coupling pins the free side's mean degree, so the rate objective
  // is constant over the feasible set; the inverse-sqrt objective above is
  // the deterministic tie-break.
  double pinned_mean;
  if (which == 'H')
    pinned_mean = double(problem.n_L) * problem.dc_H * fixed.mean() /
                  (double(problem.n_H) * problem.dc_L);
  else
    pinned_mean = double(problem.n_H) * problem.dc_L * fixed.mean() /
                  (double(problem.n_L) * problem.dc_H);
  lp.add_row(row_sum(dv, 1, 0, f_deg), '=', pinned_mean);

  CvCutSpec cv;
  cv.wH = wH;
  cv.wL = wL;
  cv.r = r;
  if (which == 'H') {
    cv.side_H = 0;
    cv.fixed_L = fixed.mean_inv();
    lp.add_row(row_sum(dv, 1, 0, f_isqrt), '<', ce_bound);
    double tl = fixed.mean_isqrt();
    lp.add_row(row_sum(dv, 1, 0, f_isqrt), '<', tl * std::sqrt(kl / kh));
  } else {
    cv.side_L = 0;
    cv.fixed_H = fixed.mean_inv();
    double th = fixed.mean_isqrt();
    lp.add_row(row_sum(dv, 1, 0, f_isqrt), '>', th * std::sqrt(kh / kl));
  }

  LpSolution sol = solve_with_cv_cuts(lp, dv, 1, cv);
  if (sol.status != LpStatus::Optimal) return {prev, true};
  return {to_poly(sol.x, 0, dv), false};
}

GeneratingPolynomial retarget_mean(const GeneratingPolynomial& poly, double target) {
  poly.check();
  double need = target - poly.mean();
  if (std::abs(need) <= 1e-12) return poly;
  std::vector<double> c = poly.coeff;
  if (need > 0.0) {
    for (int d = 1; d < int(c.size()) && need > 1e-15; ++d) {
      if (c[d] <= 0.0) continue;
      double w = std::min(c[d], need);
      if (d + 1 >= int(c.size())) c.resize(d + 2, 0.0);
      c[d] -= w;
      c[d + 1] += w;
      need -= w;
    }
  } else {
    need = -need;
    for (int d = int(c.size()) - 1; d >= 3 && need > 1e-15; --d) {
      if (c[d] <= 0.0) continue;
      double w = std::min(c[d], need);
      c[d] -= w;
      c[d - 1] += w;
      need -= w;
    }
  }
  if (need > 1e-9)
    throw std::invalid_argument("retarget_mean: target mean unreachable from this support");
  std::vector<std::pair<int, double>> pairs;
  for (int d = 1; d < int(c.size()); ++d)
    if (c[d] > 0.0) pairs.push_back({d, c[d]});
  return GeneratingPolynomial::from_pairs(pairs);
}

RegularEnsembleSpec design_to_spec(const DesignResult& result, long n) {
  RegularEnsembleSpec spec;
  spec.lambda = retarget_mean(result.lambda, double(result.m) * result.rho.mean() / double(n));
  spec.rho = result.rho;
  spec.n = n;
  spec.m = result.m;
  spec.sensing_scale_A = default_sensing_scale(spec.rho);
  return spec;
}

PreferentialEnsembleSpec design_to_spec(const DesignResult& result, long n_H, long n_L) {
  PreferentialEnsembleSpec spec;
  spec.lambda_H = retarget_mean(result.lambda_H,
                                double(result.m) * result.rho_H.mean() / double(n_H));
  spec.lambda_L = retarget_mean(result.lambda_L,
                                double(result.m) * result.rho_L.mean() / double(n_L));
  spec.rho_H = result.rho_H;
  spec.rho_L = result.rho_L;
  spec.n_H = n_H;
  spec.n_L = n_L;
  spec.m = result.m;
  spec.sensing_scale_A =
      default_sensing_scale(spec.rho_H) + default_sensing_scale(spec.rho_L);
  return spec;
}

DesignResult design_preferential(const PreferentialDesignProblem& problem) {
  problem.check();
  DesignResult res;
  res.preferential = true;
  res.rho_H = GeneratingPolynomial::single(problem.dc_H);
  res.rho_L = GeneratingPolynomial::single(problem.dc_L);

  auto [lh, ll] = init_preferential(problem);
  for (int t = 0; t < problem.T; ++t) {
    AlternatingOutcome h = alternating_step(lh, ll, 'H', problem);
    AlternatingOutcome l = alternating_step(h.updated, ll, 'L', problem);
    bool unchanged = same_poly(h.updated, lh) && same_poly(l.updated, ll);
    lh = h.updated;
    ll = l.updated;
    if (unchanged || (h.stalled && l.stalled)) break;
  }
  res.lambda_H = lh;
  res.lambda_L = ll;

  double edges_H = double(problem.n_H) * lh.mean();
  double m_exact = edges_H / problem.dc_H;
  res.m = (long)std::ceil(m_exact - 1e-9);
  res.achieved_rate = m_exact / double(problem.n_H + problem.n_L);

  PrefConstraintReport rep = pref_constraints(lh, ll, res.rho_H, res.rho_L, problem);
  res.constraints["variance"] = rep.variance;
  res.constraints["error"] = rep.error;
  res.constraints["priority"] = rep.priority;

  PreferentialEnsembleSpec spec = design_to_spec(res, problem.n_H, problem.n_L);
  PriorModel prior_H = PriorModel::spike_discrete(double(problem.k_H) / problem.n_H, 1.0);
  PriorModel prior_L = PriorModel::spike_discrete(double(problem.k_L) / problem.n_L, 1.0);
  DEConfig cfg;
  cfg.noise_variance = 0.0;
  res.de_validation = de_run(
      de_initial_state(prior_H, prior_L),
      [&](DEStatePreferential s) {
        return de_step_preferential(s, spec, prior_H, prior_L, cfg);
      },
      cfg);
  const auto& last = res.de_validation.pref_states.back();
  res.de_converged = last.E_H < 1e-6 && last.V_H < 1e-6 && last.V_L < 1e-6;

  res.valid = rep.satisfied && res.de_converged;
  if (problem.ratio_warning())
    res.warning =
        "k_H/n_H is within a factor 2 of k_L/n_L; the preferential assumption is weak here";
  return res;
}

}  // namespace desense
