#pragma once
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "desense/ensembles.hpp"

namespace desense {

struct DEStateRegular {
  double E = 0.0, V = 0.0;
};

struct DEStatePreferential {
  double E_H = 0.0, E_L = 0.0, V_H = 0.0, V_L = 0.0;
};

enum class DecoderMode { MAP, MMSE };

struct DEConfig {
  double noise_variance = 0.0;
  int quadrature_order = 61;  // Gauss-Hermite nodes, minimum 8
  int max_iterations = 500;
  double convergence_tolerance = 1e-10;
  DecoderMode decoder_mode = DecoderMode::MAP;

  void check() const;
};

// a1 = sum_{i,j} rho_i lambda_j sqrt(i/j), a2 = sum_{i,j} rho_i lambda_j (i/j).
// For single-degree pairs a1^2 = a2 = dc/dv exactly.
struct EnsembleSummary {
  double a1 = 0.0, a2 = 0.0;
};
EnsembleSummary ensemble_summary(const GeneratingPolynomial& lambda,
                                 const GeneratingPolynomial& rho);

// Closed-form Gaussian-prior update:
// E' = (a1^2 E + a2^2 V^2) / (1 + a2 V)^2, V' = a2 V / (1 + a2 V).
DEStateRegular de_step_gaussian(DEStateRegular s, double a1, double a2);

// Noiseless Lasso update: threshold theta = beta*a2*V, effective noise
// a1*sqrt(E). Expectations over z are closed-form normal-cdf/pdf expressions
// per prior atom; continuous priors average the same closed form over their
// quadrature points.
DEStateRegular de_step_lasso(DEStateRegular s, double a1, double a2, double beta,
                             const PriorModel& prior);

// General one-step update for a regular ensemble at noise level
// config.noise_variance, MAP or MMSE inner functions per config.decoder_mode.
DEStateRegular de_step_regular(DEStateRegular s, const RegularEnsembleSpec& spec,
                               const PriorModel& prior, const DEConfig& config);

// Preferential two-partition update; regularizers in MAP mode are calibrated
// from each partition's prior.
DEStatePreferential de_step_preferential(DEStatePreferential s,
                                         const PreferentialEnsembleSpec& spec,
                                         const PriorModel& prior_H, const PriorModel& prior_L,
                                         const DEConfig& config);

struct DETrace {
  bool preferential = false;
  std::vector<DEStateRegular> states;
  std::vector<DEStatePreferential> pref_states;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;

  // max-norm of the final state; "converged to zero" means < 1e-8
  double final_norm() const;
  bool at_zero() const { return final_norm() < 1e-8; }

  // columns: iteration,E,V or iteration,E_H,E_L,V_H,V_L
  void write_csv(std::ostream& os) const;
};

DETrace de_run(DEStateRegular initial, const std::function<DEStateRegular(DEStateRegular)>& step,
               const DEConfig& config);
DETrace de_run(DEStatePreferential initial,
               const std::function<DEStatePreferential(DEStatePreferential)>& step,
               const DEConfig& config);

// Default initialization: E and V both equal to the prior's second moment.
DEStateRegular de_initial_state(const PriorModel& prior);
DEStatePreferential de_initial_state(const PriorModel& prior_H, const PriorModel& prior_L);

// MAP-mode regularizer scale for a prior: Laplacian priors use their own
// beta; sparse priors use the mass-calibration beta = log(1/sparsity)/c0
// with c0 the spike amplitude (or the component standard deviation).
double map_regularizer_beta(const PriorModel& prior);

// Monte Carlo evaluation of the same one-step expectations (test oracle).
DEStateRegular de_step_regular_mc(DEStateRegular s, const RegularEnsembleSpec& spec,
                                  const PriorModel& prior, const DEConfig& config, long samples,
                                  uint64_t seed, DEStateRegular* stderr_out = nullptr);
DEStatePreferential de_step_preferential_mc(DEStatePreferential s,
                                            const PreferentialEnsembleSpec& spec,
                                            const PriorModel& prior_H, const PriorModel& prior_L,
                                            const DEConfig& config, long samples, uint64_t seed,
                                            DEStatePreferential* stderr_out = nullptr);

}  // namespace desense
