#pragma once
#include <iosfwd>
#include <vector>

#include "desense/de.hpp"
#include "desense/graph.hpp"
#include "desense/shrinkage.hpp"

namespace desense {

struct DecodeConfig {
  DecoderMode mode = DecoderMode::MAP;
  int max_iterations = 50;
  double damping = 1.0;  // 1.0 = undamped; new = damping*update + (1-damping)*old
  double tolerance = 1e-9;
  double noise_variance = 0.0;

  void check() const;
};

// Per-edge Gaussian messages in both directions, plus the edge layout the
// updates iterate over. Edges follow the matrix triplet order.
struct MessageState {
  int iteration = 0;
  double noise_variance = 0.0;
  std::vector<int> edge_row, edge_col;
  std::vector<double> edge_value;  // signed A^(-1/2)
  std::vector<std::vector<int>> check_edges, var_edges;
  std::vector<double> vc_mean, vc_var;  // variable -> check
  std::vector<double> cv_mean, cv_var;  // check -> variable
};

// Scalar denoiser shared by the decoder and the estimate read-out: MMSE mode
// applies the posterior mean, MAP mode the prior-calibrated shrinkage.
ShrinkOut apply_denoiser(double mu, double v, const PriorModel& prior, DecoderMode mode);

// Variable->check messages start at each column's prior moments.
MessageState init_messages(const SparseSensingMatrix& matrix, const PriorModel& prior_H,
                           const PriorModel& prior_L, const DecodeConfig& config);

// Exact cavity forms: for edge (a,i),
//   mean = (y_a - sum_{j in da\i} A_aj mu_{j->a}) / A_ai
//   var  = (sigma^2 + sum_{j in da\i} A_aj^2 nu_{j->a}) / A_ai^2.
void check_to_var_update(MessageState& state, const SparseSensingMatrix& matrix,
                         const std::vector<double>& y);

// Precision-weighted cavity aggregation over db i\a followed by the mode's
// denoiser; empty cavities fall back to the prior moments. Damping applies
// here.
void var_to_check_update(MessageState& state, const SparseSensingMatrix& matrix,
                         const PriorModel& prior_H, const PriorModel& prior_L,
                         const DecodeConfig& config);

struct DecodeResult {
  std::vector<double> estimate;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;
  // all trajectories have length iterations+1 (entry 0 = initialization)
  std::vector<double> residual_traj;
  std::vector<double> E_traj;  // edge-averaged (vc_mean - truth)^2; needs truth
  std::vector<double> V_traj;  // edge-averaged vc variance
  std::vector<double> objective_traj;  // ista_baseline only

  // columns: iteration,residual,E,V
  void write_csv(std::ostream& os) const;
};

// Flooding-schedule Gaussian message passing. Columns [0, n_high) use
// prior_H, the rest prior_L; pass the same prior twice for unpartitioned
// matrices. truth (optional) enables the empirical E trajectory.
DecodeResult decode(const std::vector<double>& y, const SparseSensingMatrix& matrix,
                    const PriorModel& prior_H, const PriorModel& prior_L,
                    const DecodeConfig& config, const std::vector<double>* truth = nullptr);
DecodeResult decode(const std::vector<double>& y, const SparseSensingMatrix& matrix,
                    const PriorModel& prior, const DecodeConfig& config,
                    const std::vector<double>* truth = nullptr);

// Iterative shrinkage-thresholding on (1/2)||y - Ax||^2 + beta*sigma^2*||x||_1
// with step 1/||A||_2^2 from power iteration; independent baseline solver.
DecodeResult ista_baseline(const std::vector<double>& y, const SparseSensingMatrix& matrix,
                           double beta, const DecodeConfig& config);

// (r_H, r_W): relative l2 errors over the first n_high entries and the whole
// vector. Throws std::domain_error when the relevant truth norm is zero.
std::pair<double, double> error_ratios(const std::vector<double>& estimate,
                                       const std::vector<double>& truth, long n_high);

}  // namespace desense
