#pragma once
#include <string>
#include <vector>

#include "desense/degree_dist.hpp"

namespace desense {

enum class PriorKind { SpikeDiscrete, Laplacian, Gaussian, SparseGaussian, Tabulated };

// Signal prior. Field use by kind:
//   SpikeDiscrete(sparsity, amplitude): +-amplitude each w.p. sparsity/2, else 0
//   Laplacian(beta):   density (beta/2) exp(-beta |x|)
//   Gaussian(variance): zero-mean normal
//   SparseGaussian(sparsity, mean, variance): N(mean, variance) w.p. sparsity, else 0
//   Tabulated(grid, density): uniform grid, trapezoid-normalized density
struct PriorModel {
  PriorKind kind = PriorKind::SpikeDiscrete;
  double sparsity = 0.0;
  double amplitude = 0.0;
  double beta = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> grid, density;

  static PriorModel spike_discrete(double sparsity, double amplitude);
  static PriorModel laplacian(double beta);
  static PriorModel gaussian(double variance);
  static PriorModel sparse_gaussian(double sparsity, double mean, double variance);
  static PriorModel tabulated(std::vector<double> grid, std::vector<double> density);

  void check() const;  // throws std::invalid_argument on invariant violation

  double first_moment() const;
  double second_moment() const;
  double moment_var() const;  // second_moment - first_moment^2
};

// Uniform-grid tabulation of any prior (default 2001 points spanning +-8
// standard deviations around the mean); used by the grid-search MAP operator.
PriorModel tabulate_prior(const PriorModel& prior, int points = 2001);

// Points and weights for averaging over the signal prior: exact atoms for
// discrete mass, Gauss-Hermite nodes for Gaussian components, trapezoid grid
// for Laplacian/tabulated densities. Weights sum to 1.
struct WeightedPoint {
  double x, w;
};
std::vector<WeightedPoint> prior_quadrature(const PriorModel& prior, int gh_order);

struct RegularEnsembleSpec {
  GeneratingPolynomial lambda, rho;
  long n = 0, m = 0;
  double sensing_scale_A = 0.0;  // 0 -> default mean_degree(rho) on check()

  void check() const;
};

struct PreferentialEnsembleSpec {
  GeneratingPolynomial lambda_H, lambda_L, rho_H, rho_L;
  long n_H = 0, n_L = 0, m = 0;
  double sensing_scale_A = 0.0;  // 0 -> default mean check degree on check()

  void check() const;
};

struct EdgeConsistencyReport {
  bool satisfied = false;
  double imbalance = 0.0;    // regular: |n*mean(lambda) - m*mean(rho)|
  double imbalance_H = 0.0;  // preferential partitions
  double imbalance_L = 0.0;
  double ratio_lhs = 0.0;    // (Si lambda_L / Si lambda_H)*(Si rho_H / Si rho_L)
  double ratio_rhs = 0.0;    // n_H/n_L
  bool ratio_ok = true;
};

EdgeConsistencyReport edge_consistency_check(const RegularEnsembleSpec& spec);
EdgeConsistencyReport edge_consistency_check(const PreferentialEnsembleSpec& spec);

// Laplacian scale making the prior mass inside [-c0, c0] equal 1 - k/n:
// beta = log(n/k)/c0. Throws for k >= n (non-positive beta) and k == 0
// (infinite beta).
double beta_from_sparsity(long n, long k, double c0);

// Same calibration from a sparsity ratio k/n in (0,1).
double beta_from_rate(double k_over_n, double c0);

// Default row-normalizing sensing scale: mean check degree.
double default_sensing_scale(const GeneratingPolynomial& rho);

}  // namespace desense
