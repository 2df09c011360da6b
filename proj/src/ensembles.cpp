#include "desense/ensembles.hpp"

#include <cmath>
#include <stdexcept>

#include "desense/gauss.hpp"

namespace desense {

PriorModel PriorModel::spike_discrete(double sparsity, double amplitude) {
  PriorModel p;
  p.kind = PriorKind::SpikeDiscrete;
  p.sparsity = sparsity;
  p.amplitude = amplitude;
  p.check();
  return p;
}

PriorModel PriorModel::laplacian(double beta) {
  PriorModel p;
  p.kind = PriorKind::Laplacian;
  p.beta = beta;
  p.check();
  return p;
}

PriorModel PriorModel::gaussian(double variance) {
  PriorModel p;
  p.kind = PriorKind::Gaussian;
  p.variance = variance;
  p.check();
  return p;
}

PriorModel PriorModel::sparse_gaussian(double sparsity, double mean, double variance) {
  PriorModel p;
  p.kind = PriorKind::SparseGaussian;
  p.sparsity = sparsity;
  p.mean = mean;
  p.variance = variance;
  p.check();
  return p;
}

PriorModel PriorModel::tabulated(std::vector<double> grid, std::vector<double> density) {
  PriorModel p;
  p.kind = PriorKind::Tabulated;
  p.grid = std::move(grid);
  p.density = std::move(density);
  p.check();
  return p;
}

static double trapezoid(const std::vector<double>& x, const std::vector<double>& f) {
  double s = 0.0;
  for (size_t i = 1; i < x.size(); ++i) s += 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

void PriorModel::check() const {
  switch (kind) {
    case PriorKind::SpikeDiscrete:
      if (sparsity < 0.0 || sparsity > 1.0)
        throw std::invalid_argument("prior: sparsity must lie in [0,1]");
      break;
    case PriorKind::Laplacian:
      if (!(beta > 0.0)) throw std::invalid_argument("prior: beta must be positive");
      break;
    case PriorKind::Gaussian:
      if (!(variance > 0.0)) throw std::invalid_argument("prior: variance must be positive");
      break;
    case PriorKind::SparseGaussian:
      if (sparsity < 0.0 || sparsity > 1.0)
        throw std::invalid_argument("prior: sparsity must lie in [0,1]");
      if (!(variance > 0.0)) throw std::invalid_argument("prior: variance must be positive");
      break;
    case PriorKind::Tabulated: {
      if (grid.size() < 2 || grid.size() != density.size())
        throw std::invalid_argument("prior: tabulated grid/density size mismatch");
      for (size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
          throw std::invalid_argument("prior: tabulated grid must be strictly increasing");
      for (double d : density)
        if (d < 0.0) throw std::invalid_argument("prior: tabulated density must be non-negative");
      double mass = trapezoid(grid, density);
      if (std::fabs(mass - 1.0) > 1e-9)
        throw std::invalid_argument("prior: tabulated density normalizes to " +
                                    std::to_string(mass) + ", expected 1 within 1e-9");
      break;
    }
  }
}

double PriorModel::first_moment() const {
  switch (kind) {
    case PriorKind::SpikeDiscrete:
      return 0.0;
    case PriorKind::Laplacian:
      return 0.0;
    case PriorKind::Gaussian:
      return 0.0;
    case PriorKind::SparseGaussian:
      return sparsity * mean;
    case PriorKind::Tabulated: {
      std::vector<double> xf(grid.size());
      for (size_t i = 0; i < grid.size(); ++i) xf[i] = grid[i] * density[i];
      return trapezoid(grid, xf);
    }
  }
  return 0.0;
}

double PriorModel::second_moment() const {
  switch (kind) {
    case PriorKind::SpikeDiscrete:
      return sparsity * amplitude * amplitude;
    case PriorKind::Laplacian:
      return 2.0 / (beta * beta);
    case PriorKind::Gaussian:
      return variance;
    case PriorKind::SparseGaussian:
      return sparsity * (mean * mean + variance);
    case PriorKind::Tabulated: {
      std::vector<double> xf(grid.size());
      for (size_t i = 0; i < grid.size(); ++i) xf[i] = grid[i] * grid[i] * density[i];
      return trapezoid(grid, xf);
    }
  }
  return 0.0;
}

double PriorModel::moment_var() const {
  double m1 = first_moment();
  return second_moment() - m1 * m1;
}

static double prior_std(const PriorModel& p) {
  double v = p.moment_var();
  return v > 0.0 ? std::sqrt(v) : 1.0;
}

static double density_at(const PriorModel& p, double x) {
  switch (p.kind) {
    case PriorKind::Laplacian:
      return 0.5 * p.beta * std::exp(-p.beta * std::fabs(x));
    case PriorKind::Gaussian:
      return norm_pdf(x / std::sqrt(p.variance)) / std::sqrt(p.variance);
    case PriorKind::SparseGaussian: {
      // continuous part only; the atom at zero has no density
      double s = std::sqrt(p.variance);
      return p.sparsity * norm_pdf((x - p.mean) / s) / s;
    }
    default:
      throw std::invalid_argument("density_at: prior has no closed-form density");
  }
}

PriorModel tabulate_prior(const PriorModel& prior, int points) {
  prior.check();
  if (points < 3) throw std::invalid_argument("tabulate_prior: need at least 3 points");
  if (prior.kind == PriorKind::Tabulated) return prior;
  if (prior.kind == PriorKind::SpikeDiscrete)
    throw std::invalid_argument("tabulate_prior: discrete spike prior has no density to tabulate");
  double c = prior.first_moment();
  double halfwidth = 8.0 * prior_std(prior);
  std::vector<double> grid(points), dens(points);
  for (int i = 0; i < points; ++i) {
    grid[i] = c - halfwidth + (2.0 * halfwidth * i) / (points - 1);
    dens[i] = density_at(prior, grid[i]);
  }
  double mass = trapezoid(grid, dens);
  for (double& d : dens) d /= mass;
  return PriorModel::tabulated(std::move(grid), std::move(dens));
}

std::vector<WeightedPoint> prior_quadrature(const PriorModel& prior, int gh_order) {
  prior.check();
  std::vector<WeightedPoint> pts;
  switch (prior.kind) {
    case PriorKind::SpikeDiscrete:
      if (prior.sparsity < 1.0) pts.push_back({0.0, 1.0 - prior.sparsity});
      if (prior.sparsity > 0.0) {
        pts.push_back({prior.amplitude, 0.5 * prior.sparsity});
        pts.push_back({-prior.amplitude, 0.5 * prior.sparsity});
      }
      return pts;
    case PriorKind::Gaussian: {
      const GaussHermite& gh = gauss_hermite(gh_order);
      double s = std::sqrt(prior.variance);
      for (size_t k = 0; k < gh.node.size(); ++k) pts.push_back({s * gh.node[k], gh.weight[k]});
      return pts;
    }
    case PriorKind::SparseGaussian: {
      if (prior.sparsity < 1.0) pts.push_back({0.0, 1.0 - prior.sparsity});
      const GaussHermite& gh = gauss_hermite(gh_order);
      double s = std::sqrt(prior.variance);
      for (size_t k = 0; k < gh.node.size(); ++k)
        pts.push_back({prior.mean + s * gh.node[k], prior.sparsity * gh.weight[k]});
      return pts;
    }
    case PriorKind::Laplacian: {
      PriorModel tab = tabulate_prior(prior);
      return prior_quadrature(tab, gh_order);
    }
    case PriorKind::Tabulated: {
      const auto& x = prior.grid;
      const auto& f = prior.density;
      size_t np = x.size();
      std::vector<double> w(np, 0.0);
      for (size_t i = 1; i < np; ++i) {
        double h = x[i] - x[i - 1];
        w[i - 1] += 0.5 * h * f[i - 1];
        w[i] += 0.5 * h * f[i];
      }
      double tot = 0.0;
      for (double v : w) tot += v;
      for (size_t i = 0; i < np; ++i)
        if (w[i] > 0.0) pts.push_back({x[i], w[i] / tot});
      return pts;
    }
  }
  return pts;
}

double default_sensing_scale(const GeneratingPolynomial& rho) { return rho.mean(); }

void RegularEnsembleSpec::check() const {
  lambda.check();
  rho.check();
  if (n <= 0 || m <= 0) throw std::invalid_argument("ensemble spec: n and m must be positive");
  if (sensing_scale_A < 0.0)
    throw std::invalid_argument("ensemble spec: sensing scale must be positive");
  auto rep = edge_consistency_check(*this);
  if (!rep.satisfied)
    throw std::invalid_argument("ensemble spec: edge counts inconsistent (imbalance " +
                                std::to_string(rep.imbalance) + " edges)");
}

void PreferentialEnsembleSpec::check() const {
  lambda_H.check();
  lambda_L.check();
  rho_H.check();
  rho_L.check();
  if (n_H <= 0 || n_L <= 0 || m <= 0)
    throw std::invalid_argument("ensemble spec: partition sizes and m must be positive");
  auto rep = edge_consistency_check(*this);
  if (!rep.satisfied)
    throw std::invalid_argument("ensemble spec: partition edge counts inconsistent");
}

EdgeConsistencyReport edge_consistency_check(const RegularEnsembleSpec& spec) {
  EdgeConsistencyReport rep;
  rep.imbalance = std::fabs(double(spec.n) * spec.lambda.mean() - double(spec.m) * spec.rho.mean());
  rep.satisfied = rep.imbalance <= 1.0;
  return rep;
}

EdgeConsistencyReport edge_consistency_check(const PreferentialEnsembleSpec& spec) {
  EdgeConsistencyReport rep;
  rep.imbalance_H =
      std::fabs(double(spec.n_H) * spec.lambda_H.mean() - double(spec.m) * spec.rho_H.mean());
  rep.imbalance_L =
      std::fabs(double(spec.n_L) * spec.lambda_L.mean() - double(spec.m) * spec.rho_L.mean());
  rep.imbalance = std::max(rep.imbalance_H, rep.imbalance_L);
  double sl_H = spec.lambda_H.mean(), sl_L = spec.lambda_L.mean();
  double sr_H = spec.rho_H.mean(), sr_L = spec.rho_L.mean();
  rep.ratio_lhs = (sl_L / sl_H) * (sr_H / sr_L);
  rep.ratio_rhs = double(spec.n_H) / double(spec.n_L);
  rep.ratio_ok = std::fabs(rep.ratio_lhs - rep.ratio_rhs) <= 1e-9 * std::max(1.0, rep.ratio_rhs);
  rep.satisfied = rep.imbalance_H <= 1.0 && rep.imbalance_L <= 1.0 && rep.ratio_ok;
  return rep;
}

double beta_from_rate(double k_over_n, double c0) {
  if (!(c0 > 0.0)) throw std::invalid_argument("beta_from_sparsity: c0 must be positive");
  if (k_over_n <= 0.0)
    throw std::invalid_argument("beta_from_sparsity: k = 0 gives infinite beta");
  if (k_over_n >= 1.0)
    throw std::invalid_argument("beta_from_sparsity: k >= n gives non-positive beta");
  return std::log(1.0 / k_over_n) / c0;
}

double beta_from_sparsity(long n, long k, double c0) {
  if (n <= 0) throw std::invalid_argument("beta_from_sparsity: n must be positive");
  return beta_from_rate(double(k) / double(n), c0);
}

}  // namespace desense
