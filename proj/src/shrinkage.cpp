#include "desense/shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "desense/gauss.hpp"

namespace desense {

double prox_soft(double u, double t) {
  if (u > t) return u - t;
  if (u < -t) return u + t;
  return 0.0;
}

double prox_soft_deriv(double u, double t) { return std::fabs(u) > t ? 1.0 : 0.0; }

ShrinkOut h_laplacian(double mu, double v, double beta) {
  if (!(v >= 0.0)) throw std::invalid_argument("h_laplacian: variance must be non-negative");
  if (!(beta > 0.0)) throw std::invalid_argument("h_laplacian: beta must be positive");
  double t = beta * v;
  return {prox_soft(mu, t), t * prox_soft_deriv(mu, t)};
}

ShrinkOut h_gaussian(double mu, double v, double prior_mean, double tau2) {
  double denom = tau2 + v;
  return {(mu * tau2 + prior_mean * v) / denom, v * tau2 / denom};
}

ShrinkOut h_general_map(const PriorModel& tabulated, double mu, double v) {
  if (tabulated.kind != PriorKind::Tabulated)
    throw std::invalid_argument("h_general_map: prior must be tabulated (see tabulate_prior)");
  if (!(v > 0.0)) throw std::invalid_argument("h_general_map: variance must be positive");
  const auto& x = tabulated.grid;
  const auto& f = tabulated.density;
  const int np = int(x.size());
  const double neg_inf = -std::numeric_limits<double>::infinity();

  std::vector<double> obj(np);
  int best = 0;
  for (int i = 0; i < np; ++i) {
    double d = x[i] - mu;
    obj[i] = (f[i] > 0.0 ? std::log(f[i]) : neg_inf) - d * d / (2.0 * v);
    if (obj[i] > obj[best]) best = i;
  }
  if (obj[best] == neg_inf)
    throw std::runtime_error("h_general_map: posterior vanishes on the whole grid");

  // Second difference around the maximizer; fall back to one-sided stencils
  // when the maximizer sits on the grid edge or next to a zero-density point.
  auto second_diff = [&](int i) -> double {
    int lo = i - 1, hi = i + 1;
    if (lo < 0) { lo = i; hi = i + 2; }
    if (hi >= np) { hi = i; lo = i - 2; }
    if (lo < 0 || hi >= np || obj[lo] == neg_inf || obj[hi] == neg_inf) return 0.0;
    double h1 = x[i] - x[lo], h2 = x[hi] - x[i];
    if (lo == i) return (obj[i] - 2.0 * obj[i + 1] + obj[i + 2]) / (h2 * h2);
    if (hi == i) return (obj[i - 2] - 2.0 * obj[i - 1] + obj[i]) / (h1 * h1);
    return (obj[lo] - 2.0 * obj[i] + obj[hi]) / (h1 * h2);
  };

  double curv = -second_diff(best);  // positive when locally concave
  double scale = std::max(1.0, std::fabs(obj[best]));
  if (!(curv > 1e-12 * scale))
    throw std::runtime_error("h_general_map: degenerate posterior (flat curvature at maximizer)");

  double xhat = x[best];
  if (best > 0 && best + 1 < np && obj[best - 1] != neg_inf && obj[best + 1] != neg_inf) {
    // Parabolic refinement; exact wherever the objective is locally quadratic.
    double denom = obj[best - 1] - 2.0 * obj[best] + obj[best + 1];
    if (denom < -1e-14 * scale) {
      double h = x[best + 1] - x[best];
      double delta = 0.5 * (obj[best - 1] - obj[best + 1]) / denom * h;
      xhat = x[best] + std::clamp(delta, -0.5 * h, 0.5 * h);
    }
  }
  return {xhat, 1.0 / curv};
}

// Log-domain mixture bookkeeping shared by the discrete/mixture posteriors.
namespace {
struct Component {
  double logw, mean, var;
};

ShrinkOut combine(std::vector<Component>& comps) {
  double mx = comps[0].logw;
  for (const auto& c : comps) mx = std::max(mx, c.logw);
  double z = 0.0;
  for (const auto& c : comps) z += std::exp(c.logw - mx);
  double m1 = 0.0, m2 = 0.0;
  for (const auto& c : comps) {
    double w = std::exp(c.logw - mx) / z;
    m1 += w * c.mean;
    m2 += w * (c.mean * c.mean + c.var);
  }
  return {m1, std::max(0.0, m2 - m1 * m1)};
}

double log_norm_pdf(double x, double mean, double var) {
  double d = x - mean;
  return -0.5 * d * d / var - 0.5 * std::log(6.283185307179586 * var);
}
}  // namespace

ShrinkOut h_mmse(const PriorModel& prior, double mu, double v) {
  prior.check();
  if (!(v >= 0.0)) throw std::invalid_argument("h_mmse: variance must be non-negative");
  switch (prior.kind) {
    case PriorKind::SpikeDiscrete: {
      if (prior.sparsity == 1.0 && prior.amplitude == 0.0) return {0.0, 0.0};
      std::vector<Component> comps;
      if (v == 0.0) return {mu, 0.0};
      double logv = -0.5 / v;
      if (prior.sparsity < 1.0) comps.push_back({std::log1p(-prior.sparsity) + logv * mu * mu, 0.0, 0.0});
      if (prior.sparsity > 0.0) {
        double a = prior.amplitude;
        double lw = std::log(0.5 * prior.sparsity);
        comps.push_back({lw + logv * (mu - a) * (mu - a), a, 0.0});
        comps.push_back({lw + logv * (mu + a) * (mu + a), -a, 0.0});
      }
      return combine(comps);
    }
    case PriorKind::Gaussian:
      return h_gaussian(mu, v, 0.0, prior.variance);
    case PriorKind::SparseGaussian: {
      if (v == 0.0) return {mu, 0.0};
      std::vector<Component> comps;
      if (prior.sparsity < 1.0)
        comps.push_back({std::log1p(-prior.sparsity) + log_norm_pdf(mu, 0.0, v), 0.0, 0.0});
      if (prior.sparsity > 0.0) {
        ShrinkOut g = h_gaussian(mu, v, prior.mean, prior.variance);
        comps.push_back({std::log(prior.sparsity) + log_norm_pdf(mu, prior.mean, prior.variance + v),
                         g.mean, g.var});
      }
      return combine(comps);
    }
    case PriorKind::Laplacian:
    case PriorKind::Tabulated: {
      // Dense grid integration of the posterior over a window covering both
      // the prior's support center and the observation.
      PriorModel tab = prior.kind == PriorKind::Tabulated ? prior : tabulate_prior(prior, 4001);
      if (v == 0.0) return {mu, 0.0};
      const auto& x = tab.grid;
      const auto& f = tab.density;
      int np = int(x.size());
      std::vector<double> logpost(np);
      double mx = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < np; ++i) {
        double d = x[i] - mu;
        logpost[i] = (f[i] > 0.0 ? std::log(f[i]) : -std::numeric_limits<double>::infinity()) -
                     d * d / (2.0 * v);
        mx = std::max(mx, logpost[i]);
      }
      if (mx == -std::numeric_limits<double>::infinity())
        throw std::runtime_error("h_mmse: posterior vanishes on the whole grid");
      double z = 0.0, m1 = 0.0, m2 = 0.0;
      for (int i = 1; i < np; ++i) {
        double h = x[i] - x[i - 1];
        double pa = std::exp(logpost[i - 1] - mx), pb = std::exp(logpost[i] - mx);
        z += 0.5 * h * (pa + pb);
        m1 += 0.5 * h * (pa * x[i - 1] + pb * x[i]);
        m2 += 0.5 * h * (pa * x[i - 1] * x[i - 1] + pb * x[i] * x[i]);
      }
      m1 /= z;
      m2 /= z;
      return {m1, std::max(0.0, m2 - m1 * m1)};
    }
  }
  return {0.0, 0.0};
}

}  // namespace desense
