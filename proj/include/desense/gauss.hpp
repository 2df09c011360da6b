#pragma once
#include <cmath>
#include <vector>

namespace desense {

inline double norm_pdf(double x) {
  return 0.3989422804014326779399461 * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865475244008444);
}

// Nodes/weights rescaled from physicists' Gauss-Hermite so that
// E[f(Z)] ~= sum_k weight[k] * f(node[k]) for Z ~ N(0,1); weights sum to 1.
struct GaussHermite {
  std::vector<double> node, weight;
};

// Cached per order; order >= 1. Computed by Newton iteration on the Hermite
// recurrence (roots accurate to ~1e-14).
const GaussHermite& gauss_hermite(int order);

}  // namespace desense
