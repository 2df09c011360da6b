#include "desense/gauss.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

namespace desense {

// Roots of H_n (physicists') by Newton from the standard running estimates;
// orthonormal recurrence keeps p1 well scaled at high order.
static GaussHermite compute_gh(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
  std::vector<double> x(n), w(n);
  const double pim4 = 0.7511255444649424828587030;  // pi^(-1/4)
  const int m = (n + 1) / 2;
  double z = 0.0, pp = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(double(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * x[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * x[1];
    else
      z = 2.0 * z - x[i - 2];
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::fabs(z - z1) <= 1e-15 * (1.0 + std::fabs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  // Rescale to N(0,1) averaging: node = sqrt(2)*x, weight = w/sqrt(pi).
  GaussHermite gh;
  gh.node.resize(n);
  gh.weight.resize(n);
  const double isqrtpi = 0.5641895835477562869480795;
  for (int i = 0; i < n; ++i) {
    gh.node[i] = -std::sqrt(2.0) * x[i];  // ascending order
    gh.weight[i] = w[i] * isqrtpi;
  }
  return gh;
}

const GaussHermite& gauss_hermite(int order) {
  static std::map<int, GaussHermite> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, compute_gh(order)).first;
  return it->second;
}

}  // namespace desense
