#include "desense/degree_dist.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace desense {

GeneratingPolynomial GeneratingPolynomial::single(int degree) {
  if (degree < 1) throw std::invalid_argument("degree must be >= 1");
  GeneratingPolynomial p;
  p.coeff.assign(degree + 1, 0.0);
  p.coeff[degree] = 1.0;
  return p;
}

GeneratingPolynomial GeneratingPolynomial::from_pairs(
    const std::vector<std::pair<int, double>>& pairs) {
  GeneratingPolynomial p;
  for (auto& [deg, frac] : pairs) {
    if (deg < 1) throw std::invalid_argument("degree must be >= 1");
    if (deg >= int(p.coeff.size())) p.coeff.resize(deg + 1, 0.0);
    p.coeff[deg] += frac;
  }
  p.check();
  return p;
}

int GeneratingPolynomial::max_degree() const {
  for (int i = int(coeff.size()) - 1; i >= 1; --i)
    if (coeff[i] != 0.0) return i;
  return 0;
}

double GeneratingPolynomial::mean() const {
  return weighted_sum([](int i) { return double(i); });
}
double GeneratingPolynomial::mean_inv() const {
  return weighted_sum([](int i) { return 1.0 / i; });
}
double GeneratingPolynomial::mean_isqrt() const {
  return weighted_sum([](int i) { return 1.0 / std::sqrt(double(i)); });
}
double GeneratingPolynomial::mean_sqrt() const {
  return weighted_sum([](int i) { return std::sqrt(double(i)); });
}

void GeneratingPolynomial::check(bool forbid_degree_one) const {
  if (coeff.empty() || coeff[0] != 0.0)
    throw std::invalid_argument("degree distribution: index 0 must be unused");
  double sum = 0.0;
  for (int i = 1; i < int(coeff.size()); ++i) {
    if (coeff[i] < 0.0)
      throw std::invalid_argument("degree distribution: negative fraction at degree " +
                                  std::to_string(i));
    sum += coeff[i];
  }
  if (std::fabs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("degree distribution: fractions sum to " +
                                std::to_string(sum) + ", expected 1");
  if (forbid_degree_one && fraction(1) != 0.0)
    throw std::invalid_argument("degree distribution: degree-1 mass forbidden here");
}

bool GeneratingPolynomial::valid(bool forbid_degree_one) const {
  try {
    check(forbid_degree_one);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

std::string GeneratingPolynomial::serialize() const {
  std::string out;
  char buf[64];
  for (int i = 1; i < int(coeff.size()); ++i) {
    if (coeff[i] == 0.0) continue;
    std::snprintf(buf, sizeof buf, "%d:%.17g", i, coeff[i]);
    if (!out.empty()) out += ',';
    out += buf;
  }
  return out;
}

GeneratingPolynomial GeneratingPolynomial::parse(const std::string& text) {
  GeneratingPolynomial p;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::string item = text.substr(pos, comma - pos);
    size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("degree distribution parse: missing ':' in '" + item + "'");
    int deg = std::atoi(item.substr(0, colon).c_str());
    char* end = nullptr;
    double frac = std::strtod(item.c_str() + colon + 1, &end);
    if (deg < 1 || end == item.c_str() + colon + 1)
      throw std::invalid_argument("degree distribution parse: bad entry '" + item + "'");
    if (deg >= int(p.coeff.size())) p.coeff.resize(deg + 1, 0.0);
    p.coeff[deg] += frac;
    pos = comma + 1;
  }
  p.check();
  return p;
}

double mean_degree(const GeneratingPolynomial& poly) {
  poly.check();
  return poly.mean();
}

double rate_ratio(const GeneratingPolynomial& lambda, const GeneratingPolynomial& rho) {
  lambda.check();
  rho.check();
  double md = rho.mean();
  if (md <= 0.0)
    throw std::invalid_argument("rate_ratio: degenerate check-side distribution (zero mean degree)");
  return lambda.mean() / md;
}

}  // namespace desense
