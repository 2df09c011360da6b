#pragma once
#include <string>
#include <utility>
#include <vector>

namespace desense {

// Node-perspective degree distribution: coeff[i] is the fraction of nodes
// with degree i (index 0 unused). Fractions are non-negative and sum to 1
// within 1e-12.
struct GeneratingPolynomial {
  std::vector<double> coeff;  // coeff[0] == 0 always

  GeneratingPolynomial() : coeff{0.0} {}

  static GeneratingPolynomial single(int degree);
  static GeneratingPolynomial from_pairs(const std::vector<std::pair<int, double>>& pairs);

  int max_degree() const;
  double fraction(int degree) const {
    return (degree >= 0 && degree < int(coeff.size())) ? coeff[degree] : 0.0;
  }

  // Sum_i coeff[i] * f(i) over nonzero coefficients.
  template <class F>
  double weighted_sum(F f) const {
    double s = 0.0;
    for (int i = 1; i < int(coeff.size()); ++i)
      if (coeff[i] != 0.0) s += coeff[i] * f(i);
    return s;
  }

  double mean() const;       // Sum i*coeff[i]
  double mean_inv() const;   // Sum coeff[i]/i
  double mean_isqrt() const; // Sum coeff[i]/sqrt(i)
  double mean_sqrt() const;  // Sum coeff[i]*sqrt(i)

  // Throws std::invalid_argument when the simplex/positivity invariants fail;
  // forbid_degree_one additionally requires coeff[1] == 0.
  void check(bool forbid_degree_one = false) const;
  bool valid(bool forbid_degree_one = false) const;

  // "degree:fraction" pairs, comma separated, exact decimal round-trip text.
  std::string serialize() const;
  static GeneratingPolynomial parse(const std::string& text);

  bool operator==(const GeneratingPolynomial& o) const { return coeff == o.coeff; }
};

double mean_degree(const GeneratingPolynomial& poly);

// Measurement rate m/n = mean_degree(lambda)/mean_degree(rho).
double rate_ratio(const GeneratingPolynomial& lambda, const GeneratingPolynomial& rho);

}  // namespace desense
