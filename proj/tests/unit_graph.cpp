#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "desense/graph.hpp"
#include "desense/rng.hpp"

using namespace desense;

namespace {

RegularEnsembleSpec regular_spec(int dv, int dc, long n, long m, double A = 0.0) {
  RegularEnsembleSpec spec;
  spec.lambda = GeneratingPolynomial::single(dv);
  spec.rho = GeneratingPolynomial::single(dc);
  spec.n = n;
  spec.m = m;
  spec.sensing_scale_A = A;
  return spec;
}

std::map<int, int> degree_histogram(const std::vector<int>& degrees) {
  std::map<int, int> h;
  for (int d : degrees) ++h[d];
  return h;
}

}  // namespace

TEST_CASE("degree sequences follow the distribution by largest remainder") {
  auto all3 = sample_degree_sequence(GeneratingPolynomial::single(3), 10, 1);
  REQUIRE(all3.size() == 10);
  for (int d : all3) CHECK(d == 3);

  auto mix = GeneratingPolynomial::from_pairs({{1, 1.0 / 3.0}, {2, 2.0 / 3.0}});
  auto seq = sample_degree_sequence(mix, 3, 1);
  auto h = degree_histogram(seq);
  CHECK(h[1] == 1);
  CHECK(h[2] == 2);

  // A single draw lands on the modal degree.
  auto one = sample_degree_sequence(mix, 1, 9);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == 2);
}

TEST_CASE("degree sequences are deterministic in the seed") {
  auto mix = GeneratingPolynomial::from_pairs({{2, 0.5}, {7, 0.5}});
  auto a = sample_degree_sequence(mix, 100, 5);
  auto b = sample_degree_sequence(mix, 100, 5);
  CHECK(a == b);
  auto c = sample_degree_sequence(mix, 100, 6);
  CHECK(a != c);  // same histogram, different shuffle
  auto ha = degree_histogram(a), hc = degree_histogram(c);
  CHECK(ha == hc);
}

TEST_CASE("the forced complete bipartite graph is found exactly") {
  // 4 variables of degree 3 against 3 checks of degree 4 has a unique simple
  // realization: every check touches every variable.
  auto spec = regular_spec(3, 4, 4, 3);
  auto g = build_graph(spec, 11);
  CHECK(g.n == 4);
  CHECK(g.m == 3);
  CHECK(g.edge_count() == 12);
  for (long c = 0; c < 3; ++c) {
    REQUIRE(g.check_adj[c].size() == 4);
    for (int v = 0; v < 4; ++v) CHECK(g.check_adj[c][v] == v);
  }
  auto rep = check_realization(g, spec);
  CHECK(rep.ok());
  CHECK(rep.multi_edge_pairs == 0);
}

TEST_CASE("impossible simplification reports the attempt budget") {
  // Two degree-2 variables on a single check force double edges no matter how
  // many switches run (there is nothing to switch with).
  auto spec = regular_spec(2, 4, 2, 1);
  try {
    build_graph(spec, 3);
    FAIL("expected build_graph to throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("attempt") != std::string::npos);
  }
}

TEST_CASE("a one-stub deficit is patched and the realization still passes") {
  // 7 variables of degree 3 give 21 stubs; 5 checks of degree 4 give 20.
  // The deficient check side gets one extra stub on its lowest-degree node.
  auto spec = regular_spec(3, 4, 7, 5);
  auto g = build_graph(spec, 2);
  CHECK(g.edge_count() == 21);
  for (int d : g.variable_degree) CHECK(d == 3);
  long csum = 0;
  for (int d : g.check_degree) csum += d;
  CHECK(csum == 21);
  CHECK(*std::max_element(g.check_degree.begin(), g.check_degree.end()) == 5);
  CHECK(check_realization(g, spec).ok());
}

TEST_CASE("graph construction is deterministic and seed-sensitive") {
  auto spec = regular_spec(3, 6, 60, 30);
  auto a = build_graph(spec, 7);
  auto b = build_graph(spec, 7);
  CHECK(a.check_adj == b.check_adj);
  auto c = build_graph(spec, 8);
  CHECK(a.check_adj != c.check_adj);
}

TEST_CASE("realization checks catch a mismatched spec") {
  auto spec = regular_spec(3, 6, 60, 30);
  auto g = build_graph(spec, 7);
  CHECK(check_realization(g, spec).ok());

  auto wrong = regular_spec(4, 8, 60, 30);
  auto rep = check_realization(g, wrong);
  CHECK_FALSE(rep.degrees_match);
  CHECK_FALSE(rep.ok());
  CHECK_FALSE(rep.detail.empty());
}

TEST_CASE("preferential construction separates the partitions") {
  PreferentialEnsembleSpec spec;
  spec.lambda_H = GeneratingPolynomial::single(8);
  spec.lambda_L = GeneratingPolynomial::single(2);
  spec.rho_H = GeneratingPolynomial::single(5);
  spec.rho_L = GeneratingPolynomial::single(5);
  spec.n_H = 100;
  spec.n_L = 400;
  spec.m = 160;
  auto g = build_graph(spec, 4);
  CHECK(g.preferential);
  CHECK(g.n == 500);
  CHECK(g.n_high == 100);
  CHECK(g.edge_count() == 1600);
  for (long v = 0; v < 100; ++v) CHECK(g.variable_degree[v] == 8);
  for (long v = 100; v < 500; ++v) CHECK(g.variable_degree[v] == 2);
  long h_edges = 0;
  for (int d : g.check_degree_H) h_edges += d;
  CHECK(h_edges == 800);
  CHECK(g.partition(0) == 'H');
  CHECK(g.partition(100) == 'L');
  CHECK(check_realization(g, spec).ok());

  auto reg = regular_spec(3, 6, 60, 30);
  auto rg = build_graph(reg, 7);
  CHECK(rg.partition(0) == 'N');
}

TEST_CASE("matrix signs are balanced over a large graph") {
  auto spec = regular_spec(3, 6, 20000, 10000, 6.0);
  auto g = build_graph(spec, 12);
  auto mat = graph_to_matrix(g, 6.0, 12);
  REQUIRE(long(mat.triplets.size()) == 60000);
  long plus = 0;
  for (const auto& t : mat.triplets)
    if (t.sign > 0) ++plus;
  double frac = double(plus) / double(mat.triplets.size());
  CHECK(std::fabs(frac - 0.5) < 0.02);
}

TEST_CASE("biregular matrices have unit row norms at A equal to dc") {
  auto spec = regular_spec(3, 6, 200, 100, 6.0);
  auto g = build_graph(spec, 5);
  auto mat = graph_to_matrix(g, 6.0, 5);
  CHECK(mat.magnitude() == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(1e-15));

  std::vector<double> row_sq(100, 0.0), col_sq(200, 0.0);
  for (const auto& t : mat.triplets) {
    double v = mat.magnitude();
    row_sq[t.row] += v * v;
    col_sq[t.col] += v * v;
  }
  for (double r : row_sq) CHECK(r == doctest::Approx(1.0).epsilon(1e-12));
  for (double c : col_sq) CHECK(c == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("matrix triplets arrive grouped by row with ascending columns") {
  auto spec = regular_spec(3, 6, 60, 30, 6.0);
  auto mat = graph_to_matrix(build_graph(spec, 9), 6.0, 9);
  for (size_t i = 1; i < mat.triplets.size(); ++i) {
    const auto& a = mat.triplets[i - 1];
    const auto& b = mat.triplets[i];
    CHECK((a.row < b.row || (a.row == b.row && a.col < b.col)));
  }
}

TEST_CASE("apply and apply_t are adjoint") {
  auto spec = regular_spec(3, 6, 120, 60, 6.0);
  auto mat = graph_to_matrix(build_graph(spec, 3), 6.0, 3);
  Rng rng(17);
  std::vector<double> x(120), y(60);
  for (auto& v : x) v = rng.gauss();
  for (auto& v : y) v = rng.gauss();
  auto ax = mat.apply(x);
  auto aty = mat.apply_t(y);
  double lhs = 0.0, rhs = 0.0;
  for (long i = 0; i < 60; ++i) lhs += ax[i] * y[i];
  for (long j = 0; j < 120; ++j) rhs += x[j] * aty[j];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

  CHECK_THROWS_AS(mat.apply(std::vector<double>(7)), std::invalid_argument);
  CHECK_THROWS_AS(mat.apply_t(std::vector<double>(7)), std::invalid_argument);
}

TEST_CASE("triplet text round trip preserves every field") {
  auto spec = regular_spec(3, 6, 60, 30, 6.0);
  auto mat = graph_to_matrix(build_graph(spec, 21), 6.0, 21);
  std::stringstream ss;
  mat.write_triplets(ss);
  auto back = read_triplets(ss);
  CHECK(back.m == mat.m);
  CHECK(back.n == mat.n);
  CHECK(back.n_high == mat.n_high);
  CHECK(back.sensing_scale_A == mat.sensing_scale_A);
  CHECK(back.seed == mat.seed);
  REQUIRE(back.triplets.size() == mat.triplets.size());
  for (size_t i = 0; i < mat.triplets.size(); ++i) {
    CHECK(back.triplets[i].row == mat.triplets[i].row);
    CHECK(back.triplets[i].col == mat.triplets[i].col);
    CHECK(back.triplets[i].sign == mat.triplets[i].sign);
  }
}

TEST_CASE("matrix signs are deterministic in the seed") {
  auto spec = regular_spec(3, 6, 60, 30, 6.0);
  auto g = build_graph(spec, 14);
  auto a = graph_to_matrix(g, 6.0, 14);
  auto b = graph_to_matrix(g, 6.0, 14);
  REQUIRE(a.triplets.size() == b.triplets.size());
  bool same = true;
  for (size_t i = 0; i < a.triplets.size(); ++i)
    same = same && a.triplets[i].sign == b.triplets[i].sign;
  CHECK(same);

  auto c = graph_to_matrix(g, 6.0, 15);
  bool differs = false;
  for (size_t i = 0; i < a.triplets.size(); ++i)
    differs = differs || a.triplets[i].sign != c.triplets[i].sign;
  CHECK(differs);
}
