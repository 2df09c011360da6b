#include "desense/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "desense/rng.hpp"

namespace desense {

long FactorGraph::edge_count() const {
  long total = 0;
  for (const auto& adj : check_adj) total += (long)adj.size();
  return total;
}

std::vector<int> sample_degree_sequence(const GeneratingPolynomial& poly, long count,
                                        uint64_t seed) {
  poly.check();
  if (count < 1) throw std::invalid_argument("sample_degree_sequence: count must be >= 1");
  int dmax = poly.max_degree();
  std::vector<long> base(dmax + 1, 0);
  std::vector<std::pair<double, int>> rem;  // (-remainder, degree): sort ascending
  long assigned = 0;
  for (int d = 1; d <= dmax; ++d) {
    double quota = poly.fraction(d) * (double)count;
    long b = (long)std::floor(quota + 1e-12);
    base[d] = b;
    assigned += b;
    rem.push_back({-(quota - (double)b), d});
  }
  std::sort(rem.begin(), rem.end());
  for (long i = 0; i < count - assigned; ++i) base[rem[i % rem.size()].second]++;

  std::vector<int> seq;
  seq.reserve(count);
  for (int d = 1; d <= dmax; ++d)
    for (long i = 0; i < base[d]; ++i) seq.push_back(d);
  Rng rng(seed, 0);
  rng.shuffle(seq);
  return seq;
}

namespace {

uint64_t sub_seed(uint64_t seed, uint64_t k) {
  return splitmix64(seed + 0x9e3779b97f4a7c15ULL * (k + 1));
}

long seq_sum(const std::vector<int>& v) { return std::accumulate(v.begin(), v.end(), 0L); }

// Brings the two stub totals into balance by incrementing the lowest-degree
// nodes on the deficient side, as long as the gap is at most one maximum
// degree (the slack a rounded m can introduce).
void patch_stub_deficit(std::vector<int>& a, std::vector<int>& b) {
  long sa = seq_sum(a), sb = seq_sum(b);
  if (sa == sb) return;
  std::vector<int>& deficient = (sa < sb) ? a : b;
  long diff = std::labs(sa - sb);
  int allowance = std::max(*std::max_element(a.begin(), a.end()),
                           *std::max_element(b.begin(), b.end()));
  if (diff > allowance)
    throw std::invalid_argument(
        "build_graph: stub totals differ by more than one maximum degree (" +
        std::to_string(diff) + " stubs)");
  for (long t = 0; t < diff; ++t) {
    size_t lowest = 0;
    for (size_t i = 1; i < deficient.size(); ++i)
      if (deficient[i] < deficient[lowest]) lowest = i;
    deficient[lowest]++;
  }
}

struct Edge {
  int v, c;
};

std::vector<Edge> match_stubs(const std::vector<int>& vdeg, const std::vector<int>& cdeg,
                              long var_offset, Rng& rng) {
  std::vector<int> vstubs, cstubs;
  for (size_t i = 0; i < vdeg.size(); ++i)
    for (int t = 0; t < vdeg[i]; ++t) vstubs.push_back((int)(var_offset + (long)i));
  for (size_t i = 0; i < cdeg.size(); ++i)
    for (int t = 0; t < cdeg[i]; ++t) cstubs.push_back((int)i);
  if (vstubs.size() != cstubs.size())
    throw std::logic_error("build_graph: internal stub imbalance after patching");
  rng.shuffle(vstubs);
  std::vector<Edge> edges(vstubs.size());
  for (size_t i = 0; i < vstubs.size(); ++i) edges[i] = {vstubs[i], cstubs[i]};
  return edges;
}

// Random edge switching until the edge multiset is duplicate-free. Degree
// sequences are invariant under switches. Throws with the attempt count when
// the cap (100 * total edges) is reached.
void simplify_edges(std::vector<Edge>& edges, long total_edges, Rng& rng) {
  auto key = [](const Edge& e) { return ((long long)e.v << 32) | (unsigned)e.c; };
  std::unordered_map<long long, int> count;
  count.reserve(edges.size() * 2);
  long dups = 0;
  for (const auto& e : edges)
    if (++count[key(e)] == 2) ++dups;
  if (dups == 0) return;

  const long cap = 100 * total_edges;
  long attempts = 0;
  auto multiplicity = [&](const Edge& e) {
    auto it = count.find(key(e));
    return it == count.end() ? 0 : it->second;
  };
  for (size_t i = 0; i < edges.size(); ++i) {
    while (multiplicity(edges[i]) >= 2) {
      if (attempts >= cap)
        throw std::runtime_error("build_graph: multi-edges unresolved after " +
                                 std::to_string(attempts) + " switch attempts");
      ++attempts;
      size_t j = (size_t)rng.below(edges.size());
      Edge e1 = edges[i], e2 = edges[j];
      if (i == j || e1.v == e2.v || e1.c == e2.c) continue;
      Edge p1{e1.v, e2.c}, p2{e2.v, e1.c};
      if (multiplicity(p1) >= 1 || multiplicity(p2) >= 1) continue;
      count[key(e1)]--;
      count[key(e2)]--;
      count[key(p1)]++;
      count[key(p2)]++;
      edges[i] = p1;
      edges[j] = p2;
    }
  }
}

FactorGraph assemble(long n, long m, long n_high, bool preferential,
                     const std::vector<Edge>& edges) {
  FactorGraph g;
  g.n = n;
  g.m = m;
  g.n_high = n_high;
  g.preferential = preferential;
  g.check_adj.assign(m, {});
  g.variable_degree.assign(n, 0);
  g.check_degree.assign(m, 0);
  g.check_degree_H.assign(m, 0);
  for (const auto& e : edges) {
    g.check_adj[e.c].push_back(e.v);
    g.variable_degree[e.v]++;
    g.check_degree[e.c]++;
    if (preferential && e.v < n_high) g.check_degree_H[e.c]++;
  }
  for (auto& adj : g.check_adj) std::sort(adj.begin(), adj.end());
  return g;
}

}  // namespace

FactorGraph build_graph(const RegularEnsembleSpec& spec, uint64_t seed) {
  spec.check();
  if (!edge_consistency_check(spec).satisfied)
    throw std::invalid_argument("build_graph: spec fails the edge-consistency check");
  auto vdeg = sample_degree_sequence(spec.lambda, spec.n, sub_seed(seed, 1));
  auto cdeg = sample_degree_sequence(spec.rho, spec.m, sub_seed(seed, 2));
  patch_stub_deficit(vdeg, cdeg);
  Rng rng(seed, 3);
  auto edges = match_stubs(vdeg, cdeg, 0, rng);
  simplify_edges(edges, (long)edges.size(), rng);
  return assemble(spec.n, spec.m, 0, false, edges);
}

FactorGraph build_graph(const PreferentialEnsembleSpec& spec, uint64_t seed) {
  spec.check();
  if (!edge_consistency_check(spec).satisfied)
    throw std::invalid_argument("build_graph: spec fails the edge-consistency check");
  auto vdeg_H = sample_degree_sequence(spec.lambda_H, spec.n_H, sub_seed(seed, 1));
  auto vdeg_L = sample_degree_sequence(spec.lambda_L, spec.n_L, sub_seed(seed, 2));
  auto cdeg_H = sample_degree_sequence(spec.rho_H, spec.m, sub_seed(seed, 3));
  auto cdeg_L = sample_degree_sequence(spec.rho_L, spec.m, sub_seed(seed, 4));
  patch_stub_deficit(vdeg_H, cdeg_H);
  patch_stub_deficit(vdeg_L, cdeg_L);
  Rng rng(seed, 5);
  auto edges_H = match_stubs(vdeg_H, cdeg_H, 0, rng);
  auto edges_L = match_stubs(vdeg_L, cdeg_L, spec.n_H, rng);
  long total = (long)(edges_H.size() + edges_L.size());
  simplify_edges(edges_H, total, rng);
  simplify_edges(edges_L, total, rng);
  edges_H.insert(edges_H.end(), edges_L.begin(), edges_L.end());
  return assemble(spec.n_H + spec.n_L, spec.m, spec.n_H, true, edges_H);
}

double SparseSensingMatrix::magnitude() const { return 1.0 / std::sqrt(sensing_scale_A); }

std::vector<double> SparseSensingMatrix::apply(const std::vector<double>& x) const {
  if ((long)x.size() != n) throw std::invalid_argument("matrix apply: length mismatch");
  std::vector<double> y(m, 0.0);
  double mag = magnitude();
  for (const auto& t : triplets) y[t.row] += t.sign * mag * x[t.col];
  return y;
}

std::vector<double> SparseSensingMatrix::apply_t(const std::vector<double>& y) const {
  if ((long)y.size() != m) throw std::invalid_argument("matrix apply_t: length mismatch");
  std::vector<double> x(n, 0.0);
  double mag = magnitude();
  for (const auto& t : triplets) x[t.col] += t.sign * mag * y[t.row];
  return x;
}

void SparseSensingMatrix::write_triplets(std::ostream& os) const {
  os << m << " " << n << " " << sensing_scale_A << " " << seed << "\n";
  for (const auto& t : triplets) os << t.row << " " << t.col << " " << t.sign << "\n";
}

SparseSensingMatrix read_triplets(std::istream& is) {
  SparseSensingMatrix mat;
  if (!(is >> mat.m >> mat.n >> mat.sensing_scale_A >> mat.seed))
    throw std::runtime_error("triplet read: malformed header");
  MatrixTriplet t;
  while (is >> t.row >> t.col >> t.sign) {
    if (t.row < 0 || t.row >= mat.m || t.col < 0 || t.col >= mat.n ||
        (t.sign != 1 && t.sign != -1))
      throw std::runtime_error("triplet read: entry out of range");
    mat.triplets.push_back(t);
  }
  return mat;
}

SparseSensingMatrix graph_to_matrix(const FactorGraph& graph, double A, uint64_t seed) {
  if (!(A > 0.0)) throw std::invalid_argument("graph_to_matrix: A must be positive");
  SparseSensingMatrix mat;
  mat.m = graph.m;
  mat.n = graph.n;
  mat.n_high = graph.n_high;
  mat.sensing_scale_A = A;
  mat.seed = seed;
  Rng rng(seed, 0);
  for (long c = 0; c < graph.m; ++c)
    for (int v : graph.check_adj[c]) mat.triplets.push_back({(int)c, v, rng.sign()});
  return mat;
}

namespace {

std::vector<long> quota_histogram(const GeneratingPolynomial& poly, long count) {
  int dmax = poly.max_degree();
  std::vector<long> base(dmax + 1, 0);
  std::vector<std::pair<double, int>> rem;
  long assigned = 0;
  for (int d = 1; d <= dmax; ++d) {
    double quota = poly.fraction(d) * (double)count;
    long b = (long)std::floor(quota + 1e-12);
    base[d] = b;
    assigned += b;
    rem.push_back({-(quota - (double)b), d});
  }
  std::sort(rem.begin(), rem.end());
  for (long i = 0; i < count - assigned; ++i) base[rem[i % rem.size()].second]++;
  return base;
}

long histogram_l1(const std::vector<long>& got, const std::vector<long>& want) {
  size_t sz = std::max(got.size(), want.size());
  long l1 = 0;
  for (size_t d = 0; d < sz; ++d) {
    long g = d < got.size() ? got[d] : 0;
    long w = d < want.size() ? want[d] : 0;
    l1 += std::labs(g - w);
  }
  return l1;
}

std::vector<long> realized_histogram(const std::vector<int>& degrees, long from, long to) {
  std::vector<long> hist;
  for (long i = from; i < to; ++i) {
    int d = degrees[i];
    if ((int)hist.size() <= d) hist.resize(d + 1, 0);
    hist[d]++;
  }
  return hist;
}

long count_multi_edge_pairs(const FactorGraph& g) {
  long pairs = 0;
  for (const auto& adj : g.check_adj)
    for (size_t i = 1; i < adj.size(); ++i)
      if (adj[i] == adj[i - 1]) ++pairs;
  return pairs;
}

}  // namespace

RealizationReport check_realization(const FactorGraph& graph, const RegularEnsembleSpec& spec) {
  RealizationReport rep;
  rep.edge_count = graph.edge_count();
  rep.multi_edge_pairs = count_multi_edge_pairs(graph);
  rep.simple = rep.multi_edge_pairs == 0;

  long slack = 2L * std::max(spec.lambda.max_degree(), spec.rho.max_degree());
  long l1_v = histogram_l1(realized_histogram(graph.variable_degree, 0, graph.n),
                           quota_histogram(spec.lambda, spec.n));
  long l1_c = histogram_l1(realized_histogram(graph.check_degree, 0, graph.m),
                           quota_histogram(spec.rho, spec.m));
  rep.degrees_match = l1_v <= slack && l1_c <= slack;

  rep.partition_ok = !graph.preferential && graph.n_high == 0;

  long from_vars = std::accumulate(graph.variable_degree.begin(), graph.variable_degree.end(), 0L);
  long from_checks = std::accumulate(graph.check_degree.begin(), graph.check_degree.end(), 0L);
  double exp_v = (double)spec.n * spec.lambda.mean();
  double exp_c = (double)spec.m * spec.rho.mean();
  rep.edge_identity = from_vars == rep.edge_count && from_checks == rep.edge_count &&
                      std::abs(rep.edge_count - exp_v) <= (double)slack &&
                      std::abs(rep.edge_count - exp_c) <= (double)slack;

  if (!rep.ok())
    rep.detail = "simple=" + std::to_string(rep.simple) +
                 " degree_l1_v=" + std::to_string(l1_v) + " degree_l1_c=" + std::to_string(l1_c) +
                 " edges=" + std::to_string(rep.edge_count);
  return rep;
}

RealizationReport check_realization(const FactorGraph& graph,
                                    const PreferentialEnsembleSpec& spec) {
  RealizationReport rep;
  rep.edge_count = graph.edge_count();
  rep.multi_edge_pairs = count_multi_edge_pairs(graph);
  rep.simple = rep.multi_edge_pairs == 0;

  long slack = 2L * std::max({spec.lambda_H.max_degree(), spec.lambda_L.max_degree(),
                              spec.rho_H.max_degree(), spec.rho_L.max_degree()});
  long l1_vH = histogram_l1(realized_histogram(graph.variable_degree, 0, spec.n_H),
                            quota_histogram(spec.lambda_H, spec.n_H));
  long l1_vL = histogram_l1(realized_histogram(graph.variable_degree, spec.n_H, graph.n),
                            quota_histogram(spec.lambda_L, spec.n_L));
  std::vector<int> cdeg_L(graph.m);
  for (long c = 0; c < graph.m; ++c) cdeg_L[c] = graph.check_degree[c] - graph.check_degree_H[c];
  long l1_cH = histogram_l1(realized_histogram(graph.check_degree_H, 0, graph.m),
                            quota_histogram(spec.rho_H, spec.m));
  long l1_cL =
      histogram_l1(realized_histogram(cdeg_L, 0, graph.m), quota_histogram(spec.rho_L, spec.m));
  rep.degrees_match = l1_vH <= slack && l1_vL <= slack && l1_cH <= slack && l1_cL <= slack;

  // Partition wiring: every recorded H-degree must equal the count of
  // neighbors with indices inside the H block.
  rep.partition_ok = graph.preferential && graph.n_high == spec.n_H;
  for (long c = 0; c < graph.m && rep.partition_ok; ++c) {
    int h = 0;
    for (int v : graph.check_adj[c])
      if (v < spec.n_H) ++h;
    rep.partition_ok = h == graph.check_degree_H[c];
  }

  long from_vars = std::accumulate(graph.variable_degree.begin(), graph.variable_degree.end(), 0L);
  long from_checks = std::accumulate(graph.check_degree.begin(), graph.check_degree.end(), 0L);
  long edges_H = std::accumulate(graph.check_degree_H.begin(), graph.check_degree_H.end(), 0L);
  double exp_H = (double)spec.n_H * spec.lambda_H.mean();
  double exp_L = (double)spec.n_L * spec.lambda_L.mean();
  rep.edge_identity = from_vars == rep.edge_count && from_checks == rep.edge_count &&
                      std::abs(edges_H - exp_H) <= (double)slack &&
                      std::abs((rep.edge_count - edges_H) - exp_L) <= (double)slack;

  if (!rep.ok())
    rep.detail = "simple=" + std::to_string(rep.simple) + " degree_l1=" + std::to_string(l1_vH) +
                 "/" + std::to_string(l1_vL) + "/" + std::to_string(l1_cH) + "/" +
                 std::to_string(l1_cL) + " edges=" + std::to_string(rep.edge_count);
  return rep;
}

}  // namespace desense
