#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "desense/ensembles.hpp"

namespace desense {

// Bipartite factor graph: variables on one side, checks on the other. For
// preferential graphs, variables [0, n_high) are the high-priority partition
// and [n_high, n) the low-priority one; regular graphs have n_high = 0 and
// every label NONE.
struct FactorGraph {
  long n = 0, m = 0;
  long n_high = 0;
  bool preferential = false;
  std::vector<std::vector<int>> check_adj;  // per check, sorted variable ids
  std::vector<int> variable_degree;
  std::vector<int> check_degree;
  std::vector<int> check_degree_H;  // per-check high-partition degree (pref only)

  char partition(long v) const {
    if (!preferential) return 'N';
    return v < n_high ? 'H' : 'L';
  }
  long edge_count() const;
};

// Draws `count` degrees whose histogram matches poly by largest-remainder
// rounding (ties resolved toward the lower degree), then shuffles the
// sequence deterministically.
std::vector<int> sample_degree_sequence(const GeneratingPolynomial& poly, long count,
                                        uint64_t seed);

// Configuration-model construction. Preferential specs run two independent
// stub matchings (H edges and L edges) sharing the check nodes. Stub-total
// mismatches up to one maximum degree are patched by incrementing the
// lowest-degree nodes on the deficient side; multi-edges are resolved by
// random edge switching with a cap of 100*|E| attempts.
// Throws std::runtime_error (reporting the attempt count) if simplification
// fails.
FactorGraph build_graph(const RegularEnsembleSpec& spec, uint64_t seed);
FactorGraph build_graph(const PreferentialEnsembleSpec& spec, uint64_t seed);

struct MatrixTriplet {
  int row = 0, col = 0;
  int sign = 1;  // entry value is sign * A^(-1/2)
};

struct SparseSensingMatrix {
  long m = 0, n = 0;
  long n_high = 0;
  double sensing_scale_A = 1.0;
  uint64_t seed = 0;
  std::vector<MatrixTriplet> triplets;  // grouped by row, columns ascending

  double magnitude() const;
  std::vector<double> apply(const std::vector<double>& x) const;    // y = A x
  std::vector<double> apply_t(const std::vector<double>& y) const;  // A^T y
  // text export, header line "m n A seed" then "row col sign" lines
  void write_triplets(std::ostream& os) const;
};
SparseSensingMatrix read_triplets(std::istream& is);

SparseSensingMatrix graph_to_matrix(const FactorGraph& graph, double A, uint64_t seed);

struct RealizationReport {
  bool simple = false;
  bool degrees_match = false;
  bool partition_ok = false;
  bool edge_identity = false;
  long edge_count = 0;
  long multi_edge_pairs = 0;
  std::string detail;

  bool ok() const { return simple && degrees_match && partition_ok && edge_identity; }
};

RealizationReport check_realization(const FactorGraph& graph, const RegularEnsembleSpec& spec);
RealizationReport check_realization(const FactorGraph& graph,
                                    const PreferentialEnsembleSpec& spec);

}  // namespace desense
