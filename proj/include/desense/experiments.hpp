#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "desense/decoder.hpp"
#include "desense/design.hpp"
#include "desense/graph.hpp"
#include "desense/io.hpp"

namespace desense {

// One orchestrated run: the subcommand kind, the raw parsed config, and the
// effective seed / output location (CLI overrides are folded into the config
// before hashing so identical effective settings hash identically).
struct ExperimentConfig {
  std::string kind;  // design | de-run | sample-matrix | decode | sweep | image
  Config config;
  uint64_t seed = 1;
  std::string out_dir = "out";
  bool plots = false;

  static ExperimentConfig load(Config cfg, const std::string& kind);
  void check() const;
};

// design: writes <out>/design_report.txt and, for valid designs, an ensemble
// config <out>/design_ensemble.cfg. Returns the result; callers map
// result.valid to the exit code.
DesignResult run_design(const ExperimentConfig& ec);

// de-run: density evolution trace CSV at <out>/de_trace.csv.
DETrace run_de(const ExperimentConfig& ec);

// sample-matrix: graph + matrix realization; writes <out>/matrix.txt and
// <out>/realization.txt.
RealizationReport run_sample_matrix(const ExperimentConfig& ec);

// decode: one synthesized (or file-provided) instance; writes
// <out>/decode_trace.csv and <out>/estimate.txt.
DecodeResult run_decode(const ExperimentConfig& ec);

struct SweepCell {
  double snr = 0.0;
  std::string variant;  // preferential-final | preferential-init | regular-baseline
  long trials = 0;
  double mean_r_H = 0.0, stderr_r_H = 0.0;
  double mean_r_W = 0.0, stderr_r_W = 0.0;
  long diverged = 0;
};

struct SweepResult {
  std::vector<SweepCell> cells;
  double runtime_seconds = 0.0;  // informational; never written into the CSV
  long edges_preferential = 0, edges_regular = 0;

  const SweepCell& cell(double snr, const std::string& variant) const;
};

// sweep: three matrix variants per SNR point, writes <out>/sweep.csv.
SweepResult run_sweep(const ExperimentConfig& ec);

struct ImageDigitRow {
  int digit = 0;
  long images_used = 0, skipped = 0;
  long k_H = 0, k_L = 0, m = 0;
  double mean_r_H_pref = 0.0, stderr_r_H_pref = 0.0;
  double mean_r_W_pref = 0.0, stderr_r_W_pref = 0.0;
  double mean_r_H_reg = 0.0, stderr_r_H_reg = 0.0;
  double mean_r_W_reg = 0.0, stderr_r_W_reg = 0.0;
  long diverged_pref = 0, diverged_reg = 0;
};

struct ImageExperimentResult {
  std::vector<ImageDigitRow> rows;
  double runtime_seconds = 0.0;
};

// image: per-digit design + decode over a local dataset, writes
// <out>/image_ratios.csv and a few PGM reconstructions.
ImageExperimentResult run_image_experiment(const ExperimentConfig& ec);

// kind: "IDX" or "PGM"
ImageSet load_dataset(const std::string& path, const std::string& kind);

// Regular baseline ensemble with n nodes, the same m, and a total edge count
// matching `target_edges` within rounding (the fairness condition).
RegularEnsembleSpec edge_matched_regular(long n, long m, double target_edges,
                                         double sensing_scale_A);

// 95th-percentile support sizes (per partition) of the level-1 Haar
// coefficients over a set of images, thresholding each image at
// `threshold` * max|coefficient|.
std::pair<long, long> estimate_partition_sparsity(const std::vector<Mat>& images,
                                                  double threshold, double percentile);

}  // namespace desense
