#include "desense/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "desense/rng.hpp"

namespace fs = std::filesystem;

namespace desense {

namespace {

uint64_t mix_seed(uint64_t a, uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

const std::vector<std::string> kKinds = {"design", "de-run", "sample-matrix",
                                         "decode", "sweep",  "image"};

PriorModel parse_prior(const Config& cfg, const std::string& section) {
  std::string kind = cfg.get_string(section + ".kind");
  if (kind == "spike_discrete")
    return PriorModel::spike_discrete(cfg.get_double(section + ".sparsity"),
                                      cfg.get_double(section + ".amplitude", 1.0));
  if (kind == "laplacian") return PriorModel::laplacian(cfg.get_double(section + ".beta"));
  if (kind == "gaussian") return PriorModel::gaussian(cfg.get_double(section + ".variance"));
  if (kind == "sparse_gaussian")
    return PriorModel::sparse_gaussian(cfg.get_double(section + ".sparsity"),
                                       cfg.get_double(section + ".mean", 0.0),
                                       cfg.get_double(section + ".variance"));
  throw std::runtime_error("config: unknown prior kind '" + kind + "' in [" + section + "]");
}

PriorModel parse_prior_or(const Config& cfg, const std::string& section,
                          const PriorModel& fallback) {
  return cfg.has(section + ".kind") ? parse_prior(cfg, section) : fallback;
}

DecoderMode parse_mode(const std::string& text) {
  if (text == "map" || text == "MAP") return DecoderMode::MAP;
  if (text == "mmse" || text == "MMSE") return DecoderMode::MMSE;
  throw std::runtime_error("config: decoder mode must be map or mmse, got '" + text + "'");
}

DEConfig parse_de_config(const Config& cfg) {
  DEConfig de;
  de.noise_variance = cfg.get_double("de.noise_variance", 0.0);
  de.quadrature_order = (int)cfg.get_long("de.quadrature_order", de.quadrature_order);
  de.max_iterations = (int)cfg.get_long("de.max_iterations", de.max_iterations);
  de.convergence_tolerance = cfg.get_double("de.tolerance", de.convergence_tolerance);
  de.decoder_mode = parse_mode(cfg.get_string("de.mode", "map"));
  de.check();
  return de;
}

DecodeConfig parse_decode_config(const Config& cfg) {
  DecodeConfig dc;
  dc.mode = parse_mode(cfg.get_string("decoder.mode", "map"));
  dc.max_iterations = (int)cfg.get_long("decoder.max_iterations", dc.max_iterations);
  dc.damping = cfg.get_double("decoder.damping", dc.damping);
  dc.tolerance = cfg.get_double("decoder.tolerance", dc.tolerance);
  dc.check();
  return dc;
}

RegularEnsembleSpec parse_regular_spec(const Config& cfg) {
  RegularEnsembleSpec spec;
  spec.lambda = GeneratingPolynomial::parse(cfg.get_string("ensemble.lambda"));
  spec.rho = GeneratingPolynomial::parse(cfg.get_string("ensemble.rho"));
  spec.n = cfg.get_long("ensemble.n");
  spec.m = cfg.get_long("ensemble.m");
  spec.sensing_scale_A = cfg.get_double("ensemble.A", 0.0);
  spec.check();
  return spec;
}

PreferentialEnsembleSpec parse_pref_spec(const Config& cfg) {
  PreferentialEnsembleSpec spec;
  spec.lambda_H = GeneratingPolynomial::parse(cfg.get_string("ensemble.lambda_H"));
  spec.lambda_L = GeneratingPolynomial::parse(cfg.get_string("ensemble.lambda_L"));
  spec.rho_H = GeneratingPolynomial::parse(cfg.get_string("ensemble.rho_H"));
  spec.rho_L = GeneratingPolynomial::parse(cfg.get_string("ensemble.rho_L"));
  spec.n_H = cfg.get_long("ensemble.n_H");
  spec.n_L = cfg.get_long("ensemble.n_L");
  spec.m = cfg.get_long("ensemble.m");
  spec.sensing_scale_A = cfg.get_double("ensemble.A", 0.0);
  spec.check();
  return spec;
}

PreferentialDesignProblem parse_pref_problem(const Config& cfg, const std::string& section) {
  PreferentialDesignProblem p;
  p.n_H = cfg.get_long(section + ".n_H");
  p.n_L = cfg.get_long(section + ".n_L");
  p.k_H = cfg.get_long(section + ".k_H");
  p.k_L = cfg.get_long(section + ".k_L");
  p.dc_H = (int)cfg.get_long(section + ".dc_H");
  p.dc_L = (int)cfg.get_long(section + ".dc_L");
  p.dv_max = (int)cfg.get_long(section + ".dv_max", 50);
  p.beta_H = cfg.get_double(section + ".beta_H", 0.0);
  p.beta_L = cfg.get_double(section + ".beta_L", 0.0);
  p.T = (int)cfg.get_long(section + ".T", 4);
  p.check();
  return p;
}

double resolve_A(const RegularEnsembleSpec& s) {
  return s.sensing_scale_A > 0.0 ? s.sensing_scale_A : default_sensing_scale(s.rho);
}
double resolve_A(const PreferentialEnsembleSpec& s) {
  return s.sensing_scale_A > 0.0
             ? s.sensing_scale_A
             : default_sensing_scale(s.rho_H) + default_sensing_scale(s.rho_L);
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  std::string path = (fs::path(dir) / name).string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

double l2sq(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

struct Accum {
  std::vector<double> values;
  void add(double v) { values.push_back(v); }
  double mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return values.empty() ? 0.0 : s / (double)values.size();
  }
  double stderr_est() const {
    if (values.size() < 2) return 0.0;
    double m = mean(), s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / (double)(values.size() - 1)) / std::sqrt((double)values.size());
  }
};

}  // namespace

ExperimentConfig ExperimentConfig::load(Config cfg, const std::string& kind) {
  ExperimentConfig ec;
  ec.kind = kind;
  cfg.set("experiment.kind", kind);
  ec.seed = cfg.get_u64("experiment.seed", 1);
  ec.out_dir = cfg.get_string("experiment.out", "out");
  ec.plots = cfg.get_bool("experiment.plots", false);
  ec.config = std::move(cfg);
  ec.check();
  return ec;
}

void ExperimentConfig::check() const {
  if (std::find(kKinds.begin(), kKinds.end(), kind) == kKinds.end())
    throw std::runtime_error("config: unknown experiment kind '" + kind + "'");
  if (out_dir.empty()) throw std::runtime_error("config: empty output directory");
  for (const std::string key : {"sweep.snr", "image.snr"}) {
    if (!config.has(key)) continue;
    for (double s : config.get_double_list(key))
      if (!(s > 0.0)) throw std::runtime_error("config: SNR values must be positive");
  }
  for (const std::string key : {"sweep.trials", "image.test_limit"}) {
    if (config.has(key) && config.get_long(key) < 1)
      throw std::runtime_error("config: trial counts must be >= 1");
  }
}

namespace {

void write_constraint_lines(std::ostream& os, const DesignResult& res) {
  for (const auto& [name, c] : res.constraints)
    os << "constraint " << name << " value=" << format_g17(c.value)
       << " bound=" << format_g17(c.bound) << " satisfied=" << (c.satisfied ? 1 : 0) << "\n";
}

}  // namespace

DesignResult run_design(const ExperimentConfig& ec) {
  std::string kind = ec.config.get_string("design.kind");
  DesignResult res;
  long n_H = 0, n_L = 0;
  std::string infeasible;  // solver-level failure: report it, exit nonzero
  if (kind == "regular") {
    RegularDesignProblem p;
    p.n = ec.config.get_long("design.n");
    p.k = ec.config.get_long("design.k");
    p.c0 = ec.config.get_double("design.c0", 1.0);
    p.dv_max = (int)ec.config.get_long("design.dv_max", 50);
    p.dc_max = (int)ec.config.get_long("design.dc_max", 50);
    p.prior = parse_prior_or(
        ec.config, "prior",
        PriorModel::spike_discrete((double)p.k / (double)p.n, 1.0));
    p.check();
    try {
      res = optimize_regular(p);
    } catch (const std::runtime_error& e) {
      infeasible = e.what();
    }
  } else if (kind == "preferential") {
    PreferentialDesignProblem p = parse_pref_problem(ec.config, "design");
    n_H = p.n_H;
    n_L = p.n_L;
    try {
      res = design_preferential(p);
    } catch (const std::runtime_error& e) {
      infeasible = e.what();
    }
  } else {
    throw std::runtime_error("config: design.kind must be regular or preferential");
  }

  if (!infeasible.empty()) {
    auto report = open_out(ec.out_dir, "design_report.txt");
    report << "kind = " << kind << "\n";
    report << "valid = 0\n";
    report << "error = " << infeasible << "\n";
    res.valid = false;
    res.warning = infeasible;
    return res;
  }

  auto report = open_out(ec.out_dir, "design_report.txt");
  report << "kind = " << kind << "\n";
  report << "valid = " << (res.valid ? 1 : 0) << "\n";
  report << "m = " << res.m << "\n";
  report << "achieved_rate = " << format_g17(res.achieved_rate) << "\n";
  if (res.preferential) {
    report << "lambda_H = " << res.lambda_H.serialize() << "\n";
    report << "lambda_L = " << res.lambda_L.serialize() << "\n";
    report << "rho_H = " << res.rho_H.serialize() << "\n";
    report << "rho_L = " << res.rho_L.serialize() << "\n";
  } else {
    report << "lambda = " << res.lambda.serialize() << "\n";
    report << "rho = " << res.rho.serialize() << "\n";
  }
  write_constraint_lines(report, res);
  report << "de_converged = " << (res.de_converged ? 1 : 0) << "\n";
  report << "de_iterations = " << res.de_validation.iterations << "\n";
  if (!res.warning.empty()) report << "warning = " << res.warning << "\n";

  auto ens = open_out(ec.out_dir, "design_ensemble.cfg");
  ens << "[ensemble]\n";
  if (res.preferential) {
    PreferentialEnsembleSpec spec = design_to_spec(res, n_H, n_L);
    ens << "kind = preferential\n";
    ens << "lambda_H = " << spec.lambda_H.serialize() << "\n";
    ens << "lambda_L = " << spec.lambda_L.serialize() << "\n";
    ens << "rho_H = " << spec.rho_H.serialize() << "\n";
    ens << "rho_L = " << spec.rho_L.serialize() << "\n";
    ens << "n_H = " << spec.n_H << "\nn_L = " << spec.n_L << "\nm = " << spec.m << "\n";
    ens << "A = " << format_g17(resolve_A(spec)) << "\n";
  } else {
    RegularEnsembleSpec spec = design_to_spec(res, ec.config.get_long("design.n"));
    ens << "kind = regular\n";
    ens << "lambda = " << spec.lambda.serialize() << "\n";
    ens << "rho = " << spec.rho.serialize() << "\n";
    ens << "n = " << spec.n << "\nm = " << spec.m << "\n";
    ens << "A = " << format_g17(resolve_A(spec)) << "\n";
  }
  return res;
}

DETrace run_de(const ExperimentConfig& ec) {
  DEConfig de = parse_de_config(ec.config);
  std::string kind = ec.config.get_string("ensemble.kind");
  DETrace trace;
  if (kind == "regular") {
    RegularEnsembleSpec spec = parse_regular_spec(ec.config);
    PriorModel prior = parse_prior(ec.config, "prior");
    trace = de_run(
        de_initial_state(prior),
        [&](DEStateRegular s) { return de_step_regular(s, spec, prior, de); }, de);
  } else if (kind == "preferential") {
    PreferentialEnsembleSpec spec = parse_pref_spec(ec.config);
    PriorModel prior_H = parse_prior(ec.config, "prior_H");
    PriorModel prior_L = parse_prior(ec.config, "prior_L");
    trace = de_run(
        de_initial_state(prior_H, prior_L),
        [&](DEStatePreferential s) {
          return de_step_preferential(s, spec, prior_H, prior_L, de);
        },
        de);
  } else {
    throw std::runtime_error("config: ensemble.kind must be regular or preferential");
  }

  auto out = open_out(ec.out_dir, "de_trace.csv");
  char head[96];
  snprintf(head, sizeof(head), "# config_hash=%016llx seed=%llu\n",
           (unsigned long long)ec.config.hash(), (unsigned long long)ec.seed);
  out << head;
  trace.write_csv(out);

  if (ec.plots) {
    std::vector<std::vector<double>> series;
    if (trace.preferential) {
      series.resize(4);
      for (const auto& s : trace.pref_states) {
        series[0].push_back(s.E_H);
        series[1].push_back(s.E_L);
        series[2].push_back(s.V_H);
        series[3].push_back(s.V_L);
      }
    } else {
      series.resize(2);
      for (const auto& s : trace.states) {
        series[0].push_back(s.E);
        series[1].push_back(s.V);
      }
    }
    write_line_chart_pgm((fs::path(ec.out_dir) / "de_trace.pgm").string(), series);
  }
  return trace;
}

namespace {

struct SampledMatrix {
  FactorGraph graph;
  SparseSensingMatrix matrix;
  RealizationReport report;
};

SampledMatrix sample_from_config(const ExperimentConfig& ec) {
  SampledMatrix out;
  std::string kind = ec.config.get_string("ensemble.kind");
  if (kind == "regular") {
    RegularEnsembleSpec spec = parse_regular_spec(ec.config);
    out.graph = build_graph(spec, mix_seed(ec.seed, 11));
    out.report = check_realization(out.graph, spec);
    out.matrix = graph_to_matrix(out.graph, resolve_A(spec), mix_seed(ec.seed, 12));
  } else if (kind == "preferential") {
    PreferentialEnsembleSpec spec = parse_pref_spec(ec.config);
    out.graph = build_graph(spec, mix_seed(ec.seed, 11));
    out.report = check_realization(out.graph, spec);
    out.matrix = graph_to_matrix(out.graph, resolve_A(spec), mix_seed(ec.seed, 12));
  } else {
    throw std::runtime_error("config: ensemble.kind must be regular or preferential");
  }
  return out;
}

}  // namespace

RealizationReport run_sample_matrix(const ExperimentConfig& ec) {
  SampledMatrix s = sample_from_config(ec);
  auto mat = open_out(ec.out_dir, "matrix.txt");
  s.matrix.write_triplets(mat);
  auto rep = open_out(ec.out_dir, "realization.txt");
  rep << "simple = " << s.report.simple << "\n";
  rep << "degrees_match = " << s.report.degrees_match << "\n";
  rep << "partition_ok = " << s.report.partition_ok << "\n";
  rep << "edge_identity = " << s.report.edge_identity << "\n";
  rep << "edge_count = " << s.report.edge_count << "\n";
  rep << "multi_edge_pairs = " << s.report.multi_edge_pairs << "\n";
  rep << "ok = " << s.report.ok() << "\n";
  if (!s.report.detail.empty()) rep << "detail = " << s.report.detail << "\n";
  return s.report;
}

namespace {

// Exactly k uniform positions without replacement in [0, n), each assigned a
// +-1 value.
void place_spikes(std::vector<double>& x, long offset, long n, long k, Rng& rng) {
  if (k > n) throw std::invalid_argument("spike placement: k > n");
  std::vector<long> idx(n);
  for (long i = 0; i < n; ++i) idx[i] = i;
  for (long i = 0; i < k; ++i) {
    long j = i + (long)rng.below((uint64_t)(n - i));
    std::swap(idx[i], idx[j]);
    x[offset + idx[i]] = (double)rng.sign();
  }
}

std::vector<double> add_noise(const std::vector<double>& clean, double sigma2, Rng& rng) {
  std::vector<double> y = clean;
  if (sigma2 > 0.0) {
    double sd = std::sqrt(sigma2);
    for (double& v : y) v += sd * rng.gauss();
  }
  return y;
}

}  // namespace

DecodeResult run_decode(const ExperimentConfig& ec) {
  SparseSensingMatrix matrix;
  if (ec.config.has("decode.matrix")) {
    std::ifstream in(ec.config.get_string("decode.matrix"));
    if (!in)
      throw std::runtime_error("cannot open matrix file " +
                               ec.config.get_string("decode.matrix"));
    matrix = read_triplets(in);
  } else {
    matrix = sample_from_config(ec).matrix;
  }

  DecodeConfig dcfg = parse_decode_config(ec.config);
  PriorModel prior_H = ec.config.has("prior_H.kind") ? parse_prior(ec.config, "prior_H")
                                                     : parse_prior(ec.config, "prior");
  PriorModel prior_L = parse_prior_or(ec.config, "prior_L", prior_H);

  std::vector<double> x, y;
  bool have_truth = false;
  if (ec.config.has("decode.y")) {
    std::ifstream in(ec.config.get_string("decode.y"));
    double v;
    while (in >> v) y.push_back(v);
    if ((long)y.size() != matrix.m)
      throw std::runtime_error("decode.y length does not match the matrix");
    dcfg.noise_variance = ec.config.get_double("decode.noise_variance", 0.0);
  } else {
    x.assign(matrix.n, 0.0);
    Rng rng(mix_seed(ec.seed, 21), 0);
    if (matrix.n_high > 0) {
      place_spikes(x, 0, matrix.n_high, ec.config.get_long("decode.k_H"), rng);
      place_spikes(x, matrix.n_high, matrix.n - matrix.n_high, ec.config.get_long("decode.k_L"),
                   rng);
    } else {
      place_spikes(x, 0, matrix.n, ec.config.get_long("decode.k"), rng);
    }
    double snr = ec.config.get_double("decode.snr", std::numeric_limits<double>::infinity());
    double sigma2 = std::isinf(snr) ? 0.0 : l2sq(x) / snr;
    dcfg.noise_variance = sigma2;
    Rng noise_rng(mix_seed(ec.seed, 22), 0);
    y = add_noise(matrix.apply(x), sigma2, noise_rng);
    have_truth = true;
  }

  DecodeResult res = decode(y, matrix, prior_H, prior_L, dcfg, have_truth ? &x : nullptr);

  auto trace = open_out(ec.out_dir, "decode_trace.csv");
  char head[96];
  snprintf(head, sizeof(head), "# config_hash=%016llx seed=%llu\n",
           (unsigned long long)ec.config.hash(), (unsigned long long)ec.seed);
  trace << head;
  res.write_csv(trace);
  write_vector((fs::path(ec.out_dir) / "estimate.txt").string(), res.estimate);
  if (have_truth) {
    write_vector((fs::path(ec.out_dir) / "truth.txt").string(), x);
    long scope = matrix.n_high > 0 ? matrix.n_high : matrix.n;
    auto [r_h, r_w] = error_ratios(res.estimate, x, scope);
    std::cout << "decode: r_H=" << format_g17(r_h) << " r_W=" << format_g17(r_w)
              << " iterations=" << res.iterations << (res.diverged ? " DIVERGED" : "") << "\n";
  }
  if (ec.plots)
    write_line_chart_pgm((fs::path(ec.out_dir) / "decode_trace.pgm").string(),
                         {res.residual_traj, res.V_traj});
  return res;
}

namespace {

GeneratingPolynomial mixed_degree(double average) {
  if (!(average >= 1.0))
    throw std::invalid_argument("edge-matched baseline: average degree below 1");
  long lo = (long)std::floor(average + 1e-12);
  double frac = average - (double)lo;
  if (frac < 1e-9) return GeneratingPolynomial::single((int)lo);
  if (frac > 1.0 - 1e-9) return GeneratingPolynomial::single((int)lo + 1);
  return GeneratingPolynomial::from_pairs(
      {{(int)lo, 1.0 - frac}, {(int)lo + 1, frac}});
}

}  // namespace

RegularEnsembleSpec edge_matched_regular(long n, long m, double target_edges,
                                         double sensing_scale_A) {
  RegularEnsembleSpec spec;
  spec.n = n;
  spec.m = m;
  spec.lambda = mixed_degree(target_edges / (double)n);
  spec.rho = mixed_degree(target_edges / (double)m);
  spec.sensing_scale_A = sensing_scale_A;
  spec.check();
  return spec;
}

const SweepCell& SweepResult::cell(double snr, const std::string& variant) const {
  for (const auto& c : cells)
    if (c.variant == variant &&
        (c.snr == snr || (std::isinf(c.snr) && std::isinf(snr))))
      return c;
  throw std::out_of_range("sweep result: no cell for that (snr, variant)");
}

SweepResult run_sweep(const ExperimentConfig& ec) {
  auto t0 = std::chrono::steady_clock::now();
  PreferentialDesignProblem prob = parse_pref_problem(ec.config, "design");
  std::vector<double> snr_grid = ec.config.get_double_list("sweep.snr");
  long trials = ec.config.get_long("sweep.trials", 50);
  double A_override = ec.config.get_double("sweep.A", 0.0);
  if (trials < 1) throw std::runtime_error("config: sweep.trials must be >= 1");
  for (double s : snr_grid)
    if (!(s > 0.0)) throw std::runtime_error("config: SNR values must be positive");

  DesignResult final_design = design_preferential(prob);
  auto [lambda_H0, lambda_L0] = init_preferential(prob);

  PreferentialEnsembleSpec spec_final = design_to_spec(final_design, prob.n_H, prob.n_L);
  PreferentialEnsembleSpec spec_init = spec_final;
  spec_init.m =
      (long)std::ceil((double)prob.n_H * lambda_H0.mean() / (double)prob.dc_H - 1e-9);
  spec_init.lambda_H = retarget_mean(
      lambda_H0, (double)spec_init.m * prob.dc_H / (double)prob.n_H);
  spec_init.lambda_L = retarget_mean(
      lambda_L0, (double)spec_init.m * prob.dc_L / (double)prob.n_L);
  if (A_override > 0.0) {
    spec_final.sensing_scale_A = A_override;
    spec_init.sensing_scale_A = A_override;
  }

  double target_edges = (double)prob.n_H * final_design.lambda_H.mean() +
                        (double)prob.n_L * final_design.lambda_L.mean();
  RegularEnsembleSpec spec_reg = edge_matched_regular(
      prob.n_H + prob.n_L, spec_final.m, target_edges, A_override);

  PriorModel prior_H =
      PriorModel::spike_discrete((double)prob.k_H / (double)prob.n_H, 1.0);
  PriorModel prior_L =
      PriorModel::spike_discrete((double)prob.k_L / (double)prob.n_L, 1.0);
  DecodeConfig base_cfg = parse_decode_config(ec.config);

  const std::vector<std::string> variants = {"preferential-final", "preferential-init",
                                             "regular-baseline"};
  SweepResult result;

  auto out = open_out(ec.out_dir, "sweep.csv");
  CsvWriter csv(out,
                {"snr", "variant", "trials", "mean_r_H", "stderr_r_H", "mean_r_W", "stderr_r_W",
                 "diverged"},
                ec.config.hash(), ec.seed);

  for (size_t si = 0; si < snr_grid.size(); ++si) {
    double snr = snr_grid[si];
    std::vector<Accum> acc_h(variants.size()), acc_w(variants.size());
    std::vector<long> diverged(variants.size(), 0);
    for (long trial = 0; trial < trials; ++trial) {
      uint64_t base = mix_seed(ec.seed, si * 1000003ULL + (uint64_t)trial);
      std::vector<double> x(prob.n_H + prob.n_L, 0.0);
      Rng xrng(mix_seed(base, 0), 0);
      place_spikes(x, 0, prob.n_H, prob.k_H, xrng);
      place_spikes(x, prob.n_H, prob.n_L, prob.k_L, xrng);
      double sigma2 = std::isinf(snr) ? 0.0 : l2sq(x) / snr;

      for (size_t v = 0; v < variants.size(); ++v) {
        SparseSensingMatrix matrix;
        if (v == 0) {
          FactorGraph g = build_graph(spec_final, mix_seed(base, 1 + 3 * v));
          matrix = graph_to_matrix(g, resolve_A(spec_final), mix_seed(base, 2 + 3 * v));
        } else if (v == 1) {
          FactorGraph g = build_graph(spec_init, mix_seed(base, 1 + 3 * v));
          matrix = graph_to_matrix(g, resolve_A(spec_init), mix_seed(base, 2 + 3 * v));
        } else {
          FactorGraph g = build_graph(spec_reg, mix_seed(base, 1 + 3 * v));
          matrix = graph_to_matrix(g, resolve_A(spec_reg), mix_seed(base, 2 + 3 * v));
          matrix.n_high = prob.n_H;  // signal partition; the wiring stays regular
        }
        Rng noise_rng(mix_seed(base, 3 + 3 * v), 0);
        std::vector<double> y = add_noise(matrix.apply(x), sigma2, noise_rng);
        DecodeConfig dcfg = base_cfg;
        dcfg.noise_variance = sigma2;
        DecodeResult res = decode(y, matrix, prior_H, prior_L, dcfg, &x);
        if (res.diverged) diverged[v]++;
        auto [r_h, r_w] = error_ratios(res.estimate, x, prob.n_H);
        acc_h[v].add(r_h);
        acc_w[v].add(r_w);
      }
    }
    for (size_t v = 0; v < variants.size(); ++v) {
      SweepCell cell;
      cell.snr = snr;
      cell.variant = variants[v];
      cell.trials = trials;
      cell.mean_r_H = acc_h[v].mean();
      cell.stderr_r_H = acc_h[v].stderr_est();
      cell.mean_r_W = acc_w[v].mean();
      cell.stderr_r_W = acc_w[v].stderr_est();
      cell.diverged = diverged[v];
      result.cells.push_back(cell);
      csv.row_mixed({format_g17(cell.snr), cell.variant, std::to_string(cell.trials),
                     format_g17(cell.mean_r_H), format_g17(cell.stderr_r_H),
                     format_g17(cell.mean_r_W), format_g17(cell.stderr_r_W),
                     std::to_string(cell.diverged)});
    }
  }

  result.edges_preferential = (long)std::llround(target_edges);
  result.edges_regular =
      (long)std::llround((double)spec_reg.n * spec_reg.lambda.mean());

  if (ec.plots) {
    std::vector<std::vector<double>> series(variants.size());
    for (const auto& c : result.cells)
      for (size_t v = 0; v < variants.size(); ++v)
        if (c.variant == variants[v]) series[v].push_back(c.mean_r_H);
    write_line_chart_pgm((fs::path(ec.out_dir) / "sweep_r_H.pgm").string(), series);
  }

  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::pair<long, long> estimate_partition_sparsity(const std::vector<Mat>& images,
                                                  double threshold, double percentile) {
  if (images.empty())
    throw std::invalid_argument("sparsity estimate: empty image set");
  if (!(threshold > 0.0 && threshold < 1.0) || !(percentile > 0.0 && percentile <= 1.0))
    throw std::invalid_argument("sparsity estimate: threshold/percentile out of range");
  std::vector<long> counts_H, counts_L;
  for (const Mat& img : images) {
    PartitionedSignal sig = partition_coefficients(haar2d_forward(img, 1));
    double peak = 0.0;
    for (double v : sig.signal) peak = std::max(peak, std::abs(v));
    if (peak <= 0.0) continue;  // blank image carries no support information
    double thr = threshold * peak;
    long ch = 0, cl = 0;
    for (size_t i = 0; i < sig.signal.size(); ++i) {
      if (std::abs(sig.signal[i]) > thr) ((long)i < sig.n_H ? ch : cl)++;
    }
    counts_H.push_back(ch);
    counts_L.push_back(cl);
  }
  if (counts_H.empty())
    throw std::invalid_argument("sparsity estimate: every image was blank");
  std::sort(counts_H.begin(), counts_H.end());
  std::sort(counts_L.begin(), counts_L.end());
  long rank = (long)std::ceil(percentile * (double)counts_H.size());
  rank = std::clamp(rank, 1L, (long)counts_H.size());
  return {counts_H[rank - 1], counts_L[rank - 1]};
}

ImageSet load_dataset(const std::string& path, const std::string& kind) {
  if (kind == "IDX" || kind == "idx") return read_idx_images(path);
  if (kind == "PGM" || kind == "pgm") {
    Mat img = read_pgm(path);
    ImageSet set;
    set.count = 1;
    set.rows = img.rows;
    set.cols = img.cols;
    set.images.push_back(std::move(img));
    return set;
  }
  throw std::runtime_error("load_dataset: kind must be IDX or PGM");
}

namespace {

std::vector<Mat> split_blocks(const Mat& img, long block) {
  if (img.rows % block != 0 || img.cols % block != 0)
    throw std::runtime_error("image blocks: dimensions not divisible by block size");
  std::vector<Mat> blocks;
  for (long br = 0; br < img.rows; br += block)
    for (long bc = 0; bc < img.cols; bc += block) {
      Mat b(block, block);
      for (long r = 0; r < block; ++r)
        for (long c = 0; c < block; ++c) b.at(r, c) = img.at(br + r, bc + c);
      blocks.push_back(std::move(b));
    }
  return blocks;
}

std::vector<int> parse_digit_list(const std::string& text) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stoi(item));
  if (out.empty()) throw std::runtime_error("config: empty digit list");
  return out;
}

struct DigitSetup {
  PreferentialEnsembleSpec spec_pref;
  RegularEnsembleSpec spec_reg;
  SparseSensingMatrix mat_pref, mat_reg;
  PriorModel prior_H, prior_L;
  long k_H = 0, k_L = 0, m = 0;
};

DigitSetup design_for_images(const std::vector<Mat>& train, long rows, long cols,
                             const ExperimentConfig& ec, uint64_t digit_seed) {
  const Config& cfg = ec.config;
  DigitSetup setup;
  auto [k_H, k_L] = estimate_partition_sparsity(train, cfg.get_double("image.threshold", 0.05),
                                                cfg.get_double("image.percentile", 0.95));
  long n_H = (rows / 2) * (cols / 2);
  long n_L = 3 * n_H;
  setup.k_H = std::clamp(k_H, 1L, n_H - 1);
  setup.k_L = std::clamp(k_L, 1L, n_L - 1);

  PreferentialDesignProblem prob;
  prob.n_H = n_H;
  prob.n_L = n_L;
  prob.k_H = setup.k_H;
  prob.k_L = setup.k_L;
  prob.dc_H = (int)cfg.get_long("image.dc_H", 5);
  prob.dc_L = (int)cfg.get_long("image.dc_L", 5);
  prob.dv_max = (int)cfg.get_long("image.dv_max", 30);
  prob.beta_H = cfg.get_double("image.beta_H", 0.0);
  prob.beta_L = cfg.get_double("image.beta_L", 0.0);
  prob.T = (int)cfg.get_long("image.T", 4);
  DesignResult design = design_preferential(prob);

  double A_override = cfg.get_double("image.A", 0.0);
  setup.spec_pref = design_to_spec(design, n_H, n_L);
  if (A_override > 0.0) setup.spec_pref.sensing_scale_A = A_override;
  setup.m = setup.spec_pref.m;

  double target_edges = (double)n_H * design.lambda_H.mean() +
                        (double)n_L * design.lambda_L.mean();
  setup.spec_reg =
      edge_matched_regular(n_H + n_L, setup.spec_pref.m, target_edges, A_override);

  FactorGraph g_pref = build_graph(setup.spec_pref, mix_seed(digit_seed, 1));
  setup.mat_pref =
      graph_to_matrix(g_pref, resolve_A(setup.spec_pref), mix_seed(digit_seed, 2));
  FactorGraph g_reg = build_graph(setup.spec_reg, mix_seed(digit_seed, 3));
  setup.mat_reg = graph_to_matrix(g_reg, resolve_A(setup.spec_reg), mix_seed(digit_seed, 4));
  setup.mat_reg.n_high = n_H;

  setup.prior_H = PriorModel::spike_discrete((double)setup.k_H / (double)n_H, 1.0);
  setup.prior_L = PriorModel::spike_discrete((double)setup.k_L / (double)n_L, 1.0);
  return setup;
}

Mat reconstruct_image(const std::vector<double>& coeffs, long rows, long cols) {
  return haar2d_inverse(unpartition_coefficients(coeffs, rows, cols, 1));
}

}  // namespace

ImageExperimentResult run_image_experiment(const ExperimentConfig& ec) {
  auto t0 = std::chrono::steady_clock::now();
  const Config& cfg = ec.config;
  double snr = cfg.has("image.snr") ? cfg.get_double_list("image.snr")[0] : 100.0;
  if (!(snr > 0.0)) throw std::runtime_error("config: SNR values must be positive");
  DecodeConfig base_cfg = parse_decode_config(cfg);
  long save_images = cfg.get_long("image.save_images", 4);

  // Digit groups from an IDX pair, or blocks of one PGM treated as group -1.
  struct Group {
    int digit;
    std::vector<Mat> train, test;
  };
  std::vector<Group> groups;
  long rows, cols;
  if (cfg.has("image.input_pgm")) {
    Mat img = read_pgm(cfg.get_string("image.input_pgm"));
    long block = cfg.get_long("image.block_size", 32);
    auto blocks = split_blocks(img, block);
    rows = cols = block;
    groups.push_back({-1, blocks, blocks});
  } else {
    ImageSet train = read_idx_images(cfg.get_string("image.train_images"));
    std::vector<int> train_labels = read_idx_labels(cfg.get_string("image.train_labels"));
    ImageSet test = read_idx_images(cfg.get_string("image.test_images"));
    std::vector<int> test_labels = read_idx_labels(cfg.get_string("image.test_labels"));
    if ((long)train_labels.size() != train.count || (long)test_labels.size() != test.count)
      throw std::runtime_error("image: label/image count mismatch");
    rows = train.rows;
    cols = train.cols;
    long train_limit = cfg.get_long("image.train_limit", 500);
    long test_limit = cfg.get_long("image.test_limit", 100);
    if (test_limit < 1) throw std::runtime_error("config: trial counts must be >= 1");
    for (int digit : parse_digit_list(cfg.get_string("image.digits", "0"))) {
      Group g;
      g.digit = digit;
      for (long i = 0; i < train.count && (long)g.train.size() < train_limit; ++i)
        if (train_labels[i] == digit) g.train.push_back(train.images[i]);
      for (long i = 0; i < test.count && (long)g.test.size() < test_limit; ++i)
        if (test_labels[i] == digit) g.test.push_back(test.images[i]);
      if (g.train.empty() || g.test.empty())
        throw std::runtime_error("image: no images found for digit " + std::to_string(digit));
      groups.push_back(std::move(g));
    }
  }

  ImageExperimentResult result;
  auto out = open_out(ec.out_dir, "image_ratios.csv");
  CsvWriter csv(out, {"digit",           "images_used",     "skipped",
                      "k_H",             "k_L",             "m",
                      "mean_r_H_pref",   "stderr_r_H_pref", "mean_r_W_pref",
                      "stderr_r_W_pref", "mean_r_H_reg",    "stderr_r_H_reg",
                      "mean_r_W_reg",    "stderr_r_W_reg",  "diverged_pref",
                      "diverged_reg"},
                ec.config.hash(), ec.seed);

  for (const Group& group : groups) {
    uint64_t digit_seed = mix_seed(ec.seed, 7777 + (uint64_t)(group.digit + 1));
    DigitSetup setup = design_for_images(group.train, rows, cols, ec, digit_seed);

    ImageDigitRow row;
    row.digit = group.digit;
    row.k_H = setup.k_H;
    row.k_L = setup.k_L;
    row.m = setup.m;
    Accum h_pref, w_pref, h_reg, w_reg;
    long saved = 0;

    for (size_t ti = 0; ti < group.test.size(); ++ti) {
      PartitionedSignal sig = partition_coefficients(haar2d_forward(group.test[ti], 1));
      double energy = l2sq(sig.signal);
      if (!(energy > 0.0)) {
        row.skipped++;
        std::cerr << "image: skipping all-zero image " << ti << " for group " << group.digit
                  << "\n";
        continue;
      }
      double sigma2 = std::isinf(snr) ? 0.0 : energy / snr;
      uint64_t img_seed = mix_seed(digit_seed, 100 + ti);

      DecodeConfig dcfg = base_cfg;
      dcfg.noise_variance = sigma2;
      Rng noise_p(mix_seed(img_seed, 1), 0);
      std::vector<double> y_p = add_noise(setup.mat_pref.apply(sig.signal), sigma2, noise_p);
      DecodeResult res_p =
          decode(y_p, setup.mat_pref, setup.prior_H, setup.prior_L, dcfg, &sig.signal);
      Rng noise_r(mix_seed(img_seed, 2), 0);
      std::vector<double> y_r = add_noise(setup.mat_reg.apply(sig.signal), sigma2, noise_r);
      DecodeResult res_r =
          decode(y_r, setup.mat_reg, setup.prior_H, setup.prior_L, dcfg, &sig.signal);

      if (res_p.diverged) row.diverged_pref++;
      if (res_r.diverged) row.diverged_reg++;
      auto [rh_p, rw_p] = error_ratios(res_p.estimate, sig.signal, sig.n_H);
      auto [rh_r, rw_r] = error_ratios(res_r.estimate, sig.signal, sig.n_H);
      h_pref.add(rh_p);
      w_pref.add(rw_p);
      h_reg.add(rh_r);
      w_reg.add(rw_r);
      row.images_used++;

      if (saved < save_images) {
        std::string tag = std::to_string(group.digit) + "_" + std::to_string(ti);
        write_pgm((fs::path(ec.out_dir) / ("original_" + tag + ".pgm")).string(),
                  group.test[ti]);
        write_pgm((fs::path(ec.out_dir) / ("recon_pref_" + tag + ".pgm")).string(),
                  reconstruct_image(res_p.estimate, rows, cols));
        write_pgm((fs::path(ec.out_dir) / ("recon_reg_" + tag + ".pgm")).string(),
                  reconstruct_image(res_r.estimate, rows, cols));
        saved++;
      }
    }

    row.mean_r_H_pref = h_pref.mean();
    row.stderr_r_H_pref = h_pref.stderr_est();
    row.mean_r_W_pref = w_pref.mean();
    row.stderr_r_W_pref = w_pref.stderr_est();
    row.mean_r_H_reg = h_reg.mean();
    row.stderr_r_H_reg = h_reg.stderr_est();
    row.mean_r_W_reg = w_reg.mean();
    row.stderr_r_W_reg = w_reg.stderr_est();
    result.rows.push_back(row);

    csv.row_mixed({std::to_string(row.digit), std::to_string(row.images_used),
                   std::to_string(row.skipped), std::to_string(row.k_H),
                   std::to_string(row.k_L), std::to_string(row.m),
                   format_g17(row.mean_r_H_pref), format_g17(row.stderr_r_H_pref),
                   format_g17(row.mean_r_W_pref), format_g17(row.stderr_r_W_pref),
                   format_g17(row.mean_r_H_reg), format_g17(row.stderr_r_H_reg),
                   format_g17(row.mean_r_W_reg), format_g17(row.stderr_r_W_reg),
                   std::to_string(row.diverged_pref), std::to_string(row.diverged_reg)});
  }

  result.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace desense
