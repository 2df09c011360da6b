#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "desense/decoder.hpp"
#include "desense/rng.hpp"

using namespace desense;

namespace {

SparseSensingMatrix make_matrix(long m, long n, double A,
                                const std::vector<MatrixTriplet>& triplets) {
  SparseSensingMatrix mat;
  mat.m = m;
  mat.n = n;
  mat.n_high = 0;
  mat.sensing_scale_A = A;
  mat.triplets = triplets;
  return mat;
}

// Dense solve by Gaussian elimination with partial pivoting (n <= 8 here).
std::vector<double> solve_dense(std::vector<std::vector<double>> M, std::vector<double> b) {
  const int n = int(b.size());
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(M[i][k]) > std::fabs(M[piv][k])) piv = i;
    std::swap(M[k], M[piv]);
    std::swap(b[k], b[piv]);
    for (int i = k + 1; i < n; ++i) {
      double f = M[i][k] / M[k][k];
      for (int j = k; j < n; ++j) M[i][j] -= f * M[k][j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= M[i][j] * x[j];
    x[i] = s / M[i][i];
  }
  return x;
}

// Exact Gaussian posterior for y = Ax + w, x ~ N(0, tau2 I), w ~ N(0, s2 I):
// precision M = A^T A / s2 + I/tau2, mean = M^{-1} A^T y / s2,
// variances = diagonal of M^{-1}.
struct ExactPosterior {
  std::vector<double> mean, var;
};

ExactPosterior gaussian_posterior(const SparseSensingMatrix& mat, const std::vector<double>& y,
                                  double tau2, double s2) {
  const int n = int(mat.n);
  std::vector<std::vector<double>> dense(mat.m, std::vector<double>(n, 0.0));
  double mag = mat.magnitude();
  for (const auto& t : mat.triplets) dense[t.row][t.col] += t.sign * mag;
  std::vector<std::vector<double>> M(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) M[i][i] = 1.0 / tau2;
  for (long a = 0; a < mat.m; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M[i][j] += dense[a][i] * dense[a][j] / s2;
  std::vector<double> rhs(n, 0.0);
  for (long a = 0; a < mat.m; ++a)
    for (int i = 0; i < n; ++i) rhs[i] += dense[a][i] * y[a] / s2;

  ExactPosterior out;
  out.mean = solve_dense(M, rhs);
  out.var.resize(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    out.var[i] = solve_dense(M, e)[i];
  }
  return out;
}

// MP marginals read out from a converged message state: full precision-
// weighted aggregation over every incident edge, then the denoiser.
struct Marginals {
  std::vector<double> mean, var;
};

Marginals mp_marginals(const SparseSensingMatrix& mat, const std::vector<double>& y,
                       const PriorModel& prior, const DecodeConfig& cfg, int iterations) {
  MessageState state = init_messages(mat, prior, prior, cfg);
  for (int t = 0; t < iterations; ++t) {
    check_to_var_update(state, mat, y);
    var_to_check_update(state, mat, prior, prior, cfg);
  }
  check_to_var_update(state, mat, y);
  Marginals out;
  out.mean.assign(mat.n, 0.0);
  out.var.assign(mat.n, 0.0);
  for (long v = 0; v < mat.n; ++v) {
    double prec = 0.0, wmean = 0.0;
    for (int e : state.var_edges[v]) {
      prec += 1.0 / state.cv_var[e];
      wmean += state.cv_mean[e] / state.cv_var[e];
    }
    ShrinkOut h = apply_denoiser(wmean / prec, 1.0 / prec, prior, cfg.mode);
    out.mean[v] = h.mean;
    out.var[v] = h.var;
  }
  return out;
}

void check_tree_against_exact(const SparseSensingMatrix& mat, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> y(mat.m);
  for (auto& v : y) v = rng.gauss();
  const double tau2 = 0.7, s2 = 0.3;
  auto prior = PriorModel::gaussian(tau2);
  DecodeConfig cfg;
  cfg.mode = DecoderMode::MMSE;
  cfg.noise_variance = s2;
  cfg.max_iterations = 30;

  auto exact = gaussian_posterior(mat, y, tau2, s2);
  auto mp = mp_marginals(mat, y, prior, cfg, 30);
  for (long i = 0; i < mat.n; ++i) {
    CHECK(mp.mean[i] == doctest::Approx(exact.mean[i]).epsilon(1e-9));
    CHECK(mp.var[i] == doctest::Approx(exact.var[i]).epsilon(1e-9));
  }

  auto res = decode(y, mat, prior, cfg);
  for (long i = 0; i < mat.n; ++i)
    CHECK(res.estimate[i] == doctest::Approx(exact.mean[i]).epsilon(1e-9));
}

}  // namespace

TEST_CASE("denoiser dispatch follows mode and prior family") {
  auto spike = PriorModel::spike_discrete(0.1, 1.0);
  auto mmse = apply_denoiser(0.4, 0.2, spike, DecoderMode::MMSE);
  auto direct = h_mmse(spike, 0.4, 0.2);
  CHECK(mmse.mean == direct.mean);
  CHECK(mmse.var == direct.var);

  auto lap = PriorModel::laplacian(2.0);
  auto map_lap = apply_denoiser(1.7, 0.5, lap, DecoderMode::MAP);
  CHECK(map_lap.mean == h_laplacian(1.7, 0.5, 2.0).mean);

  auto gauss = PriorModel::gaussian(0.7);
  auto map_gauss = apply_denoiser(1.0, 0.3, gauss, DecoderMode::MAP);
  CHECK(map_gauss.mean == h_gaussian(1.0, 0.3, 0.0, 0.7).mean);

  // MAP spikes run through the calibrated Laplacian surrogate.
  double beta = map_regularizer_beta(spike);
  auto map_spike = apply_denoiser(0.9, 0.2, spike, DecoderMode::MAP);
  CHECK(map_spike.mean == h_laplacian(0.9, 0.2, beta).mean);
}

TEST_CASE("MP on a star factor graph matches the exact posterior") {
  auto mat = make_matrix(1, 3, 1.0,
                         {{0, 0, 1}, {0, 1, -1}, {0, 2, 1}});
  check_tree_against_exact(mat, 31);
}

TEST_CASE("MP on a chain factor graph matches the exact posterior") {
  auto mat = make_matrix(3, 4, 1.0,
                         {{0, 0, 1}, {0, 1, 1},
                          {1, 1, -1}, {1, 2, 1},
                          {2, 2, -1}, {2, 3, -1}});
  check_tree_against_exact(mat, 32);
}

TEST_CASE("MP on an eight-variable tree matches the exact posterior") {
  auto mat = make_matrix(4, 8, 1.0,
                         {{0, 0, 1}, {0, 1, -1}, {0, 2, 1},
                          {1, 2, 1}, {1, 3, 1}, {1, 4, -1},
                          {2, 4, 1}, {2, 5, 1}, {2, 6, -1},
                          {3, 6, 1}, {3, 7, 1}});
  check_tree_against_exact(mat, 33);
}

TEST_CASE("damping leaves a converged fixed point in place") {
  auto mat = make_matrix(3, 4, 1.0,
                         {{0, 0, 1}, {0, 1, 1},
                          {1, 1, -1}, {1, 2, 1},
                          {2, 2, -1}, {2, 3, -1}});
  std::vector<double> y{0.4, -1.1, 0.6};
  auto prior = PriorModel::gaussian(0.7);
  DecodeConfig cfg;
  cfg.mode = DecoderMode::MMSE;
  cfg.noise_variance = 0.3;

  MessageState state = init_messages(mat, prior, prior, cfg);
  for (int t = 0; t < 50; ++t) {
    check_to_var_update(state, mat, y);
    var_to_check_update(state, mat, prior, prior, cfg);
  }
  auto vc_mean = state.vc_mean, vc_var = state.vc_var;

  DecodeConfig damped = cfg;
  damped.damping = 0.5;
  check_to_var_update(state, mat, y);
  var_to_check_update(state, mat, prior, prior, damped);
  for (size_t e = 0; e < vc_mean.size(); ++e) {
    CHECK(state.vc_mean[e] == doctest::Approx(vc_mean[e]).epsilon(1e-9));
    CHECK(state.vc_var[e] == doctest::Approx(vc_var[e]).epsilon(1e-9));
  }
}

TEST_CASE("the all-zero signal is a decoder fixed point") {
  auto mat = make_matrix(3, 6, 2.0,
                         {{0, 0, 1}, {0, 3, -1},
                          {1, 1, 1}, {1, 4, 1},
                          {2, 2, -1}, {2, 5, 1}});
  std::vector<double> y(3, 0.0);
  auto prior = PriorModel::spike_discrete(0.1, 1.0);
  DecodeConfig cfg;  // MAP, noiseless
  auto res = decode(y, mat, prior, cfg);
  CHECK(res.converged);
  for (double v : res.estimate) CHECK(v == 0.0);
}

TEST_CASE("a single measurement of a single variable is conjugate") {
  auto mat = make_matrix(1, 1, 1.0, {{0, 0, 1}});
  const double tau2 = 0.6, s2 = 0.2, y0 = 1.3;
  auto prior = PriorModel::gaussian(tau2);
  DecodeConfig cfg;
  cfg.mode = DecoderMode::MMSE;
  cfg.noise_variance = s2;
  auto res = decode({y0}, mat, prior, cfg);
  CHECK(res.estimate[0] == doctest::Approx(y0 * tau2 / (tau2 + s2)).epsilon(1e-12));
}

TEST_CASE("decode trajectories have one entry per iteration plus init") {
  auto mat = make_matrix(3, 4, 1.0,
                         {{0, 0, 1}, {0, 1, 1},
                          {1, 1, -1}, {1, 2, 1},
                          {2, 2, -1}, {2, 3, -1}});
  std::vector<double> truth{0.5, -0.2, 0.0, 1.0};
  auto y = mat.apply(truth);
  auto prior = PriorModel::gaussian(0.7);
  DecodeConfig cfg;
  cfg.mode = DecoderMode::MMSE;
  cfg.noise_variance = 0.1;
  cfg.max_iterations = 12;
  cfg.tolerance = 0.0;  // force all iterations
  auto res = decode(y, mat, prior, cfg, &truth);
  CHECK(res.iterations == 12);
  CHECK(res.residual_traj.size() == 13);
  CHECK(res.E_traj.size() == 13);
  CHECK(res.V_traj.size() == 13);
  // Messages start at the prior moments (mean 0, variance 0.7), so the first
  // trajectory entries are the edge-averaged truth power and prior variance.
  double e0 = (0.25 * 1 + 0.04 * 2 + 0.0 * 2 + 1.0 * 1) / 6.0;
  CHECK(res.E_traj[0] == doctest::Approx(e0).epsilon(1e-12));
  CHECK(res.V_traj[0] == doctest::Approx(0.7).epsilon(1e-12));

  std::ostringstream os;
  res.write_csv(os);
  std::string first_line = os.str().substr(0, os.str().find('\n'));
  CHECK(first_line == "iteration,residual,E,V");
}

TEST_CASE("decoding is bitwise deterministic") {
  auto mat = make_matrix(3, 6, 2.0,
                         {{0, 0, 1}, {0, 2, -1}, {0, 4, 1},
                          {1, 1, 1}, {1, 3, 1}, {1, 5, -1},
                          {2, 0, -1}, {2, 3, -1}, {2, 5, 1}});
  std::vector<double> y{0.3, -0.8, 0.2};
  auto prior = PriorModel::spike_discrete(0.2, 1.0);
  DecodeConfig cfg;
  cfg.mode = DecoderMode::MMSE;
  cfg.noise_variance = 0.05;
  auto a = decode(y, mat, prior, cfg);
  auto b = decode(y, mat, prior, cfg);
  REQUIRE(a.estimate.size() == b.estimate.size());
  for (size_t i = 0; i < a.estimate.size(); ++i) CHECK(a.estimate[i] == b.estimate[i]);
}

TEST_CASE("MP beats a few ISTA sweeps on a sparse noisy instance") {
  // 60x200 biregular (3,10) instance, 8 spikes, SNR 100. Sensing scale 1
  // keeps the per-measurement power above the noise floor.
  RegularEnsembleSpec spec;
  spec.lambda = GeneratingPolynomial::single(3);
  spec.rho = GeneratingPolynomial::single(10);
  spec.n = 200;
  spec.m = 60;
  spec.sensing_scale_A = 1.0;
  auto g = build_graph(spec, 41);
  auto mat = graph_to_matrix(g, 1.0, 41);

  Rng rng(91);
  std::vector<double> truth(200, 0.0);
  for (int placed = 0; placed < 8;) {
    long idx = long(rng.below(200));
    if (truth[idx] != 0.0) continue;
    truth[idx] = double(rng.sign());
    ++placed;
  }
  auto y = mat.apply(truth);
  double snr = 100.0, power = 8.0;
  double s2 = power / snr;
  for (auto& v : y) v += std::sqrt(s2) * rng.gauss();

  auto prior = PriorModel::spike_discrete(8.0 / 200.0, 1.0);
  DecodeConfig mp_cfg;
  mp_cfg.mode = DecoderMode::MMSE;
  mp_cfg.noise_variance = s2;
  mp_cfg.max_iterations = 30;
  auto mp = decode(y, mat, prior, mp_cfg, &truth);

  DecodeConfig ista_cfg;
  ista_cfg.noise_variance = s2;
  ista_cfg.max_iterations = 10;
  ista_cfg.tolerance = 0.0;
  auto ista = ista_baseline(y, mat, map_regularizer_beta(prior), ista_cfg);

  auto [mp_rh, mp_rw] = error_ratios(mp.estimate, truth, 200);
  auto [is_rh, is_rw] = error_ratios(ista.estimate, truth, 200);
  CHECK(mp_rw < is_rw);
  CHECK(mp_rw < 0.2);

  // ISTA reports a non-increasing objective trajectory.
  REQUIRE(ista.objective_traj.size() >= 2);
  for (size_t t = 1; t < ista.objective_traj.size(); ++t)
    CHECK(ista.objective_traj[t] <= ista.objective_traj[t - 1] + 1e-9);
}

TEST_CASE("error ratios from a hand example") {
  std::vector<double> truth{2.0, 1.0, 1.0, 1.0};
  std::vector<double> estimate{1.0, 1.0, 1.0, 1.0};
  auto [rh, rw] = error_ratios(estimate, truth, 1);
  CHECK(rh == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rw == doctest::Approx(1.0 / std::sqrt(7.0)).epsilon(1e-15));

  CHECK_THROWS_AS(error_ratios(estimate, std::vector<double>(4, 0.0), 2), std::domain_error);
  CHECK_THROWS_AS(error_ratios(estimate, truth, 0), std::domain_error);
  CHECK_THROWS_AS(error_ratios(estimate, std::vector<double>(3, 1.0), 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(error_ratios(estimate, truth, 9), std::invalid_argument);
}

TEST_CASE("decode config validation") {
  DecodeConfig bad;
  bad.damping = 0.0;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  bad = DecodeConfig{};
  bad.damping = 1.5;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  bad = DecodeConfig{};
  bad.max_iterations = 0;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  bad = DecodeConfig{};
  bad.noise_variance = -0.1;
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
}
