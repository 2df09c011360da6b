#include "desense/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace desense {

namespace {
constexpr double kVarFloor = 1e-60;
constexpr double kDivergenceNorm = 1e12;
}  // namespace

void DecodeConfig::check() const {
  if (max_iterations < 1) throw std::invalid_argument("decode config: max_iterations >= 1");
  if (!(damping > 0.0 && damping <= 1.0))
    throw std::invalid_argument("decode config: damping must lie in (0, 1]");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("decode config: tolerance >= 0");
  if (!(noise_variance >= 0.0)) throw std::invalid_argument("decode config: noise_variance >= 0");
}

ShrinkOut apply_denoiser(double mu, double v, const PriorModel& prior, DecoderMode mode) {
  if (mode == DecoderMode::MMSE) return h_mmse(prior, mu, v);
  switch (prior.kind) {
    case PriorKind::Laplacian:
      return h_laplacian(mu, v, prior.beta);
    case PriorKind::Gaussian:
      return h_gaussian(mu, v, prior.mean, prior.variance);
    case PriorKind::SpikeDiscrete:
    case PriorKind::SparseGaussian:
      return h_laplacian(mu, v, map_regularizer_beta(prior));
    case PriorKind::Tabulated:
      return h_general_map(prior, mu, v);
  }
  throw std::logic_error("apply_denoiser: unknown prior kind");
}

MessageState init_messages(const SparseSensingMatrix& matrix, const PriorModel& prior_H,
                           const PriorModel& prior_L, const DecodeConfig& config) {
  config.check();
  MessageState st;
  st.noise_variance = config.noise_variance;
  size_t ecount = matrix.triplets.size();
  st.edge_row.resize(ecount);
  st.edge_col.resize(ecount);
  st.edge_value.resize(ecount);
  st.check_edges.assign(matrix.m, {});
  st.var_edges.assign(matrix.n, {});
  double mag = matrix.magnitude();
  for (size_t e = 0; e < ecount; ++e) {
    const auto& t = matrix.triplets[e];
    if (t.sign == 0) throw std::logic_error("init_messages: zero entry on an edge");
    st.edge_row[e] = t.row;
    st.edge_col[e] = t.col;
    st.edge_value[e] = t.sign * mag;
    st.check_edges[t.row].push_back((int)e);
    st.var_edges[t.col].push_back((int)e);
  }
  st.vc_mean.resize(ecount);
  st.vc_var.resize(ecount);
  st.cv_mean.assign(ecount, 0.0);
  st.cv_var.assign(ecount, 0.0);
  double mh = prior_H.first_moment(), vh = prior_H.moment_var();
  double ml = prior_L.first_moment(), vl = prior_L.moment_var();
  for (size_t e = 0; e < ecount; ++e) {
    bool high = st.edge_col[e] < matrix.n_high;
    st.vc_mean[e] = high ? mh : ml;
    st.vc_var[e] = std::max(high ? vh : vl, kVarFloor);
  }
  return st;
}

void check_to_var_update(MessageState& state, const SparseSensingMatrix& matrix,
                         const std::vector<double>& y) {
  if ((long)y.size() != matrix.m)
    throw std::invalid_argument("check_to_var_update: measurement length mismatch");
  for (long a = 0; a < matrix.m; ++a) {
    const auto& edges = state.check_edges[a];
    for (int e : edges) {
      // direct leave-one-out sums; subtracting from a precomputed total
      // cancels catastrophically when one message dominates
      double sum_mu = 0.0, sum_var = 0.0;
      for (int f : edges) {
        if (f == e) continue;
        sum_mu += state.edge_value[f] * state.vc_mean[f];
        sum_var += state.edge_value[f] * state.edge_value[f] * state.vc_var[f];
      }
      double aai = state.edge_value[e];
      state.cv_mean[e] = (y[a] - sum_mu) / aai;
      state.cv_var[e] = std::max((state.noise_variance + sum_var) / (aai * aai), kVarFloor);
    }
  }
}

namespace {

// Precision-weighted Gaussian product over the edge set, skipping `skip`
// (-1 aggregates everything).
bool cavity_moments(const MessageState& st, const std::vector<int>& edges, int skip, double* mu,
                    double* v) {
  double prec = 0.0, num = 0.0;
  for (int f : edges) {
    if (f == skip) continue;
    double p = 1.0 / st.cv_var[f];
    prec += p;
    num += st.cv_mean[f] * p;
  }
  if (!(prec > 0.0)) return false;
  *mu = num / prec;
  *v = 1.0 / prec;
  return true;
}

}  // namespace

void var_to_check_update(MessageState& state, const SparseSensingMatrix& matrix,
                         const PriorModel& prior_H, const PriorModel& prior_L,
                         const DecodeConfig& config) {
  double mh = prior_H.first_moment(), vh = prior_H.moment_var();
  double ml = prior_L.first_moment(), vl = prior_L.moment_var();
  for (long i = 0; i < matrix.n; ++i) {
    const auto& edges = state.var_edges[i];
    const PriorModel& prior = (i < matrix.n_high) ? prior_H : prior_L;
    for (int e : edges) {
      double mu, v;
      ShrinkOut out;
      if (cavity_moments(state, edges, e, &mu, &v))
        out = apply_denoiser(mu, v, prior, config.mode);
      else
        out = {i < matrix.n_high ? mh : ml, i < matrix.n_high ? vh : vl};
      double d = config.damping;
      state.vc_mean[e] = d * out.mean + (1.0 - d) * state.vc_mean[e];
      state.vc_var[e] = std::max(d * out.var + (1.0 - d) * state.vc_var[e], kVarFloor);
    }
  }
  state.iteration++;
}

void DecodeResult::write_csv(std::ostream& os) const {
  os << "iteration,residual,E,V\n";
  for (size_t t = 0; t < residual_traj.size(); ++t) {
    os << t << ',';
    char buf[64];
    snprintf(buf, sizeof(buf), "%.17g", residual_traj[t]);
    os << buf << ',';
    if (t < E_traj.size()) {
      snprintf(buf, sizeof(buf), "%.17g", E_traj[t]);
      os << buf;
    }
    os << ',';
    if (t < V_traj.size()) {
      snprintf(buf, sizeof(buf), "%.17g", V_traj[t]);
      os << buf;
    }
    os << '\n';
  }
}

namespace {

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> read_out_estimate(const MessageState& st, const SparseSensingMatrix& matrix,
                                      const PriorModel& prior_H, const PriorModel& prior_L,
                                      const DecodeConfig& config) {
  std::vector<double> est(matrix.n);
  for (long i = 0; i < matrix.n; ++i) {
    const PriorModel& prior = (i < matrix.n_high) ? prior_H : prior_L;
    double mu, v;
    if (cavity_moments(st, st.var_edges[i], -1, &mu, &v))
      est[i] = apply_denoiser(mu, v, prior, config.mode).mean;
    else
      est[i] = prior.first_moment();
  }
  return est;
}

void record_point(DecodeResult& res, const MessageState& st, const SparseSensingMatrix& matrix,
                  const std::vector<double>& y, const std::vector<double>& est,
                  const std::vector<double>* truth) {
  std::vector<double> r = matrix.apply(est);
  for (long a = 0; a < matrix.m; ++a) r[a] = y[a] - r[a];
  res.residual_traj.push_back(l2_norm(r));
  size_t ecount = st.vc_mean.size();
  if (truth) {
    double e = 0.0;
    for (size_t f = 0; f < ecount; ++f) {
      double d = st.vc_mean[f] - (*truth)[st.edge_col[f]];
      e += d * d;
    }
    res.E_traj.push_back(ecount ? e / (double)ecount : 0.0);
  }
  double v = 0.0;
  for (size_t f = 0; f < ecount; ++f) v += st.vc_var[f];
  res.V_traj.push_back(ecount ? v / (double)ecount : 0.0);
}

}  // namespace

DecodeResult decode(const std::vector<double>& y, const SparseSensingMatrix& matrix,
                    const PriorModel& prior_H, const PriorModel& prior_L,
                    const DecodeConfig& config, const std::vector<double>* truth) {
  config.check();
  if ((long)y.size() != matrix.m)
    throw std::invalid_argument("decode: measurement length mismatch");
  if (truth && (long)truth->size() != matrix.n)
    throw std::invalid_argument("decode: truth length mismatch");
  prior_H.check();
  prior_L.check();

  MessageState st = init_messages(matrix, prior_H, prior_L, config);
  DecodeResult res;
  // iteration 0: prior-mean estimate and the initial message statistics
  res.estimate.assign(matrix.n, 0.0);
  for (long i = 0; i < matrix.n; ++i)
    res.estimate[i] = (i < matrix.n_high ? prior_H : prior_L).first_moment();
  record_point(res, st, matrix, y, res.estimate, truth);

  for (int t = 1; t <= config.max_iterations; ++t) {
    check_to_var_update(st, matrix, y);
    var_to_check_update(st, matrix, prior_H, prior_L, config);
    std::vector<double> est = read_out_estimate(st, matrix, prior_H, prior_L, config);
    double change = 0.0, norm = 0.0;
    for (long i = 0; i < matrix.n; ++i) {
      change = std::max(change, std::abs(est[i] - res.estimate[i]));
      norm = std::max(norm, std::abs(est[i]));
    }
    res.estimate = std::move(est);
    res.iterations = t;
    record_point(res, st, matrix, y, res.estimate, truth);
    if (!std::isfinite(norm) || norm > kDivergenceNorm) {
      res.diverged = true;
      break;
    }
    if (change < config.tolerance) {
      res.converged = true;
      break;
    }
  }
  return res;
}

DecodeResult decode(const std::vector<double>& y, const SparseSensingMatrix& matrix,
                    const PriorModel& prior, const DecodeConfig& config,
                    const std::vector<double>* truth) {
  return decode(y, matrix, prior, prior, config, truth);
}

namespace {

double spectral_norm_sq(const SparseSensingMatrix& matrix) {
  // power iteration on A^T A from a deterministic non-degenerate start
  std::vector<double> v(matrix.n);
  for (long i = 0; i < matrix.n; ++i) v[i] = 1.0 + 0.1 * (double)(i % 7);
  double nv = l2_norm(v);
  for (double& x : v) x /= nv;
  for (int it = 0; it < 200; ++it) {
    std::vector<double> w = matrix.apply_t(matrix.apply(v));
    double norm = l2_norm(w);
    if (!(norm > 0.0)) return 1.0;  // A = 0: any step is valid
    for (double& x : w) x /= norm;
    v = std::move(w);
  }
  std::vector<double> av = matrix.apply(v);  // Rayleigh quotient with unit v
  double num = 0.0;
  for (double x : av) num += x * x;
  return std::max(num, 1e-300);
}

}  // namespace

DecodeResult ista_baseline(const std::vector<double>& y, const SparseSensingMatrix& matrix,
                           double beta, const DecodeConfig& config) {
  config.check();
  if ((long)y.size() != matrix.m)
    throw std::invalid_argument("ista_baseline: measurement length mismatch");
  if (beta < 0.0) throw std::invalid_argument("ista_baseline: beta must be non-negative");

  double lip = spectral_norm_sq(matrix);
  double step = 1.0 / std::max(lip * (1.0 + 1e-9), 1e-300);
  double tau = beta * config.noise_variance;  // l1 weight of the objective

  DecodeResult res;
  res.estimate.assign(matrix.n, 0.0);
  auto objective = [&](const std::vector<double>& x, const std::vector<double>& r) {
    double s = 0.0;
    for (double ri : r) s += ri * ri;
    double l1 = 0.0;
    for (double xi : x) l1 += std::abs(xi);
    return 0.5 * s + tau * l1;
  };
  std::vector<double> r = matrix.apply(res.estimate);
  for (long a = 0; a < matrix.m; ++a) r[a] = y[a] - r[a];
  res.residual_traj.push_back(l2_norm(r));
  res.objective_traj.push_back(objective(res.estimate, r));

  for (int t = 1; t <= config.max_iterations; ++t) {
    std::vector<double> grad = matrix.apply_t(r);  // A^T (y - Ax)
    double change = 0.0;
    for (long i = 0; i < matrix.n; ++i) {
      double xi = prox_soft(res.estimate[i] + step * grad[i], tau * step);
      change = std::max(change, std::abs(xi - res.estimate[i]));
      res.estimate[i] = xi;
    }
    r = matrix.apply(res.estimate);
    for (long a = 0; a < matrix.m; ++a) r[a] = y[a] - r[a];
    res.iterations = t;
    res.residual_traj.push_back(l2_norm(r));
    res.objective_traj.push_back(objective(res.estimate, r));
    if (change < config.tolerance) {
      res.converged = true;
      break;
    }
  }
  return res;
}

std::pair<double, double> error_ratios(const std::vector<double>& estimate,
                                       const std::vector<double>& truth, long n_high) {
  if (estimate.size() != truth.size())
    throw std::invalid_argument("error_ratios: length mismatch");
  if (n_high < 0 || n_high > (long)truth.size())
    throw std::invalid_argument("error_ratios: invalid partition size");
  double num_h = 0.0, den_h = 0.0, num_w = 0.0, den_w = 0.0;
  for (size_t i = 0; i < truth.size(); ++i) {
    double d = estimate[i] - truth[i];
    num_w += d * d;
    den_w += truth[i] * truth[i];
    if ((long)i < n_high) {
      num_h += d * d;
      den_h += truth[i] * truth[i];
    }
  }
  if (!(den_h > 0.0) || !(den_w > 0.0))
    throw std::domain_error("error_ratios: zero-norm truth makes the ratio undefined");
  return {std::sqrt(num_h) / std::sqrt(den_h), std::sqrt(num_w) / std::sqrt(den_w)};
}

}  // namespace desense
