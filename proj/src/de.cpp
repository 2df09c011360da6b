#include "desense/de.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "desense/gauss.hpp"
#include "desense/rng.hpp"
#include "desense/shrinkage.hpp"

namespace desense {

void DEConfig::check() const {
  if (noise_variance < 0.0) throw std::invalid_argument("DE config: negative noise variance");
  if (quadrature_order < 8) throw std::invalid_argument("DE config: quadrature order must be >= 8");
  if (max_iterations < 1) throw std::invalid_argument("DE config: max_iterations must be >= 1");
  if (!(convergence_tolerance > 0.0))
    throw std::invalid_argument("DE config: tolerance must be positive");
}

EnsembleSummary ensemble_summary(const GeneratingPolynomial& lambda,
                                 const GeneratingPolynomial& rho) {
  lambda.check();
  rho.check();
  EnsembleSummary s;
  for (int i = 1; i < int(rho.coeff.size()); ++i) {
    if (rho.coeff[i] == 0.0) continue;
    for (int j = 1; j < int(lambda.coeff.size()); ++j) {
      if (lambda.coeff[j] == 0.0) continue;
      double w = rho.coeff[i] * lambda.coeff[j];
      s.a1 += w * std::sqrt(double(i) / double(j));
      s.a2 += w * (double(i) / double(j));
    }
  }
  return s;
}

double map_regularizer_beta(const PriorModel& prior) {
  switch (prior.kind) {
    case PriorKind::Laplacian:
      return prior.beta;
    case PriorKind::SpikeDiscrete:
      if (!(prior.amplitude > 0.0))
        throw std::invalid_argument("map regularizer: spike amplitude must be positive");
      return beta_from_rate(prior.sparsity, prior.amplitude);
    case PriorKind::SparseGaussian:
      return beta_from_rate(prior.sparsity, std::sqrt(prior.variance));
    default:
      throw std::invalid_argument(
          "map regularizer: no Laplacian calibration for this prior family");
  }
}

namespace {

// Closed-form moments over z ~ N(0,1) of the soft-threshold residual for one
// signal atom s: with u = s + sigma*z and threshold theta,
//   m2   = E[(prox(u; theta) - s)^2]
//   pout = P(|u| > theta)
struct AtomMoments {
  double m2 = 0.0, pout = 0.0;
};

AtomMoments prox_atom_moments(double s, double sigma, double theta) {
  AtomMoments out;
  if (theta == 0.0) {
    out.m2 = sigma * sigma;
    out.pout = 1.0;
    return out;
  }
  if (sigma == 0.0) {
    double d = prox_soft(s, theta) - s;
    out.m2 = d * d;
    out.pout = std::fabs(s) > theta ? 1.0 : 0.0;
    return out;
  }
  double a = (theta - s) / sigma;   // upper crossing: u > theta  <=>  z > a
  double b = (-theta - s) / sigma;  // lower crossing: u < -theta <=>  z < b
  double Fa = norm_cdf(-a), fa = norm_pdf(a);
  double Fb = norm_cdf(b), fb = norm_pdf(b);
  double s2 = sigma * sigma, t2 = theta * theta;
  double upper = s2 * (Fa + a * fa) - 2.0 * sigma * theta * fa + t2 * Fa;
  double lower = s2 * (Fb - b * fb) - 2.0 * sigma * theta * fb + t2 * Fb;
  double pin = std::max(0.0, norm_cdf(a) - norm_cdf(b));
  out.m2 = upper + lower + s * s * pin;
  out.pout = Fa + Fb;
  return out;
}

// One DE step through the Laplacian (prox) channel: effective noise scale b1,
// effective variance b2, threshold beta*b2.
DEStateRegular prox_step(double b1, double b2, double beta, const PriorModel& prior,
                         int gh_order) {
  double theta = beta * b2;
  double e = 0.0, p = 0.0;
  for (const auto& [s, w] : prior_quadrature(prior, gh_order)) {
    AtomMoments am = prox_atom_moments(s, b1, theta);
    e += w * am.m2;
    p += w * am.pout;
  }
  return {e, theta * p};
}

// Same step with the Gaussian-prior linear-shrinkage channel (closed form).
DEStateRegular linear_step(double b1, double b2, double tau2) {
  double r = tau2 / (tau2 + b2);
  double e = (1.0 - r) * (1.0 - r) * tau2 + r * r * b1 * b1;
  return {e, b2 * r};
}

// MMSE channel: Gauss-Hermite over z, prior quadrature over s.
DEStateRegular mmse_step(double b1, double b2, const PriorModel& prior, int gh_order) {
  const GaussHermite& gh = gauss_hermite(gh_order);
  double e = 0.0, vsum = 0.0;
  for (const auto& [s, w] : prior_quadrature(prior, gh_order)) {
    for (size_t k = 0; k < gh.node.size(); ++k) {
      ShrinkOut h = h_mmse(prior, s + b1 * gh.node[k], b2);
      double d = h.mean - s;
      e += w * gh.weight[k] * d * d;
      vsum += w * gh.weight[k] * h.var;
    }
  }
  return {e, vsum};
}

// Grid-MAP channel for tabulated priors.
DEStateRegular grid_map_step(double b1, double b2, const PriorModel& prior, int gh_order) {
  PriorModel tab = prior.kind == PriorKind::Tabulated ? prior : tabulate_prior(prior);
  const GaussHermite& gh = gauss_hermite(gh_order);
  double e = 0.0, vsum = 0.0;
  for (const auto& [s, w] : prior_quadrature(prior, gh_order)) {
    for (size_t k = 0; k < gh.node.size(); ++k) {
      ShrinkOut h = h_general_map(tab, s + b1 * gh.node[k], b2);
      double d = h.mean - s;
      e += w * gh.weight[k] * d * d;
      vsum += w * gh.weight[k] * h.var;
    }
  }
  return {e, vsum};
}

DEStateRegular dispatch_step(double b1, double b2, const PriorModel& prior,
                             const DEConfig& config) {
  if (config.decoder_mode == DecoderMode::MMSE)
    return mmse_step(b1, b2, prior, config.quadrature_order);
  switch (prior.kind) {
    case PriorKind::Laplacian:
    case PriorKind::SpikeDiscrete:
    case PriorKind::SparseGaussian:
      return prox_step(b1, b2, map_regularizer_beta(prior), prior, config.quadrature_order);
    case PriorKind::Gaussian:
      return linear_step(b1, b2, prior.variance);
    case PriorKind::Tabulated:
      return grid_map_step(b1, b2, prior, config.quadrature_order);
  }
  throw std::logic_error("dispatch_step: unknown prior kind");
}

void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::runtime_error(std::string("density evolution: ") + what +
                                                  " is non-finite (numeric overflow)");
}

}  // namespace

DEStateRegular de_step_gaussian(DEStateRegular s, double a1, double a2) {
  double denom = 1.0 + a2 * s.V;
  return {(a1 * a1 * s.E + a2 * a2 * s.V * s.V) / (denom * denom), a2 * s.V / denom};
}

DEStateRegular de_step_lasso(DEStateRegular s, double a1, double a2, double beta,
                             const PriorModel& prior) {
  if (!(beta > 0.0)) throw std::invalid_argument("de_step_lasso: beta must be positive");
  return prox_step(a1 * std::sqrt(s.E), a2 * s.V, beta, prior, 61);
}

// b1 = sum_{l,i} lambda_l rho_i sqrt((A sigma^2 + i E)/l)
// b2 = sum_{l,i} lambda_l rho_i (A sigma^2 + i V)/l
static void regular_b_terms(const DEStateRegular& s, const RegularEnsembleSpec& spec,
                            double noise_var, double* b1, double* b2) {
  double A = spec.sensing_scale_A > 0.0 ? spec.sensing_scale_A : default_sensing_scale(spec.rho);
  double base = A * noise_var;
  *b1 = 0.0;
  *b2 = 0.0;
  for (int l = 1; l < int(spec.lambda.coeff.size()); ++l) {
    if (spec.lambda.coeff[l] == 0.0) continue;
    for (int i = 1; i < int(spec.rho.coeff.size()); ++i) {
      if (spec.rho.coeff[i] == 0.0) continue;
      double w = spec.lambda.coeff[l] * spec.rho.coeff[i];
      *b1 += w * std::sqrt((base + i * s.E) / l);
      *b2 += w * (base + i * s.V) / l;
    }
  }
}

DEStateRegular de_step_regular(DEStateRegular s, const RegularEnsembleSpec& spec,
                               const PriorModel& prior, const DEConfig& config) {
  config.check();
  double b1, b2;
  regular_b_terms(s, spec, config.noise_variance, &b1, &b2);
  DEStateRegular out = dispatch_step(b1, b2, prior, config);
  check_finite(out.E, "E");
  check_finite(out.V, "V");
  return out;
}

// b_{H,1} = sum_{l,i,j} lambda_{H,l} rho_{H,i} rho_{L,j} sqrt((A s^2 + i E_H + j E_L)/l),
// b_{H,2} likewise with V's and 1/l; the L-side swaps in lambda_L.
static void pref_b_terms(const DEStatePreferential& s, const PreferentialEnsembleSpec& spec,
                         double noise_var, double* bH1, double* bH2, double* bL1, double* bL2) {
  double A = spec.sensing_scale_A > 0.0
                 ? spec.sensing_scale_A
                 : default_sensing_scale(spec.rho_H) + default_sensing_scale(spec.rho_L);
  double base = A * noise_var;
  *bH1 = *bH2 = *bL1 = *bL2 = 0.0;
  for (int i = 1; i < int(spec.rho_H.coeff.size()); ++i) {
    if (spec.rho_H.coeff[i] == 0.0) continue;
    for (int j = 1; j < int(spec.rho_L.coeff.size()); ++j) {
      if (spec.rho_L.coeff[j] == 0.0) continue;
      double w = spec.rho_H.coeff[i] * spec.rho_L.coeff[j];
      double e_arg = base + i * s.E_H + j * s.E_L;
      double v_arg = base + i * s.V_H + j * s.V_L;
      for (int l = 1; l < int(spec.lambda_H.coeff.size()); ++l) {
        if (spec.lambda_H.coeff[l] == 0.0) continue;
        *bH1 += w * spec.lambda_H.coeff[l] * std::sqrt(e_arg / l);
        *bH2 += w * spec.lambda_H.coeff[l] * v_arg / l;
      }
      for (int l = 1; l < int(spec.lambda_L.coeff.size()); ++l) {
        if (spec.lambda_L.coeff[l] == 0.0) continue;
        *bL1 += w * spec.lambda_L.coeff[l] * std::sqrt(e_arg / l);
        *bL2 += w * spec.lambda_L.coeff[l] * v_arg / l;
      }
    }
  }
}

DEStatePreferential de_step_preferential(DEStatePreferential s,
                                         const PreferentialEnsembleSpec& spec,
                                         const PriorModel& prior_H, const PriorModel& prior_L,
                                         const DEConfig& config) {
  config.check();
  double bH1, bH2, bL1, bL2;
  pref_b_terms(s, spec, config.noise_variance, &bH1, &bH2, &bL1, &bL2);
  DEStateRegular h = dispatch_step(bH1, bH2, prior_H, config);
  DEStateRegular l = dispatch_step(bL1, bL2, prior_L, config);
  DEStatePreferential out{h.E, l.E, h.V, l.V};
  check_finite(out.E_H, "E_H");
  check_finite(out.E_L, "E_L");
  check_finite(out.V_H, "V_H");
  check_finite(out.V_L, "V_L");
  return out;
}

double DETrace::final_norm() const {
  if (preferential) {
    if (pref_states.empty()) return 0.0;
    const auto& s = pref_states.back();
    return std::max(std::max(s.E_H, s.E_L), std::max(s.V_H, s.V_L));
  }
  if (states.empty()) return 0.0;
  return std::max(states.back().E, states.back().V);
}

void DETrace::write_csv(std::ostream& os) const {
  char buf[256];
  if (preferential) {
    os << "iteration,E_H,E_L,V_H,V_L\n";
    for (size_t t = 0; t < pref_states.size(); ++t) {
      const auto& s = pref_states[t];
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", t, s.E_H, s.E_L, s.V_H,
                    s.V_L);
      os << buf;
    }
  } else {
    os << "iteration,E,V\n";
    for (size_t t = 0; t < states.size(); ++t) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", t, states[t].E, states[t].V);
      os << buf;
    }
  }
}

template <class State, class Norm, class Diff>
static DETrace run_impl(State initial, const std::function<State(State)>& step,
                        const DEConfig& config, bool preferential, Norm norm, Diff diff,
                        std::vector<State> DETrace::* member) {
  config.check();
  DETrace trace;
  trace.preferential = preferential;
  auto& states = trace.*member;
  states.push_back(initial);
  State cur = initial;
  for (int t = 0; t < config.max_iterations; ++t) {
    State next = step(cur);
    states.push_back(next);
    trace.iterations = t + 1;
    if (norm(next) > 1e12) {
      trace.diverged = true;
      break;
    }
    if (diff(next, cur) < config.convergence_tolerance) {
      trace.converged = true;
      break;
    }
    cur = next;
  }
  return trace;
}

DETrace de_run(DEStateRegular initial, const std::function<DEStateRegular(DEStateRegular)>& step,
               const DEConfig& config) {
  return run_impl<DEStateRegular>(
      initial, step, config, false,
      [](const DEStateRegular& s) { return std::max(std::fabs(s.E), std::fabs(s.V)); },
      [](const DEStateRegular& a, const DEStateRegular& b) {
        return std::max(std::fabs(a.E - b.E), std::fabs(a.V - b.V));
      },
      &DETrace::states);
}

DETrace de_run(DEStatePreferential initial,
               const std::function<DEStatePreferential(DEStatePreferential)>& step,
               const DEConfig& config) {
  return run_impl<DEStatePreferential>(
      initial, step, config, true,
      [](const DEStatePreferential& s) {
        return std::max(std::max(std::fabs(s.E_H), std::fabs(s.E_L)),
                        std::max(std::fabs(s.V_H), std::fabs(s.V_L)));
      },
      [](const DEStatePreferential& a, const DEStatePreferential& b) {
        double d1 = std::max(std::fabs(a.E_H - b.E_H), std::fabs(a.E_L - b.E_L));
        double d2 = std::max(std::fabs(a.V_H - b.V_H), std::fabs(a.V_L - b.V_L));
        return std::max(d1, d2);
      },
      &DETrace::pref_states);
}

DEStateRegular de_initial_state(const PriorModel& prior) {
  double m2 = prior.second_moment();
  return {m2, m2};
}

DEStatePreferential de_initial_state(const PriorModel& prior_H, const PriorModel& prior_L) {
  double mh = prior_H.second_moment(), ml = prior_L.second_moment();
  return {mh, ml, mh, ml};
}

// --- Monte Carlo oracles ----------------------------------------------------

namespace {

double sample_prior(const PriorModel& prior, Rng& rng) {
  switch (prior.kind) {
    case PriorKind::SpikeDiscrete: {
      double u = rng.uniform();
      if (u >= prior.sparsity) return 0.0;
      return (u < 0.5 * prior.sparsity) ? prior.amplitude : -prior.amplitude;
    }
    case PriorKind::Gaussian:
      return std::sqrt(prior.variance) * rng.gauss();
    case PriorKind::SparseGaussian:
      if (rng.uniform() >= prior.sparsity) return 0.0;
      return prior.mean + std::sqrt(prior.variance) * rng.gauss();
    case PriorKind::Laplacian: {
      double u = rng.uniform_pos();
      double mag = -std::log(u) / prior.beta;
      return rng.sign() * mag;
    }
    case PriorKind::Tabulated:
      throw std::invalid_argument("sample_prior: tabulated priors not supported by the MC oracle");
  }
  return 0.0;
}

struct McAccum {
  double se = 0.0, se2 = 0.0, sv = 0.0, sv2 = 0.0;
  long n = 0;
  void add(double err2, double var) {
    se += err2;
    se2 += err2 * err2;
    sv += var;
    sv2 += var * var;
    ++n;
  }
  DEStateRegular mean() const { return {se / n, sv / n}; }
  DEStateRegular stderr_est() const {
    double ve = (se2 / n - (se / n) * (se / n)) / n;
    double vv = (sv2 / n - (sv / n) * (sv / n)) / n;
    return {std::sqrt(std::max(0.0, ve)), std::sqrt(std::max(0.0, vv))};
  }
};

McAccum mc_channel(double b1, double b2, const PriorModel& prior, const DEConfig& config,
                   long samples, Rng& rng) {
  McAccum acc;
  bool mmse = config.decoder_mode == DecoderMode::MMSE;
  double beta = 0.0;
  if (!mmse && prior.kind != PriorKind::Gaussian && prior.kind != PriorKind::Tabulated)
    beta = map_regularizer_beta(prior);
  for (long t = 0; t < samples; ++t) {
    double s = sample_prior(prior, rng);
    double mu = s + b1 * rng.gauss();
    ShrinkOut h;
    if (mmse)
      h = h_mmse(prior, mu, b2);
    else if (prior.kind == PriorKind::Gaussian)
      h = h_gaussian(mu, b2, 0.0, prior.variance);
    else
      h = h_laplacian(mu, b2, beta);
    double d = h.mean - s;
    acc.add(d * d, h.var);
  }
  return acc;
}

}  // namespace

DEStateRegular de_step_regular_mc(DEStateRegular s, const RegularEnsembleSpec& spec,
                                  const PriorModel& prior, const DEConfig& config, long samples,
                                  uint64_t seed, DEStateRegular* stderr_out) {
  double b1, b2;
  regular_b_terms(s, spec, config.noise_variance, &b1, &b2);
  Rng rng(seed);
  McAccum acc = mc_channel(b1, b2, prior, config, samples, rng);
  if (stderr_out) *stderr_out = acc.stderr_est();
  return acc.mean();
}

DEStatePreferential de_step_preferential_mc(DEStatePreferential s,
                                            const PreferentialEnsembleSpec& spec,
                                            const PriorModel& prior_H, const PriorModel& prior_L,
                                            const DEConfig& config, long samples, uint64_t seed,
                                            DEStatePreferential* stderr_out) {
  double bH1, bH2, bL1, bL2;
  pref_b_terms(s, spec, config.noise_variance, &bH1, &bH2, &bL1, &bL2);
  Rng rng_h(seed, 1), rng_l(seed, 2);
  McAccum ah = mc_channel(bH1, bH2, prior_H, config, samples, rng_h);
  McAccum al = mc_channel(bL1, bL2, prior_L, config, samples, rng_l);
  if (stderr_out) {
    DEStateRegular eh = ah.stderr_est(), el = al.stderr_est();
    *stderr_out = {eh.E, el.E, eh.V, el.V};
  }
  DEStateRegular mh = ah.mean(), ml = al.mean();
  return {mh.E, ml.E, mh.V, ml.V};
}

}  // namespace desense
