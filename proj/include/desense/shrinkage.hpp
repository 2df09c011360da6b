#pragma once
#include "desense/ensembles.hpp"

namespace desense {

struct ShrinkOut {
  double mean = 0.0, var = 0.0;
};

// Soft threshold sign(u)*max(|u|-t, 0); derivative is 0 at the kink
// (measure-zero event under the Gaussian expectations that consume it).
double prox_soft(double u, double t);
double prox_soft_deriv(double u, double t);

// MAP update under a Laplacian regularizer with scale beta applied to a
// Gaussian message N(mu, v): mean = prox(mu; beta*v), var = beta*v*prox'.
ShrinkOut h_laplacian(double mu, double v, double beta);

// Linear-shrinkage closed form for a Gaussian prior (MAP and posterior-mean
// coincide): mean = (mu*tau2 + prior_mean*v)/(tau2+v), var = v*tau2/(tau2+v).
ShrinkOut h_gaussian(double mu, double v, double prior_mean, double tau2);

// Grid MAP for a tabulated prior: maximize log density(x) - (x-mu)^2/(2v)
// on the grid (parabolic refinement at interior maximizers), variance =
// inverse second-difference curvature at the maximizer. Throws on flat
// curvature (degenerate posterior).
ShrinkOut h_general_map(const PriorModel& tabulated, double mu, double v);

// Posterior mean/variance of x given a Gaussian observation N(mu, v) of x
// and the given prior: exact atoms for discrete mass, conjugate form for
// Gaussian components, dense grid integration for Laplacian/tabulated.
ShrinkOut h_mmse(const PriorModel& prior, double mu, double v);

}  // namespace desense
