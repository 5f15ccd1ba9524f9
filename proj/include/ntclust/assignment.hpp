#pragma once

#include "ntclust/types.hpp"

namespace nt {

// Value of the per-pair subproblem l1 + lambda0*s_P at a given y.
double candidate_sub_objective(const Vec& q, const Vec& y, const Vec& tau, const Vec& nu, double lambda0,
                               double lambda1, double eps);

// Minimizes 0.5*||q - y||^2 + lambda1*||y||_1 + lambda0*s_P(y) over y.
// The generalized soft threshold is resolved by bracketed root-finding on the
// scalar denominator self-consistency h = rho(y(h), nu), followed by a
// coordinate polish on the exact subproblem.
CandidateSolution solve_candidate(const Vec& q, const Vec& tau, const Vec& nu, double lambda0, double lambda1,
                                  double eps);

// s_P = rho(y,tau)/rho(y,nu) + sigma(y,tau), denominator clamped at eps.
double score_sP(const Vec& y, const Vec& tau, const Vec& nu, double eps);

// Solves every (c1, c2) candidate pair and returns the lexicographically
// first s_P minimizer.
Assignment assign_sample(const Vec& q, const DiscriminationParams& params, const HyperParams& hyper);

// Column-wise assign_sample over Q (M x K); output order matches input order.
std::vector<Assignment> assign_batch(const Mat& q_cols, const DiscriminationParams& params,
                                     const HyperParams& hyper);

}  // namespace nt
