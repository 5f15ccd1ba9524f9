#pragma once

#include "ntclust/types.hpp"

namespace nt {

SignSplit split_signs(const Vec& y);

// Sign-split similarity: ||a^- (.) b^-||_1 + ||a^+ (.) b^+||_1.
double rho(const Vec& a, const Vec& b);

// Support strength: ||a (.) b||_2^2.
double sigma_strength(const Vec& a, const Vec& b);

struct FcResult {
    double value = 0.0;
    int c1 = 1;
    int c2 = 1;
};

// Min over taus of [ rho(y,tau)/max_nu rho(y,nu) + sigma(y,tau) ], with the
// denominator clamped below at eps. Ties break to the smallest (c1, c2).
FcResult f_c(const Vec& y, const DiscriminationParams& params, double eps);

// Squared NT error ||q - y||^2.
double u_r(const Vec& q, const Vec& y);

// Adjustment error ||q - tau - nu||^2.
double u_a(const Vec& q, const Vec& tau, const Vec& nu);

// Parameter-spread prior: leave-one-out f_c over every tau and nu.
// When fewer than two parameters exist the prior degenerates to 0 and
// *degenerate (if given) is set.
double u_p(const DiscriminationParams& params, double eps, bool* degenerate = nullptr);

// Linear-map prior: (l2/2)||A||_F^2 + (l3/2)||AA^T - I||_F^2 - l4*log|det A^T A|.
double f_d(const Mat& A, double l2, double l3, double l4);

// Full objective over all samples. X is N x K (samples as columns), Y is the
// M x K matrix of assigned representations.
ObjectiveBreakdown total_objective(const Mat& X, const Mat& Y, const std::vector<Assignment>& assignments,
                                   const TransformModel& model, const HyperParams& hyper);

namespace detail {
// f_c variant tolerating empty candidate sets, used by the leave-one-out
// prior and the stage-2 solvers. Empty taus contribute 0; empty nus clamp
// the denominator to eps.
FcResult f_c_loo(const Vec& y, const std::vector<Vec>& taus, const std::vector<Vec>& nus, double eps);

void require_same_size(const Vec& a, const Vec& b, const char* where);
void require_finite(const Vec& v, const char* where);
}  // namespace detail

}  // namespace nt
