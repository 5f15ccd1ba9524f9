#pragma once

#include <optional>

#include "ntclust/types.hpp"

namespace nt {

// Gaussian-initialized model; identity keeps A pinned to I with M = N.
TransformModel init_model(int n, const HyperParams& hyper, std::uint64_t rng_seed, bool identity = false);

// Stage-2 sub-objectives (exposed for tests and the monotonicity contract).
double tau_objective(int c1, const Mat& q_cols, const Mat& y_cols, const std::vector<Assignment>& assignments,
                     const DiscriminationParams& params, const HyperParams& hyper, const Vec& tau);
double nu_objective(int c2, const Mat& q_cols, const Mat& y_cols, const std::vector<Assignment>& assignments,
                    const DiscriminationParams& params, const HyperParams& hyper, const Vec& nu);

// Coordinate-descent minimizers of the stage-2 sub-objectives; never increase
// them, and return the input unchanged when no samples are assigned.
Vec update_tau(int c1, const Mat& q_cols, const Mat& y_cols, const std::vector<Assignment>& assignments,
               const DiscriminationParams& params, const HyperParams& hyper);
Vec update_nu(int c2, const Mat& q_cols, const Mat& y_cols, const std::vector<Assignment>& assignments,
              const DiscriminationParams& params, const HyperParams& hyper);

// Stage-3 objective, analytic gradient and descent update for the linear map.
double map_objective(const Mat& a, const Mat& x, const Mat& y_t, const HyperParams& hyper);
Mat map_gradient(const Mat& a, const Mat& x, const Mat& y_t, const HyperParams& hyper);
Mat update_A(const Mat& x, const Mat& y_t, const Mat& a_current, const HyperParams& hyper);

Mat blend_online(const Mat& a_prev, const Mat& a_new, double rho_online);

// Column targets y_i + tau_{j1(i)} + nu_{j2(i)}.
Mat build_target(const Mat& y_cols, const std::vector<Assignment>& assignments,
                 const DiscriminationParams& params);

struct FitResult {
    TransformModel model;
    std::vector<Assignment> assignments;
    FitReport report;
};

// Three-stage alternating training loop.
FitResult fit(const Mat& x, const HyperParams& hyper, const TransformModel* initial = nullptr,
              bool identity = false);

}  // namespace nt
