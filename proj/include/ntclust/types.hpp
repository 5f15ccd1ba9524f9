#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "ntclust/errors.hpp"

namespace nt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Elementwise split y = positive_part - negative_part with disjoint supports.
struct SignSplit {
    Vec positive_part;
    Vec negative_part;
};

// Bank of per-candidate threshold parameters: taus drive the dissimilarity
// terms, nus drive the similarity denominator. All vectors share length M.
struct DiscriminationParams {
    std::vector<Vec> taus;
    std::vector<Vec> nus;

    int dim() const { return taus.empty() ? (nus.empty() ? 0 : static_cast<int>(nus[0].size())) : static_cast<int>(taus[0].size()); }
    int num_taus() const { return static_cast<int>(taus.size()); }
    int num_nus() const { return static_cast<int>(nus.size()); }
};

struct ObjectiveBreakdown {
    double nt_error = 0.0;        // sum of 0.5*||Ax - y||^2
    double adjustment = 0.0;      // lambda2-weighted sum of u_a
    double discrimination = 0.0;  // lambda0-weighted sum of f_c
    double sparsity = 0.0;        // lambda1-weighted sum of ||y||_1
    double spread = 0.0;          // lambdaE-weighted u_p
    double map_prior = 0.0;       // f_d(A), zero in identity mode
    double total = 0.0;
};

// Result of solving the per-pair projection subproblem.
struct CandidateSolution {
    Vec y;
    int c1 = 1;
    int c2 = 1;
    double sub_objective = 0.0;
    // Set when the scalar denominator root had no bracket and the solver fell
    // back to coordinate descent alone.
    bool fallback = false;
};

// Winner of the per-sample candidate sweep. Indices are 1-based.
struct Assignment {
    int j1 = 1;
    int j2 = 1;
    int flat_index = 1;  // j2 + (j1-1)*C_s
    Vec y;
    double score = 0.0;
};

inline int flat_cluster_index(int j1, int j2, int c_s) { return j2 + (j1 - 1) * c_s; }

struct HyperParams {
    double lambda0 = 0.03;
    double lambda1 = 0.03;
    double lambda2 = 16.0;
    double lambda3 = 16.0;
    double lambda4 = 16.0;
    double lambdaE = 0.001;
    int M = 2100;
    int C_d = 2;
    int C_s = 1;
    int iterations = 100;
    double batch_fraction = 0.87;
    double rho_online = 0.5;
    double eps = 1e-12;
    std::uint64_t seed = 0;

    void validate() const {
        if (lambda0 < 0 || lambda1 < 0 || lambda2 < 0 || lambda3 < 0 || lambda4 < 0 || lambdaE < 0)
            throw config_error("hyperparameters: all lambda weights must be nonnegative");
        if (M < 1 || C_d < 1 || C_s < 1) throw config_error("hyperparameters: M, C_d and C_s must be positive");
        if (iterations < 0) throw config_error("hyperparameters: iterations must be nonnegative");
        if (!(batch_fraction > 0.0) || batch_fraction > 1.0)
            throw config_error("hyperparameters: batch_fraction must lie in (0, 1]");
        if (!(rho_online > 0.0) || rho_online > 1.0)
            throw config_error("hyperparameters: rho_online must lie in (0, 1]");
        if (!(eps > 0.0)) throw config_error("hyperparameters: eps must be positive");
    }
};

struct TransformModel {
    Mat A;  // M x N shared linear map
    DiscriminationParams params;
    bool identity_mode = false;
};

struct FitReport {
    std::vector<ObjectiveBreakdown> objectives;  // one entry per completed iteration
    std::vector<int> assignment_changes;         // flat-label changes vs previous iteration
    std::vector<double> seconds;                 // wall time per iteration
    std::string termination;
};

// Integer cluster labels; ids need not be contiguous.
struct Partition {
    std::vector<int> labels;
};

struct MapDiagnostics {
    double kappa = 1.0;  // sigma_max / sigma_min
    double mu = 0.0;     // mean absolute normalized row inner product
};

}  // namespace nt
