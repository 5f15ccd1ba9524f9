#include "ntclust/measures.hpp"

#include <cmath>
#include <limits>

namespace nt {

namespace detail {

void require_same_size(const Vec& a, const Vec& b, const char* where) {
    if (a.size() != b.size()) throw dimension_error(std::string(where) + ": vector lengths differ");
}

void require_finite(const Vec& v, const char* where) {
    if (!v.allFinite()) throw numeric_error(std::string(where) + ": non-finite input");
}

FcResult f_c_loo(const Vec& y, const std::vector<Vec>& taus, const std::vector<Vec>& nus, double eps) {
    FcResult best;
    if (taus.empty()) return best;  // no dissimilarity candidates, measure vanishes

    double denom = eps;
    int best_c2 = 1;
    for (std::size_t c2 = 0; c2 < nus.size(); ++c2) {
        double d = rho(y, nus[c2]);
        if (d > denom) {
            denom = d;
            best_c2 = static_cast<int>(c2) + 1;
        }
    }

    double best_val = std::numeric_limits<double>::infinity();
    int best_c1 = 1;
    for (std::size_t c1 = 0; c1 < taus.size(); ++c1) {
        double val = rho(y, taus[c1]) / denom + sigma_strength(y, taus[c1]);
        if (val < best_val) {
            best_val = val;
            best_c1 = static_cast<int>(c1) + 1;
        }
    }
    return {best_val, best_c1, best_c2};
}

}  // namespace detail

SignSplit split_signs(const Vec& y) {
    detail::require_finite(y, "split_signs");
    SignSplit s;
    s.positive_part = y.cwiseMax(0.0);
    s.negative_part = (-y).cwiseMax(0.0);
    return s;
}

double rho(const Vec& a, const Vec& b) {
    detail::require_same_size(a, b, "rho");
    double acc = 0.0;
    for (Eigen::Index m = 0; m < a.size(); ++m) {
        const double am = a[m], bm = b[m];
        if (am > 0.0 && bm > 0.0)
            acc += am * bm;
        else if (am < 0.0 && bm < 0.0)
            acc += am * bm;  // (-am)*(-bm)
    }
    return acc;
}

double sigma_strength(const Vec& a, const Vec& b) {
    detail::require_same_size(a, b, "sigma_strength");
    return a.cwiseProduct(b).squaredNorm();
}

FcResult f_c(const Vec& y, const DiscriminationParams& params, double eps) {
    if (params.taus.empty() || params.nus.empty()) throw config_error("f_c: empty parameter set");
    if (!(eps > 0.0)) throw config_error("f_c: eps must be positive");
    for (const auto& t : params.taus) detail::require_same_size(y, t, "f_c");
    for (const auto& n : params.nus) detail::require_same_size(y, n, "f_c");
    return detail::f_c_loo(y, params.taus, params.nus, eps);
}

double u_r(const Vec& q, const Vec& y) {
    detail::require_same_size(q, y, "u_r");
    return (q - y).squaredNorm();
}

double u_a(const Vec& q, const Vec& tau, const Vec& nu) {
    detail::require_same_size(q, tau, "u_a");
    detail::require_same_size(q, nu, "u_a");
    return (q - tau - nu).squaredNorm();
}

double u_p(const DiscriminationParams& params, double eps, bool* degenerate) {
    if (degenerate) *degenerate = false;
    if (params.num_taus() + params.num_nus() < 2) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    double acc = 0.0;
    for (int c1 = 0; c1 < params.num_taus(); ++c1) {
        std::vector<Vec> rest(params.taus);
        rest.erase(rest.begin() + c1);
        acc += detail::f_c_loo(params.taus[c1], rest, params.nus, eps).value;
    }
    for (int c2 = 0; c2 < params.num_nus(); ++c2) {
        std::vector<Vec> rest(params.nus);
        rest.erase(rest.begin() + c2);
        acc += detail::f_c_loo(params.nus[c2], params.taus, rest, eps).value;
    }
    return acc;
}

double f_d(const Mat& A, double l2, double l3, double l4) {
    if (A.rows() < A.cols()) throw dimension_error("f_d: map must have at least as many rows as columns");
    double val = 0.5 * l2 * A.squaredNorm();
    if (l3 != 0.0) {
        Mat g = A * A.transpose();
        g.diagonal().array() -= 1.0;
        val += 0.5 * l3 * g.squaredNorm();
    }
    if (l4 != 0.0) {
        Eigen::SelfAdjointEigenSolver<Mat> es(A.transpose() * A, Eigen::EigenvaluesOnly);
        const Vec& ev = es.eigenvalues();
        const double largest = ev.maxCoeff();
        if (!(largest > 0.0) || ev.minCoeff() <= 1e-12 * largest)
            throw numeric_error("f_d: A^T A is numerically rank deficient");
        val -= l4 * ev.array().log().sum();
    }
    if (!std::isfinite(val)) throw numeric_error("f_d: non-finite value");
    return val;
}

ObjectiveBreakdown total_objective(const Mat& X, const Mat& Y, const std::vector<Assignment>& assignments,
                                   const TransformModel& model, const HyperParams& hyper) {
    const Eigen::Index k = X.cols();
    if (Y.cols() != k || static_cast<Eigen::Index>(assignments.size()) != k)
        throw dimension_error("total_objective: sample counts disagree");
    if (model.A.cols() != X.rows() || model.A.rows() != Y.rows())
        throw dimension_error("total_objective: map dimensions disagree");

    ObjectiveBreakdown b;
    const Mat q_all = model.A * X;
    for (Eigen::Index i = 0; i < k; ++i) {
        const Vec q = q_all.col(i);
        const Vec y = Y.col(i);
        const Assignment& a = assignments[i];
        b.nt_error += 0.5 * u_r(q, y);
        b.adjustment += hyper.lambda2 * u_a(q, model.params.taus.at(a.j1 - 1), model.params.nus.at(a.j2 - 1));
        if (hyper.lambda0 != 0.0) b.discrimination += hyper.lambda0 * f_c(y, model.params, hyper.eps).value;
        b.sparsity += hyper.lambda1 * y.lpNorm<1>();
    }
    if (hyper.lambdaE != 0.0) b.spread = hyper.lambdaE * u_p(model.params, hyper.eps);
    if (!model.identity_mode) b.map_prior = f_d(model.A, hyper.lambda2, hyper.lambda3, hyper.lambda4);
    b.total = b.nt_error + b.adjustment + b.discrimination + b.sparsity + b.spread + b.map_prior;
    if (!std::isfinite(b.total)) throw numeric_error("total_objective: non-finite value");
    return b;
}

}  // namespace nt
