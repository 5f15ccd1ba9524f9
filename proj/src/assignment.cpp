#include "ntclust/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ntclust/measures.hpp"

namespace nt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// The candidate subproblem is solved in magnitude coordinates u = |y| with
// the signs pinned to sign(q). In these coordinates
//   rho(y, tau) = gg . u,   rho(y, nu) = vv . u,   sigma(y, tau) = sum tau^2 u^2,
// where gg_m / vv_m pick the tau / nu half matching the sign of q_m.
struct SubProblem {
    Vec aq;    // |q|
    Vec sgn;   // sign(q) in {-1, 0, 1}
    Vec gg;    // dissimilarity slopes
    Vec vv;    // similarity slopes
    Vec tau2;  // tau (.) tau
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    double eps = 1e-12;

    double value(const Vec& u) const {
        const double denom = std::max(vv.dot(u), eps);
        return 0.5 * (aq - u).squaredNorm() + lambda1 * u.sum() +
               lambda0 * (gg.dot(u) / denom + tau2.dot(u.cwiseProduct(u)));
    }
};

SubProblem make_subproblem(const Vec& q, const Vec& tau, const Vec& nu, double lambda0, double lambda1,
                           double eps) {
    const Eigen::Index m = q.size();
    SubProblem sp;
    sp.aq = q.cwiseAbs();
    sp.sgn.resize(m);
    sp.gg.resize(m);
    sp.vv.resize(m);
    sp.tau2 = tau.cwiseProduct(tau);
    sp.lambda0 = lambda0;
    sp.lambda1 = lambda1;
    sp.eps = eps;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (q[i] > 0.0) {
            sp.sgn[i] = 1.0;
            sp.gg[i] = std::max(tau[i], 0.0);
            sp.vv[i] = std::max(nu[i], 0.0);
        } else if (q[i] < 0.0) {
            sp.sgn[i] = -1.0;
            sp.gg[i] = std::max(-tau[i], 0.0);
            sp.vv[i] = std::max(-nu[i], 0.0);
        } else {
            sp.sgn[i] = 0.0;
            sp.gg[i] = 0.0;
            sp.vv[i] = 0.0;
        }
    }
    return sp;
}

// Real roots of a*x^3 + b*x^2 + c*x + d, closed form (trigonometric /
// Cardano) with a couple of Newton refinement steps. Writes at most 3 roots.
int cubic_real_roots(double a, double b, double c, double d, double* out) {
    int n = 0;
    if (std::abs(a) < 1e-300) {
        // quadratic b*x^2 + c*x + d
        if (std::abs(b) < 1e-300) {
            if (c != 0.0) out[n++] = -d / c;
            return n;
        }
        const double disc = c * c - 4.0 * b * d;
        if (disc < 0.0) return n;
        const double s = std::sqrt(disc);
        out[n++] = (-c - s) / (2.0 * b);
        out[n++] = (-c + s) / (2.0 * b);
        return n;
    }
    const double p = b / a, q = c / a, r = d / a;
    const double shift = p / 3.0;
    const double pt = q - p * p / 3.0;
    const double qt = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
    const double disc = 0.25 * qt * qt + pt * pt * pt / 27.0;
    if (disc > 0.0) {
        const double s = std::sqrt(disc);
        const double t = std::cbrt(-0.5 * qt + s) + std::cbrt(-0.5 * qt - s);
        out[n++] = t - shift;
    } else if (pt == 0.0) {
        out[n++] = std::cbrt(-qt) - shift;
    } else {
        const double rho3 = 2.0 * std::sqrt(-pt / 3.0);
        const double arg = std::clamp(3.0 * qt / (pt * rho3), -1.0, 1.0);
        const double theta = std::acos(arg);
        for (int kk = 0; kk < 3; ++kk)
            out[n++] = rho3 * std::cos(theta / 3.0 - 2.0 * M_PI * kk / 3.0) - shift;
    }
    // Newton refinement against the original polynomial
    for (int i = 0; i < n; ++i) {
        double x = out[i];
        for (int it = 0; it < 3; ++it) {
            const double f = ((a * x + b) * x + c) * x + d;
            const double df = (3.0 * a * x + 2.0 * b) * x + c;
            if (df == 0.0) break;
            x -= f / df;
        }
        if (std::isfinite(x)) out[i] = x;
    }
    return n;
}

// Exact 1-D minimizer of the subproblem restricted to coordinate m, with the
// other coordinates contributing the constants d0 = vv.u and p0 = gg.u.
double best_coordinate(const SubProblem& sp, Eigen::Index m, double d0, double p0) {
    const double a = sp.aq[m], g = sp.gg[m], v = sp.vv[m], t2 = sp.tau2[m];
    const double a2 = 1.0 + 2.0 * sp.lambda0 * t2;
    const double b = sp.lambda1 - a;

    double cands[7];
    int nc = 0;
    cands[nc++] = 0.0;
    if (v == 0.0) {
        const double dc = std::max(d0, sp.eps);
        cands[nc++] = (a - sp.lambda1 - sp.lambda0 * g / dc) / a2;
    } else {
        // clamped piece: denominator pinned at eps for d0 + v*x <= eps
        if (d0 < sp.eps) {
            const double xc = (sp.eps - d0) / v;
            double x = (a - sp.lambda1 - sp.lambda0 * g / sp.eps) / a2;
            cands[nc++] = std::clamp(x, 0.0, xc);
            cands[nc++] = xc;
        }
        // smooth piece: (a2*x + b)*(d0 + v*x)^2 + c = 0
        const double c = sp.lambda0 * (g * d0 - p0 * v);
        double roots[3];
        const int nr = cubic_real_roots(a2 * v * v, a2 * 2.0 * d0 * v + b * v * v,
                                        a2 * d0 * d0 + 2.0 * b * d0 * v, b * d0 * d0 + c, roots);
        for (int r = 0; r < nr; ++r)
            if (roots[r] > 0.0 && d0 + v * roots[r] >= sp.eps) cands[nc++] = roots[r];
    }

    auto phi = [&](double x) {
        const double denom = std::max(d0 + v * x, sp.eps);
        return 0.5 * (a - x) * (a - x) + sp.lambda1 * x +
               sp.lambda0 * ((p0 + g * x) / denom + t2 * x * x);
    };
    double best_x = 0.0, best_v = phi(0.0);
    for (int ci = 1; ci < nc; ++ci) {
        const double x = cands[ci];
        if (!(x >= 0.0) || !std::isfinite(x)) continue;
        const double val = phi(x);
        if (val < best_v) {
            best_v = val;
            best_x = x;
        }
    }
    return best_x;
}

// Coordinate descent to a stationary point; monotone by exact 1-D solves.
double polish(const SubProblem& sp, Vec& u) {
    const Eigen::Index m = u.size();
    double d = sp.vv.dot(u), p = sp.gg.dot(u);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (sp.sgn[i] == 0.0) continue;
            const double d0 = d - sp.vv[i] * u[i];
            const double p0 = p - sp.gg[i] * u[i];
            const double x = best_coordinate(sp, i, d0, p0);
            max_change = std::max(max_change, std::abs(x - u[i]));
            u[i] = x;
            d = d0 + sp.vv[i] * x;
            p = p0 + sp.gg[i] * x;
        }
        d = sp.vv.dot(u);  // refresh running sums
        p = sp.gg.dot(u);
        if (max_change < 1e-13 * (1.0 + u.lpNorm<Eigen::Infinity>())) break;
    }
    return sp.value(u);
}

// Workspace reused across the h grid to keep the inner solve allocation-free.
struct InnerCtx {
    Vec k_inv;        // 1 / k
    Vec base;         // aq - lambda1
    Vec gg_over_k;    // gg / k
    Vec ggvv_over_k;  // gg (.) vv / k

    explicit InnerCtx(const SubProblem& sp, const Vec& k)
        : k_inv(k.cwiseInverse()),
          base(sp.aq.array() - sp.lambda1),
          gg_over_k(sp.gg.cwiseProduct(k_inv)),
          ggvv_over_k(sp.gg.cwiseProduct(sp.vv).cwiseProduct(k_inv)) {}
};

// Given a trial denominator h, solve the coupled threshold equations for the
// numerator scalar e = gg.u on the active set. Writes u and returns (feasible, e).
std::pair<bool, double> solve_inner(const SubProblem& sp, const InnerCtx& cx, double h, Vec& u) {
    double e = 0.0;
    const double l0h = sp.lambda0 / h;
    const double l0h2 = sp.lambda0 / (h * h);
    auto refresh_u = [&](double ecur) {
        u = ((cx.base.array() - l0h * sp.gg.array() + (l0h2 * ecur) * sp.vv.array()).max(0.0) *
             cx.k_inv.array())
                .matrix();
    };
    for (int it = 0; it < 60; ++it) {
        refresh_u(e);
        const auto mask = (u.array() > 0.0).cast<double>();
        const double num = (mask * cx.gg_over_k.array() * (cx.base.array() - l0h * sp.gg.array())).sum();
        const double den = 1.0 - l0h2 * (mask * cx.ggvv_over_k.array()).sum();
        if (den < 1e-10) return {false, 0.0};  // no consistent numerator at this h
        const double e2 = std::max(num / den, 0.0);
        if (std::abs(e2 - e) <= 1e-12 * (1.0 + std::abs(e2))) {
            refresh_u(e2);
            return {true, e2};
        }
        e = e2;
    }
    return {false, 0.0};
}

}  // namespace

double candidate_sub_objective(const Vec& q, const Vec& y, const Vec& tau, const Vec& nu, double lambda0,
                               double lambda1, double eps) {
    detail::require_same_size(q, y, "candidate_sub_objective");
    return 0.5 * (q - y).squaredNorm() + lambda1 * y.lpNorm<1>() +
           lambda0 * score_sP(y, tau, nu, eps);
}

double score_sP(const Vec& y, const Vec& tau, const Vec& nu, double eps) {
    return rho(y, tau) / std::max(rho(y, nu), eps) + sigma_strength(y, tau);
}

CandidateSolution solve_candidate(const Vec& q, const Vec& tau, const Vec& nu, double lambda0, double lambda1,
                                  double eps) {
    detail::require_same_size(q, tau, "solve_candidate");
    detail::require_same_size(q, nu, "solve_candidate");
    detail::require_finite(q, "solve_candidate");
    detail::require_finite(tau, "solve_candidate");
    detail::require_finite(nu, "solve_candidate");
    if (lambda0 < 0.0 || lambda1 < 0.0) throw config_error("solve_candidate: lambda0 and lambda1 must be nonnegative");
    if (!(eps > 0.0)) throw config_error("solve_candidate: eps must be positive");

    CandidateSolution sol;
    const Eigen::Index m = q.size();

    if (lambda0 == 0.0) {
        // plain soft-thresholding proximal operator of lambda1*||.||_1
        sol.y.resize(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double mag = std::max(std::abs(q[i]) - lambda1, 0.0);
            sol.y[i] = (q[i] > 0.0 ? mag : (q[i] < 0.0 ? -mag : 0.0));
        }
        sol.sub_objective = candidate_sub_objective(q, sol.y, tau, nu, 0.0, lambda1, eps);
        return sol;
    }

    SubProblem sp = make_subproblem(q, tau, nu, lambda0, lambda1, eps);
    if (sp.aq.maxCoeff() == 0.0) {
        sol.y = Vec::Zero(m);
        sol.sub_objective = sp.value(sol.y);
        return sol;
    }

    const Vec k = Vec::Ones(m) + 2.0 * lambda0 * sp.tau2;
    const InnerCtx cx(sp, k);

    // candidate start: ignore the discrimination terms entirely
    Vec u_soft = (sp.aq.array() - lambda1).max(0.0).matrix();
    for (Eigen::Index i = 0; i < m; ++i)
        if (sp.sgn[i] == 0.0) u_soft[i] = 0.0;

    std::vector<Vec> starts;
    starts.push_back(u_soft);

    // bracketed root-finding on the denominator self-consistency h = vv.u(h)
    const double h_lo = std::max(eps, 1e-9);
    const double h_hi = std::max(1.0, 4.0 * (sp.vv.dot(sp.aq) + 1.0));
    const int grid_n = 48;
    std::vector<double> hs(grid_n), rs(grid_n);
    std::vector<char> ok(grid_n, 0);
    const double log_lo = std::log(h_lo), log_hi = std::log(h_hi);
    Vec u_work(m);
    for (int i = 0; i < grid_n; ++i) {
        const double h = std::exp(log_lo + (log_hi - log_lo) * i / (grid_n - 1));
        hs[i] = h;
        if (solve_inner(sp, cx, h, u_work).first) {
            ok[i] = 1;
            rs[i] = sp.vv.dot(u_work) - h;
        }
    }
    bool bracket_found = false;
    for (int i = 0; i + 1 < grid_n; ++i) {
        if (!ok[i] || !ok[i + 1]) continue;
        if (rs[i] == 0.0) {
            if (solve_inner(sp, cx, hs[i], u_work).first) starts.push_back(u_work);
            bracket_found = true;
            continue;
        }
        if (rs[i] * rs[i + 1] > 0.0) continue;
        double lo = hs[i], hi = hs[i + 1], rlo = rs[i];
        for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (!solve_inner(sp, cx, mid, u_work).first) break;
            const double rm = sp.vv.dot(u_work) - mid;
            if ((rlo <= 0.0) == (rm <= 0.0)) {
                lo = mid;
                rlo = rm;
            } else {
                hi = mid;
            }
        }
        if (solve_inner(sp, cx, 0.5 * (lo + hi), u_work).first) {
            starts.push_back(u_work);
            bracket_found = true;
        }
    }
    sol.fallback = !bracket_found;

    double best_val = kInf;
    Vec best_u;
    for (Vec& u : starts) {
        const double val = polish(sp, u);
        if (val < best_val) {
            best_val = val;
            best_u = u;
        }
    }

    sol.y = sp.sgn.cwiseProduct(best_u);
    if (!sol.y.allFinite()) throw numeric_error("solve_candidate: non-finite intermediate");
    sol.sub_objective = best_val;
    return sol;
}

Assignment assign_sample(const Vec& q, const DiscriminationParams& params, const HyperParams& hyper) {
    if (params.taus.empty() || params.nus.empty()) throw config_error("assign_sample: empty parameter set");
    Assignment best;
    double best_score = kInf;
    const int c_s = params.num_nus();
    for (int c1 = 1; c1 <= params.num_taus(); ++c1) {
        for (int c2 = 1; c2 <= c_s; ++c2) {
            CandidateSolution cand;
            try {
                cand = solve_candidate(q, params.taus[c1 - 1], params.nus[c2 - 1], hyper.lambda0,
                                       hyper.lambda1, hyper.eps);
            } catch (const numeric_error& e) {
                throw numeric_error(std::string(e.what()) + " at candidate pair (" + std::to_string(c1) +
                                    "," + std::to_string(c2) + ")");
            }
            const double score = score_sP(cand.y, params.taus[c1 - 1], params.nus[c2 - 1], hyper.eps);
            if (score < best_score) {
                best_score = score;
                best.j1 = c1;
                best.j2 = c2;
                best.flat_index = flat_cluster_index(c1, c2, c_s);
                best.y = cand.y;
                best.score = score;
            }
        }
    }
    return best;
}

std::vector<Assignment> assign_batch(const Mat& q_cols, const DiscriminationParams& params,
                                     const HyperParams& hyper) {
    if (q_cols.cols() < 1) throw data_error("assign_batch: need at least one sample");
    std::vector<Assignment> out;
    out.reserve(q_cols.cols());
    for (Eigen::Index i = 0; i < q_cols.cols(); ++i) {
        try {
            out.push_back(assign_sample(q_cols.col(i), params, hyper));
        } catch (const std::exception& e) {
            throw numeric_error("assign_batch: sample " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace nt
