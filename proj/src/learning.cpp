#include "ntclust/learning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>

#include "ntclust/assignment.hpp"
#include "ntclust/measures.hpp"

namespace nt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> assigned_indices_tau(int c1, const std::vector<Assignment>& assignments) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i].j1 == c1) idx.push_back(static_cast<int>(i));
    return idx;
}

std::vector<int> assigned_indices_nu(int c2, const std::vector<Assignment>& assignments) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i].j2 == c2) idx.push_back(static_cast<int>(i));
    return idx;
}

std::vector<Vec> without(const std::vector<Vec>& v, int index0) {
    std::vector<Vec> rest(v);
    rest.erase(rest.begin() + index0);
    return rest;
}

// Frozen leave-one-out structure for the lambdaE prior term: the winning
// reference vector and the clamped denominator value at the expansion point.
struct FrozenPrior {
    bool active = false;
    Vec ref;
    double denom = 1.0;
};

FrozenPrior freeze_prior(const Vec& at, const std::vector<Vec>& cand_taus, const std::vector<Vec>& cand_nus,
                         double lambdaE, double eps) {
    FrozenPrior f;
    if (lambdaE == 0.0 || cand_taus.empty()) return f;
    FcResult r = detail::f_c_loo(at, cand_taus, cand_nus, eps);
    f.active = true;
    f.ref = cand_taus[r.c1 - 1];
    f.denom = eps;
    for (const auto& n : cand_nus) f.denom = std::max(f.denom, rho(at, n));
    return f;
}

}  // namespace

TransformModel init_model(int n, const HyperParams& hyper, std::uint64_t rng_seed, bool identity) {
    if (n < 1) throw config_error("init_model: dimension must be positive");
    hyper.validate();
    const int m = identity ? n : hyper.M;
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    TransformModel model;
    model.identity_mode = identity;
    if (identity) {
        model.A = Mat::Identity(n, n);
    } else {
        model.A.resize(m, n);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < n; ++c) model.A(r, c) = gauss(rng);
    }
    model.params.taus.resize(hyper.C_d);
    for (auto& t : model.params.taus) {
        t.resize(m);
        for (int r = 0; r < m; ++r) t[r] = gauss(rng);
    }
    model.params.nus.resize(hyper.C_s);
    for (auto& v : model.params.nus) {
        v.resize(m);
        for (int r = 0; r < m; ++r) v[r] = gauss(rng);
    }
    return model;
}

double tau_objective(int c1, const Mat& q_cols, const Mat& y_cols, const std::vector<Assignment>& assignments,
                     const DiscriminationParams& params, const HyperParams& hyper, const Vec& tau) {
    double val = 0.0;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        const Assignment& a = assignments[i];
        if (a.j1 != c1) continue;
        const Vec& nu = params.nus.at(a.j2 - 1);
        const Vec q = q_cols.col(i);
        const Vec y = y_cols.col(i);
        const double denom = std::max(rho(y, nu), hyper.eps);
        val += hyper.lambda2 * (q - tau - nu).squaredNorm() +
               hyper.lambda0 * (rho(y, tau) / denom + sigma_strength(y, tau));
    }
    if (hyper.lambdaE != 0.0) {
        // the full spread prior: tau_{c1} also sits in the leave-one-out
        // candidate sets of every other parameter
        DiscriminationParams sub = params;
        sub.taus.at(c1 - 1) = tau;
        val += hyper.lambdaE * u_p(sub, hyper.eps);
    }
    return val;
}

double nu_objective(int c2, const Mat& q_cols, const Mat& y_cols, const std::vector<Assignment>& assignments,
                    const DiscriminationParams& params, const HyperParams& hyper, const Vec& nu) {
    double val = 0.0;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        const Assignment& a = assignments[i];
        if (a.j2 != c2) continue;
        const Vec& tau = params.taus.at(a.j1 - 1);
        const Vec q = q_cols.col(i);
        const Vec y = y_cols.col(i);
        val += hyper.lambda2 * (q - tau - nu).squaredNorm() +
               hyper.lambda0 * rho(y, tau) / std::max(rho(y, nu), hyper.eps);
    }
    if (hyper.lambdaE != 0.0) {
        DiscriminationParams sub = params;
        sub.nus.at(c2 - 1) = nu;
        val += hyper.lambdaE * u_p(sub, hyper.eps);
    }
    return val;
}

Vec update_tau(int c1, const Mat& q_cols, const Mat& y_cols, const std::vector<Assignment>& assignments,
               const DiscriminationParams& params, const HyperParams& hyper) {
    const Vec& tau0 = params.taus.at(c1 - 1);
    const std::vector<int> idx = assigned_indices_tau(c1, assignments);
    if (idx.empty()) return tau0;

    const Eigen::Index m = tau0.size();
    const double n = static_cast<double>(idx.size());

    // per-sample constants: residual targets and frozen ratio denominators
    Vec s = Vec::Zero(m);       // sum of (q_i - nu_{j2(i)})
    Vec ypos = Vec::Zero(m);    // sum of y_i^+ / d_i
    Vec yneg = Vec::Zero(m);    // sum of y_i^- / d_i
    Vec ysq = Vec::Zero(m);     // sum of y_i (.) y_i
    for (int i : idx) {
        const Assignment& a = assignments[i];
        const Vec& nu = params.nus.at(a.j2 - 1);
        const Vec y = y_cols.col(i);
        const double d = std::max(rho(y, nu), hyper.eps);
        s += q_cols.col(i) - nu;
        ypos += y.cwiseMax(0.0) / d;
        yneg += (-y).cwiseMax(0.0) / d;
        ysq += y.cwiseProduct(y);
    }

    const std::vector<Vec> rest = without(params.taus, c1 - 1);
    Vec tau = tau0;
    double best_val = tau_objective(c1, q_cols, y_cols, assignments, params, hyper, tau0);

    // majorize-minimize: the frozen surrogate is coordinate-separable, so each
    // inner solve is a pair of clamped quadratics per coordinate
    for (int round = 0; round < 20; ++round) {
        const FrozenPrior fp = freeze_prior(tau, rest, params.nus, hyper.lambdaE, hyper.eps);
        Vec cand(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            double a = hyper.lambda2 * n + hyper.lambda0 * ysq[j];
            double b_pos = -2.0 * hyper.lambda2 * s[j] + hyper.lambda0 * ypos[j];
            double b_neg = 2.0 * hyper.lambda2 * s[j] + hyper.lambda0 * yneg[j];
            if (fp.active) {
                a += hyper.lambdaE * fp.ref[j] * fp.ref[j];
                b_pos += hyper.lambdaE * std::max(fp.ref[j], 0.0) / fp.denom;
                b_neg += hyper.lambdaE * std::max(-fp.ref[j], 0.0) / fp.denom;
            }
            const double xp = a > 0.0 ? std::max(0.0, -b_pos / (2.0 * a)) : 0.0;
            const double xn = a > 0.0 ? std::max(0.0, -b_neg / (2.0 * a)) : 0.0;
            const double vp = a * xp * xp + b_pos * xp;
            const double vn = a * xn * xn + b_neg * xn;
            cand[j] = vp <= vn ? xp : -xn;
        }
        // accept-if-improved with step damping: the surrogate ignores the
        // spread prior's cross terms, so a full step may overshoot
        bool accepted = false;
        double alpha = 1.0;
        for (int half = 0; half < 5; ++half, alpha *= 0.5) {
            const Vec trial = tau + alpha * (cand - tau);
            const double val = tau_objective(c1, q_cols, y_cols, assignments, params, hyper, trial);
            if (val < best_val - 1e-14 * (1.0 + std::abs(best_val))) {
                best_val = val;
                tau = trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (!tau.allFinite()) throw numeric_error("update_tau: non-finite intermediate");
    return tau;
}

Vec update_nu(int c2, const Mat& q_cols, const Mat& y_cols, const std::vector<Assignment>& assignments,
              const DiscriminationParams& params, const HyperParams& hyper) {
    const Vec& nu0 = params.nus.at(c2 - 1);
    const std::vector<int> idx = assigned_indices_nu(c2, assignments);
    if (idx.empty()) return nu0;

    const Eigen::Index m = nu0.size();
    const double n = static_cast<double>(idx.size());

    Vec s = Vec::Zero(m);  // sum of (q_i - tau_{j1(i)})
    std::vector<double> e_num(idx.size());
    for (std::size_t t = 0; t < idx.size(); ++t) {
        const int i = idx[t];
        const Assignment& a = assignments[i];
        const Vec& tau = params.taus.at(a.j1 - 1);
        s += q_cols.col(i) - tau;
        e_num[t] = rho(y_cols.col(i), tau);
    }

    const std::vector<Vec> rest = without(params.nus, c2 - 1);
    Vec nu = nu0;
    double best_val = nu_objective(c2, q_cols, y_cols, assignments, params, hyper, nu0);

    for (int round = 0; round < 5; ++round) {
        const FrozenPrior fp = freeze_prior(nu, params.taus, rest, hyper.lambdaE, hyper.eps);
        Vec cand = nu;
        // running ratio denominators rho(y_i, cand)
        std::vector<double> denom(idx.size());
        for (std::size_t t = 0; t < idx.size(); ++t) denom[t] = rho(y_cols.col(idx[t]), cand);

        for (int sweep = 0; sweep < 50; ++sweep) {
            double max_rel = 0.0;
            for (Eigen::Index j = 0; j < m; ++j) {
                double alpha = hyper.lambda2 * n;
                double beta_pos = -2.0 * hyper.lambda2 * s[j], beta_neg = 2.0 * hyper.lambda2 * s[j];
                if (fp.active) {
                    alpha += hyper.lambdaE * fp.ref[j] * fp.ref[j];
                    beta_pos += hyper.lambdaE * std::max(fp.ref[j], 0.0) / fp.denom;
                    beta_neg += hyper.lambdaE * std::max(-fp.ref[j], 0.0) / fp.denom;
                }
                // ratio denominators with coordinate j's current contribution removed
                std::vector<double> d0(idx.size());
                for (std::size_t t = 0; t < idx.size(); ++t) {
                    const double yj = y_cols(j, idx[t]);
                    double contrib = 0.0;
                    if (yj > 0.0 && cand[j] > 0.0) contrib = yj * cand[j];
                    if (yj < 0.0 && cand[j] < 0.0) contrib = yj * cand[j];
                    d0[t] = std::max(denom[t] - contrib, 0.0);
                }
                auto solve_branch = [&](double beta, bool positive) {
                    // minimize alpha*x^2 + beta*x + lambda0*sum e_i/(d0_i + w_i x), x >= 0
                    std::vector<double> w(idx.size());
                    for (std::size_t t = 0; t < idx.size(); ++t) {
                        const double yj = y_cols(j, idx[t]);
                        w[t] = positive ? std::max(yj, 0.0) : std::max(-yj, 0.0);
                    }
                    auto dphi = [&](double x) {
                        double g = 2.0 * alpha * x + beta;
                        for (std::size_t t = 0; t < idx.size(); ++t) {
                            if (w[t] == 0.0 || e_num[t] == 0.0) continue;
                            const double den = std::max(d0[t], hyper.eps) + w[t] * x;
                            g -= hyper.lambda0 * e_num[t] * w[t] / (den * den);
                        }
                        return g;
                    };
                    double x = 0.0;
                    if (dphi(0.0) < 0.0) {
                        double hi = 1.0;
                        while (dphi(hi) < 0.0 && hi < 1e12) hi *= 2.0;
                        double lo = 0.0;
                        for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + hi); ++it) {
                            const double mid = 0.5 * (lo + hi);
                            (dphi(mid) < 0.0 ? lo : hi) = mid;
                        }
                        x = 0.5 * (lo + hi);
                    }
                    double val = alpha * x * x + beta * x;
                    for (std::size_t t = 0; t < idx.size(); ++t) {
                        const double den = std::max(d0[t] + w[t] * x, hyper.eps);
                        val += hyper.lambda0 * e_num[t] / den;
                    }
                    return std::pair<double, double>(x, val);
                };
                const auto [xp, vp] = solve_branch(beta_pos, true);
                const auto [xn, vn] = solve_branch(beta_neg, false);
                const double next = vp <= vn ? xp : -xn;
                const double change = std::abs(next - cand[j]);
                max_rel = std::max(max_rel, change / (1.0 + std::abs(next)));
                if (change != 0.0) {
                    // refresh the affected ratio denominators
                    for (std::size_t t = 0; t < idx.size(); ++t) {
                        const double yj = y_cols(j, idx[t]);
                        auto part = [&](double v) {
                            if (yj > 0.0 && v > 0.0) return yj * v;
                            if (yj < 0.0 && v < 0.0) return yj * v;
                            return 0.0;
                        };
                        denom[t] += part(next) - part(cand[j]);
                    }
                    cand[j] = next;
                }
            }
            if (max_rel < 1e-8) break;
        }

        bool accepted = false;
        double alpha = 1.0;
        for (int half = 0; half < 5; ++half, alpha *= 0.5) {
            const Vec trial = nu + alpha * (cand - nu);
            const double val = nu_objective(c2, q_cols, y_cols, assignments, params, hyper, trial);
            if (val < best_val - 1e-14 * (1.0 + std::abs(best_val))) {
                best_val = val;
                nu = trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (!nu.allFinite()) throw numeric_error("update_nu: non-finite intermediate");
    return nu;
}

double map_objective(const Mat& a, const Mat& x, const Mat& y_t, const HyperParams& hyper) {
    double val = 0.5 * (a * x - y_t).squaredNorm() + 0.5 * hyper.lambda2 * a.squaredNorm();
    if (hyper.lambda3 != 0.0) {
        Mat g = a * a.transpose();
        g.diagonal().array() -= 1.0;
        val += 0.5 * hyper.lambda3 * g.squaredNorm();
    }
    if (hyper.lambda4 != 0.0) {
        Eigen::SelfAdjointEigenSolver<Mat> es(a.transpose() * a, Eigen::EigenvaluesOnly);
        const Vec& ev = es.eigenvalues();
        const double largest = ev.maxCoeff();
        if (!(largest > 0.0) || ev.minCoeff() <= 1e-12 * largest)
            throw numeric_error("map_objective: A^T A is numerically rank deficient (smallest/largest eigenvalue ratio below 1e-12)");
        val -= hyper.lambda4 * ev.array().log().sum();
    }
    return val;
}

Mat map_gradient(const Mat& a, const Mat& x, const Mat& y_t, const HyperParams& hyper) {
    Mat grad = (a * x - y_t) * x.transpose() + hyper.lambda2 * a;
    if (hyper.lambda3 != 0.0) {
        Mat g = a * a.transpose();
        g.diagonal().array() -= 1.0;
        grad += 2.0 * hyper.lambda3 * g * a;
    }
    if (hyper.lambda4 != 0.0) {
        Mat ata = a.transpose() * a;
        Eigen::LDLT<Mat> ldlt(ata);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
            throw numeric_error("map_gradient: A^T A is numerically rank deficient");
        grad -= 2.0 * hyper.lambda4 * ldlt.solve(a.transpose()).transpose();
    }
    return grad;
}

Mat update_A(const Mat& x, const Mat& y_t, const Mat& a_current, const HyperParams& hyper) {
    if (a_current.cols() != x.rows() || a_current.rows() != y_t.rows() || x.cols() != y_t.cols())
        throw dimension_error("update_A: dimension mismatch");
    Mat a = a_current;
    double f = map_objective(a, x, y_t, hyper);  // throws on rank collapse at entry

    auto trial = [&](const Mat& cand) {
        try {
            const double v = map_objective(cand, x, y_t, hyper);
            return std::isfinite(v) ? v : kInf;
        } catch (const numeric_error&) {
            return kInf;
        }
    };

    double step = 1.0 / (1.0 + x.squaredNorm());
    for (int it = 0; it < 200; ++it) {
        const Mat grad = map_gradient(a, x, y_t, hyper);
        const double gn2 = grad.squaredNorm();
        if (std::sqrt(gn2) < 1e-8 * (1.0 + a.norm())) break;
        bool accepted = false;
        while (step > 1e-20) {
            const Mat cand = a - step * grad;
            const double fc = trial(cand);
            if (fc <= f - 1e-4 * step * gn2) {
                a = cand;
                f = fc;
                step *= 2.0;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    return a;
}

Mat blend_online(const Mat& a_prev, const Mat& a_new, double rho_online) {
    if (!(rho_online > 0.0) || rho_online > 1.0) throw config_error("blend_online: rho must lie in (0, 1]");
    if (a_prev.rows() != a_new.rows() || a_prev.cols() != a_new.cols())
        throw dimension_error("blend_online: shape mismatch");
    return (1.0 - rho_online) * a_prev + rho_online * a_new;
}

Mat build_target(const Mat& y_cols, const std::vector<Assignment>& assignments,
                 const DiscriminationParams& params) {
    Mat y_t = y_cols;
    for (Eigen::Index i = 0; i < y_cols.cols(); ++i) {
        const Assignment& a = assignments[i];
        y_t.col(i) += params.taus.at(a.j1 - 1) + params.nus.at(a.j2 - 1);
    }
    return y_t;
}

FitResult fit(const Mat& x, const HyperParams& hyper, const TransformModel* initial, bool identity) {
    hyper.validate();
    const Eigen::Index n = x.rows(), k = x.cols();
    if (k < 1) throw data_error("fit: need at least one sample");
    if (k < static_cast<Eigen::Index>(hyper.C_d) * hyper.C_s)
        std::cerr << "warning: fewer samples (" << k << ") than candidate transforms (" << hyper.C_d * hyper.C_s
                  << ")\n";

    FitResult result;
    if (initial) {
        result.model = *initial;
        identity = initial->identity_mode;
    } else {
        result.model = init_model(static_cast<int>(n), hyper, hyper.seed, identity);
    }
    if (result.model.A.cols() != n) throw dimension_error("fit: model and data dimensions disagree");

    auto full_assign = [&]() { return assign_batch(result.model.A * x, result.model.params, hyper); };
    auto y_matrix = [&](const std::vector<Assignment>& asg, Eigen::Index m) {
        Mat y(m, asg.size());
        for (std::size_t i = 0; i < asg.size(); ++i) y.col(i) = asg[i].y;
        return y;
    };

    result.assignments = full_assign();
    result.report.termination = hyper.iterations == 0 ? "no_iterations" : "max_iterations";
    if (hyper.iterations == 0) return result;

    const Eigen::Index m = result.model.A.rows();
    std::mt19937_64 batch_rng(hyper.seed ^ 0x9e3779b97f4a7c15ULL);
    const Eigen::Index batch_size =
        std::min<Eigen::Index>(k, static_cast<Eigen::Index>(std::ceil(hyper.batch_fraction * static_cast<double>(k))));
    std::vector<Eigen::Index> pool(k);
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});

    double prev_total = std::numeric_limits<double>::quiet_NaN();
    int consec_small = 0;

    for (int t = 1; t <= hyper.iterations; ++t) {
        const auto tic = std::chrono::steady_clock::now();
        try {
            // seeded batch draw without replacement
            for (Eigen::Index i = 0; i < batch_size; ++i) {
                std::uniform_int_distribution<Eigen::Index> pick(i, k - 1);
                std::swap(pool[i], pool[pick(batch_rng)]);
            }
            Mat xb(n, batch_size);
            for (Eigen::Index i = 0; i < batch_size; ++i) xb.col(i) = x.col(pool[i]);

            // stage 1: candidate solve + assignment on the batch
            const Mat qb = result.model.A * xb;
            const std::vector<Assignment> asg_b = assign_batch(qb, result.model.params, hyper);
            const Mat yb = y_matrix(asg_b, m);

            // stage 2: taus then nus, in index order
            for (int c1 = 1; c1 <= result.model.params.num_taus(); ++c1)
                result.model.params.taus[c1 - 1] =
                    update_tau(c1, qb, yb, asg_b, result.model.params, hyper);
            for (int c2 = 1; c2 <= result.model.params.num_nus(); ++c2)
                result.model.params.nus[c2 - 1] =
                    update_nu(c2, qb, yb, asg_b, result.model.params, hyper);

            // stage 3: linear map on the batch, blended online. The target
            // matrix is built so that the solver's 0.5*||AX - Y||_F^2 term
            // equals the full-objective map block
            //   sum_i 0.5*||A x_i - y_i||^2 + lambda2*||A x_i - tau - nu||^2,
            // via column duplication with weight sqrt(2*lambda2).
            if (!identity) {
                Mat x_s, y_s;
                if (hyper.lambda2 > 0.0) {
                    const double w = std::sqrt(2.0 * hyper.lambda2);
                    x_s.resize(n, 2 * batch_size);
                    y_s.resize(m, 2 * batch_size);
                    x_s.leftCols(batch_size) = xb;
                    x_s.rightCols(batch_size) = w * xb;
                    y_s.leftCols(batch_size) = yb;
                    y_s.rightCols(batch_size) = w * (build_target(yb, asg_b, result.model.params) - yb);
                } else {
                    x_s = xb;
                    y_s = yb;
                }
                const Mat a_hat = update_A(x_s, y_s, result.model.A, hyper);
                result.model.A = blend_online(result.model.A, a_hat, hyper.rho_online);
            }
        } catch (const std::exception& e) {
            throw numeric_error("fit: iteration " + std::to_string(t) + ": " + e.what());
        }

        // full-set bookkeeping
        const std::vector<Assignment> asg_f = full_assign();
        const ObjectiveBreakdown ob =
            total_objective(x, y_matrix(asg_f, m), asg_f, result.model, hyper);
        int changes = 0;
        for (std::size_t i = 0; i < asg_f.size(); ++i)
            if (asg_f[i].flat_index != result.assignments[i].flat_index) ++changes;
        result.assignments = asg_f;

        const auto toc = std::chrono::steady_clock::now();
        result.report.objectives.push_back(ob);
        result.report.assignment_changes.push_back(changes);
        result.report.seconds.push_back(std::chrono::duration<double>(toc - tic).count());

        if (!std::isfinite(ob.total))
            throw numeric_error("fit: non-finite objective at iteration " + std::to_string(t));
        if (std::isfinite(prev_total) &&
            std::abs(ob.total - prev_total) < 1e-10 * std::max(1.0, std::abs(prev_total))) {
            if (++consec_small >= 5) {
                result.report.termination = "converged";
                break;
            }
        } else {
            consec_small = 0;
        }
        prev_total = ob.total;
    }
    return result;
}

}  // namespace nt
