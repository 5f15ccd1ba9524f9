#include "ntclust/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

namespace nt {

namespace {

std::vector<int> compact_ids(const std::vector<int>& labels, int& count) {
    std::map<int, int> remap;
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = remap.emplace(labels[i], static_cast<int>(remap.size()));
        out[i] = it->second;
    }
    count = static_cast<int>(remap.size());
    return out;
}

// Minimum-cost perfect matching on a square cost matrix (potentials method).
// Returns total cost.
double hungarian_min_cost(const Mat& cost) {
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j)
        if (p[j] != 0) total += cost(p[j] - 1, j - 1);
    return total;
}

void require_equal_lengths(const Partition& a, const Partition& b, const char* where) {
    if (a.labels.size() != b.labels.size() || a.labels.empty())
        throw dimension_error(std::string(where) + ": partitions must be nonempty and of equal length");
}

}  // namespace

double cluster_accuracy(const Partition& pred, const Partition& truth) {
    require_equal_lengths(pred, truth, "cluster_accuracy");
    const std::size_t k = pred.labels.size();
    int np = 0, nt = 0;
    const std::vector<int> p = compact_ids(pred.labels, np);
    const std::vector<int> t = compact_ids(truth.labels, nt);
    const int n = std::max(np, nt);
    Mat confusion = Mat::Zero(n, n);
    for (std::size_t i = 0; i < k; ++i) confusion(p[i], t[i]) += 1.0;
    // maximize matched counts == minimize negated counts
    const double matched = -hungarian_min_cost(-confusion);
    return matched / static_cast<double>(k);
}

double nmi(const Partition& pred, const Partition& truth) {
    require_equal_lengths(pred, truth, "nmi");
    const double k = static_cast<double>(pred.labels.size());
    int np = 0, nt = 0;
    const std::vector<int> p = compact_ids(pred.labels, np);
    const std::vector<int> t = compact_ids(truth.labels, nt);
    Mat joint = Mat::Zero(np, nt);
    for (std::size_t i = 0; i < pred.labels.size(); ++i) joint(p[i], t[i]) += 1.0;
    // marginals from exact integer counts, one division each, so a
    // single-cluster marginal is exactly 1 and its entropy exactly 0
    const Vec pp = joint.rowwise().sum() / k;
    const Vec pt = joint.colwise().sum().transpose() / k;
    joint /= k;

    auto entropy = [](const Vec& dist) {
        double h = 0.0;
        for (Eigen::Index i = 0; i < dist.size(); ++i)
            if (dist[i] > 0.0) h -= dist[i] * std::log(dist[i]);
        return h;
    };
    const double hp = entropy(pp), ht = entropy(pt);
    if (hp == 0.0 || ht == 0.0) {
        // single-cluster edge: 1 only when the partitions coincide
        return (np == 1 && nt == 1) ? 1.0 : 0.0;
    }
    double mi = 0.0;
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < nt; ++j)
            if (joint(i, j) > 0.0) mi += joint(i, j) * std::log(joint(i, j) / (pp[i] * pt[j]));
    if (mi <= 0.0) return 0.0;
    return mi / std::sqrt(hp * ht);
}

double conditioning(const Mat& a) {
    if (a.size() == 0 || a.squaredNorm() == 0.0) throw data_error("conditioning: matrix is zero");
    Eigen::JacobiSVD<Mat> svd(a);
    const Vec& sv = svd.singularValues();
    const double smax = sv[0];
    const double smin = sv[sv.size() - 1];
    if (smin < 1e-14 * smax) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

double coherence(const Mat& a) {
    const Eigen::Index m = a.rows();
    std::vector<double> norms(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        norms[i] = a.row(i).norm();
        if (norms[i] == 0.0) throw numeric_error("coherence: zero row at index " + std::to_string(i));
    }
    if (m < 2) return 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j)
            acc += std::abs(a.row(i).dot(a.row(j))) / (norms[i] * norms[j]);
    return acc / (0.5 * static_cast<double>(m) * static_cast<double>(m - 1));
}

MapDiagnostics map_diagnostics(const Mat& a) {
    MapDiagnostics d;
    d.kappa = conditioning(a);
    d.mu = coherence(a);
    return d;
}

Partition knn_classify(const Mat& train_repr, const Partition& train_labels, const Mat& test_repr, int k) {
    const Eigen::Index ntrain = train_repr.cols();
    if (static_cast<Eigen::Index>(train_labels.labels.size()) != ntrain)
        throw dimension_error("knn_classify: training labels and representations disagree");
    if (train_repr.rows() != test_repr.rows())
        throw dimension_error("knn_classify: representation dimensions disagree");
    if (k < 1 || k > ntrain) throw config_error("knn_classify: k must lie in [1, #train]");

    Partition out;
    out.labels.resize(test_repr.cols());
    std::vector<std::pair<double, Eigen::Index>> dist(ntrain);
    for (Eigen::Index i = 0; i < test_repr.cols(); ++i) {
        for (Eigen::Index j = 0; j < ntrain; ++j)
            dist[j] = {(train_repr.col(j) - test_repr.col(i)).squaredNorm(), j};
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        std::map<int, int> votes;
        for (int j = 0; j < k; ++j) ++votes[train_labels.labels[dist[j].second]];
        int best_label = votes.begin()->first, best_count = votes.begin()->second;
        for (const auto& [label, count] : votes) {
            if (count > best_count) {  // map order gives smallest-label tie-break
                best_count = count;
                best_label = label;
            }
        }
        out.labels[i] = best_label;
    }
    return out;
}

}  // namespace nt
