#pragma once

// ============================================================================
// FILE: validity.hpp
//
// BRIEF: Internal cluster validity indices (silhouette, Davies-Bouldin,
// Calinski-Harabasz) over an embedded matrix and an assignment vector.
// Diagnostics only; they never drive configuration selection.
// ============================================================================

#include <topomap/matrix_io.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace topomap {
namespace detail {

struct ClusterMembers {
    std::vector<std::vector<long>> rows;  // indexed by cluster id
    std::vector<long> nonempty;           // ids with at least one member
};

inline ClusterMembers group_members(const std::vector<long>& asg, long k) {
    ClusterMembers g;
    g.rows.resize(static_cast<std::size_t>(k));
    for (std::size_t r = 0; r < asg.size(); ++r) {
        if (asg[r] < 0 || asg[r] >= k)
            throw std::runtime_error("validity: cluster id " + std::to_string(asg[r]) +
                                     " out of range for k = " + std::to_string(k));
        g.rows[static_cast<std::size_t>(asg[r])].push_back(static_cast<long>(r));
    }
    for (long c = 0; c < k; ++c)
        if (!g.rows[static_cast<std::size_t>(c)].empty()) g.nonempty.push_back(c);
    return g;
}

}  // namespace detail

// Mean silhouette width. Singleton clusters contribute 0 for their row.
inline double silhouette_score(const Matrix& pts, const std::vector<long>& asg, long k) {
    if (static_cast<long>(asg.size()) != pts.rows())
        throw std::runtime_error("silhouette: assignment length mismatch");
    detail::ClusterMembers g = detail::group_members(asg, k);
    if (g.nonempty.size() < 2) throw std::runtime_error("silhouette: needs >= 2 non-empty clusters");
    const long n = pts.rows();
    double acc = 0.0;
    for (long i = 0; i < n; ++i) {
        long ci = asg[static_cast<std::size_t>(i)];
        const auto& own = g.rows[static_cast<std::size_t>(ci)];
        if (own.size() == 1) continue;  // s(i) = 0
        double a = 0.0;
        for (long j : own)
            if (j != i) a += (pts.row(i) - pts.row(j)).norm();
        a /= static_cast<double>(own.size() - 1);
        double b = std::numeric_limits<double>::infinity();
        for (long c : g.nonempty) {
            if (c == ci) continue;
            double m = 0.0;
            for (long j : g.rows[static_cast<std::size_t>(c)]) m += (pts.row(i) - pts.row(j)).norm();
            b = std::min(b, m / static_cast<double>(g.rows[static_cast<std::size_t>(c)].size()));
        }
        double denom = std::max(a, b);
        if (denom > 0.0) acc += (b - a) / denom;
    }
    return acc / static_cast<double>(n);
}

// Davies-Bouldin index (lower is better): mean over clusters of the worst
// ratio of summed within-scatter to centroid separation.
inline double davies_bouldin_score(const Matrix& pts, const std::vector<long>& asg, long k) {
    if (static_cast<long>(asg.size()) != pts.rows())
        throw std::runtime_error("davies_bouldin: assignment length mismatch");
    detail::ClusterMembers g = detail::group_members(asg, k);
    std::size_t m = g.nonempty.size();
    if (m < 2) throw std::runtime_error("davies_bouldin: needs >= 2 non-empty clusters");
    Matrix centroids(static_cast<long>(m), pts.cols());
    std::vector<double> scatter(m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
        const auto& rows = g.rows[static_cast<std::size_t>(g.nonempty[a])];
        Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(pts.cols());
        for (long r : rows) c += pts.row(r);
        c /= static_cast<double>(rows.size());
        centroids.row(static_cast<long>(a)) = c;
        for (long r : rows) scatter[a] += (pts.row(r) - c).norm();
        scatter[a] /= static_cast<double>(rows.size());
    }
    double acc = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
        double worst = 0.0;
        for (std::size_t b = 0; b < m; ++b) {
            if (a == b) continue;
            double sep = (centroids.row(static_cast<long>(a)) - centroids.row(static_cast<long>(b))).norm();
            if (sep == 0.0) return std::numeric_limits<double>::infinity();
            worst = std::max(worst, (scatter[a] + scatter[b]) / sep);
        }
        acc += worst;
    }
    return acc / static_cast<double>(m);
}

// Calinski-Harabasz index (higher is better): between/within variance ratio.
inline double calinski_harabasz_score(const Matrix& pts, const std::vector<long>& asg, long k) {
    if (static_cast<long>(asg.size()) != pts.rows())
        throw std::runtime_error("calinski_harabasz: assignment length mismatch");
    detail::ClusterMembers g = detail::group_members(asg, k);
    std::size_t m = g.nonempty.size();
    if (m < 2) throw std::runtime_error("calinski_harabasz: needs >= 2 non-empty clusters");
    const long n = pts.rows();
    Eigen::RowVectorXd global = pts.colwise().mean();
    double between = 0.0, within = 0.0;
    for (long c : g.nonempty) {
        const auto& rows = g.rows[static_cast<std::size_t>(c)];
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(pts.cols());
        for (long r : rows) mean += pts.row(r);
        mean /= static_cast<double>(rows.size());
        between += static_cast<double>(rows.size()) * (mean - global).squaredNorm();
        for (long r : rows) within += (pts.row(r) - mean).squaredNorm();
    }
    if (within == 0.0) return std::numeric_limits<double>::infinity();
    double num = between / static_cast<double>(m - 1);
    double den = within / static_cast<double>(n - static_cast<long>(m));
    return num / den;
}

}  // namespace topomap
