#pragma once

// ============================================================================
// FILE: kmeans.hpp
//
// BRIEF: Lloyd's K-means with K-means++ seeding and best-of-restarts
// selection. Deterministic for a fixed (seed, restarts) pair: restart r
// derives its generator from the base seed, candidates are scanned in row
// order, and assignment ties go to the lowest cluster id.
// ============================================================================

#include <topomap/cluster_model.hpp>

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace topomap {
namespace detail {

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    // SplitMix64 step keeps per-restart streams decorrelated.
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// K-means++: first centroid uniform, each next one drawn with probability
// proportional to the squared distance to the nearest centroid chosen so far.
inline Matrix kmeanspp_seed(const Matrix& pts, long k, std::mt19937_64& rng) {
    const long n = pts.rows();
    Matrix centroids(k, pts.cols());
    std::uniform_int_distribution<long> first(0, n - 1);
    centroids.row(0) = pts.row(first(rng));
    Vector d2 = (pts.rowwise() - centroids.row(0)).rowwise().squaredNorm();
    for (long c = 1; c < k; ++c) {
        double total = d2.sum();
        long pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            double acc = 0.0;
            pick = n - 1;
            for (long r = 0; r < n; ++r) {
                acc += d2(r);
                if (acc >= target) {
                    pick = r;
                    break;
                }
            }
        } else {
            // All remaining mass is zero (duplicate rows): fall back to uniform.
            pick = first(rng);
        }
        centroids.row(c) = pts.row(pick);
        d2 = d2.cwiseMin((pts.rowwise() - centroids.row(c)).rowwise().squaredNorm());
    }
    return centroids;
}

inline std::vector<long> nearest_assignments(const Matrix& pts, const Matrix& centroids) {
    std::vector<long> asg(static_cast<std::size_t>(pts.rows()));
    for (long r = 0; r < pts.rows(); ++r) {
        long best = 0;
        double bd = (pts.row(r) - centroids.row(0)).squaredNorm();
        for (long c = 1; c < centroids.rows(); ++c) {
            double d = (pts.row(r) - centroids.row(c)).squaredNorm();
            if (d < bd) {
                bd = d;
                best = c;
            }
        }
        asg[static_cast<std::size_t>(r)] = best;
    }
    return asg;
}

struct LloydOutcome {
    Matrix centroids;
    std::vector<long> assignments;
    double inertia = 0.0;
    std::vector<double> trace;  // inertia after each assignment pass
};

inline LloydOutcome lloyd(const Matrix& pts, Matrix centroids, long max_iter) {
    const long n = pts.rows();
    const long k = centroids.rows();
    LloydOutcome out;
    std::vector<long> asg = nearest_assignments(pts, centroids);
    out.trace.push_back(total_inertia(pts, centroids, asg));
    for (long iter = 0; iter < max_iter; ++iter) {
        // Mean update.
        Matrix sums = Matrix::Zero(k, pts.cols());
        std::vector<long> counts(static_cast<std::size_t>(k), 0);
        for (long r = 0; r < n; ++r) {
            sums.row(asg[static_cast<std::size_t>(r)]) += pts.row(r);
            ++counts[static_cast<std::size_t>(asg[static_cast<std::size_t>(r)])];
        }
        for (long c = 0; c < k; ++c)
            if (counts[static_cast<std::size_t>(c)] > 0) centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        // An emptied cluster is re-seeded at the row farthest from its own
        // centroid; each reseed consumes that row so later empties pick fresh.
        std::vector<bool> taken(static_cast<std::size_t>(n), false);
        for (long c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            long far_row = -1;
            double far_d = -1.0;
            for (long r = 0; r < n; ++r) {
                if (taken[static_cast<std::size_t>(r)]) continue;
                double d = (pts.row(r) - centroids.row(asg[static_cast<std::size_t>(r)])).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far_row = r;
                }
            }
            centroids.row(c) = pts.row(far_row);
            taken[static_cast<std::size_t>(far_row)] = true;
        }
        std::vector<long> next = nearest_assignments(pts, centroids);
        out.trace.push_back(total_inertia(pts, centroids, next));
        bool stable = (next == asg);
        asg = std::move(next);
        if (stable) break;
    }
    out.centroids = std::move(centroids);
    out.assignments = std::move(asg);
    out.inertia = out.trace.back();
    return out;
}

}  // namespace detail

inline ClusterModel kmeans_fit(const EmbeddedSet& e, long k, std::uint64_t seed, int restarts = 10,
                               long max_iter = 300) {
    const Matrix& pts = e.matrix;
    if (k < 1) throw std::runtime_error("kmeans: k must be >= 1");
    if (k > pts.rows())
        throw std::runtime_error("kmeans: k = " + std::to_string(k) + " exceeds row count " +
                                 std::to_string(pts.rows()));
    if (restarts < 1) throw std::runtime_error("kmeans: restarts must be >= 1");

    detail::LloydOutcome best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        std::mt19937_64 rng(detail::derive_seed(seed, static_cast<std::uint64_t>(r)));
        detail::LloydOutcome run = detail::lloyd(pts, detail::kmeanspp_seed(pts, k, rng), max_iter);
        if (run.inertia < best.inertia) best = std::move(run);
    }

    ClusterModel model;
    model.method = "kmeans";
    model.k = k;
    model.centroids = std::move(best.centroids);
    model.assignments = std::move(best.assignments);
    model.seed = seed;
    model.inertia = best.inertia;
    model.lloyd_inertia_trace = std::move(best.trace);
    detail::refresh_empty_flags(model);
    return model;
}

}  // namespace topomap
