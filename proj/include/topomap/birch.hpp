#pragma once

// ============================================================================
// FILE: birch.hpp
//
// BRIEF: Single-pass BIRCH: rows stream into a CF-tree (clustering-feature
// summaries with a radius threshold and a branching cap), then the leaf
// subcluster centroids are agglomerated to k clusters with Ward's criterion
// and every row is assigned to its nearest final centroid.
// ============================================================================

#include <topomap/cluster_model.hpp>
#include <topomap/kmeans.hpp>

#include <limits>
#include <stdexcept>
#include <vector>

namespace topomap {
namespace detail {

struct CFEntry {
    double n = 0.0;
    Vector ls;       // linear sum of member rows
    double ss = 0.0; // sum of squared norms of member rows
    long child = -1; // node id, -1 at leaf level

    Vector centroid() const { return ls / n; }
};

struct CFNode {
    bool leaf = true;
    std::vector<CFEntry> entries;
};

inline CFEntry cf_of_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    CFEntry e;
    e.n = 1.0;
    e.ls = x.transpose();
    e.ss = x.squaredNorm();
    return e;
}

inline void cf_merge(CFEntry& into, const CFEntry& piece) {
    into.n += piece.n;
    into.ls += piece.ls;
    into.ss += piece.ss;
}

// Root-mean-square distance of members to the merged centroid.
inline double cf_merged_radius_sq(const CFEntry& a, const CFEntry& b) {
    double n = a.n + b.n;
    Vector ls = a.ls + b.ls;
    double ss = a.ss + b.ss;
    return std::max(0.0, ss / n - (ls / n).squaredNorm());
}

class CFTree {
public:
    CFTree(long branching, double threshold) : branching_(branching), thr_sq_(threshold * threshold) {
        nodes_.push_back(CFNode{});
        root_ = 0;
    }

    void insert(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
        CFEntry e1, e2;
        if (insert_rec(root_, x, e1, e2)) {
            CFNode top;
            top.leaf = false;
            top.entries = {e1, e2};
            nodes_.push_back(std::move(top));
            root_ = static_cast<long>(nodes_.size()) - 1;
        }
    }

    std::vector<CFEntry> leaf_entries() const {
        std::vector<CFEntry> out;
        collect_leaves(root_, out);
        return out;
    }

private:
    long nearest_entry(const CFNode& node, const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        long best = 0;
        double bd = (x.transpose() - node.entries[0].centroid()).squaredNorm();
        for (std::size_t i = 1; i < node.entries.size(); ++i) {
            double d = (x.transpose() - node.entries[i].centroid()).squaredNorm();
            if (d < bd) {
                bd = d;
                best = static_cast<long>(i);
            }
        }
        return best;
    }

    // Splits node_id's entries across itself and a fresh sibling, seeding with
    // the farthest pair of entry centroids. Returns summaries for the parent.
    void split_node(long node_id, CFEntry& out1, CFEntry& out2) {
        CFNode& node = nodes_[static_cast<std::size_t>(node_id)];
        std::size_t m = node.entries.size();
        std::size_t sa = 0, sb = 1;
        double far_d = -1.0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) {
                double d = (node.entries[i].centroid() - node.entries[j].centroid()).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    sa = i;
                    sb = j;
                }
            }
        CFNode sib;
        sib.leaf = node.leaf;
        std::vector<CFEntry> keep;
        Vector ca = node.entries[sa].centroid(), cb = node.entries[sb].centroid();
        for (std::size_t i = 0; i < m; ++i) {
            double da = (node.entries[i].centroid() - ca).squaredNorm();
            double db = (node.entries[i].centroid() - cb).squaredNorm();
            if (db < da)
                sib.entries.push_back(node.entries[i]);
            else
                keep.push_back(node.entries[i]);
        }
        if (keep.empty()) {
            keep.push_back(sib.entries.back());
            sib.entries.pop_back();
        } else if (sib.entries.empty()) {
            sib.entries.push_back(keep.back());
            keep.pop_back();
        }
        node.entries = std::move(keep);
        nodes_.push_back(std::move(sib));
        long sib_id = static_cast<long>(nodes_.size()) - 1;
        out1 = summarize(node_id);
        out1.child = node_id;
        out2 = summarize(sib_id);
        out2.child = sib_id;
    }

    CFEntry summarize(long node_id) const {
        const CFNode& node = nodes_[static_cast<std::size_t>(node_id)];
        CFEntry s = node.entries[0];
        s.child = -1;
        for (std::size_t i = 1; i < node.entries.size(); ++i) cf_merge(s, node.entries[i]);
        return s;
    }

    bool insert_rec(long node_id, const Eigen::Ref<const Eigen::RowVectorXd>& x, CFEntry& out1,
                    CFEntry& out2) {
        CFNode& node = nodes_[static_cast<std::size_t>(node_id)];
        if (node.entries.empty()) {
            node.entries.push_back(cf_of_row(x));
            return false;
        }
        long i = nearest_entry(node, x);
        if (node.leaf) {
            CFEntry piece = cf_of_row(x);
            if (cf_merged_radius_sq(node.entries[static_cast<std::size_t>(i)], piece) <= thr_sq_) {
                cf_merge(node.entries[static_cast<std::size_t>(i)], piece);
                return false;
            }
            node.entries.push_back(piece);
        } else {
            CFEntry c1, c2;
            bool child_split = insert_rec(node.entries[static_cast<std::size_t>(i)].child, x, c1, c2);
            // The vector may have reallocated during recursion.
            CFNode& self = nodes_[static_cast<std::size_t>(node_id)];
            if (!child_split) {
                cf_merge(self.entries[static_cast<std::size_t>(i)], cf_of_row(x));
                return false;
            }
            self.entries[static_cast<std::size_t>(i)] = c1;
            self.entries.push_back(c2);
        }
        CFNode& self = nodes_[static_cast<std::size_t>(node_id)];
        if (static_cast<long>(self.entries.size()) <= branching_) return false;
        split_node(node_id, out1, out2);
        return true;
    }

    void collect_leaves(long node_id, std::vector<CFEntry>& out) const {
        const CFNode& node = nodes_[static_cast<std::size_t>(node_id)];
        if (node.leaf) {
            out.insert(out.end(), node.entries.begin(), node.entries.end());
            return;
        }
        for (const CFEntry& e : node.entries) collect_leaves(e.child, out);
    }

    long branching_;
    double thr_sq_;
    std::vector<CFNode> nodes_;
    long root_;
};

// Default threshold: half the mean nearest-neighbour distance over an
// evenly spaced sample of at most 100 rows.
inline double birch_auto_threshold(const Matrix& pts) {
    long n = pts.rows();
    long m = std::min<long>(100, n);
    if (m < 2) return 0.0;
    std::vector<long> idx(static_cast<std::size_t>(m));
    for (long i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i * n / m;
    double acc = 0.0;
    for (long i = 0; i < m; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (long j = 0; j < m; ++j) {
            if (i == j) continue;
            double d = (pts.row(idx[static_cast<std::size_t>(i)]) - pts.row(idx[static_cast<std::size_t>(j)])).squaredNorm();
            best = std::min(best, d);
        }
        acc += std::sqrt(best);
    }
    return 0.5 * acc / static_cast<double>(m);
}

struct WardCluster {
    double n;
    Vector centroid;
};

// Ward's merge cost between weighted centroids.
inline double ward_cost(const WardCluster& a, const WardCluster& b) {
    return a.n * b.n / (a.n + b.n) * (a.centroid - b.centroid).squaredNorm();
}

inline std::vector<WardCluster> ward_agglomerate(std::vector<WardCluster> clusters, long k) {
    while (static_cast<long>(clusters.size()) > k) {
        std::size_t bi = 0, bj = 1;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < clusters.size(); ++i)
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                double d = ward_cost(clusters[i], clusters[j]);
                if (d < bd) {
                    bd = d;
                    bi = i;
                    bj = j;
                }
            }
        WardCluster merged;
        merged.n = clusters[bi].n + clusters[bj].n;
        merged.centroid =
            (clusters[bi].n * clusters[bi].centroid + clusters[bj].n * clusters[bj].centroid) / merged.n;
        clusters[bi] = std::move(merged);
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    return clusters;
}

}  // namespace detail

inline ClusterModel birch_fit(const EmbeddedSet& e, long k, long branching = 50,
                              double threshold = -1.0) {
    const Matrix& pts = e.matrix;
    if (k < 1) throw std::runtime_error("birch: k must be >= 1");
    if (k > pts.rows())
        throw std::runtime_error("birch: k = " + std::to_string(k) + " exceeds row count " +
                                 std::to_string(pts.rows()));
    if (branching < 2) throw std::runtime_error("birch: branching must be >= 2");

    double thr = threshold >= 0.0 ? threshold : detail::birch_auto_threshold(pts);
    std::vector<detail::CFEntry> leaves;
    for (int attempt = 0;; ++attempt) {
        detail::CFTree tree(branching, thr);
        for (long r = 0; r < pts.rows(); ++r) tree.insert(pts.row(r));
        leaves = tree.leaf_entries();
        if (static_cast<long>(leaves.size()) >= k) break;
        if (attempt >= 5)
            throw std::runtime_error("birch: k = " + std::to_string(k) +
                                     " exceeds leaf subcluster count " + std::to_string(leaves.size()) +
                                     " after threshold refinement");
        thr *= 0.5;  // a tighter threshold yields more leaf subclusters
    }

    std::vector<detail::WardCluster> clusters;
    clusters.reserve(leaves.size());
    for (const auto& leaf : leaves) clusters.push_back({leaf.n, leaf.centroid()});
    clusters = detail::ward_agglomerate(std::move(clusters), k);

    ClusterModel model;
    model.method = "birch";
    model.k = k;
    model.centroids.resize(k, pts.cols());
    for (long c = 0; c < k; ++c) model.centroids.row(c) = clusters[static_cast<std::size_t>(c)].centroid.transpose();
    model.assignments = detail::nearest_assignments(pts, model.centroids);
    model.seed = 0;
    model.inertia = detail::total_inertia(pts, model.centroids, model.assignments);
    detail::refresh_empty_flags(model);
    return model;
}

}  // namespace topomap
