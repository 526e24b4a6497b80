#pragma once

// ============================================================================
// FILE: kselect.hpp
//
// BRIEF: Grows the cluster count k in steps of n_classes until majority-vote
// test accuracy plateaus: stop when the average of the last two accuracy
// derivatives drops below 0.001. The initial state is
// delta0 = alpha0 = k0 = 0 and the loop may stop at its first check.
// ============================================================================

#include <topomap/birch.hpp>
#include <topomap/cluster_model.hpp>
#include <topomap/kmeans.hpp>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace topomap {

struct KSelectionIteration {
    long k = 0;
    double accuracy = 0.0;
    double derivative = 0.0;
};

struct KSelectionTrace {
    std::vector<KSelectionIteration> iterations;
    long k_star = 0;
    bool exhausted = false;  // train rows ran out before the plateau
};

// Maps each cluster to its most frequent train label; ties go to the smallest
// label id and clusters without train rows inherit the global majority.
inline std::vector<long> majority_label_map(const ClusterModel& model, const std::vector<long>& y_train) {
    if (model.assignments.size() != y_train.size())
        throw std::runtime_error("majority_label_map: label length mismatch");
    long max_label = 0;
    for (long y : y_train) {
        if (y < 0) throw std::runtime_error("majority_label_map: negative label");
        max_label = std::max(max_label, y);
    }
    std::vector<std::vector<long>> counts(
        static_cast<std::size_t>(model.k), std::vector<long>(static_cast<std::size_t>(max_label + 1), 0));
    std::vector<long> global(static_cast<std::size_t>(max_label + 1), 0);
    for (std::size_t r = 0; r < y_train.size(); ++r) {
        ++counts[static_cast<std::size_t>(model.assignments[r])][static_cast<std::size_t>(y_train[r])];
        ++global[static_cast<std::size_t>(y_train[r])];
    }
    auto argmax_smallest = [](const std::vector<long>& v) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i] > v[best]) best = i;  // strict: first max keeps smallest id
        return static_cast<long>(best);
    };
    long fallback = argmax_smallest(global);
    std::vector<long> map(static_cast<std::size_t>(model.k));
    for (long c = 0; c < model.k; ++c) {
        const auto& row = counts[static_cast<std::size_t>(c)];
        bool empty = std::all_of(row.begin(), row.end(), [](long x) { return x == 0; });
        map[static_cast<std::size_t>(c)] = empty ? fallback : argmax_smallest(row);
    }
    return map;
}

namespace detail {

inline double majority_vote_accuracy(const ClusterModel& model, const std::vector<long>& cluster_to_label,
                                     const EmbeddedSet& e_test, const std::vector<long>& y_test) {
    std::vector<long> ids = assign(model, e_test);
    long hit = 0;
    for (std::size_t r = 0; r < ids.size(); ++r)
        if (cluster_to_label[static_cast<std::size_t>(ids[r])] == y_test[r]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(ids.size());
}

}  // namespace detail

struct KSelectOptions {
    int restarts = 10;
    long branching = 50;
    // Observes each evaluated iteration together with its fitted model.
    std::function<void(const ClusterModel&, const KSelectionIteration&)> observer;
};

inline KSelectionTrace select_k(const EmbeddedSet& e_train, const EmbeddedSet& e_test,
                                const std::vector<long>& y_train, const std::vector<long>& y_test,
                                long n_classes, const std::string& algorithm, std::uint64_t seed,
                                const KSelectOptions& opt = {}) {
    if (n_classes < 2) throw std::runtime_error("select_k: n_classes must be >= 2");
    if (algorithm != "kmeans" && algorithm != "birch")
        throw std::runtime_error("select_k: unknown algorithm '" + algorithm + "'");
    const long rows = e_train.matrix.rows();
    if (static_cast<long>(y_train.size()) != rows)
        throw std::runtime_error("select_k: train label length mismatch");
    if (static_cast<long>(y_test.size()) != e_test.matrix.rows())
        throw std::runtime_error("select_k: test label length mismatch");
    if (n_classes > rows)
        throw std::runtime_error("select_k: n_classes = " + std::to_string(n_classes) +
                                 " exceeds train rows " + std::to_string(rows));

    KSelectionTrace trace;
    double delta0 = 0.0, alpha0 = 0.0;
    long k0 = 0, k_star = n_classes;
    while (true) {
        if (k_star > rows) {
            // Ran out of train rows before the plateau: keep the last evaluated k.
            trace.exhausted = true;
            k_star = k0;
            break;
        }
        ClusterModel model = algorithm == "kmeans" ? kmeans_fit(e_train, k_star, seed, opt.restarts)
                                                   : birch_fit(e_train, k_star, opt.branching);
        std::vector<long> labels = majority_label_map(model, y_train);
        double alpha1 = detail::majority_vote_accuracy(model, labels, e_test, y_test);
        double delta1 = (alpha1 - alpha0) / static_cast<double>(k_star - k0);
        trace.iterations.push_back({k_star, alpha1, delta1});
        if (opt.observer) opt.observer(model, trace.iterations.back());
        if ((delta1 + delta0) / 2.0 < 0.001) break;
        delta0 = delta1;
        alpha0 = alpha1;
        k0 = k_star;
        k_star += n_classes;
    }
    trace.k_star = k_star;
    return trace;
}

inline std::string trace_to_csv(const KSelectionTrace& trace) {
    std::string out = "k,accuracy,derivative\n";
    for (const auto& it : trace.iterations)
        out += std::to_string(it.k) + "," + format_double(it.accuracy) + "," +
               format_double(it.derivative) + "\n";
    return out;
}

}  // namespace topomap
