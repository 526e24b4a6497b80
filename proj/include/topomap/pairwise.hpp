#pragma once

// ============================================================================
// FILE: pairwise.hpp
//
// BRIEF: Weighted pairwise accuracy between two clusters A and B of a
// predicted/truth labelling, the k x k pairwise matrix, and the minimum pair.
//
// Only entries whose truth AND prediction both lie in {A, B} are kept. With
// n_XY = count(pred = X, truth = Y), |A| = n_AA + n_BA and |B| = n_BB + n_AB,
// the minority cluster's counts are scaled by w = max(|A|,|B|) / min(|A|,|B|):
//
//   |A| <  |B|:  (w n_AA + n_BB) / (w n_AA + n_BB + w n_BA + n_AB)
//   |A| >= |B|:  (n_AA + w n_BB) / (n_AA + w n_BB + n_BA + w n_AB)
//
// The value is symmetric in (A, B); evaluation uses a canonical orientation
// (min id, max id) so both argument orders produce bit-identical doubles.
// ============================================================================

#include <topomap/matrix_io.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace topomap {

// Returns std::nullopt when no test entry survives the {A,B} filter on both
// sides (the pair is undefined). One empty side degenerates to the plain
// accuracy of the other side, the limit of the weighting as w -> 0.
inline std::optional<double> weighted_pairwise_accuracy(const std::vector<long>& pred,
                                                        const std::vector<long>& truth,
                                                        long A, long B) {
    if (A == B) throw std::runtime_error("weighted_pairwise_accuracy: A == B");
    if (pred.size() != truth.size())
        throw std::runtime_error("weighted_pairwise_accuracy: prediction/truth length mismatch");
    const long lo = std::min(A, B), hi = std::max(A, B);
    double n_ll = 0, n_hh = 0, n_hl = 0, n_lh = 0;  // n_XY: pred X, truth Y
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const long t = truth[i], p = pred[i];
        if ((t != lo && t != hi) || (p != lo && p != hi)) continue;
        if (t == lo) {
            if (p == lo) n_ll += 1; else n_hl += 1;
        } else {
            if (p == hi) n_hh += 1; else n_lh += 1;
        }
    }
    const double size_lo = n_ll + n_hl, size_hi = n_hh + n_lh;
    if (size_lo == 0 && size_hi == 0) return std::nullopt;
    if (size_lo == 0) return n_hh / size_hi;
    if (size_hi == 0) return n_ll / size_lo;
    if (size_lo < size_hi) {
        const double w = size_hi / size_lo;
        return (w * n_ll + n_hh) / (w * n_ll + n_hh + w * n_hl + n_lh);
    }
    const double w = size_lo / size_hi;
    return (n_ll + w * n_hh) / (n_ll + w * n_hh + n_hl + w * n_lh);
}

// k x k matrix of pairwise values; diagonal and undefined pairs are NaN.
inline Matrix pairwise_matrix(const std::vector<long>& pred, const std::vector<long>& truth, long k) {
    Matrix m = Matrix::Constant(k, k, std::numeric_limits<double>::quiet_NaN());
    for (long a = 0; a < k; ++a)
        for (long b = a + 1; b < k; ++b)
            if (auto v = weighted_pairwise_accuracy(pred, truth, a, b)) {
                m(a, b) = *v;
                m(b, a) = *v;
            }
    return m;
}

struct MinPair {
    long a = 0;
    long b = 0;
    double value = 0.0;
};

// Minimum over defined unordered pairs; ties resolve to the lexicographically
// smallest (A, B). Throws when every pair is undefined.
inline MinPair min_pairwise_accuracy(const std::vector<long>& pred, const std::vector<long>& truth,
                                     long k) {
    if (k < 2) throw std::runtime_error("min_pairwise_accuracy: k must be >= 2");
    bool found = false;
    MinPair best;
    for (long a = 0; a < k; ++a)
        for (long b = a + 1; b < k; ++b)
            if (auto v = weighted_pairwise_accuracy(pred, truth, a, b))
                if (!found || *v < best.value) {
                    best = {a, b, *v};
                    found = true;
                }
    if (!found) throw std::runtime_error("min_pairwise_accuracy: all pairs undefined");
    return best;
}

// Unweighted mean over defined unordered pairs.
inline std::optional<double> overall_pairwise_accuracy(const Matrix& pairwise) {
    double sum = 0.0;
    long count = 0;
    for (long a = 0; a < pairwise.rows(); ++a)
        for (long b = a + 1; b < pairwise.cols(); ++b)
            if (!std::isnan(pairwise(a, b))) {
                sum += pairwise(a, b);
                ++count;
            }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

}  // namespace topomap
