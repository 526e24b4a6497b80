#pragma once

// ============================================================================
// FILE: stats.hpp
//
// BRIEF: Statistical mutant killing: two-sided Mann-Whitney U test (normal
// approximation with midranks, tie correction, and continuity correction)
// combined with a Cohen's d effect-size gate.
//
// A mutant is killed when the two per-run metric samples differ with
// p < 0.05 AND |d| >= 0.5.
// ============================================================================

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace topomap {

struct KillVerdict {
    double p_value = 1.0;
    double d = 0.0;  // Cohen's d, sign = (mean(orig) - mean(mut)) direction
    bool killed = false;
};

namespace detail {

// Midranks of the pooled sample plus the tie term sum(t^3 - t) over tie groups.
inline void midranks(const std::vector<double>& pooled, std::vector<double>& ranks, double& tie_term) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    ranks.assign(n, 0.0);
    tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        double t = static_cast<double>(j - i + 1);
        double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t q = i; q <= j; ++q) ranks[order[q]] = rank;
        tie_term += t * t * t - t;
        i = j + 1;
    }
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace detail

// Two-sided Mann-Whitney U p-value, asymptotic method: z is built from
// U1 = R1 - n1(n1+1)/2 with continuity correction 0.5 and the tie-corrected
// variance n1*n2/12 * ((N+1) - sum(t^3 - t)/(N(N-1))). Zero rank variance
// (all values tied) yields p = 1.
inline double mann_whitney_p(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n1 = x.size(), n2 = y.size();
    if (n1 < 2 || n2 < 2) throw std::runtime_error("mann_whitney_p: both samples need >= 2 values");
    std::vector<double> pooled;
    pooled.reserve(n1 + n2);
    pooled.insert(pooled.end(), x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    std::vector<double> ranks;
    double tie_term = 0.0;
    detail::midranks(pooled, ranks, tie_term);

    double r1 = 0.0;
    for (std::size_t i = 0; i < n1; ++i) r1 += ranks[i];
    const double fn1 = static_cast<double>(n1), fn2 = static_cast<double>(n2);
    const double N = fn1 + fn2;
    const double u1 = r1 - fn1 * (fn1 + 1.0) / 2.0;
    const double mu = fn1 * fn2 / 2.0;
    const double var = fn1 * fn2 / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
    if (var <= 0.0) return 1.0;
    const double num = std::max(std::abs(u1 - mu) - 0.5, 0.0);
    const double z = num / std::sqrt(var);
    return std::min(1.0, 2.0 * detail::normal_sf(z));
}

// Cohen's d with pooled standard deviation (n1+n2-2 divisor, sample
// variances). Pooled SD of 0 gives d = 0 for equal means and +/-inf
// otherwise (complete separation of two constant samples).
inline double cohens_d(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n1 = x.size(), n2 = y.size();
    if (n1 < 2 || n2 < 2) throw std::runtime_error("cohens_d: both samples need >= 2 values");
    double m1 = 0.0, m2 = 0.0;
    for (double v : x) m1 += v;
    for (double v : y) m2 += v;
    m1 /= static_cast<double>(n1);
    m2 /= static_cast<double>(n2);
    double s1 = 0.0, s2 = 0.0;
    for (double v : x) s1 += (v - m1) * (v - m1);
    for (double v : y) s2 += (v - m2) * (v - m2);
    const double pooled_var = (s1 + s2) / static_cast<double>(n1 + n2 - 2);
    if (pooled_var <= 0.0) {
        if (m1 == m2) return 0.0;
        return m1 > m2 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
    }
    return (m1 - m2) / std::sqrt(pooled_var);
}

inline KillVerdict is_killed(const std::vector<double>& orig_metrics,
                             const std::vector<double>& mut_metrics) {
    KillVerdict v;
    v.p_value = mann_whitney_p(orig_metrics, mut_metrics);
    v.d = cohens_d(orig_metrics, mut_metrics);
    v.killed = v.p_value < 0.05 && std::abs(v.d) >= 0.5;
    return v;
}

}  // namespace topomap
