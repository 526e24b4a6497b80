#pragma once

// ============================================================================
// FILE: mutation_fixtures.hpp
//
// BRIEF: Deterministic mutant fixtures shared by the mutation unit tests and
// the acceptance suite. The planted fixture concentrates contributors in two
// of ten clusters at exactly ten times the background density and is built
// so that the cluster pair kills while either cluster alone stays under the
// effect-size gate, for every seed.
// ============================================================================

#include <topomap/mutation.hpp>
#include <topomap/runset.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace fixtures {

using topomap::Matrix;
using topomap::RunSet;
using topomap::Task;

// Classification RunSet straight from a 0/1 misprediction matrix.
inline RunSet runset_from_correctness(Matrix bits, std::string id) {
    RunSet rs;
    rs.model_id = std::move(id);
    rs.task = Task::classification;
    rs.n_runs = bits.rows();
    for (long r = 0; r < bits.rows(); ++r)
        rs.metric_per_run.push_back(1.0 - bits.row(r).mean());
    rs.correctness = std::move(bits);
    return rs;
}

// Balanced +1/-1 sequence of length n (n even), order shuffled by rng.
inline std::vector<int> balanced_signs(long n, std::mt19937_64& rng) {
    std::vector<int> s(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = i < n / 2 ? 1 : -1;
    for (long i = n - 1; i > 0; --i) {
        long j = static_cast<long>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(s[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(j)]);
    }
    return s;
}

struct PlantedFixture {
    RunSet orig;
    RunSet mut;
    std::vector<long> assignments;  // 200 test rows, 10 clusters of 20
    long k = 10;
    long planted_lo = 0;  // smaller planted cluster id
    long planted_hi = 1;
    std::vector<long> contributor_rows;  // ground truth, 28 rows
};

// Ten clusters of 20 rows. The two planted clusters each hold 10 contributor
// rows (mutant-only misses, P 0.1 vs 0) and 10 flaky rows missed identically
// by both models; the flaky run patterns of the pair are anti-aligned, so
// their union has constant original accuracy while each alone swings hard.
// Background clusters hold one contributor row each (P 0.15 vs 0), density
// 0.05 against the planted 0.5. N = 20 runs.
//
// Frozen kill dynamics, seed-independent because only multisets matter:
//   first planted cluster alone:  |d| <= 0.28, p ~ 0.15  -> never kills
//   both planted clusters:        p ~ 3.34e-4, d ~ 1.378 -> always kills
inline PlantedFixture planted_fixture(std::uint64_t seed) {
    constexpr long kClusters = 10, kPerCluster = 20, kRuns = 20;
    const long n = kClusters * kPerCluster;
    std::mt19937_64 rng(seed);

    PlantedFixture fx;
    long a = static_cast<long>(rng() % kClusters);
    long b = static_cast<long>(rng() % (kClusters - 1));
    if (b >= a) ++b;
    fx.planted_lo = std::min(a, b);
    fx.planted_hi = std::max(a, b);
    fx.assignments.resize(static_cast<std::size_t>(n));
    for (long r = 0; r < n; ++r) fx.assignments[static_cast<std::size_t>(r)] = r / kPerCluster;

    std::vector<int> w = balanced_signs(kRuns, rng);  // flaky phase
    std::vector<int> x = balanced_signs(kRuns, rng);  // contributor phase

    Matrix orig = Matrix::Zero(kRuns, n);
    Matrix mut = Matrix::Zero(kRuns, n);

    // Planted clusters: flaky rows are locals 0..9, contributors 10..19.
    for (int side = 0; side < 2; ++side) {
        long c = side == 0 ? fx.planted_lo : fx.planted_hi;
        long base = c * kPerCluster;
        long low_runs = 0, high_x_runs = 0;
        for (long i = 0; i < kRuns; ++i) {
            int phase = side == 0 ? w[static_cast<std::size_t>(i)] : -w[static_cast<std::size_t>(i)];
            if (phase > 0) {
                for (long j = 0; j < 10; ++j) orig(i, base + j) = 1.0;  // all 10 flaky rows
            } else {
                orig(i, base + (2 * low_runs) % 10) = 1.0;  // rotating flaky pair
                orig(i, base + (2 * low_runs + 1) % 10) = 1.0;
                ++low_runs;
            }
            if (x[static_cast<std::size_t>(i)] > 0) {
                mut(i, base + 10 + (2 * high_x_runs) % 10) = 1.0;  // rotating contributor pair
                mut(i, base + 10 + (2 * high_x_runs + 1) % 10) = 1.0;
                ++high_x_runs;
            }
        }
        for (long j = 0; j < 10; ++j) fx.contributor_rows.push_back(base + 10 + j);
    }
    mut += orig;  // flaky misses are shared, so those columns never contribute

    // Background clusters: one contributor row (local 0) missed in 3 runs.
    for (long c = 0; c < kClusters; ++c) {
        if (c == fx.planted_lo || c == fx.planted_hi) continue;
        long row = c * kPerCluster;
        std::vector<long> runs(kRuns);
        for (long i = 0; i < kRuns; ++i) runs[static_cast<std::size_t>(i)] = i;
        for (long i = 0; i < 3; ++i) {
            long j = i + static_cast<long>(rng() % static_cast<std::uint64_t>(kRuns - i));
            std::swap(runs[static_cast<std::size_t>(i)], runs[static_cast<std::size_t>(j)]);
            mut(runs[static_cast<std::size_t>(i)], row) = 1.0;
        }
        fx.contributor_rows.push_back(row);
    }
    std::sort(fx.contributor_rows.begin(), fx.contributor_rows.end());

    // Shared churn on the remaining background rows: both models miss them
    // identically (never contributors), so random row draws see genuine
    // run-to-run variance that swamps the small contributor shift. Rows
    // inside the planted pair are untouched, which keeps the pair's kill
    // dynamics exactly as frozen above. Drawn after every structural draw so
    // earlier rng consumption, and with it the per-seed layout, is unchanged.
    for (long c = 0; c < kClusters; ++c) {
        if (c == fx.planted_lo || c == fx.planted_hi) continue;
        for (long j = 1; j < kPerCluster; ++j) {
            long row = c * kPerCluster + j;
            for (long i = 0; i < kRuns; ++i)
                if (rng() % 10 < 3) {
                    orig(i, row) = 1.0;
                    mut(i, row) = 1.0;
                }
        }
    }

    fx.orig = runset_from_correctness(std::move(orig), "original");
    fx.mut = runset_from_correctness(std::move(mut), "planted_mutant");
    return fx;
}

struct MutantSuite {
    RunSet orig;
    std::vector<RunSet> mutants;
    std::vector<long> assignments;
    long k = 8;
};

// Random mutant population over a shared 8x15 map: each mutant raises the
// miss rate on 1..3 clusters by a drawn severity, on top of shared original
// noise. Severities span unkillable to single-cluster kills.
inline MutantSuite mutant_suite(std::uint64_t seed, long count) {
    constexpr long kClusters = 8, kPerCluster = 15, kRuns = 12;
    const long n = kClusters * kPerCluster;
    std::mt19937_64 rng(seed);

    MutantSuite suite;
    suite.assignments.resize(static_cast<std::size_t>(n));
    for (long r = 0; r < n; ++r) suite.assignments[static_cast<std::size_t>(r)] = r / kPerCluster;

    Matrix orig = Matrix::Zero(kRuns, n);
    for (long i = 0; i < kRuns; ++i)
        for (long r = 0; r < n; ++r)
            if (rng() % 10000 < 800) orig(i, r) = 1.0;  // 8% background misses
    suite.orig = runset_from_correctness(orig, "original");

    for (long m = 0; m < count; ++m) {
        long affected = 1 + static_cast<long>(rng() % 3);
        std::vector<long> ids(kClusters);
        for (long c = 0; c < kClusters; ++c) ids[static_cast<std::size_t>(c)] = c;
        for (long i = 0; i < affected; ++i) {
            long j = i + static_cast<long>(rng() % static_cast<std::uint64_t>(kClusters - i));
            std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
        }
        std::uint64_t severity = 500 + rng() % 5500;  // extra miss rate 5%..60%
        Matrix bits = orig;
        for (long i = 0; i < kRuns; ++i)
            for (long c = 0; c < affected; ++c) {
                long base = ids[static_cast<std::size_t>(c)] * kPerCluster;
                for (long r = base; r < base + kPerCluster; ++r)
                    if (rng() % 10000 < severity) bits(i, r) = 1.0;
            }
        suite.mutants.push_back(
            runset_from_correctness(std::move(bits), "m" + std::to_string(m)));
    }
    return suite;
}

}  // namespace fixtures
