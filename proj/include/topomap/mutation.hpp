#pragma once

// ============================================================================
// FILE: mutation.hpp
//
// BRIEF: Statistical mutant killing on top of the cluster map: contributor
// extraction, greedy density-ordered killing aggregations, random-input
// baselines, cross-mutant killing strength, and per-operator KillHalf /
// KillFull rates.
// ============================================================================

#include <topomap/cluster_model.hpp>
#include <topomap/runset.hpp>
#include <topomap/stats.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <utility>
#include <stdexcept>
#include <string>
#include <vector>

namespace topomap {

struct KillingAggregation {
    std::string mutant_id;
    std::vector<long> clusters;  // in the order added by the greedy loop
    std::vector<long> members;   // union of the clusters' test rows
    double rho_k = 1.0;          // |members| / |X_test|
    double rho_c = 0.0;          // contributors within members / |members|
    KillVerdict verdict;         // verdict at the stopping point
    bool killable = false;
};

struct BaselineResult {
    long R = 10;
    double rho_d = 0.0;        // fraction of random selections that kill
    double rho_c_random = 0.0; // mean contributor fraction across selections
    std::uint64_t seed = 0;
};

// Inputs whose misprediction probability strictly rises under the mutant.
inline std::vector<long> contributors(const RunSet& orig, const RunSet& mut) {
    if (orig.n_inputs() != mut.n_inputs())
        throw std::runtime_error("contributors: run sets disagree on test-set size (" +
                                 std::to_string(orig.n_inputs()) + " vs " +
                                 std::to_string(mut.n_inputs()) + ")");
    Vector p_orig = misprediction_probability(orig);
    Vector p_mut = misprediction_probability(mut);
    std::vector<long> out;
    for (long i = 0; i < orig.n_inputs(); ++i)
        if (p_orig(i) < p_mut(i)) out.push_back(i);
    return out;
}

namespace detail {

// Membership lookup for a row set given as sorted-or-not id list.
inline std::vector<char> row_mask(const std::vector<long>& rows, long n) {
    std::vector<char> mask(static_cast<std::size_t>(n), 0);
    for (long r : rows) mask[static_cast<std::size_t>(r)] = 1;
    return mask;
}

}  // namespace detail

// Greedy aggregation: clusters sorted by descending contributor density
// (ties by ascending id) are added one at a time until the subset metrics
// kill the mutant. A mutant no aggregation kills comes back killable=false
// with every cluster included (rho_k = 1.0).
inline KillingAggregation build_killing_aggregation(const std::vector<long>& test_assignments,
                                                    long k, const RunSet& orig, const RunSet& mut) {
    const long n = orig.n_inputs();
    if (static_cast<long>(test_assignments.size()) != n)
        throw std::runtime_error("build_killing_aggregation: " +
                                 std::to_string(test_assignments.size()) +
                                 " assignments for " + std::to_string(n) + " test inputs");
    if (k < 1) throw std::runtime_error("build_killing_aggregation: k must be >= 1");
    for (long a : test_assignments)
        if (a < 0 || a >= k)
            throw std::runtime_error("build_killing_aggregation: assignment " + std::to_string(a) +
                                     " outside [0, " + std::to_string(k) + ")");

    std::vector<long> contrib = contributors(orig, mut);
    std::vector<char> is_contrib = detail::row_mask(contrib, n);

    std::vector<std::vector<long>> cluster_rows(static_cast<std::size_t>(k));
    for (long r = 0; r < n; ++r)
        cluster_rows[static_cast<std::size_t>(test_assignments[static_cast<std::size_t>(r)])].push_back(r);

    // density(K) = |Contrib within K| / |K|; memberless clusters rank as 0.
    std::vector<std::pair<double, long>> order;
    for (long c = 0; c < k; ++c) {
        const auto& rows = cluster_rows[static_cast<std::size_t>(c)];
        long hits = 0;
        for (long r : rows) hits += is_contrib[static_cast<std::size_t>(r)];
        double density = rows.empty() ? 0.0
                                      : static_cast<double>(hits) / static_cast<double>(rows.size());
        order.emplace_back(density, c);
    }
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    KillingAggregation agg;
    agg.mutant_id = mut.model_id;
    for (const auto& [density, c] : order) {
        agg.clusters.push_back(c);
        const auto& rows = cluster_rows[static_cast<std::size_t>(c)];
        agg.members.insert(agg.members.end(), rows.begin(), rows.end());
        if (agg.members.empty()) continue;  // kill check needs at least one input
        agg.verdict = is_killed(metric_on_subset(orig, agg.members),
                                metric_on_subset(mut, agg.members));
        if (agg.verdict.killed) {
            agg.killable = true;
            break;
        }
    }
    std::sort(agg.members.begin(), agg.members.end());
    agg.rho_k = n == 0 ? 1.0
                       : static_cast<double>(agg.members.size()) / static_cast<double>(n);
    if (!agg.members.empty()) {
        long hits = 0;
        for (long r : agg.members) hits += is_contrib[static_cast<std::size_t>(r)];
        agg.rho_c = static_cast<double>(hits) / static_cast<double>(agg.members.size());
    }
    return agg;
}

namespace detail {

// First `size` entries of a seeded partial Fisher-Yates pass over 0..n-1.
// mt19937_64 output is pinned by the standard, so the draw is identical on
// every platform; std::shuffle and uniform_int_distribution are not.
inline std::vector<long> sample_rows(long n, long size, std::mt19937_64& rng) {
    std::vector<long> ids(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
    for (long i = 0; i < size; ++i) {
        long j = i + static_cast<long>(rng() % static_cast<std::uint64_t>(n - i));
        std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
    }
    ids.resize(static_cast<std::size_t>(size));
    return ids;
}

}  // namespace detail

// R uniform without-replacement row selections of the aggregation's size;
// how often does chance alone kill the mutant, and how many contributors
// does chance capture?
inline BaselineResult random_baseline(long size, long R, const RunSet& orig, const RunSet& mut,
                                      std::uint64_t seed) {
    const long n = orig.n_inputs();
    if (size == 0) throw std::runtime_error("random_baseline: selection size must be positive");
    if (size < 0 || size > n)
        throw std::runtime_error("random_baseline: selection size " + std::to_string(size) +
                                 " exceeds test set of size " + std::to_string(n));
    if (R < 1) throw std::runtime_error("random_baseline: R must be >= 1");
    std::vector<long> contrib = contributors(orig, mut);
    std::vector<char> is_contrib = detail::row_mask(contrib, n);

    std::mt19937_64 rng(seed);
    long kills = 0;
    double contrib_fraction_sum = 0.0;
    for (long rep = 0; rep < R; ++rep) {
        std::vector<long> rows = detail::sample_rows(n, size, rng);
        if (is_killed(metric_on_subset(orig, rows), metric_on_subset(mut, rows)).killed) ++kills;
        long hits = 0;
        for (long r : rows) hits += is_contrib[static_cast<std::size_t>(r)];
        contrib_fraction_sum += static_cast<double>(hits) / static_cast<double>(size);
    }
    BaselineResult res;
    res.R = R;
    res.rho_d = static_cast<double>(kills) / static_cast<double>(R);
    res.rho_c_random = contrib_fraction_sum / static_cast<double>(R);
    res.seed = seed;
    return res;
}

struct ClusterStrength {
    long cluster = 0;
    double rho_a = 0.0;  // share of killable aggregations containing the cluster
};

// rho_a ranking over the killable aggregations, descending, ties by id.
inline std::vector<ClusterStrength> killing_strength(
    const std::vector<KillingAggregation>& aggregations) {
    long killable = 0;
    std::map<long, long> counts;
    for (const auto& agg : aggregations) {
        if (!agg.killable) continue;
        ++killable;
        for (long c : agg.clusters) ++counts[c];
    }
    if (killable == 0) throw std::runtime_error("killing_strength: no killable aggregations");
    std::vector<ClusterStrength> out;
    for (const auto& [c, cnt] : counts)
        out.push_back({c, static_cast<double>(cnt) / static_cast<double>(killable)});
    std::sort(out.begin(), out.end(), [](const ClusterStrength& a, const ClusterStrength& b) {
        if (a.rho_a != b.rho_a) return a.rho_a > b.rho_a;
        return a.cluster < b.cluster;
    });
    return out;
}

struct MutantAnalysis {
    std::string mutant_id;
    std::string op;             // mutation operator name
    std::string configuration;  // operator parameter setting
    RunSet runs;
    KillingAggregation aggregation;
};

struct OperatorKillSummary {
    std::string op;
    long configurations = 0;  // m
    double kill_half = 0.0;   // share of aggregations killing >= ceil(m/2) siblings
    double kill_full = 0.0;   // share of aggregations killing all m siblings
};

// Cross-configuration transfer per operator: every configuration's
// aggregation is replayed against every sibling mutant, itself included.
inline std::vector<OperatorKillSummary> kill_half_full(const RunSet& original,
                                                       const std::vector<MutantAnalysis>& mutants) {
    std::vector<std::string> op_order;
    std::map<std::string, std::vector<const MutantAnalysis*>> groups;
    for (const auto& m : mutants) {
        auto [it, fresh] = groups.try_emplace(m.op);
        if (fresh) op_order.push_back(m.op);
        it->second.push_back(&m);
    }
    std::vector<OperatorKillSummary> out;
    for (const auto& op : op_order) {
        const auto& group = groups[op];
        const long m = static_cast<long>(group.size());
        const long half = (m + 1) / 2;  // ceil(m/2)
        long half_hits = 0, full_hits = 0;
        for (const MutantAnalysis* owner : group) {
            const auto& rows = owner->aggregation.members;
            long kills = 0;
            for (const MutantAnalysis* sibling : group) {
                if (rows.empty()) break;
                if (is_killed(metric_on_subset(original, rows),
                              metric_on_subset(sibling->runs, rows))
                        .killed)
                    ++kills;
            }
            if (kills >= half) ++half_hits;
            if (kills == m) ++full_hits;
        }
        OperatorKillSummary s;
        s.op = op;
        s.configurations = m;
        s.kill_half = static_cast<double>(half_hits) / static_cast<double>(m);
        s.kill_full = static_cast<double>(full_hits) / static_cast<double>(m);
        out.push_back(s);
    }
    return out;
}

struct MutantManifestEntry {
    std::string mutant_id;
    std::string op;
    std::string configuration;
    std::filesystem::path predictions_path;  // resolved against the manifest directory
};

// Manifest CSV: mutant_id,operator,configuration,predictions_path.
inline std::vector<MutantManifestEntry> load_mutant_manifest(const std::filesystem::path& path) {
    std::string text = read_file(path);
    std::vector<MutantManifestEntry> out;
    std::size_t pos = 0;
    long line_no = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = detail::strip_cr(std::string_view(text).substr(
            pos, nl == std::string::npos ? std::string::npos : nl - pos));
        pos = nl == std::string::npos ? text.size() : nl + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "mutant_id,operator,configuration,predictions_path")
                throw std::runtime_error("mutant manifest " + path.string() +
                                         ": unexpected header '" + std::string(line) + "'");
            continue;
        }
        std::vector<std::string_view> parts = detail::split_char(line, ',');
        if (parts.size() != 4)
            throw std::runtime_error("mutant manifest " + path.string() + " line " +
                                     std::to_string(line_no) + ": expected 4 fields, got " +
                                     std::to_string(parts.size()));
        MutantManifestEntry e;
        e.mutant_id = std::string(parts[0]);
        e.op = std::string(parts[1]);
        e.configuration = std::string(parts[2]);
        std::filesystem::path p = std::string(parts[3]);
        e.predictions_path = p.is_absolute() ? p : path.parent_path() / p;
        out.push_back(std::move(e));
    }
    if (out.empty()) throw std::runtime_error("mutant manifest " + path.string() + ": no entries");
    return out;
}

// Report CSV: one row per mutant, cluster list ';'-joined in greedy order.
inline std::string mutation_report_csv(const std::vector<KillingAggregation>& aggregations,
                                       const std::vector<BaselineResult>& baselines) {
    if (aggregations.size() != baselines.size())
        throw std::runtime_error("mutation_report_csv: aggregation/baseline count mismatch");
    std::string out = "mutant,killable,rho_k,rho_c,rho_d,rho_c_random,clusters\n";
    for (std::size_t i = 0; i < aggregations.size(); ++i) {
        const auto& agg = aggregations[i];
        const auto& base = baselines[i];
        out += agg.mutant_id;
        out += agg.killable ? ",true," : ",false,";
        out += format_double(agg.rho_k) + "," + format_double(agg.rho_c) + "," +
               format_double(base.rho_d) + "," + format_double(base.rho_c_random) + ",";
        for (std::size_t j = 0; j < agg.clusters.size(); ++j) {
            if (j) out += ';';
            out += std::to_string(agg.clusters[j]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace topomap
