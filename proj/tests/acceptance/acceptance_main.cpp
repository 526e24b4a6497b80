// ============================================================================
// FILE: acceptance_main.cpp
//
// BRIEF: Release gate. Ten independent checks, one line of output each; the
// process exits non-zero if any fails. Checks 1 and 10 drive the installed
// CLI binary (path injected at compile time as TOPOMAP_CLI_PATH); the rest
// exercise the library against independent oracles and constructions.
// ============================================================================

#include <topomap/embedding.hpp>
#include <topomap/kmeans.hpp>
#include <topomap/kselect.hpp>
#include <topomap/mutation.hpp>
#include <topomap/pairwise.hpp>
#include <topomap/pipeline.hpp>
#include <topomap/stats.hpp>
#include <topomap/topograph.hpp>

#include "oracles.hpp"
#include "stats_oracle_table.hpp"
#include "support/mutation_fixtures.hpp"
#include "support/pipeline_fixtures.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace topomap;
namespace fs = std::filesystem;

namespace {

struct CheckResult {
    bool pass = false;
    std::string detail;
};

struct CmdResult {
    int exit_code = -1;
    std::string out;
};

CmdResult run_cmd(const std::string& cmd) {
    CmdResult res;
    std::string full = cmd + " 2>&1";
    FILE* p = popen(full.c_str(), "r");
    if (!p) return res;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof(buf), p)) > 0) res.out.append(buf, got);
    int rc = pclose(p);
    res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return res;
}

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// Deterministic uniform in [lo, hi) independent of distribution internals.
double uniform(std::mt19937_64& rng, double lo, double hi) {
    double u = std::ldexp(static_cast<double>(rng() >> 11), -53);
    return lo + u * (hi - lo);
}

fs::path scratch(const std::string& name) {
    fs::path d = fs::temp_directory_path() / "topomap_acceptance" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

// ----------------------------------------------------------------------------
// 1. Pairwise reference fixture through the CLI, each value within 1e-12,
//    under one second of wall time.
// ----------------------------------------------------------------------------
CheckResult check_cli_pair_fixture() {
    fs::path dir = scratch("pair_fixture");
    const std::vector<long> truth = {0, 1, 1, 0, 1, 0, 0, 2, 2, 2};
    const std::vector<long> pred = {0, 1, 2, 0, 1, 2, 2, 0, 2, 1};
    LabelFile tf, pf;
    tf.categorical = pf.categorical = true;
    tf.ids = truth;
    pf.ids = pred;
    save_label_csv(dir / "truth.csv", tf);
    save_label_csv(dir / "pred.csv", pf);

    double t0 = now_seconds();
    CmdResult r = run_cmd(std::string(TOPOMAP_CLI_PATH) + " eval-pair " +
                          (dir / "truth.csv").string() + " " + (dir / "pred.csv").string());
    double elapsed = now_seconds() - t0;
    if (r.exit_code != 0) return {false, "CLI exit " + std::to_string(r.exit_code)};

    std::map<std::string, double> vals;
    long min_a = -1, min_b = -1;
    double min_v = -1.0;
    std::istringstream in(r.out);
    std::string tag;
    while (in >> tag) {
        if (tag == "w_acc") {
            long a, b;
            std::string v;
            in >> a >> b >> v;
            if (v != "undefined")
                vals[std::to_string(a) + "," + std::to_string(b)] = std::stod(v);
        } else if (tag == "min") {
            in >> min_a >> min_b >> min_v;
        }
    }
    auto close = [&](const std::string& key, double want) {
        return vals.count(key) && std::abs(vals[key] - want) <= 1e-12;
    };
    bool ok = close("0,1", 1.0) && close("0,2", 0.5) && close("1,2", 7.0 / 12.0) &&
              min_a == 0 && min_b == 2 && std::abs(min_v - 0.5) <= 1e-12 && elapsed < 1.0;
    std::ostringstream d;
    d << "w_acc(0,1)=" << vals["0,1"] << " (0,2)=" << vals["0,2"] << " (1,2)=" << vals["1,2"]
      << ", min=(" << min_a << "," << min_b << "," << min_v << "), " << elapsed << "s";
    return {ok, d.str()};
}

// ----------------------------------------------------------------------------
// 2. Pairwise symmetry and range over 1,000 random vectors (k <= 6, n <= 200):
//    swapping the pair arguments changes nothing, defined values sit in [0,1].
// ----------------------------------------------------------------------------
CheckResult check_pair_symmetry() {
    std::mt19937_64 rng(4242);
    long checked = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const long k = 2 + static_cast<long>(rng() % 5);
        const std::size_t n = 1 + rng() % 200;
        std::vector<long> pred(n), truth(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = static_cast<long>(rng() % static_cast<unsigned long>(k));
            truth[i] = static_cast<long>(rng() % static_cast<unsigned long>(k));
        }
        for (long a = 0; a < k; ++a)
            for (long b = a + 1; b < k; ++b) {
                auto ab = weighted_pairwise_accuracy(pred, truth, a, b);
                auto ba = weighted_pairwise_accuracy(pred, truth, b, a);
                if (ab.has_value() != ba.has_value())
                    return {false, "definedness differs under argument swap"};
                if (!ab) continue;
                ++checked;
                if (*ab != *ba) return {false, "asymmetric value at rep " + std::to_string(rep)};
                if (*ab < 0.0 || *ab > 1.0)
                    return {false, "value outside [0,1]: " + std::to_string(*ab)};
            }
    }
    return {true, "1000 vectors, " + std::to_string(checked) + " defined pairs symmetric in [0,1]"};
}

// ----------------------------------------------------------------------------
// 3. K-means against brute force: 200 random instances with <= 8 points and
//    k = 2. Restarted fits reach the enumerated optimum in >= 95% of cases
//    and never beat it.
// ----------------------------------------------------------------------------
CheckResult check_kmeans_oracle() {
    std::mt19937_64 rng(911);
    int optimal = 0;
    for (int rep = 0; rep < 200; ++rep) {
        const long n = 2 + static_cast<long>(rng() % 7);
        Matrix pts(n, 2);
        for (long r = 0; r < n; ++r)
            for (long c = 0; c < 2; ++c) pts(r, c) = uniform(rng, -2.0, 2.0);
        double best = oracle::brute_force_kmeans2_inertia(pts);
        ClusterModel m = kmeans_fit(EmbeddedSet{pts, 2}, 2, 1000 + static_cast<std::uint64_t>(rep));
        double tol = 1e-9 * std::max(1.0, best);
        if (m.inertia < best - tol)
            return {false, "fit beat the enumerated optimum at rep " + std::to_string(rep)};
        if (std::abs(m.inertia - best) <= tol) ++optimal;
    }
    bool ok = optimal >= 190;
    return {ok, std::to_string(optimal) + "/200 instances at the brute-force optimum"};
}

// ----------------------------------------------------------------------------
// 4. PCA keeps a minimal component set: on 50 random full-rank 40x10 inputs
//    the kept ratios reach the 0.90 target and dropping the last kept
//    component falls below it.
// ----------------------------------------------------------------------------
CheckResult check_pca_minimality() {
    std::mt19937_64 rng(515);
    for (int rep = 0; rep < 50; ++rep) {
        Dataset ds;
        ds.features.resize(40, 10);
        for (long r = 0; r < 40; ++r) {
            for (long c = 0; c < 10; ++c) {
                // Box-Muller keeps the draw deterministic across platforms.
                double u1 = uniform(rng, 1e-12, 1.0), u2 = uniform(rng, 0.0, 1.0);
                double g = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
                ds.features(r, c) = g * (1.0 + 0.3 * static_cast<double>(c));
            }
            ds.labels.push_back(r % 2);
            ds.split.push_back(Split::train);
        }
        ds.n_classes = 2;
        EmbeddingModel model = fit_linear(ds, EmbeddingMethod::pca, 0.90);
        double kept = 0.0;
        for (double v : model.explained_variance_ratio) kept += v;
        if (kept < 0.90 - 1e-12)
            return {false, "kept ratio " + std::to_string(kept) + " below target at rep " +
                               std::to_string(rep)};
        if (model.explained_variance_ratio.size() > 1 &&
            kept - model.explained_variance_ratio.back() >= 0.90)
            return {false, "component set not minimal at rep " + std::to_string(rep)};
    }
    return {true, "50 random 40x10 inputs kept minimal component sets at 0.90"};
}

// ----------------------------------------------------------------------------
// 5. Cluster-count selection on three classes of three sub-blobs (~500
//    points): lands on nine clusters with accuracy >= 0.95, plateau
//    derivatives averaging < 0.001, under 30 seconds.
// ----------------------------------------------------------------------------
CheckResult check_k_selection() {
    double t0 = now_seconds();
    std::vector<Vector> centers;
    std::vector<long> cls;
    for (auto [mx, my] : {std::pair{0.0, 0.0}, std::pair{200.0, 0.0}, std::pair{0.0, 200.0}})
        for (auto [dx, dy] : {std::pair{0.0, 0.0}, std::pair{10.0, 0.0}, std::pair{0.0, 10.0}}) {
            Vector v(2);
            v << mx + dx, my + dy;
            centers.push_back(v);
            cls.push_back(static_cast<long>(centers.size() - 1) / 3);
        }
    std::vector<long> sub_train, sub_test;
    Matrix train = oracle::make_blobs(centers, 40, 0.4, 2026, &sub_train);
    Matrix test = oracle::make_blobs(centers, 16, 0.4, 2027, &sub_test);
    std::vector<long> y_train, y_test;
    for (long s : sub_train) y_train.push_back(cls[static_cast<std::size_t>(s)]);
    for (long s : sub_test) y_test.push_back(cls[static_cast<std::size_t>(s)]);

    KSelectionTrace t = select_k(EmbeddedSet{train, 2}, EmbeddedSet{test, 2}, y_train, y_test, 3,
                                 "kmeans", 17);
    double elapsed = now_seconds() - t0;
    double tail = 0.0;
    std::size_t window = std::min<std::size_t>(2, t.iterations.size());
    for (std::size_t i = t.iterations.size() - window; i < t.iterations.size(); ++i)
        tail += std::abs(t.iterations[i].derivative);
    tail /= static_cast<double>(window);

    bool ok = t.k_star == 9 && !t.iterations.empty() && t.iterations.back().accuracy >= 0.95 &&
              tail < 0.001 && elapsed < 30.0;
    std::ostringstream d;
    d << "k_star=" << t.k_star << ", accuracy=" << t.iterations.back().accuracy
      << ", plateau derivative avg=" << tail << ", " << elapsed << "s on "
      << train.rows() + test.rows() << " points";
    return {ok, d.str()};
}

// ----------------------------------------------------------------------------
// 6. Kill verdicts against the frozen rank-test and effect-size table
//    (p within 1e-6, d within 1e-9), including the significant-but-small-
//    effect gate that must not kill.
// ----------------------------------------------------------------------------
CheckResult check_stats_oracle() {
    bool saw_small_d_gate = false, saw_large_p_gate = false, saw_kill = false;
    for (const auto& c : stats_oracle::cases()) {
        KillVerdict v = is_killed(c.orig, c.mut);
        if (std::isinf(c.expected_d)) {
            if (!std::isinf(v.d) || (v.d > 0) != (c.expected_d > 0))
                return {false, c.name + ": expected infinite d"};
        } else if (std::abs(v.d - c.expected_d) > 1e-9) {
            return {false, c.name + ": d off by " + std::to_string(v.d - c.expected_d)};
        }
        if (std::abs(v.p_value - c.expected_p) > 1e-6)
            return {false, c.name + ": p off by " + std::to_string(v.p_value - c.expected_p)};
        if (v.killed != c.expected_killed) return {false, c.name + ": verdict flipped"};
        if (v.p_value < 0.05 && std::abs(v.d) < 0.5) saw_small_d_gate = true;
        if (v.p_value >= 0.05 && std::abs(v.d) >= 0.5) saw_large_p_gate = true;
        if (v.killed) saw_kill = true;
    }
    if (!saw_small_d_gate) return {false, "table never hit the small-effect gate"};
    if (!saw_large_p_gate) return {false, "table never hit the insignificance gate"};
    if (!saw_kill) return {false, "table never killed"};
    return {true, std::to_string(stats_oracle::cases().size()) +
                      " frozen cases matched, both rejection gates covered"};
}

// ----------------------------------------------------------------------------
// 7. Greedy minimality across a 50-mutant synthetic suite: every killable
//    aggregation stops killing when its last-added cluster is removed.
// ----------------------------------------------------------------------------
CheckResult check_greedy_minimality() {
    fixtures::MutantSuite suite = fixtures::mutant_suite(2026, 50);
    long killable = 0, minimal = 0;
    for (const RunSet& mut : suite.mutants) {
        KillingAggregation agg =
            build_killing_aggregation(suite.assignments, suite.k, suite.orig, mut);
        if (!agg.killable) continue;
        ++killable;
        std::set<long> prefix(agg.clusters.begin(), agg.clusters.end() - 1);
        std::vector<long> rows;
        for (std::size_t r = 0; r < suite.assignments.size(); ++r)
            if (prefix.count(suite.assignments[r])) rows.push_back(static_cast<long>(r));
        if (rows.empty()) {
            ++minimal;  // nothing left to test against; the trimmed set cannot kill
            continue;
        }
        KillVerdict v = is_killed(metric_on_subset(suite.orig, rows), metric_on_subset(mut, rows));
        if (!v.killed) ++minimal;
    }
    bool ok = killable > 0 && minimal == killable;
    return {ok, std::to_string(minimal) + "/" + std::to_string(killable) +
                    " killable aggregations shrink-minimal out of 50 mutants"};
}

// ----------------------------------------------------------------------------
// 8. Aggregation beats random selection at desk scale: contributors planted
//    in 2 of 10 clusters at 10x background density kill on every seed, while
//    equal-size random row draws kill at most half the time (R = 10). The
//    full-scale magnitudes reported for real subjects are not reproducible
//    at this size and serve only as directional reference.
// ----------------------------------------------------------------------------
CheckResult check_planted_dominance() {
    double worst_rho_d = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        fixtures::PlantedFixture fx = fixtures::planted_fixture(seed);
        KillingAggregation agg = build_killing_aggregation(fx.assignments, fx.k, fx.orig, fx.mut);
        if (!agg.killable) return {false, "planted mutant survived at seed " + std::to_string(seed)};
        std::vector<long> want = {fx.planted_lo, fx.planted_hi};
        if (agg.clusters.size() != 2 ||
            std::set<long>(agg.clusters.begin(), agg.clusters.end()) !=
                std::set<long>(want.begin(), want.end()))
            return {false, "aggregation missed the planted pair at seed " + std::to_string(seed)};
        BaselineResult base = random_baseline(static_cast<long>(agg.members.size()), 10, fx.orig,
                                              fx.mut, seed * 31 + 7);
        if (base.rho_d > 0.5)
            return {false, "random baseline killed too often at seed " + std::to_string(seed) +
                               ": rho_d=" + std::to_string(base.rho_d)};
        worst_rho_d = std::max(worst_rho_d, base.rho_d);
    }
    std::ostringstream d;
    d << "10/10 seeds killed by the planted pair; worst random rho_d=" << worst_rho_d
      << " (<= 0.5)";
    return {true, d.str()};
}

// ----------------------------------------------------------------------------
// 9. Pruned centroid graphs on 100 random sets (k <= 15): connected, contain
//    an independently computed MST, and carry no edge above the longest MST
//    edge.
// ----------------------------------------------------------------------------
CheckResult check_graph_pruning() {
    std::mt19937_64 rng(606);
    for (int rep = 0; rep < 100; ++rep) {
        const long k = 2 + static_cast<long>(rng() % 14);
        ClusterModel model;
        model.method = "kmeans";
        model.k = k;
        model.centroids.resize(k, 3);
        for (long r = 0; r < k; ++r)
            for (long c = 0; c < 3; ++c) model.centroids(r, c) = uniform(rng, -5.0, 5.0);
        for (long r = 0; r < k; ++r) model.assignments.push_back(r);
        TopoGraph g = build_topograph(model);

        std::vector<long> parent(static_cast<std::size_t>(k));
        for (long i = 0; i < k; ++i) parent[static_cast<std::size_t>(i)] = i;
        std::function<long(long)> find = [&](long x) {
            while (parent[static_cast<std::size_t>(x)] != x) {
                parent[static_cast<std::size_t>(x)] =
                    parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
                x = parent[static_cast<std::size_t>(x)];
            }
            return x;
        };
        std::set<std::pair<long, long>> present;
        for (const TopoEdge& e : g.edges) {
            if (e.weight > g.max_mst_edge + 1e-12)
                return {false, "edge above the longest MST edge at rep " + std::to_string(rep)};
            parent[static_cast<std::size_t>(find(e.a))] = find(e.b);
            present.insert({e.a, e.b});
        }
        for (long v = 1; v < k; ++v)
            if (find(v) != find(0))
                return {false, "pruned graph disconnected at rep " + std::to_string(rep)};

        Matrix dist(k, k);
        for (long a = 0; a < k; ++a)
            for (long b = 0; b < k; ++b)
                dist(a, b) = (model.centroids.row(a) - model.centroids.row(b)).norm();
        for (const oracle::MstEdge& e : oracle::prim_mst(dist))
            if (!present.count({e.a, e.b}))
                return {false, "oracle MST edge missing at rep " + std::to_string(rep)};
    }
    return {true, "100 random centroid sets: connected, MST-containing, weight-capped"};
}

// ----------------------------------------------------------------------------
// 10. End-to-end determinism through the CLI: map then mutate twice on the
//     same config produce byte-identical summary files, within five minutes.
// ----------------------------------------------------------------------------
CheckResult check_cli_determinism() {
    double t0 = now_seconds();
    fs::path dir = scratch("end_to_end");
    Dataset ds = fixtures::blob_dataset(90, 7);
    save_dataset(dir / "blobs.json", ds);
    std::vector<double> truth = fixtures::test_truth_values(ds);
    save_tmx(dir / "orig.tmx", fixtures::constant_runs(truth, 4));
    std::vector<double> wrong = truth;
    for (double& v : wrong) v = v == 2.0 ? 0.0 : v + 1.0;
    save_tmx(dir / "wrong.tmx", fixtures::constant_runs(wrong, 4));
    fixtures::write_mutant_manifest(dir / "mutants.csv",
                                    {{"m_wrong", "op_flip", "cfg_a", "wrong.tmx"},
                                     {"m_self", "op_noop", "cfg_a", "orig.tmx"}});
    nlohmann::json j;
    j["dataset"] = "blobs.json";
    j["seed"] = 7;
    j["out"] = "artifacts";
    j["candidates"] = nlohmann::json::array();
    j["candidates"].push_back(
        {{"embedding", {{"method", "pca"}, {"variance_target", 0.95}}},
         {"clustering", {{"method", "kmeans"}, {"k", 3}}}});
    j["mutation"] = {{"original", "orig.tmx"}, {"mutants", "mutants.csv"}, {"baseline_R", 10}};
    fixtures::write_config(dir, j);

    const std::vector<std::string> tracked = {
        "summary.csv",          "map/winner.json",           "map/assignments.csv",
        "map/report.json",      "mutation/report.csv",       "mutation/strength.csv",
        "mutation/kill_half_full.csv", "graph/map.gexf",     "graph/map.dot"};
    auto run_once = [&]() -> std::map<std::string, std::string> {
        std::string cli = std::string(TOPOMAP_CLI_PATH);
        std::string cfg = (dir / "run.json").string();
        CmdResult m = run_cmd(cli + " map --config " + cfg);
        if (m.exit_code != 0) return {};
        CmdResult mu = run_cmd(cli + " mutate --config " + cfg);
        if (mu.exit_code != 0) return {};
        std::map<std::string, std::string> snap;
        for (const std::string& rel : tracked) snap[rel] = read_file(dir / "artifacts" / rel);
        return snap;
    };

    auto first = run_once();
    if (first.empty()) return {false, "first CLI run failed"};
    fs::remove_all(dir / "artifacts");
    auto second = run_once();
    if (second.empty()) return {false, "second CLI run failed"};
    double elapsed = now_seconds() - t0;
    for (const std::string& rel : tracked)
        if (first.at(rel) != second.at(rel)) return {false, rel + " differs between runs"};
    bool ok = elapsed < 300.0;
    return {ok, std::to_string(tracked.size()) + " summary files byte-identical across reruns, " +
                    std::to_string(elapsed) + "s"};
}

}  // namespace

int main() {
    struct Entry {
        const char* label;
        CheckResult (*fn)();
    };
    const Entry checks[] = {
        {"pair accuracy reference fixture via CLI", check_cli_pair_fixture},
        {"pairwise symmetry and range", check_pair_symmetry},
        {"k-means matches brute force", check_kmeans_oracle},
        {"variance-minimal component retention", check_pca_minimality},
        {"cluster-count selection on planted sub-blobs", check_k_selection},
        {"kill verdicts match the frozen statistics table", check_stats_oracle},
        {"greedy aggregations are shrink-minimal", check_greedy_minimality},
        {"planted aggregation beats random selection", check_planted_dominance},
        {"pruned centroid graphs stay MST-faithful", check_graph_pruning},
        {"end-to-end CLI determinism", check_cli_determinism},
    };
    int failures = 0;
    int idx = 0;
    for (const Entry& e : checks) {
        ++idx;
        CheckResult r = e.fn();
        std::cout << (r.pass ? "PASS" : "FAIL") << " " << idx << " " << e.label << ": " << r.detail
                  << "\n";
        if (!r.pass) ++failures;
    }
    if (failures) {
        std::cout << failures << " of 10 checks failed\n";
        return 1;
    }
    std::cout << "all 10 checks passed\n";
    return 0;
}
