#pragma once

// ============================================================================
// FILE: pipeline.hpp
//
// BRIEF: Run-configuration parsing and the two pipelines behind the CLI:
// map generation (per-candidate k resolution, evaluation, selection, artifact
// persistence) and mutation evaluation (run sets, aggregations, baselines,
// strength tables, graph export). Partial failures are isolated per candidate
// and per mutant; every write is atomic and deterministic for a fixed config.
//
// Artifact layout under the output directory:
//   summary.csv                          candidate ranking
//   map/winner.json                      selected configuration
//   map/report.json|.pairwise.tmx        winning evaluation report
//   map/model.*                          winning cluster model (train rows)
//   map/assignments.csv                  cluster id per dataset row
//   map/classifier.*                     pseudo-label classifier
//   map/embedded.tmx                     embedded feature matrix
//   map/kselect_<i>.csv                  Algorithm-1 traces where k was unset
//   map/candidates/candidate_<i>.*       every candidate report or error
//   mutation/report.csv                  per-mutant kill metrics
//   mutation/strength.csv                per-cluster rho_a
//   mutation/kill_half_full.csv          per-operator transfer rates
//   mutation/errors.csv                  per-mutant failures, when any
//   graph/map.gexf, graph/map.dot        pruned centroid graph
// ============================================================================

#include <topomap/dataset.hpp>
#include <topomap/evaluator.hpp>
#include <topomap/kselect.hpp>
#include <topomap/mutation.hpp>
#include <topomap/runset.hpp>
#include <topomap/topograph.hpp>

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace topomap {

// Configuration or referenced-input problems; the CLI maps these to exit 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MutationConfig {
    bool present = false;
    std::filesystem::path original;  // predictions TMX of the unmutated model
    std::filesystem::path mutants;   // manifest CSV
    double tau = 0.0;                // regression kill threshold
    bool tau_set = false;
    long baseline_R = 10;
};

struct RunConfig {
    std::filesystem::path dataset;
    std::filesystem::path out = "artifacts";
    std::uint64_t seed = 0;
    long jobs = 1;
    std::vector<ClusteringConfiguration> candidates;  // k == 0 means run Algorithm 1
    MutationConfig mutation;
};

// Command-line values that take precedence over the config file.
struct ConfigOverrides {
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
    std::optional<long> jobs;
};

namespace detail {

inline void require_exists(const std::filesystem::path& p, const std::string& what) {
    if (!std::filesystem::exists(p))
        throw ValidationError(what + " does not exist: " + p.string());
}

inline EmbeddingSpec parse_embedding_spec(const nlohmann::json& j,
                                          const std::filesystem::path& base) {
    if (!j.contains("method")) throw ValidationError("candidate embedding needs a method");
    EmbeddingSpec spec;
    try {
        spec.method = embedding_method_from(j.at("method").get<std::string>());
    } catch (const std::exception& ex) {
        throw ValidationError(ex.what());
    }
    if (j.contains("variance_target")) spec.variance_target = j.at("variance_target").get<double>();
    if (j.contains("out_dim")) spec.tsne_out_dim = j.at("out_dim").get<long>();
    if (j.contains("perplexity")) spec.tsne_perplexity = j.at("perplexity").get<double>();
    if (j.contains("iterations")) spec.tsne_iterations = j.at("iterations").get<long>();
    if (spec.method == EmbeddingMethod::external) {
        if (!j.contains("path"))
            throw ValidationError("external embedding candidate needs a path");
        std::filesystem::path p = j.at("path").get<std::string>();
        if (!p.is_absolute()) p = base / p;
        require_exists(p, "external embedding");
        spec.external_path = p.string();
    }
    return spec;
}

inline ClusteringSpec parse_clustering_spec(const nlohmann::json& j) {
    ClusteringSpec spec;
    if (!j.contains("method")) throw ValidationError("candidate clustering needs a method");
    spec.method = j.at("method").get<std::string>();
    if (spec.method != "kmeans" && spec.method != "birch")
        throw ValidationError("unknown clustering method '" + spec.method +
                              "' (expected kmeans or birch)");
    if (j.contains("k")) {
        spec.k = j.at("k").get<long>();
        if (spec.k < 2)
            throw ValidationError("candidate k must be >= 2 when given (omit k to select it)");
    }
    if (j.contains("branching")) spec.branching = j.at("branching").get<long>();
    return spec;
}

inline ClassifierSpec parse_classifier_spec(const nlohmann::json& j) {
    ClassifierSpec spec;
    if (j.contains("hidden")) spec.hidden_layers = j.at("hidden").get<std::vector<long>>();
    if (j.contains("epochs")) spec.epochs = j.at("epochs").get<int>();
    if (j.contains("batch")) spec.batch = j.at("batch").get<long>();
    if (j.contains("learning_rate")) spec.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("early_stop_patience"))
        spec.early_stop_patience = j.at("early_stop_patience").get<int>();
    return spec;
}

// Index pool: fn(i) for i in [0, count), at most `jobs` worker threads.
// fn must not throw; store failures per index instead.
template <typename Fn>
inline void run_jobs(long count, long jobs, Fn&& fn) {
    jobs = std::max(1L, std::min(jobs, count));
    if (jobs <= 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    for (long t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (long i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

inline std::vector<long> read_assignment_csv(const std::filesystem::path& path) {
    std::string text = read_file(path);
    std::vector<long> out;
    std::size_t pos = 0;
    long line_no = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = strip_cr(std::string_view(text).substr(
            pos, nl == std::string::npos ? std::string::npos : nl - pos));
        pos = nl == std::string::npos ? text.size() : nl + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "row,cluster")
                throw std::runtime_error(path.string() + ": unexpected header '" +
                                         std::string(line) + "'");
            continue;
        }
        auto parts = split_char(line, ',');
        if (parts.size() != 2)
            throw std::runtime_error(path.string() + " line " + std::to_string(line_no) +
                                     ": expected 2 fields");
        long row = parse_long(parts[0], path.string());
        if (row != static_cast<long>(out.size()))
            throw std::runtime_error(path.string() + ": row ids must be dense from 0");
        out.push_back(parse_long(parts[1], path.string()));
    }
    return out;
}

inline void write_assignment_csv(const std::filesystem::path& path,
                                 const std::vector<long>& assignments) {
    std::string out = "row,cluster\n";
    for (std::size_t r = 0; r < assignments.size(); ++r)
        out += std::to_string(r) + "," + std::to_string(assignments[r]) + "\n";
    atomic_write_file(path, out);
}

}  // namespace detail

inline RunConfig parse_run_config(const std::filesystem::path& path,
                                  const ConfigOverrides& overrides = {}) {
    detail::require_exists(path, "run config");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const std::exception& ex) {
        throw ValidationError("run config " + path.string() + ": " + ex.what());
    }
    std::filesystem::path base = std::filesystem::absolute(path).parent_path();
    auto resolve = [&](const std::string& rel) {
        std::filesystem::path p = rel;
        return p.is_absolute() ? p : base / p;
    };

    RunConfig cfg;
    try {
        if (!j.contains("dataset")) throw ValidationError("run config needs a dataset path");
        cfg.dataset = resolve(j.at("dataset").get<std::string>());

        if (overrides.seed) {
            cfg.seed = *overrides.seed;
        } else if (j.contains("seed")) {
            cfg.seed = j.at("seed").get<std::uint64_t>();
        } else {
            throw ValidationError("run config needs an explicit seed (field or --seed)");
        }
        if (overrides.out) {
            cfg.out = *overrides.out;
        } else if (j.contains("out")) {
            cfg.out = resolve(j.at("out").get<std::string>());
        }
        if (overrides.jobs) {
            cfg.jobs = *overrides.jobs;
        } else if (j.contains("jobs")) {
            cfg.jobs = j.at("jobs").get<long>();
        }
        if (cfg.jobs < 1) throw ValidationError("jobs must be >= 1");

        ClassifierSpec classifier;
        if (j.contains("classifier")) classifier = detail::parse_classifier_spec(j.at("classifier"));

        for (const auto& cj : j.value("candidates", nlohmann::json::array())) {
            ClusteringConfiguration cand;
            if (!cj.contains("embedding") || !cj.contains("clustering"))
                throw ValidationError("every candidate needs embedding and clustering sections");
            cand.embedding = detail::parse_embedding_spec(cj.at("embedding"), base);
            cand.clustering = detail::parse_clustering_spec(cj.at("clustering"));
            cand.classifier = classifier;
            cand.seed = cj.contains("seed") ? cj.at("seed").get<std::uint64_t>() : cfg.seed;
            cfg.candidates.push_back(std::move(cand));
        }

        if (j.contains("mutation")) {
            const auto& mj = j.at("mutation");
            cfg.mutation.present = true;
            if (!mj.contains("original") || !mj.contains("mutants"))
                throw ValidationError("mutation section needs original and mutants paths");
            cfg.mutation.original = resolve(mj.at("original").get<std::string>());
            cfg.mutation.mutants = resolve(mj.at("mutants").get<std::string>());
            if (mj.contains("tau")) {
                cfg.mutation.tau = mj.at("tau").get<double>();
                cfg.mutation.tau_set = true;
            }
            if (mj.contains("baseline_R")) cfg.mutation.baseline_R = mj.at("baseline_R").get<long>();
            if (cfg.mutation.baseline_R < 1) throw ValidationError("baseline_R must be >= 1");
        }
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& ex) {
        throw ValidationError("run config " + path.string() + ": " + ex.what());
    }

    detail::require_exists(cfg.dataset, "dataset manifest");
    if (cfg.mutation.present) {
        detail::require_exists(cfg.mutation.original, "original predictions file");
        detail::require_exists(cfg.mutation.mutants, "mutant manifest");
    }
    return cfg;
}

// ----------------------------------------------------------------------------
// Map pipeline.
// ----------------------------------------------------------------------------

struct MapResult {
    SelectionResult selection;
    std::vector<std::string> kselect_csv;  // per candidate, empty when k was explicit
    bool all_failed = false;
    std::filesystem::path out;
};

namespace detail {

// Algorithm-1 resolution for one candidate with unset k.
inline KSelectionTrace resolve_k(const ClusteringConfiguration& cand, const Dataset& ds) {
    if (ds.task != Task::classification)
        throw std::runtime_error("k selection needs categorical labels; set k explicitly");
    EmbeddedSet all = embed_dataset(ds, cand.embedding, cand.seed);
    std::vector<long> train_rows = ds.rows_with(Split::train);
    std::vector<long> test_rows = ds.rows_with(Split::test);
    EmbeddedSet e_train{take_rows(all.matrix, train_rows), all.out_dim};
    EmbeddedSet e_test{take_rows(all.matrix, test_rows), all.out_dim};
    std::vector<long> y_train, y_test;
    for (long r : train_rows) y_train.push_back(ds.labels[static_cast<std::size_t>(r)]);
    for (long r : test_rows) y_test.push_back(ds.labels[static_cast<std::size_t>(r)]);
    KSelectOptions opt;
    opt.branching = cand.clustering.branching;
    return select_k(e_train, e_test, y_train, y_test, ds.n_classes, cand.clustering.method,
                    cand.seed, opt);
}

}  // namespace detail

inline MapResult cmd_map(const RunConfig& cfg) {
    if (cfg.candidates.empty()) throw ValidationError("map needs at least one candidate");
    Dataset ds = load_dataset(cfg.dataset);
    const long n = static_cast<long>(cfg.candidates.size());

    std::vector<ClusteringConfiguration> resolved = cfg.candidates;
    std::vector<std::string> resolve_errors(static_cast<std::size_t>(n));
    std::vector<std::string> kselect_csv(static_cast<std::size_t>(n));
    detail::run_jobs(n, cfg.jobs, [&](long i) {
        auto& cand = resolved[static_cast<std::size_t>(i)];
        if (cand.clustering.k != 0) return;
        try {
            KSelectionTrace trace = detail::resolve_k(cand, ds);
            cand.clustering.k = trace.k_star;
            kselect_csv[static_cast<std::size_t>(i)] = trace_to_csv(trace);
        } catch (const std::exception& ex) {
            resolve_errors[static_cast<std::size_t>(i)] = ex.what();
        }
    });

    std::vector<EvaluationOutcome> outcomes(static_cast<std::size_t>(n));
    detail::run_jobs(n, cfg.jobs, [&](long i) {
        auto& slot = outcomes[static_cast<std::size_t>(i)];
        const auto& cand = resolved[static_cast<std::size_t>(i)];
        if (!resolve_errors[static_cast<std::size_t>(i)].empty()) {
            slot.config_id = cand.id();
            slot.failed = true;
            slot.error = resolve_errors[static_cast<std::size_t>(i)];
            return;
        }
        try {
            slot = evaluate_configuration(cand, ds);
        } catch (const std::exception& ex) {
            slot = EvaluationOutcome{};
            slot.config_id = cand.id();
            slot.failed = true;
            slot.error = ex.what();
        }
    });

    MapResult res;
    res.out = cfg.out;
    res.kselect_csv = kselect_csv;
    res.selection.outcomes = std::move(outcomes);
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < res.selection.outcomes.size(); ++i) {
        const auto& o = res.selection.outcomes[i];
        if (!o.failed && (!best || o.report.min_pair.value >
                                       res.selection.outcomes[*best].report.min_pair.value))
            best = i;
    }
    res.all_failed = !best.has_value();
    res.selection.best_index = best.value_or(0);

    namespace fs = std::filesystem;
    fs::create_directories(cfg.out / "map" / "candidates");
    atomic_write_file(cfg.out / "summary.csv", selection_summary_csv(res.selection));
    for (long i = 0; i < n; ++i) {
        const auto& o = res.selection.outcomes[static_cast<std::size_t>(i)];
        fs::path prefix = cfg.out / "map" / "candidates" / ("candidate_" + std::to_string(i));
        if (o.failed)
            atomic_write_file(prefix.string() + ".error.txt", o.error + "\n");
        else
            save_report(prefix, o.report);
        if (!kselect_csv[static_cast<std::size_t>(i)].empty())
            atomic_write_file(cfg.out / "map" / ("kselect_" + std::to_string(i) + ".csv"),
                              kselect_csv[static_cast<std::size_t>(i)]);
    }

    if (!res.all_failed) {
        const auto& win = res.selection.outcomes[res.selection.best_index];
        const auto& cand = resolved[res.selection.best_index];
        save_report(cfg.out / "map" / "report", win.report);
        save_cluster_model(cfg.out / "map" / "model", win.clusters);
        save_classifier(cfg.out / "map" / "classifier", win.classifier);
        save_tmx(cfg.out / "map" / "embedded.tmx", win.embedded.matrix);
        detail::write_assignment_csv(cfg.out / "map" / "assignments.csv", win.pseudo_labels);

        nlohmann::json wj;
        wj["config_id"] = win.config_id;
        wj["candidate_index"] = res.selection.best_index;
        wj["seed"] = cand.seed;
        wj["k"] = cand.clustering.k;
        wj["clustering_method"] = cand.clustering.method;
        wj["embedding_method"] = embedding_method_name(cand.embedding.method);
        wj["out_dim"] = win.embedded.out_dim;
        wj["min_pair"] = {{"a", win.report.min_pair.a},
                          {"b", win.report.min_pair.b},
                          {"value", win.report.min_pair.value}};
        if (win.embedding_model) {
            wj["explained_variance_ratio"] = win.embedding_model->explained_variance_ratio;
            wj["target_unreached"] = win.embedding_model->target_unreached;
        }
        atomic_write_file(cfg.out / "map" / "winner.json", wj.dump(2) + "\n");
    }
    return res;
}

// ----------------------------------------------------------------------------
// Mutation pipeline.
// ----------------------------------------------------------------------------

struct MutantOutcome {
    MutantManifestEntry entry;
    bool failed = false;
    std::string error;
    RunSet runs;
    KillingAggregation aggregation;
    BaselineResult baseline;
};

struct MutateResult {
    std::vector<MutantOutcome> mutants;  // manifest order
    std::vector<ClusterStrength> strengths;
    std::vector<OperatorKillSummary> operators;
    bool any_failed = false;
    std::filesystem::path out;
};

inline MutateResult cmd_mutate(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    if (!cfg.mutation.present)
        throw ValidationError("run config has no mutation section");
    fs::path map_dir = cfg.out / "map";
    if (!fs::exists(map_dir / "winner.json") || !fs::exists(map_dir / "assignments.csv"))
        throw ValidationError("map artifacts missing under " + map_dir.string() +
                              " (run the map command first)");

    Dataset ds = load_dataset(cfg.dataset);
    ClusterModel model = load_cluster_model(map_dir / "model");
    std::vector<long> all_assignments = detail::read_assignment_csv(map_dir / "assignments.csv");
    if (static_cast<long>(all_assignments.size()) != ds.rows())
        throw ValidationError("assignment file covers " + std::to_string(all_assignments.size()) +
                              " rows, dataset has " + std::to_string(ds.rows()));

    std::vector<long> test_rows = ds.rows_with(Split::test);
    std::vector<long> test_assignments;
    for (long r : test_rows)
        test_assignments.push_back(all_assignments[static_cast<std::size_t>(r)]);

    RunSet original;
    if (ds.task == Task::classification) {
        std::vector<long> truth;
        for (long r : test_rows) truth.push_back(ds.labels[static_cast<std::size_t>(r)]);
        original = build_runset(cfg.mutation.original, truth, "original");
    } else {
        if (!cfg.mutation.tau_set)
            throw ValidationError("regression mutation analysis needs tau in the config");
        Matrix truth(static_cast<long>(test_rows.size()), ds.y.cols());
        for (std::size_t i = 0; i < test_rows.size(); ++i)
            truth.row(static_cast<long>(i)) = ds.y.row(test_rows[i]);
        original = build_runset(cfg.mutation.original, truth, cfg.mutation.tau, "original");
    }

    std::vector<MutantManifestEntry> entries = load_mutant_manifest(cfg.mutation.mutants);
    const long n = static_cast<long>(entries.size());

    MutateResult res;
    res.out = cfg.out;
    res.mutants.resize(static_cast<std::size_t>(n));
    detail::run_jobs(n, cfg.jobs, [&](long i) {
        MutantOutcome& slot = res.mutants[static_cast<std::size_t>(i)];
        slot.entry = entries[static_cast<std::size_t>(i)];
        try {
            if (ds.task == Task::classification) {
                std::vector<long> truth;
                for (long r : test_rows) truth.push_back(ds.labels[static_cast<std::size_t>(r)]);
                slot.runs = build_runset(slot.entry.predictions_path, truth, slot.entry.mutant_id);
            } else {
                slot.runs = build_runset(slot.entry.predictions_path, original.truth,
                                         cfg.mutation.tau, slot.entry.mutant_id);
            }
            slot.aggregation =
                build_killing_aggregation(test_assignments, model.k, original, slot.runs);
            slot.baseline = random_baseline(
                static_cast<long>(slot.aggregation.members.size()), cfg.mutation.baseline_R,
                original, slot.runs, detail::derive_seed(cfg.seed, 9000 + i));
        } catch (const std::exception& ex) {
            slot.failed = true;
            slot.error = ex.what();
        }
    });

    std::vector<KillingAggregation> aggs;
    std::vector<BaselineResult> baselines;
    std::vector<MutantAnalysis> analyses;
    for (const MutantOutcome& m : res.mutants) {
        if (m.failed) {
            res.any_failed = true;
            continue;
        }
        aggs.push_back(m.aggregation);
        baselines.push_back(m.baseline);
        MutantAnalysis a;
        a.mutant_id = m.entry.mutant_id;
        a.op = m.entry.op;
        a.configuration = m.entry.configuration;
        a.runs = m.runs;
        a.aggregation = m.aggregation;
        analyses.push_back(std::move(a));
    }

    bool any_killable = false;
    for (const auto& a : aggs) any_killable |= a.killable;
    if (any_killable) res.strengths = killing_strength(aggs);
    if (!analyses.empty()) res.operators = kill_half_full(original, analyses);

    fs::create_directories(cfg.out / "mutation");
    fs::create_directories(cfg.out / "graph");
    atomic_write_file(cfg.out / "mutation" / "report.csv", mutation_report_csv(aggs, baselines));

    std::string strength = "cluster,rho_a\n";
    for (const auto& s : res.strengths)
        strength += std::to_string(s.cluster) + "," + format_double(s.rho_a) + "\n";
    atomic_write_file(cfg.out / "mutation" / "strength.csv", strength);

    std::string khf = "operator,configurations,kill_half,kill_full\n";
    for (const auto& o : res.operators)
        khf += o.op + "," + std::to_string(o.configurations) + "," + format_double(o.kill_half) +
               "," + format_double(o.kill_full) + "\n";
    atomic_write_file(cfg.out / "mutation" / "kill_half_full.csv", khf);

    if (res.any_failed) {
        std::string errs = "mutant_id,error\n";
        for (const MutantOutcome& m : res.mutants)
            if (m.failed) {
                std::string msg = m.error;
                for (char& c : msg)
                    if (c == ',' || c == '\n') c = ';';
                errs += m.entry.mutant_id + "," + msg + "\n";
            }
        atomic_write_file(cfg.out / "mutation" / "errors.csv", errs);
    }

    // Graph over the winning map's centroids; node sizes count every dataset
    // row, strengths carry rho_a where known.
    std::vector<double> strengths(static_cast<std::size_t>(model.k), 0.0);
    for (const auto& s : res.strengths)
        if (s.cluster >= 0 && s.cluster < model.k)
            strengths[static_cast<std::size_t>(s.cluster)] = s.rho_a;
    ClusterModel graph_model = model;
    graph_model.assignments = all_assignments;
    TopoGraph g = build_topograph(graph_model, strengths);
    export_graph(g, GraphFormat::gexf, cfg.out / "graph" / "map.gexf");
    export_graph(g, GraphFormat::dot, cfg.out / "graph" / "map.dot");
    return res;
}

// ----------------------------------------------------------------------------
// Standalone helpers behind the remaining subcommands.
// ----------------------------------------------------------------------------

inline KSelectionTrace cmd_select_k(const RunConfig& cfg, std::size_t candidate_index = 0) {
    if (candidate_index >= cfg.candidates.size())
        throw ValidationError("candidate index " + std::to_string(candidate_index) +
                              " out of range (" + std::to_string(cfg.candidates.size()) +
                              " candidates)");
    Dataset ds = load_dataset(cfg.dataset);
    KSelectionTrace trace;
    try {
        trace = detail::resolve_k(cfg.candidates[candidate_index], ds);
    } catch (const std::exception& ex) {
        throw ValidationError(ex.what());
    }
    std::filesystem::create_directories(cfg.out / "map");
    atomic_write_file(cfg.out / "map" / "kselect.csv", trace_to_csv(trace));
    return trace;
}

inline std::vector<std::filesystem::path> cmd_export_graph(const RunConfig& cfg,
                                                           const std::string& format = "both") {
    namespace fs = std::filesystem;
    fs::path map_dir = cfg.out / "map";
    if (!fs::exists(map_dir / "assignments.csv"))
        throw ValidationError("map artifacts missing under " + map_dir.string() +
                              " (run the map command first)");
    ClusterModel model = load_cluster_model(map_dir / "model");
    model.assignments = detail::read_assignment_csv(map_dir / "assignments.csv");

    std::vector<double> strengths(static_cast<std::size_t>(model.k), 0.0);
    fs::path strength_csv = cfg.out / "mutation" / "strength.csv";
    if (fs::exists(strength_csv)) {
        std::string text = read_file(strength_csv);
        std::size_t pos = text.find('\n');
        pos = pos == std::string::npos ? text.size() : pos + 1;
        while (pos < text.size()) {
            std::size_t nl = text.find('\n', pos);
            std::string_view line = detail::strip_cr(std::string_view(text).substr(
                pos, nl == std::string::npos ? std::string::npos : nl - pos));
            pos = nl == std::string::npos ? text.size() : nl + 1;
            if (line.empty()) continue;
            auto parts = detail::split_char(line, ',');
            if (parts.size() != 2)
                throw std::runtime_error(strength_csv.string() + ": expected 2 fields");
            long c = parse_long(parts[0], strength_csv.string());
            if (c >= 0 && c < model.k)
                strengths[static_cast<std::size_t>(c)] =
                    parse_double(parts[1], strength_csv.string());
        }
    }

    TopoGraph g = build_topograph(model, strengths);
    fs::create_directories(cfg.out / "graph");
    std::vector<fs::path> written;
    if (format == "gexf" || format == "both") {
        export_graph(g, GraphFormat::gexf, cfg.out / "graph" / "map.gexf");
        written.push_back(cfg.out / "graph" / "map.gexf");
    }
    if (format == "dot" || format == "both") {
        export_graph(g, GraphFormat::dot, cfg.out / "graph" / "map.dot");
        written.push_back(cfg.out / "graph" / "map.dot");
    }
    if (written.empty())
        throw ValidationError("unknown graph format '" + format + "' (gexf, dot, or both)");
    return written;
}

struct EvalPairResult {
    long k = 0;
    Matrix pairwise;
    MinPair min;
};

// Weighted pairwise accuracies of two aligned categorical label files.
inline EvalPairResult cmd_eval_pair(const std::filesystem::path& truth_csv,
                                    const std::filesystem::path& pred_csv) {
    detail::require_exists(truth_csv, "truth label file");
    detail::require_exists(pred_csv, "prediction label file");
    LabelFile truth = load_label_csv(truth_csv);
    LabelFile pred = load_label_csv(pred_csv);
    if (!truth.categorical || !pred.categorical)
        throw ValidationError("eval-pair needs categorical row,label files");
    if (truth.ids.size() != pred.ids.size())
        throw ValidationError("label files disagree on row count: " +
                              std::to_string(truth.ids.size()) + " vs " +
                              std::to_string(pred.ids.size()));
    if (truth.ids.empty()) throw ValidationError("label files are empty");
    long k = 0;
    for (long v : truth.ids) {
        if (v < 0) throw ValidationError("negative label in " + truth_csv.string());
        k = std::max(k, v + 1);
    }
    for (long v : pred.ids) {
        if (v < 0) throw ValidationError("negative label in " + pred_csv.string());
        k = std::max(k, v + 1);
    }
    if (k < 2) throw ValidationError("need at least two distinct labels");

    EvalPairResult res;
    res.k = k;
    res.pairwise = pairwise_matrix(pred.ids, truth.ids, k);
    res.min = min_pairwise_accuracy(pred.ids, truth.ids, k);
    return res;
}

// Stdout rendering shared by the CLI and its tests.
inline std::string eval_pair_text(const EvalPairResult& res) {
    std::string out;
    for (long a = 0; a < res.k; ++a)
        for (long b = a + 1; b < res.k; ++b) {
            out += "w_acc " + std::to_string(a) + " " + std::to_string(b) + " ";
            out += std::isnan(res.pairwise(a, b)) ? "undefined" : format_double(res.pairwise(a, b));
            out += "\n";
        }
    out += "min " + std::to_string(res.min.a) + " " + std::to_string(res.min.b) + " " +
           format_double(res.min.value) + "\n";
    return out;
}

}  // namespace topomap
