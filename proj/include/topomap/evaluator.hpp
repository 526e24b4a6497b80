#pragma once

// ============================================================================
// FILE: evaluator.hpp
//
// BRIEF: Scores candidate clustering configurations. Each candidate runs
// embed -> cluster train rows -> pseudo-label all rows -> train classifier ->
// predict test rows, then is ranked by the minimum weighted pairwise accuracy
// between predicted and assigned clusters on the test split. The winner
// maximizes that worst case; ties keep the earliest candidate.
// ============================================================================

#include <topomap/cluster_model.hpp>
#include <topomap/birch.hpp>
#include <topomap/dataset.hpp>
#include <topomap/embedding.hpp>
#include <topomap/kmeans.hpp>
#include <topomap/mlp.hpp>
#include <topomap/pairwise.hpp>
#include <topomap/tsne.hpp>
#include <topomap/validity.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace topomap {

struct EmbeddingSpec {
    EmbeddingMethod method = EmbeddingMethod::pca;
    double variance_target = 0.90;  // pca/svd
    long tsne_out_dim = 2;
    double tsne_perplexity = 30.0;
    long tsne_iterations = 1000;
    std::string external_path;  // external only: TMX aligned with dataset rows
};

struct ClusteringSpec {
    std::string method = "kmeans";  // kmeans | birch
    long k = 0;
    long branching = 50;  // birch
};

struct ClusteringConfiguration {
    EmbeddingSpec embedding;
    ClusteringSpec clustering;
    ClassifierSpec classifier;
    std::uint64_t seed = 0;

    std::string id() const {
        std::string e = embedding_method_name(embedding.method);
        if (embedding.method == EmbeddingMethod::pca || embedding.method == EmbeddingMethod::svd)
            e += "(target=" + format_double(embedding.variance_target) + ")";
        else if (embedding.method == EmbeddingMethod::tsne)
            e += "(dim=" + std::to_string(embedding.tsne_out_dim) +
                 ",perplexity=" + format_double(embedding.tsne_perplexity) +
                 ",iters=" + std::to_string(embedding.tsne_iterations) + ")";
        else if (embedding.method == EmbeddingMethod::external)
            e += "(" + external_basename() + ")";
        std::string c = clustering.method + "(k=" + std::to_string(clustering.k) + ")";
        return e + "+" + c + "@seed=" + std::to_string(seed);
    }

private:
    std::string external_basename() const {
        return std::filesystem::path(embedding.external_path).filename().string();
    }
};

struct EvaluationDiagnostics {
    double silhouette = 0.0;
    double davies_bouldin = 0.0;
    double calinski_harabasz = 0.0;
};

struct EvaluationReport {
    std::string config_id;
    Matrix pairwise;  // k x k, NaN on the diagonal and for undefined pairs
    MinPair min_pair;
    double overall_weighted_accuracy = 0.0;
    EvaluationDiagnostics diagnostics;
};

struct EvaluationOutcome {
    std::string config_id;
    bool failed = false;
    std::string error;  // failed only
    EvaluationReport report;
    EmbeddedSet embedded;            // all dataset rows
    ClusterModel clusters;           // fitted on train rows
    MlpClassifier classifier;
    std::vector<long> pseudo_labels;  // per dataset row
    std::vector<long> predicted_test; // classifier output on test rows, in row order
    std::optional<EmbeddingModel> embedding_model;  // linear methods only
};

namespace detail {

inline Matrix take_rows(const Matrix& m, const std::vector<long>& rows) {
    Matrix out(static_cast<long>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<long>(i)) = m.row(rows[i]);
    return out;
}

}  // namespace detail

// Embeds every dataset row under the candidate's embedding spec.
inline EmbeddedSet embed_dataset(const Dataset& ds, const EmbeddingSpec& spec, std::uint64_t seed,
                                 std::optional<EmbeddingModel>* model_out = nullptr) {
    if (model_out) model_out->reset();
    switch (spec.method) {
        case EmbeddingMethod::pca:
        case EmbeddingMethod::svd:
        case EmbeddingMethod::lda: {
            EmbeddingModel model = fit_linear(ds, spec.method, spec.variance_target);
            EmbeddedSet e = transform(model, ds.features);
            if (model_out) *model_out = std::move(model);
            return e;
        }
        case EmbeddingMethod::tsne:
            return fit_tsne(ds, spec.tsne_out_dim, spec.tsne_perplexity, spec.tsne_iterations, seed);
        case EmbeddingMethod::external:
            return import_embedding(spec.external_path, ds);
    }
    throw std::runtime_error("embed_dataset: unknown embedding method");
}

inline EvaluationOutcome evaluate_configuration(const ClusteringConfiguration& config,
                                                const Dataset& ds) {
    EvaluationOutcome out;
    out.config_id = config.id();
    if (config.clustering.k < 2)
        throw std::runtime_error("evaluate_configuration: clustering k must be >= 2");

    out.embedded = embed_dataset(ds, config.embedding, config.seed, &out.embedding_model);

    std::vector<long> train_rows = ds.rows_with(Split::train);
    EmbeddedSet e_train;
    e_train.matrix = detail::take_rows(out.embedded.matrix, train_rows);
    e_train.out_dim = out.embedded.out_dim;
    if (config.clustering.method == "kmeans")
        out.clusters = kmeans_fit(e_train, config.clustering.k, config.seed);
    else if (config.clustering.method == "birch")
        out.clusters = birch_fit(e_train, config.clustering.k, config.clustering.branching);
    else
        throw std::runtime_error("evaluate_configuration: unknown clustering method '" +
                                 config.clustering.method + "'");

    out.pseudo_labels = assign(out.clusters, out.embedded);
    // The fit's own assignments are authoritative for train rows.
    for (std::size_t i = 0; i < train_rows.size(); ++i)
        out.pseudo_labels[static_cast<std::size_t>(train_rows[i])] = out.clusters.assignments[i];

    ClassifierSpec clf = config.classifier;
    clf.seed = config.seed;
    out.classifier = train_classifier(ds, out.pseudo_labels, clf);

    std::vector<long> test_rows = ds.rows_with(Split::test);
    std::vector<long> pred = predict(out.classifier, detail::take_rows(ds.features, test_rows));
    out.predicted_test = pred;
    std::vector<long> truth;
    for (long r : test_rows) truth.push_back(out.pseudo_labels[static_cast<std::size_t>(r)]);

    EvaluationReport& rep = out.report;
    rep.config_id = out.config_id;
    rep.pairwise = pairwise_matrix(pred, truth, config.clustering.k);
    rep.min_pair = min_pairwise_accuracy(pred, truth, config.clustering.k);
    if (auto overall = overall_pairwise_accuracy(rep.pairwise)) rep.overall_weighted_accuracy = *overall;
    rep.diagnostics.silhouette =
        silhouette_score(e_train.matrix, out.clusters.assignments, config.clustering.k);
    rep.diagnostics.davies_bouldin =
        davies_bouldin_score(e_train.matrix, out.clusters.assignments, config.clustering.k);
    rep.diagnostics.calinski_harabasz =
        calinski_harabasz_score(e_train.matrix, out.clusters.assignments, config.clustering.k);
    return out;
}

struct SelectionResult {
    std::size_t best_index = 0;  // into outcomes; indexes the winning candidate
    std::vector<EvaluationOutcome> outcomes;
};

// Evaluates every candidate; a candidate that throws is recorded as failed
// rather than aborting the run. The winner maximizes min_pair.value.
inline SelectionResult select_configuration(const std::vector<ClusteringConfiguration>& candidates,
                                            const Dataset& ds) {
    if (candidates.empty()) throw std::runtime_error("select_configuration: no candidates");
    SelectionResult result;
    std::optional<std::size_t> best;
    for (const auto& config : candidates) {
        EvaluationOutcome outcome;
        try {
            outcome = evaluate_configuration(config, ds);
        } catch (const std::exception& ex) {
            outcome = EvaluationOutcome{};
            outcome.config_id = config.id();
            outcome.failed = true;
            outcome.error = ex.what();
        }
        result.outcomes.push_back(std::move(outcome));
        const EvaluationOutcome& stored = result.outcomes.back();
        if (!stored.failed &&
            (!best || stored.report.min_pair.value > result.outcomes[*best].report.min_pair.value))
            best = result.outcomes.size() - 1;
    }
    if (!best) throw std::runtime_error("select_configuration: every candidate failed");
    result.best_index = *best;
    return result;
}

// Pairwise matrix goes to disk with undefined entries encoded as -1.
inline void save_report(const std::filesystem::path& prefix, const EvaluationReport& rep) {
    nlohmann::json j;
    j["config_id"] = rep.config_id;
    j["min_pair"] = {{"a", rep.min_pair.a}, {"b", rep.min_pair.b}, {"value", rep.min_pair.value}};
    j["overall_weighted_accuracy"] = rep.overall_weighted_accuracy;
    j["diagnostics"] = {{"silhouette", rep.diagnostics.silhouette},
                        {"davies_bouldin", rep.diagnostics.davies_bouldin},
                        {"calinski_harabasz", rep.diagnostics.calinski_harabasz}};
    atomic_write_file(prefix.string() + ".json", j.dump(2) + "\n");
    Matrix disk = rep.pairwise;
    for (long a = 0; a < disk.rows(); ++a)
        for (long b = 0; b < disk.cols(); ++b)
            if (std::isnan(disk(a, b))) disk(a, b) = -1.0;
    save_tmx(prefix.string() + ".pairwise.tmx", disk);
}

inline EvaluationReport load_report(const std::filesystem::path& prefix) {
    nlohmann::json j = nlohmann::json::parse(read_file(prefix.string() + ".json"));
    EvaluationReport rep;
    rep.config_id = j.at("config_id").get<std::string>();
    rep.min_pair.a = j.at("min_pair").at("a").get<long>();
    rep.min_pair.b = j.at("min_pair").at("b").get<long>();
    rep.min_pair.value = j.at("min_pair").at("value").get<double>();
    rep.overall_weighted_accuracy = j.at("overall_weighted_accuracy").get<double>();
    rep.diagnostics.silhouette = j.at("diagnostics").at("silhouette").get<double>();
    rep.diagnostics.davies_bouldin = j.at("diagnostics").at("davies_bouldin").get<double>();
    rep.diagnostics.calinski_harabasz = j.at("diagnostics").at("calinski_harabasz").get<double>();
    rep.pairwise = load_tmx(prefix.string() + ".pairwise.tmx");
    for (long a = 0; a < rep.pairwise.rows(); ++a)
        for (long b = 0; b < rep.pairwise.cols(); ++b)
            if (rep.pairwise(a, b) == -1.0) rep.pairwise(a, b) = std::numeric_limits<double>::quiet_NaN();
    return rep;
}

// One line per evaluated candidate, ranked by min_acc descending; failed
// candidates sink to the bottom with a status column.
inline std::string selection_summary_csv(const SelectionResult& result) {
    std::vector<std::size_t> order(result.outcomes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        const auto& a = result.outcomes[x];
        const auto& b = result.outcomes[y];
        if (a.failed != b.failed) return !a.failed;
        if (a.failed) return x < y;
        if (a.report.min_pair.value != b.report.min_pair.value)
            return a.report.min_pair.value > b.report.min_pair.value;
        return x < y;
    });
    std::string csv =
        "rank,config,status,min_pair_a,min_pair_b,min_acc,overall_acc,silhouette,davies_bouldin,"
        "calinski_harabasz\n";
    long rank = 1;
    for (std::size_t i : order) {
        const auto& o = result.outcomes[i];
        if (o.failed) {
            csv += std::to_string(rank++) + "," + o.config_id + ",failed,,,,,,,\n";
            continue;
        }
        const auto& r = o.report;
        csv += std::to_string(rank++) + "," + o.config_id + ",ok," + std::to_string(r.min_pair.a) +
               "," + std::to_string(r.min_pair.b) + "," + format_double(r.min_pair.value) + "," +
               format_double(r.overall_weighted_accuracy) + "," +
               format_double(r.diagnostics.silhouette) + "," +
               format_double(r.diagnostics.davies_bouldin) + "," +
               format_double(r.diagnostics.calinski_harabasz) + "\n";
    }
    return csv;
}

}  // namespace topomap
