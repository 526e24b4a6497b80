#pragma once

// ============================================================================
// FILE: embedding.hpp
//
// BRIEF: Linear dimensionality reduction (PCA / SVD / LDA) plus import of
// externally computed embeddings.
//
// PCA centers the data and eigendecomposes its covariance; SVD factorizes the
// raw matrix without centering; LDA is supervised on training labels only.
// PCA/SVD keep the smallest leading component set whose cumulative explained
// variance reaches the target (default 0.90). Unsupervised methods fit on all
// rows jointly, and transform applies to any row block.
// ============================================================================

#include <topomap/dataset.hpp>
#include <topomap/matrix_io.hpp>

#include <json.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <vector>

namespace topomap {

enum class EmbeddingMethod : std::uint8_t { pca, svd, lda, tsne, external };

inline const char* embedding_method_name(EmbeddingMethod m) {
    switch (m) {
        case EmbeddingMethod::pca: return "pca";
        case EmbeddingMethod::svd: return "svd";
        case EmbeddingMethod::lda: return "lda";
        case EmbeddingMethod::tsne: return "tsne";
        default: return "external";
    }
}

inline EmbeddingMethod embedding_method_from(const std::string& s) {
    if (s == "pca") return EmbeddingMethod::pca;
    if (s == "svd") return EmbeddingMethod::svd;
    if (s == "lda") return EmbeddingMethod::lda;
    if (s == "tsne") return EmbeddingMethod::tsne;
    if (s == "external") return EmbeddingMethod::external;
    throw std::runtime_error("unknown embedding method '" + s + "'");
}

struct EmbeddingModel {
    EmbeddingMethod method = EmbeddingMethod::pca;
    Matrix components;  // out_dim x raw_dim, rows orthonormal
    Vector center;      // raw_dim; zero vector for svd
    long out_dim = 0;
    std::vector<double> explained_variance_ratio;  // kept components, pca/svd only
    bool target_unreached = false;
};

struct EmbeddedSet {
    Matrix matrix;  // rows aligned to Dataset rows
    long out_dim = 0;
};

namespace detail {

// Largest-magnitude entry of every component made positive, so fitted
// components are deterministic across eigensolver sign conventions.
inline void normalize_component_signs(Matrix& components) {
    for (long r = 0; r < components.rows(); ++r) {
        long arg = 0;
        double best = -1.0;
        for (long c = 0; c < components.cols(); ++c)
            if (std::abs(components(r, c)) > best) {
                best = std::abs(components(r, c));
                arg = c;
            }
        if (components(r, arg) < 0) components.row(r) = -components.row(r);
    }
}

// Smallest m with cumulative ratio >= target among `usable` leading
// components; falls back to all usable ones with the flag set.
inline long minimal_components(const std::vector<double>& ratios, long usable, double target,
                               bool& target_unreached) {
    double cum = 0.0;
    for (long m = 1; m <= usable; ++m) {
        cum += ratios[static_cast<std::size_t>(m - 1)];
        if (cum >= target) {
            target_unreached = false;
            return m;
        }
    }
    target_unreached = true;
    return usable;
}

}  // namespace detail

inline EmbeddingModel fit_linear(const Dataset& ds, EmbeddingMethod method,
                                 double variance_target = 0.90) {
    const Matrix& X = ds.features;
    const long n = X.rows(), d = X.cols();
    if (n < 2) throw std::runtime_error("fit_linear: need >= 2 rows");
    EmbeddingModel model;
    model.method = method;

    if (method == EmbeddingMethod::pca || method == EmbeddingMethod::svd) {
        std::vector<double> all_ratios;
        Matrix axes;  // d x d (or d x rank), columns sorted by decreasing variance
        long usable = 0;
        if (method == EmbeddingMethod::pca) {
            model.center = X.colwise().mean().transpose();
            Matrix centered = X.rowwise() - model.center.transpose();
            Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);
            Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
            if (es.info() != Eigen::Success) throw std::runtime_error("fit_linear: eigendecomposition failed");
            Vector evals = es.eigenvalues().reverse();
            axes.resize(d, d);
            for (long i = 0; i < d; ++i) axes.col(i) = es.eigenvectors().col(d - 1 - i);
            double total = 0.0;
            for (long i = 0; i < d; ++i) total += std::max(evals(i), 0.0);
            if (total <= 0.0) throw std::runtime_error("fit_linear: data has zero variance");
            for (long i = 0; i < d; ++i) all_ratios.push_back(std::max(evals(i), 0.0) / total);
            const double tol = std::max(evals(0), 0.0) * 1e-12;
            while (usable < d && evals(usable) > tol) ++usable;
        } else {
            model.center = Vector::Zero(d);
            Eigen::BDCSVD<Matrix> svd(X, Eigen::ComputeThinV);
            Vector sv = svd.singularValues();
            const long r = sv.size();
            axes = svd.matrixV();
            double total = 0.0;
            for (long i = 0; i < r; ++i) total += sv(i) * sv(i);
            if (total <= 0.0) throw std::runtime_error("fit_linear: data is all zeros");
            for (long i = 0; i < r; ++i) all_ratios.push_back(sv(i) * sv(i) / total);
            const double tol = sv(0) * 1e-12;
            while (usable < r && sv(usable) > tol) ++usable;
        }
        if (usable == 0) throw std::runtime_error("fit_linear: no nonzero components");
        long keep = detail::minimal_components(all_ratios, usable, variance_target, model.target_unreached);
        model.out_dim = keep;
        model.components = axes.leftCols(keep).transpose();
        model.explained_variance_ratio.assign(all_ratios.begin(), all_ratios.begin() + keep);
        detail::normalize_component_signs(model.components);
        return model;
    }

    if (method == EmbeddingMethod::lda) {
        if (ds.task != Task::classification || ds.n_classes < 2)
            throw std::runtime_error("fit_linear: lda requires categorical labels with >= 2 classes");
        std::vector<long> train = ds.rows_with(Split::train);
        std::vector<std::vector<long>> by_class(static_cast<std::size_t>(ds.n_classes));
        for (long r : train) by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(r)])].push_back(r);

        Vector mean = Vector::Zero(d);
        for (long r : train) mean += X.row(r).transpose();
        mean /= static_cast<double>(train.size());

        Matrix sw = Matrix::Zero(d, d), sb = Matrix::Zero(d, d);
        for (const auto& rows : by_class) {
            if (rows.empty()) continue;
            Vector cm = Vector::Zero(d);
            for (long r : rows) cm += X.row(r).transpose();
            cm /= static_cast<double>(rows.size());
            for (long r : rows) {
                Vector dv = X.row(r).transpose() - cm;
                sw += dv * dv.transpose();
            }
            Vector db = cm - mean;
            sb += static_cast<double>(rows.size()) * db * db.transpose();
        }
        const double reg = std::max(sw.trace() / static_cast<double>(d), 1.0) * 1e-8;
        sw += reg * Matrix::Identity(d, d);

        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(sb, sw);
        if (es.info() != Eigen::Success) throw std::runtime_error("fit_linear: lda eigenproblem failed");
        const long m = std::min<long>(ds.n_classes - 1, d);
        Matrix W(d, m);
        for (long i = 0; i < m; ++i) W.col(i) = es.eigenvectors().col(d - 1 - i);  // descending
        Eigen::HouseholderQR<Matrix> qr(W);
        Matrix q = qr.householderQ() * Matrix::Identity(d, m);
        model.center = mean;
        model.out_dim = m;
        model.components = q.transpose();
        detail::normalize_component_signs(model.components);
        return model;
    }

    throw std::runtime_error("fit_linear: method must be pca, svd, or lda");
}

inline EmbeddedSet transform(const EmbeddingModel& model, const Matrix& rows) {
    if (model.method != EmbeddingMethod::pca && model.method != EmbeddingMethod::svd &&
        model.method != EmbeddingMethod::lda)
        throw std::runtime_error("transform: non-linear model has no out-of-sample transform");
    if (rows.cols() != model.components.cols())
        throw std::runtime_error("transform: dimension mismatch: model expects " +
                                 std::to_string(model.components.cols()) + " columns, got " +
                                 std::to_string(rows.cols()));
    EmbeddedSet out;
    out.matrix = (rows.rowwise() - model.center.transpose()) * model.components.transpose();
    out.out_dim = model.out_dim;
    return out;
}

inline EmbeddedSet import_embedding(const std::filesystem::path& path, const Dataset& ds) {
    Matrix m = load_tmx(path);  // load_tmx rejects non-finite values
    if (m.rows() != ds.rows())
        throw std::runtime_error("import_embedding: row mismatch: dataset has " +
                                 std::to_string(ds.rows()) + " rows, " + path.string() + " has " +
                                 std::to_string(m.rows()));
    return EmbeddedSet{m, m.cols()};
}

// Persisted as <prefix>.json (method, out_dim, ratios, flag) plus
// <prefix>.components.tmx and <prefix>.center.tmx.
inline void save_embedding_model(const std::filesystem::path& prefix, const EmbeddingModel& model) {
    nlohmann::json j;
    j["method"] = embedding_method_name(model.method);
    j["out_dim"] = model.out_dim;
    j["target_unreached"] = model.target_unreached;
    j["explained_variance_ratio"] = model.explained_variance_ratio;
    atomic_write_file(prefix.string() + ".json", j.dump(2) + "\n");
    save_tmx(prefix.string() + ".components.tmx", model.components);
    Matrix c(1, model.center.size());
    c.row(0) = model.center.transpose();
    save_tmx(prefix.string() + ".center.tmx", c);
}

inline EmbeddingModel load_embedding_model(const std::filesystem::path& prefix) {
    nlohmann::json j = nlohmann::json::parse(read_file(prefix.string() + ".json"));
    EmbeddingModel model;
    model.method = embedding_method_from(j.at("method").get<std::string>());
    model.out_dim = j.at("out_dim").get<long>();
    model.target_unreached = j.at("target_unreached").get<bool>();
    model.explained_variance_ratio = j.at("explained_variance_ratio").get<std::vector<double>>();
    model.components = load_tmx(prefix.string() + ".components.tmx");
    Matrix c = load_tmx(prefix.string() + ".center.tmx");
    model.center = c.row(0).transpose();
    return model;
}

}  // namespace topomap
