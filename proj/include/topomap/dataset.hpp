#pragma once

// ============================================================================
// FILE: dataset.hpp
//
// BRIEF: Dataset container (features, labels, splits) loaded from a JSON
// manifest, plus sigma-bucketing of continuous regression labels into
// 3^d discrete buckets.
// ============================================================================

#include <topomap/matrix_io.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace topomap {

enum class Task : std::uint8_t { classification, regression };

struct Dataset {
    Matrix features;           // rows = instances, cols = raw dimensions
    std::vector<long> labels;  // categorical ids, empty for regression
    Matrix y;                  // continuous labels (n x 1 or n x 2), empty for classification
    std::vector<Split> split;
    Task task = Task::classification;
    long n_classes = 0;  // classification only

    long rows() const { return features.rows(); }

    std::vector<long> rows_with(Split s) const {
        std::vector<long> out;
        for (long r = 0; r < static_cast<long>(split.size()); ++r)
            if (split[static_cast<std::size_t>(r)] == s) out.push_back(r);
        return out;
    }
};

namespace detail {

inline void validate_dataset(const Dataset& ds, const std::string& origin) {
    long n = ds.features.rows();
    long nlabels = ds.task == Task::classification ? static_cast<long>(ds.labels.size()) : ds.y.rows();
    if (nlabels != n)
        throw std::runtime_error("row-count mismatch in " + origin + ": " + std::to_string(n) +
                                 " feature rows vs " + std::to_string(nlabels) + " labels");
    if (static_cast<long>(ds.split.size()) != n)
        throw std::runtime_error("row-count mismatch in " + origin + ": " + std::to_string(n) +
                                 " feature rows vs " + std::to_string(ds.split.size()) + " split tags");
    if (ds.task == Task::classification) {
        if (ds.n_classes <= 0) throw std::runtime_error(origin + ": n_classes must be positive");
        for (long r = 0; r < n; ++r) {
            long lab = ds.labels[static_cast<std::size_t>(r)];
            if (lab < 0 || lab >= ds.n_classes)
                throw std::runtime_error("label out of range at row " + std::to_string(r) + " in " + origin +
                                         ": " + std::to_string(lab) + " not in [0, " +
                                         std::to_string(ds.n_classes) + ")");
        }
    } else if (ds.y.cols() < 1 || ds.y.cols() > 2) {
        throw std::runtime_error(origin + ": regression labels must have 1 or 2 dimensions");
    }
    bool has_train = false, has_test = false;
    for (Split s : ds.split) {
        if (s == Split::train) has_train = true;
        if (s == Split::test) has_test = true;
    }
    if (!has_train || !has_test)
        throw std::runtime_error(origin + ": train and test splits must both be non-empty");
}

}  // namespace detail

// Manifest: JSON object with keys features, labels, splits (paths relative to
// the manifest directory), task ("classification"|"regression"), and
// n_classes (classification only).
inline Dataset load_dataset(const std::filesystem::path& manifest_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    for (const char* key : {"features", "labels", "splits", "task"})
        if (!j.contains(key))
            throw std::runtime_error("manifest " + manifest_path.string() + " missing key '" + key + "'");
    auto base = manifest_path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };

    Dataset ds;
    std::string task = j.at("task").get<std::string>();
    if (task == "classification") ds.task = Task::classification;
    else if (task == "regression") ds.task = Task::regression;
    else throw std::runtime_error("manifest " + manifest_path.string() + ": unknown task '" + task + "'");

    ds.features = load_tmx(resolve(j.at("features").get<std::string>()));
    LabelFile lf = load_label_csv(resolve(j.at("labels").get<std::string>()));
    if (ds.task == Task::classification) {
        if (!lf.categorical)
            throw std::runtime_error("manifest " + manifest_path.string() +
                                     ": classification task requires a row,label file");
        ds.labels = lf.ids;
        if (!j.contains("n_classes"))
            throw std::runtime_error("manifest " + manifest_path.string() + " missing key 'n_classes'");
        ds.n_classes = j.at("n_classes").get<long>();
    } else {
        if (lf.categorical)
            throw std::runtime_error("manifest " + manifest_path.string() +
                                     ": regression task requires a row,y0[,y1] file");
        ds.y = lf.values;
    }
    ds.split = load_split_csv(resolve(j.at("splits").get<std::string>()));
    detail::validate_dataset(ds, manifest_path.string());
    return ds;
}

// Writes features/labels/splits next to the manifest and the manifest itself.
inline void save_dataset(const std::filesystem::path& manifest_path, const Dataset& ds) {
    detail::validate_dataset(ds, manifest_path.string());
    auto base = manifest_path.parent_path();
    auto stem = manifest_path.stem().string();
    std::string feat = stem + ".features.tmx";
    std::string labs = stem + ".labels.csv";
    std::string spl = stem + ".splits.csv";
    save_tmx(base / feat, ds.features);
    LabelFile lf;
    if (ds.task == Task::classification) {
        lf.categorical = true;
        lf.ids = ds.labels;
    } else {
        lf.values = ds.y;
    }
    save_label_csv(base / labs, lf);
    save_split_csv(base / spl, ds.split);
    nlohmann::json j;
    j["features"] = feat;
    j["labels"] = labs;
    j["splits"] = spl;
    j["task"] = ds.task == Task::classification ? "classification" : "regression";
    if (ds.task == Task::classification) j["n_classes"] = ds.n_classes;
    atomic_write_file(manifest_path, j.dump(2) + "\n");
}

// ----------------------------------------------------------------------------
// Sigma-bucketing of continuous labels
//
// Per dimension, values map to (-inf, -sigma) / [-sigma, +sigma] / (+sigma, inf)
// where sigma is the population standard deviation (divisor N) of the
// training-split labels in that dimension. d-dimensional labels get the
// cross-product bucket id, so n_buckets == 3^d.
// ----------------------------------------------------------------------------

struct BucketMap {
    std::vector<double> sigma;     // per-dimension, train-split population std dev
    std::vector<long> bucket_ids;  // per input row
    long n_buckets = 0;
};

namespace detail {

inline long bucket_of(double v, double sigma) {
    if (v < -sigma) return 0;
    if (v > sigma) return 2;
    return 1;  // -sigma <= v <= +sigma, boundaries inclusive
}

}  // namespace detail

inline BucketMap bucketize(const Matrix& y, const std::vector<Split>& split) {
    if (y.rows() != static_cast<long>(split.size()))
        throw std::runtime_error("row-count mismatch: " + std::to_string(y.rows()) + " labels vs " +
                                 std::to_string(split.size()) + " split tags");
    long d = y.cols();
    BucketMap bm;
    bm.n_buckets = 1;
    for (long j = 0; j < d; ++j) bm.n_buckets *= 3;

    std::vector<long> train_rows;
    for (long r = 0; r < y.rows(); ++r)
        if (split[static_cast<std::size_t>(r)] == Split::train) train_rows.push_back(r);
    if (train_rows.empty()) throw std::runtime_error("bucketize: empty training split");

    bm.sigma.resize(static_cast<std::size_t>(d));
    for (long j = 0; j < d; ++j) {
        double mean = 0.0;
        for (long r : train_rows) mean += y(r, j);
        mean /= static_cast<double>(train_rows.size());
        double var = 0.0;
        for (long r : train_rows) {
            double dv = y(r, j) - mean;
            var += dv * dv;
        }
        var /= static_cast<double>(train_rows.size());
        double sigma = std::sqrt(var);
        if (sigma == 0.0)
            throw std::runtime_error("bucketize: sigma is 0 in label dimension " + std::to_string(j) +
                                     " (degenerate labels)");
        bm.sigma[static_cast<std::size_t>(j)] = sigma;
    }

    bm.bucket_ids.resize(static_cast<std::size_t>(y.rows()));
    for (long r = 0; r < y.rows(); ++r) {
        long id = 0;
        for (long j = 0; j < d; ++j)
            id = id * 3 + detail::bucket_of(y(r, j), bm.sigma[static_cast<std::size_t>(j)]);
        bm.bucket_ids[static_cast<std::size_t>(r)] = id;
    }
    return bm;
}

}  // namespace topomap
