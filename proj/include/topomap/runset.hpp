#pragma once

// ============================================================================
// FILE: runset.hpp
//
// BRIEF: Per-model prediction bundle across N retraining runs: a binary
// misprediction matrix, the per-run performance metric (accuracy or MSE),
// and, for regression, the retained raw predictions so subset metrics stay
// computable. Regression mispredictions use the inclusive rule ||f(x)-y|| >= tau.
// ============================================================================

#include <topomap/dataset.hpp>
#include <topomap/matrix_io.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace topomap {

struct RunSet {
    std::string model_id;
    Task task = Task::classification;
    long n_runs = 0;     // N
    Matrix correctness;  // N x |X_test|, 1 = mispredicted
    std::vector<double> metric_per_run;  // accuracy (classification) or MSE (regression)
    double tau = 0.0;        // regression only
    long pred_dim = 1;       // regression output width
    Matrix raw_predictions;  // regression only: N x (pred_dim * |X_test|)
    Matrix truth;            // regression only: |X_test| x pred_dim

    long n_inputs() const { return correctness.cols(); }
};

namespace detail {

inline void check_runset_shape(long n_runs, const std::string& where) {
    if (n_runs < 2) throw std::runtime_error(where + ": need N >= 2 prediction runs");
}

}  // namespace detail

// Classification: predictions TMX holds N rows of class ids (as floats).
inline RunSet build_runset(const std::filesystem::path& predictions_path,
                           const std::vector<long>& ground_truth,
                           const std::string& model_id = "") {
    Matrix pred = load_tmx(predictions_path);
    detail::check_runset_shape(pred.rows(), "build_runset");
    if (pred.cols() != static_cast<long>(ground_truth.size()))
        throw std::runtime_error("build_runset: predictions have " + std::to_string(pred.cols()) +
                                 " columns, ground truth has " + std::to_string(ground_truth.size()));
    RunSet rs;
    rs.model_id = model_id.empty() ? predictions_path.stem().string() : model_id;
    rs.task = Task::classification;
    rs.n_runs = pred.rows();
    rs.correctness.resize(pred.rows(), pred.cols());
    for (long r = 0; r < pred.rows(); ++r) {
        long miss = 0;
        for (long c = 0; c < pred.cols(); ++c) {
            double p = pred(r, c);
            if (p != std::floor(p))
                throw std::runtime_error("build_runset: non-integral class id at run " +
                                         std::to_string(r) + ", input " + std::to_string(c));
            bool wrong = static_cast<long>(p) != ground_truth[static_cast<std::size_t>(c)];
            rs.correctness(r, c) = wrong ? 1.0 : 0.0;
            if (wrong) ++miss;
        }
        rs.metric_per_run.push_back(1.0 - static_cast<double>(miss) / static_cast<double>(pred.cols()));
    }
    return rs;
}

// Regression: predictions TMX holds N rows of pred_dim * |X_test| values,
// input i occupying columns [i*pred_dim, (i+1)*pred_dim).
inline RunSet build_runset(const std::filesystem::path& predictions_path, const Matrix& ground_truth,
                           double tau, const std::string& model_id = "") {
    Matrix pred = load_tmx(predictions_path);
    detail::check_runset_shape(pred.rows(), "build_runset");
    const long n = ground_truth.rows();
    const long dim = ground_truth.cols();
    if (dim != 1 && dim != 2)
        throw std::runtime_error("build_runset: regression targets must have 1 or 2 columns");
    if (tau < 0.0) throw std::runtime_error("build_runset: tau must be non-negative");
    if (pred.cols() != n * dim)
        throw std::runtime_error("build_runset: predictions have " + std::to_string(pred.cols()) +
                                 " columns, expected " + std::to_string(n * dim));
    RunSet rs;
    rs.model_id = model_id.empty() ? predictions_path.stem().string() : model_id;
    rs.task = Task::regression;
    rs.n_runs = pred.rows();
    rs.tau = tau;
    rs.pred_dim = dim;
    rs.raw_predictions = pred;
    rs.truth = ground_truth;
    rs.correctness.resize(pred.rows(), n);
    for (long r = 0; r < pred.rows(); ++r) {
        double sq_sum = 0.0;
        for (long i = 0; i < n; ++i) {
            double sq = 0.0;
            for (long d = 0; d < dim; ++d) {
                double diff = pred(r, i * dim + d) - ground_truth(i, d);
                sq += diff * diff;
            }
            sq_sum += sq;
            rs.correctness(r, i) = std::sqrt(sq) >= tau ? 1.0 : 0.0;
        }
        rs.metric_per_run.push_back(sq_sum / static_cast<double>(n));  // mean squared error
    }
    return rs;
}

// Per-input misprediction probability: column mean of correctness over runs.
inline Vector misprediction_probability(const RunSet& rs) {
    return rs.correctness.colwise().mean().transpose();
}

// Per-run metric restricted to a row subset: accuracy for classification,
// MSE over the retained raw predictions for regression.
inline std::vector<double> metric_on_subset(const RunSet& rs, const std::vector<long>& rows) {
    if (rows.empty()) throw std::runtime_error("metric_on_subset: empty subset");
    for (long r : rows)
        if (r < 0 || r >= rs.n_inputs())
            throw std::runtime_error("metric_on_subset: row " + std::to_string(r) +
                                     " outside test set of size " + std::to_string(rs.n_inputs()));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(rs.n_runs));
    for (long run = 0; run < rs.n_runs; ++run) {
        if (rs.task == Task::classification) {
            double miss = 0.0;
            for (long r : rows) miss += rs.correctness(run, r);
            out.push_back(1.0 - miss / static_cast<double>(rows.size()));
        } else {
            double sq_sum = 0.0;
            for (long r : rows) {
                double sq = 0.0;
                for (long d = 0; d < rs.pred_dim; ++d) {
                    double diff = rs.raw_predictions(run, r * rs.pred_dim + d) - rs.truth(r, d);
                    sq += diff * diff;
                }
                sq_sum += sq;
            }
            out.push_back(sq_sum / static_cast<double>(rows.size()));
        }
    }
    return out;
}

}  // namespace topomap
