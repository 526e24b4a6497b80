#pragma once

// ============================================================================
// FILE: mlp.hpp
//
// BRIEF: Feed-forward softmax classifier over raw feature rows used to
// predict cluster pseudo-labels. Class-weighted cross-entropy with the
// balanced rule w[c] = rows / (k * count(c)), Adam updates, early stopping on
// validation loss with best-weight restore. Deterministic for a fixed seed.
// ============================================================================

#include <topomap/dataset.hpp>

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace topomap {

struct ClassifierSpec {
    std::vector<long> hidden_layers{128, 64};
    std::string activation = "relu";
    int epochs = 50;
    long batch = 64;
    double learning_rate = 1e-3;
    int early_stop_patience = 5;
    std::uint64_t seed = 0;
};

struct MlpClassifier {
    std::vector<Matrix> weights;         // layer l maps in_l -> out_l, stored in x out
    std::vector<Vector> biases;
    std::vector<long> classes;           // retained cluster ids, ascending
    std::vector<double> class_weights;   // aligned with classes
    std::vector<double> epoch_train_loss;
    std::vector<double> epoch_valid_loss;
    std::vector<std::string> warnings;
};

namespace detail {

inline Matrix mlp_forward(const MlpClassifier& m, const Matrix& x, std::vector<Matrix>* acts = nullptr) {
    Matrix h = x;
    if (acts) acts->push_back(h);
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        Matrix z = (h * m.weights[l]).rowwise() + m.biases[l].transpose();
        if (l + 1 < m.weights.size()) z = z.cwiseMax(0.0);  // relu
        h = std::move(z);
        if (acts) acts->push_back(h);
    }
    // Row-wise softmax with max subtraction for stability.
    Matrix p = h;
    for (long r = 0; r < p.rows(); ++r) {
        double mx = p.row(r).maxCoeff();
        p.row(r) = (p.row(r).array() - mx).exp();
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

// Weighted mean cross-entropy; `targets` index into the retained class list.
inline double weighted_ce(const Matrix& proba, const std::vector<long>& targets,
                          const std::vector<double>& w) {
    double loss = 0.0, wsum = 0.0;
    for (long r = 0; r < proba.rows(); ++r) {
        double wi = w[static_cast<std::size_t>(targets[static_cast<std::size_t>(r)])];
        loss -= wi * std::log(std::max(proba(r, targets[static_cast<std::size_t>(r)]), 1e-300));
        wsum += wi;
    }
    return loss / wsum;
}

struct AdamState {
    std::vector<Matrix> mw, vw;
    std::vector<Vector> mb, vb;
    long t = 0;
};

}  // namespace detail

// Trains on the train split of `dataset` against cluster pseudo-labels given
// for every dataset row. Clusters without train rows are dropped from the
// label set with a warning. Validation rows come from the valid split, or
// from the last 10% of the train split when no valid split exists.
inline MlpClassifier train_classifier(const Dataset& dataset, const std::vector<long>& pseudo_labels,
                                      const ClassifierSpec& spec) {
    if (pseudo_labels.size() != static_cast<std::size_t>(dataset.features.rows()))
        throw std::runtime_error("train_classifier: pseudo-label length mismatch");
    if (spec.activation != "relu")
        throw std::runtime_error("train_classifier: unsupported activation '" + spec.activation + "'");
    if (spec.batch < 1 || spec.epochs < 1) throw std::runtime_error("train_classifier: bad epochs/batch");

    std::vector<long> train_rows = dataset.rows_with(Split::train);
    std::vector<long> valid_rows = dataset.rows_with(Split::valid);
    MlpClassifier model;
    if (valid_rows.empty()) {
        // Carve the tail 10% (at least one row) of the train split for early stopping.
        std::size_t carve = std::max<std::size_t>(1, train_rows.size() / 10);
        if (carve >= train_rows.size())
            throw std::runtime_error("train_classifier: train split too small to carve validation rows");
        valid_rows.assign(train_rows.end() - static_cast<std::ptrdiff_t>(carve), train_rows.end());
        train_rows.resize(train_rows.size() - carve);
    }

    // Retained classes: cluster ids with at least one training row.
    std::vector<long> all_ids = pseudo_labels;
    std::sort(all_ids.begin(), all_ids.end());
    all_ids.erase(std::unique(all_ids.begin(), all_ids.end()), all_ids.end());
    std::vector<long> seen;
    for (long r : train_rows) seen.push_back(pseudo_labels[static_cast<std::size_t>(r)]);
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (long id : all_ids)
        if (!std::binary_search(seen.begin(), seen.end(), id))
            model.warnings.push_back("cluster " + std::to_string(id) +
                                     " has no training rows and was dropped from the label set");
    model.classes = seen;
    const long k = static_cast<long>(model.classes.size());
    if (k < 2) throw std::runtime_error("train_classifier: needs >= 2 clusters on train rows");

    auto class_index = [&](long id) {
        auto it = std::lower_bound(model.classes.begin(), model.classes.end(), id);
        return (it != model.classes.end() && *it == id) ? static_cast<long>(it - model.classes.begin())
                                                        : -1L;
    };

    std::vector<long> y_train;
    for (long r : train_rows) y_train.push_back(class_index(pseudo_labels[static_cast<std::size_t>(r)]));
    std::vector<long> y_valid, valid_keep;
    for (long r : valid_rows) {
        long idx = class_index(pseudo_labels[static_cast<std::size_t>(r)]);
        if (idx >= 0) {
            y_valid.push_back(idx);
            valid_keep.push_back(r);
        }
    }

    // Balanced class weights over the rows the loss actually sees.
    std::vector<long> counts(static_cast<std::size_t>(k), 0);
    for (long y : y_train) ++counts[static_cast<std::size_t>(y)];
    model.class_weights.resize(static_cast<std::size_t>(k));
    for (long c = 0; c < k; ++c)
        model.class_weights[static_cast<std::size_t>(c)] =
            static_cast<double>(y_train.size()) /
            (static_cast<double>(k) * static_cast<double>(counts[static_cast<std::size_t>(c)]));

    Matrix x_train(static_cast<long>(train_rows.size()), dataset.features.cols());
    for (std::size_t i = 0; i < train_rows.size(); ++i) x_train.row(static_cast<long>(i)) = dataset.features.row(train_rows[i]);
    Matrix x_valid(static_cast<long>(valid_keep.size()), dataset.features.cols());
    for (std::size_t i = 0; i < valid_keep.size(); ++i) x_valid.row(static_cast<long>(i)) = dataset.features.row(valid_keep[i]);

    // Glorot-uniform initialization.
    std::mt19937_64 rng(spec.seed);
    std::vector<long> dims;
    dims.push_back(dataset.features.cols());
    for (long h : spec.hidden_layers) dims.push_back(h);
    dims.push_back(k);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        double limit = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
        std::uniform_real_distribution<double> u(-limit, limit);
        Matrix w(dims[l], dims[l + 1]);
        for (long i = 0; i < w.rows(); ++i)
            for (long j = 0; j < w.cols(); ++j) w(i, j) = u(rng);
        model.weights.push_back(std::move(w));
        model.biases.push_back(Vector::Zero(dims[l + 1]));
    }

    detail::AdamState adam;
    for (const Matrix& w : model.weights) {
        adam.mw.push_back(Matrix::Zero(w.rows(), w.cols()));
        adam.vw.push_back(Matrix::Zero(w.rows(), w.cols()));
    }
    for (const Vector& b : model.biases) {
        adam.mb.push_back(Vector::Zero(b.size()));
        adam.vb.push_back(Vector::Zero(b.size()));
    }
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

    std::vector<Matrix> best_w = model.weights;
    std::vector<Vector> best_b = model.biases;
    double best_valid = std::numeric_limits<double>::infinity();
    int stale = 0;

    std::vector<long> order(y_train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<long>(i);

    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(spec.batch)) {
            std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(spec.batch));
            long bn = static_cast<long>(stop - start);
            Matrix xb(bn, x_train.cols());
            std::vector<long> yb(static_cast<std::size_t>(bn));
            for (long i = 0; i < bn; ++i) {
                xb.row(i) = x_train.row(order[start + static_cast<std::size_t>(i)]);
                yb[static_cast<std::size_t>(i)] = y_train[static_cast<std::size_t>(order[start + static_cast<std::size_t>(i)])];
            }
            std::vector<Matrix> acts;
            Matrix proba = detail::mlp_forward(model, xb, &acts);

            double wsum = 0.0;
            for (long i = 0; i < bn; ++i) wsum += model.class_weights[static_cast<std::size_t>(yb[static_cast<std::size_t>(i)])];
            Matrix grad = proba;  // d(weighted CE)/d(logits)
            for (long i = 0; i < bn; ++i) {
                grad(i, yb[static_cast<std::size_t>(i)]) -= 1.0;
                grad.row(i) *= model.class_weights[static_cast<std::size_t>(yb[static_cast<std::size_t>(i)])] / wsum;
            }

            ++adam.t;
            for (std::size_t l = model.weights.size(); l-- > 0;) {
                Matrix gw = acts[l].transpose() * grad;
                Vector gb = grad.colwise().sum().transpose();
                Matrix gin = grad * model.weights[l].transpose();
                if (l > 0) gin = gin.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
                grad = std::move(gin);

                auto step = [&](Matrix& m_, Matrix& v_, Matrix& p, const Matrix& g) {
                    m_ = b1 * m_ + (1.0 - b1) * g;
                    v_ = b2 * v_ + (1.0 - b2) * g.cwiseProduct(g);
                    double c1 = 1.0 - std::pow(b1, static_cast<double>(adam.t));
                    double c2 = 1.0 - std::pow(b2, static_cast<double>(adam.t));
                    p -= (spec.learning_rate * (m_ / c1).array() / ((v_ / c2).array().sqrt() + eps)).matrix();
                };
                step(adam.mw[l], adam.vw[l], model.weights[l], gw);
                Matrix mb = adam.mb[l], vb = adam.vb[l], pb = model.biases[l];
                step(mb, vb, pb, gb);
                adam.mb[l] = mb.col(0);
                adam.vb[l] = vb.col(0);
                model.biases[l] = pb.col(0);
            }
        }

        model.epoch_train_loss.push_back(
            detail::weighted_ce(detail::mlp_forward(model, x_train), y_train, model.class_weights));
        if (!y_valid.empty()) {
            double vl = detail::weighted_ce(detail::mlp_forward(model, x_valid), y_valid, model.class_weights);
            model.epoch_valid_loss.push_back(vl);
            if (vl < best_valid - 1e-12) {
                best_valid = vl;
                best_w = model.weights;
                best_b = model.biases;
                stale = 0;
            } else if (++stale >= spec.early_stop_patience) {
                break;
            }
        }
    }
    if (!y_valid.empty() && std::isfinite(best_valid)) {
        model.weights = best_w;
        model.biases = best_b;
    }
    return model;
}

// Predicted cluster ids (retained label set); argmax ties go to the first class.
inline std::vector<long> predict(const MlpClassifier& model, const Matrix& x) {
    if (model.weights.empty()) throw std::runtime_error("predict: untrained classifier");
    if (x.cols() != model.weights.front().rows())
        throw std::runtime_error("predict: feature dimension mismatch");
    Matrix proba = detail::mlp_forward(model, x);
    std::vector<long> out(static_cast<std::size_t>(x.rows()));
    for (long r = 0; r < x.rows(); ++r) {
        long best = 0;
        for (long c = 1; c < proba.cols(); ++c)
            if (proba(r, c) > proba(r, best)) best = c;
        out[static_cast<std::size_t>(r)] = model.classes[static_cast<std::size_t>(best)];
    }
    return out;
}

inline void save_classifier(const std::filesystem::path& prefix, const MlpClassifier& model) {
    nlohmann::json j;
    j["classes"] = model.classes;
    j["class_weights"] = model.class_weights;
    j["layers"] = model.weights.size();
    atomic_write_file(prefix.string() + ".json", j.dump(2) + "\n");
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        save_tmx(prefix.string() + ".w" + std::to_string(l) + ".tmx", model.weights[l]);
        Matrix b(1, model.biases[l].size());
        b.row(0) = model.biases[l].transpose();
        save_tmx(prefix.string() + ".b" + std::to_string(l) + ".tmx", b);
    }
}

inline MlpClassifier load_classifier(const std::filesystem::path& prefix) {
    nlohmann::json j = nlohmann::json::parse(read_file(prefix.string() + ".json"));
    MlpClassifier model;
    model.classes = j.at("classes").get<std::vector<long>>();
    model.class_weights = j.at("class_weights").get<std::vector<double>>();
    std::size_t layers = j.at("layers").get<std::size_t>();
    for (std::size_t l = 0; l < layers; ++l) {
        model.weights.push_back(load_tmx(prefix.string() + ".w" + std::to_string(l) + ".tmx"));
        Matrix b = load_tmx(prefix.string() + ".b" + std::to_string(l) + ".tmx");
        model.biases.push_back(b.row(0).transpose());
    }
    return model;
}

}  // namespace topomap
