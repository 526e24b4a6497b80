#pragma once

// ============================================================================
// FILE: tsne.hpp
//
// BRIEF: Exact (non-approximate) t-SNE for desk-scale inputs. Gaussian input
// affinities with per-point bandwidth found by binary search on the target
// perplexity, Student-t output affinities, gradient descent with the
// reference schedule: early exaggeration 12 for the first 250 iterations,
// learning rate 200, momentum 0.5 switching to 0.8 at iteration 250.
// ============================================================================

#include <topomap/embedding.hpp>

#include <cmath>
#include <random>
#include <stdexcept>

namespace topomap {

struct TsneResult {
    Matrix y;
    double kl_initial = 0.0;
    double kl_final = 0.0;
};

namespace detail {

// Row-stochastic affinities with entropy log(perplexity) per row, then
// symmetrized to sum 1.
inline Matrix tsne_affinities(const Matrix& x, double perplexity) {
    const long n = x.rows();
    Matrix d2(n, n);
    for (long i = 0; i < n; ++i) {
        d2(i, i) = 0.0;
        for (long j = i + 1; j < n; ++j) {
            double v = (x.row(i) - x.row(j)).squaredNorm();
            d2(i, j) = v;
            d2(j, i) = v;
        }
    }
    const double log_u = std::log(perplexity);
    Matrix p = Matrix::Zero(n, n);
    for (long i = 0; i < n; ++i) {
        double beta = 1.0, beta_lo = 0.0, beta_hi = std::numeric_limits<double>::infinity();
        Vector row(n);
        for (int it = 0; it < 50; ++it) {
            double sum = 0.0;
            for (long j = 0; j < n; ++j) {
                row(j) = j == i ? 0.0 : std::exp(-d2(i, j) * beta);
                sum += row(j);
            }
            if (sum <= 0.0) sum = std::numeric_limits<double>::min();
            double h = 0.0;  // Shannon entropy of the row distribution, nats
            for (long j = 0; j < n; ++j)
                if (j != i) h += beta * d2(i, j) * row(j);
            h = h / sum + std::log(sum);
            double diff = h - log_u;
            if (std::abs(diff) < 1e-5) break;
            if (diff > 0) {
                beta_lo = beta;
                beta = std::isinf(beta_hi) ? beta * 2.0 : (beta + beta_hi) / 2.0;
            } else {
                beta_hi = beta;
                beta = (beta + beta_lo) / 2.0;
            }
            for (long j = 0; j < n; ++j) row(j) = j == i ? 0.0 : std::exp(-d2(i, j) * beta);
        }
        double sum = row.sum();
        if (sum <= 0.0) sum = std::numeric_limits<double>::min();
        p.row(i) = row.transpose() / sum;
    }
    Matrix sym = (p + p.transpose()) / (2.0 * static_cast<double>(n));
    return sym.cwiseMax(1e-12);
}

// Student-t affinities Q and the unnormalized kernel W = 1/(1+|yi-yj|^2).
inline void tsne_q(const Matrix& y, Matrix& w, Matrix& q) {
    const long n = y.rows();
    w.resize(n, n);
    double sum = 0.0;
    for (long i = 0; i < n; ++i) {
        w(i, i) = 0.0;
        for (long j = i + 1; j < n; ++j) {
            double v = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
            w(i, j) = v;
            w(j, i) = v;
            sum += 2.0 * v;
        }
    }
    q = (w / std::max(sum, std::numeric_limits<double>::min())).cwiseMax(1e-12);
}

inline double tsne_kl(const Matrix& p, const Matrix& q) {
    double kl = 0.0;
    for (long i = 0; i < p.rows(); ++i)
        for (long j = 0; j < p.cols(); ++j)
            if (i != j) kl += p(i, j) * std::log(p(i, j) / q(i, j));
    return kl;
}

}  // namespace detail

inline TsneResult tsne_fit(const Matrix& x, long out_dim, double perplexity, long iterations,
                           std::uint64_t seed) {
    const long n = x.rows();
    if (out_dim != 2 && out_dim != 3) throw std::runtime_error("tsne_fit: out_dim must be 2 or 3");
    if (perplexity <= 0) throw std::runtime_error("tsne_fit: perplexity must be positive");
    if (static_cast<double>(n) < 3.0 * perplexity)
        throw std::runtime_error("tsne_fit: perplexity " + format_double(perplexity) +
                                 " infeasible for " + std::to_string(n) + " rows (need rows >= 3*perplexity)");

    Matrix p = detail::tsne_affinities(x, perplexity);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1e-2);
    Matrix y(n, out_dim);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < out_dim; ++j) y(i, j) = gauss(rng);

    Matrix w, q;
    detail::tsne_q(y, w, q);
    TsneResult res;
    res.kl_initial = detail::tsne_kl(p, q);

    const double lr = 200.0;
    const long exaggeration_until = 250;
    Matrix update = Matrix::Zero(n, out_dim);
    Matrix gains = Matrix::Ones(n, out_dim);
    for (long iter = 0; iter < iterations; ++iter) {
        const double exaggeration = iter < exaggeration_until ? 12.0 : 1.0;
        const double momentum = iter < exaggeration_until ? 0.5 : 0.8;
        detail::tsne_q(y, w, q);
        Matrix grad = Matrix::Zero(n, out_dim);
        for (long i = 0; i < n; ++i)
            for (long j = 0; j < n; ++j) {
                if (i == j) continue;
                const double mult = (exaggeration * p(i, j) - q(i, j)) * w(i, j);
                grad.row(i) += 4.0 * mult * (y.row(i) - y.row(j));
            }
        for (long i = 0; i < n; ++i)
            for (long j = 0; j < out_dim; ++j) {
                const bool same_sign = (grad(i, j) > 0) == (update(i, j) > 0);
                gains(i, j) = same_sign ? std::max(gains(i, j) * 0.8, 0.01) : gains(i, j) + 0.2;
            }
        update = momentum * update - lr * gains.cwiseProduct(grad);
        y += update;
        y.rowwise() -= y.colwise().mean();
    }

    detail::tsne_q(y, w, q);
    res.kl_final = detail::tsne_kl(p, q);
    res.y = y;
    if (!res.y.allFinite()) throw std::runtime_error("tsne_fit: produced non-finite output");
    return res;
}

inline EmbeddedSet fit_tsne(const Dataset& ds, long out_dim, double perplexity, long iterations,
                            std::uint64_t seed) {
    TsneResult res = tsne_fit(ds.features, out_dim, perplexity, iterations, seed);
    return EmbeddedSet{res.y, out_dim};
}

}  // namespace topomap
