#include <topomap/pairwise.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

using namespace topomap;

namespace {

// Three-cluster reference labelling: ten test entries over clusters {0,1,2}
// with w_acc(0,1) = 1, w_acc(0,2) = 1/2, w_acc(1,2) = 7/12.
const std::vector<long> kRefTruth = {0, 1, 1, 0, 1, 0, 0, 2, 2, 2};
const std::vector<long> kRefPred = {0, 1, 2, 0, 1, 2, 2, 0, 2, 1};

}  // namespace

TEST_CASE("reference fixture pair values") {
    auto ab = weighted_pairwise_accuracy(kRefPred, kRefTruth, 0, 1);
    auto ac = weighted_pairwise_accuracy(kRefPred, kRefTruth, 0, 2);
    auto bc = weighted_pairwise_accuracy(kRefPred, kRefTruth, 1, 2);
    REQUIRE(ab.has_value());
    REQUIRE(ac.has_value());
    REQUIRE(bc.has_value());
    REQUIRE_THAT(*ab, Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(*ac, Catch::Matchers::WithinAbs(0.5, 1e-12));
    REQUIRE_THAT(*bc, Catch::Matchers::WithinAbs(7.0 / 12.0, 1e-12));
}

TEST_CASE("reference fixture min pair") {
    MinPair mp = min_pairwise_accuracy(kRefPred, kRefTruth, 3);
    REQUIRE(mp.a == 0);
    REQUIRE(mp.b == 2);
    REQUIRE_THAT(mp.value, Catch::Matchers::WithinAbs(0.5, 1e-12));
}

TEST_CASE("A == B is rejected") {
    REQUIRE_THROWS(weighted_pairwise_accuracy(kRefPred, kRefTruth, 1, 1));
}

TEST_CASE("pair with no kept entries is undefined") {
    std::vector<long> truth = {0, 0, 1, 1};
    std::vector<long> pred = {0, 0, 1, 1};
    REQUIRE_FALSE(weighted_pairwise_accuracy(pred, truth, 2, 3).has_value());
}

TEST_CASE("one empty kept side degenerates to plain accuracy of the other") {
    // No truth-1 entries among kept; truth-0 entries predicted 0,0,1.
    std::vector<long> truth = {0, 0, 0, 2};
    std::vector<long> pred = {0, 0, 1, 1};
    auto v = weighted_pairwise_accuracy(pred, truth, 0, 1);
    REQUIRE(v.has_value());
    REQUIRE_THAT(*v, Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
    // Symmetric call bitwise equal.
    auto w = weighted_pairwise_accuracy(pred, truth, 1, 0);
    REQUIRE(*v == *w);
}

TEST_CASE("symmetry holds exactly and values stay in [0,1]") {
    std::mt19937_64 rng(123);
    for (int rep = 0; rep < 1000; ++rep) {
        const long k = 2 + static_cast<long>(rng() % 5);  // k <= 6
        const std::size_t n = 1 + rng() % 200;
        std::vector<long> pred(n), truth(n);
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] = static_cast<long>(rng() % static_cast<unsigned long>(k));
            truth[i] = static_cast<long>(rng() % static_cast<unsigned long>(k));
        }
        const long a = static_cast<long>(rng() % static_cast<unsigned long>(k));
        long b = static_cast<long>(rng() % static_cast<unsigned long>(k));
        if (b == a) b = (b + 1) % k;
        auto v1 = weighted_pairwise_accuracy(pred, truth, a, b);
        auto v2 = weighted_pairwise_accuracy(pred, truth, b, a);
        REQUIRE(v1.has_value() == v2.has_value());
        if (v1) {
            REQUIRE(*v1 == *v2);  // exact, not approximate
            REQUIRE(*v1 >= 0.0);
            REQUIRE(*v1 <= 1.0);
        }
    }
}

TEST_CASE("equal kept sizes reduce to plain accuracy") {
    std::mt19937_64 rng(55);
    int checked = 0;
    while (checked < 50) {
        std::vector<long> pred(40), truth(40);
        for (int i = 0; i < 40; ++i) {
            pred[static_cast<std::size_t>(i)] = static_cast<long>(rng() % 3);
            truth[static_cast<std::size_t>(i)] = static_cast<long>(rng() % 3);
        }
        long n_aa = 0, n_bb = 0, n_ba = 0, n_ab = 0;
        for (int i = 0; i < 40; ++i) {
            long t = truth[static_cast<std::size_t>(i)], p = pred[static_cast<std::size_t>(i)];
            if ((t != 0 && t != 1) || (p != 0 && p != 1)) continue;
            if (t == 0 && p == 0) ++n_aa;
            if (t == 1 && p == 1) ++n_bb;
            if (t == 0 && p == 1) ++n_ba;
            if (t == 1 && p == 0) ++n_ab;
        }
        long size_a = n_aa + n_ba, size_b = n_bb + n_ab;
        if (size_a != size_b || size_a + size_b == 0) continue;
        ++checked;
        auto v = weighted_pairwise_accuracy(pred, truth, 0, 1);
        double plain = static_cast<double>(n_aa + n_bb) / static_cast<double>(size_a + size_b);
        REQUIRE_THAT(*v, Catch::Matchers::WithinAbs(plain, 1e-12));
    }
}

TEST_CASE("consistent relabeling leaves the multiset of pair values unchanged") {
    std::mt19937_64 rng(99);
    for (int rep = 0; rep < 30; ++rep) {
        const long k = 4;
        std::vector<long> pred(80), truth(80);
        for (std::size_t i = 0; i < 80; ++i) {
            pred[i] = static_cast<long>(rng() % 4);
            truth[i] = static_cast<long>(rng() % 4);
        }
        std::vector<long> perm = {2, 0, 3, 1};
        std::vector<long> pred2(80), truth2(80);
        for (std::size_t i = 0; i < 80; ++i) {
            pred2[i] = perm[static_cast<std::size_t>(pred[i])];
            truth2[i] = perm[static_cast<std::size_t>(truth[i])];
        }
        std::vector<double> vals1, vals2;
        for (long a = 0; a < k; ++a)
            for (long b = a + 1; b < k; ++b) {
                if (auto v = weighted_pairwise_accuracy(pred, truth, a, b)) vals1.push_back(*v);
                if (auto v = weighted_pairwise_accuracy(pred2, truth2, a, b)) vals2.push_back(*v);
            }
        std::sort(vals1.begin(), vals1.end());
        std::sort(vals2.begin(), vals2.end());
        REQUIRE(vals1.size() == vals2.size());
        for (std::size_t i = 0; i < vals1.size(); ++i)
            REQUIRE_THAT(vals1[i], Catch::Matchers::WithinAbs(vals2[i], 1e-12));
        MinPair m1 = min_pairwise_accuracy(pred, truth, k);
        MinPair m2 = min_pairwise_accuracy(pred2, truth2, k);
        REQUIRE_THAT(m1.value, Catch::Matchers::WithinAbs(m2.value, 1e-12));
    }
}

TEST_CASE("min pair matches an independent double loop") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 100; ++rep) {
        const long k = 5;
        std::vector<long> pred(60), truth(60);
        for (std::size_t i = 0; i < 60; ++i) {
            pred[i] = static_cast<long>(rng() % 5);
            truth[i] = static_cast<long>(rng() % 5);
        }
        MinPair mp = min_pairwise_accuracy(pred, truth, k);
        double best = 2.0;
        long ba = -1, bb = -1;
        for (long a = 0; a < k; ++a)
            for (long b = a + 1; b < k; ++b)
                if (auto v = weighted_pairwise_accuracy(pred, truth, a, b))
                    if (*v < best) {
                        best = *v;
                        ba = a;
                        bb = b;
                    }
        REQUIRE(mp.a == ba);
        REQUIRE(mp.b == bb);
        REQUIRE(mp.value == best);
    }
}

TEST_CASE("perfect predictions give min 1.0") {
    std::vector<long> labs = {0, 1, 2, 0, 1, 2, 2, 1};
    MinPair mp = min_pairwise_accuracy(labs, labs, 3);
    REQUIRE(mp.value == 1.0);
}

TEST_CASE("all pairs undefined is an error") {
    std::vector<long> pred = {7, 7, 7};
    std::vector<long> truth = {7, 7, 7};
    REQUIRE_THROWS_WITH(min_pairwise_accuracy(pred, truth, 3),
                        Catch::Matchers::ContainsSubstring("undefined"));
}

TEST_CASE("pairwise matrix is symmetric with NaN diagonal") {
    Matrix m = pairwise_matrix(kRefPred, kRefTruth, 3);
    for (long a = 0; a < 3; ++a) {
        REQUIRE(std::isnan(m(a, a)));
        for (long b = 0; b < 3; ++b)
            if (a != b) {
                REQUIRE_FALSE(std::isnan(m(a, b)));
                REQUIRE(m(a, b) == m(b, a));
            }
    }
    auto overall = overall_pairwise_accuracy(m);
    REQUIRE(overall.has_value());
    REQUIRE_THAT(*overall, Catch::Matchers::WithinAbs((1.0 + 0.5 + 7.0 / 12.0) / 3.0, 1e-12));
}
