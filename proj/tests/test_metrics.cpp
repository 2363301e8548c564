#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mslbm/metrics.hpp"
#include "test_util.hpp"

using namespace mslbm;

namespace {

// exact minimum over all permutations of the padded label space
double mce_brute_force(const Membership& hat, const Membership& truth) {
    const int q = std::max(hat.K, truth.K);
    std::vector<int> perm(q);
    std::iota(perm.begin(), perm.end(), 0);
    int best_matched = -1;
    do {
        int matched = 0;
        for (int i = 0; i < hat.n(); ++i) {
            if (perm[hat.labels[i]] == truth.labels[i]) ++matched;
        }
        best_matched = std::max(best_matched, matched);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return (hat.n() - best_matched) / static_cast<double>(hat.n());
}

Membership random_labels(int n, int K, RngStream& rng) {
    Membership z;
    z.K = K;
    z.labels.resize(n);
    // ensure every cluster appears
    for (int k = 0; k < K; ++k) z.labels[k] = k;
    for (int i = K; i < n; ++i) z.labels[i] = static_cast<int>(rng.uniform_int(K));
    return z;
}

}  // namespace

TEST_CASE("mce basics") {
    Membership a{{0, 1, 2, 0, 1, 2}, 3};
    CHECK(mce(a, a) == doctest::Approx(0.0));

    // permuted cluster ids still give zero
    Membership b = a;
    for (int& lab : b.labels) lab = (lab + 1) % 3;
    CHECK(mce(b, a) == doctest::Approx(0.0));

    // one flipped label out of n
    Membership c = a;
    c.labels[5] = 0;
    CHECK(mce(c, a) == doctest::Approx(1.0 / 6.0));

    Membership wrong{{0, 1}, 2};
    CHECK_THROWS_AS(mce(wrong, a), invalid_parameter);
}

TEST_CASE("mce equals brute-force permutation minimum") {
    RngStream rng(30);
    for (int trial = 0; trial < 60; ++trial) {
        const int K = 2 + static_cast<int>(rng.uniform_int(5));  // 2..6
        const int n = K + static_cast<int>(rng.uniform_int(25));
        Membership hat = random_labels(n, K, rng);
        Membership truth = random_labels(n, K, rng);
        CHECK(mce(hat, truth) == doctest::Approx(mce_brute_force(hat, truth)).epsilon(1e-15));
    }
}

TEST_CASE("mce with unequal cluster counts") {
    RngStream rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int k1 = 2 + static_cast<int>(rng.uniform_int(3));
        const int k2 = 2 + static_cast<int>(rng.uniform_int(5));
        const int n = std::max(k1, k2) + static_cast<int>(rng.uniform_int(20));
        Membership hat = random_labels(n, k1, rng);
        Membership truth = random_labels(n, k2, rng);
        CHECK(mce(hat, truth) == doctest::Approx(mce_brute_force(hat, truth)).epsilon(1e-15));
    }
}

TEST_CASE("mce invariances and bound") {
    RngStream rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        const int K = 2 + static_cast<int>(rng.uniform_int(4));
        const int n = K + static_cast<int>(rng.uniform_int(20));
        Membership hat = random_labels(n, K, rng);
        Membership truth = random_labels(n, K, rng);

        // simultaneous relabeling leaves the value unchanged
        const int shift = 1 + static_cast<int>(rng.uniform_int(K - 1));
        Membership hat_s = hat, truth_s = truth;
        for (int& lab : hat_s.labels) lab = (lab + shift) % K;
        for (int& lab : truth_s.labels) lab = (lab + shift) % K;
        CHECK(mce(hat, truth) == doctest::Approx(mce(hat_s, truth_s)).epsilon(1e-15));

        // the best matching always keeps the largest co-occurrence cell
        Matrix counts = Matrix::Zero(K, K);
        for (int i = 0; i < n; ++i) counts(hat.labels[i], truth.labels[i]) += 1.0;
        CHECK(mce(hat, truth) <= (n - counts.maxCoeff()) / n + 1e-15);
    }
}

TEST_CASE("solve_assignment_max on a hand example") {
    Matrix scores(3, 3);
    scores << 1.0, 5.0, 1.0, 5.0, 1.0, 1.0, 1.0, 1.0, 5.0;
    std::vector<int> perm = solve_assignment_max(scores);
    CHECK(perm[0] == 1);
    CHECK(perm[1] == 0);
    CHECK(perm[2] == 2);
}

TEST_CASE("rel_l2") {
    RngStream rng(33);
    Matrix s = testutil::random_matrix(4, 4, rng);
    CHECK(rel_l2(s, s) == doctest::Approx(0.0));
    CHECK(rel_l2(Matrix::Zero(4, 4), s) == doctest::Approx(1.0));
    CHECK(rel_l2(2.0 * s, s) == doctest::Approx(1.0));
    CHECK_THROWS_AS(rel_l2(s, Matrix::Zero(4, 4)), invalid_parameter);
}

TEST_CASE("l0_loss") {
    Matrix s = Matrix::Zero(5, 5);
    s(0, 1) = s(1, 0) = 2.0;
    s(2, 3) = s(3, 2) = -1.0;
    s(4, 4) = 3.0;
    s(1, 2) = s(2, 1) = 0.5;  // 7 nonzero cells in total
    CHECK(l0_loss(s, s, 25.0) == doctest::Approx(0.0));
    CHECK(l0_loss(Matrix::Zero(5, 5), s, 25.0) == doctest::Approx(7.0 / 25.0));

    // random sparse pair against the naive count
    RngStream rng(34);
    Matrix a = Matrix::Zero(6, 6), b = Matrix::Zero(6, 6);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            if (rng.uniform() < 0.3) a(i, j) = rng.normal();
            if (rng.uniform() < 0.3) b(i, j) = rng.normal();
        }
    }
    long count = 0;
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) {
            if ((a(i, j) != 0.0) != (b(i, j) != 0.0)) ++count;
        }
    }
    CHECK(l0_loss(a, b, 9.0) == doctest::Approx(count / 9.0).epsilon(1e-15));
}

TEST_CASE("spearman") {
    Vector x(4);
    x << 1.0, 2.0, 3.0, 4.0;
    CHECK(spearman(x, x) == doctest::Approx(1.0));
    CHECK(spearman(x, Vector(x.reverse())) == doctest::Approx(-1.0));

    Vector y(4);
    y << 1.0, 3.0, 2.0, 4.0;
    CHECK(spearman(x, y) == doctest::Approx(0.8));

    // invariance under a strictly increasing transform of either argument
    Vector xe = x.array().exp();
    CHECK(spearman(xe, y) == doctest::Approx(0.8));

    Vector flat = Vector::Ones(4);
    CHECK_THROWS_AS(spearman(x, flat), undefined_correlation);
}

TEST_CASE("auc_tpr extremes") {
    PairScoreSet set;
    for (int i = 0; i < 4; ++i) set.pairs.push_back({i, i + 1, PairLabel::positive});
    for (int i = 0; i < 6; ++i) set.pairs.push_back({i, i + 2, PairLabel::negative});
    Vector targets(3);
    targets << 0.01, 0.05, 0.10;

    // perfectly separated scores
    set.scores = Vector(10);
    for (int i = 0; i < 4; ++i) set.scores(i) = 10.0 + i;
    for (int i = 4; i < 10; ++i) set.scores(i) = static_cast<double>(i - 4);
    AucResult sep = auc_tpr(set, targets);
    CHECK(sep.auc == doctest::Approx(1.0));
    for (int t = 0; t < 3; ++t) CHECK(sep.tpr_at(t) == doctest::Approx(1.0));

    // identical scores: tie convention gives 1/2
    set.scores = Vector::Ones(10);
    AucResult tie = auc_tpr(set, targets);
    CHECK(tie.auc == doctest::Approx(0.5));

    PairScoreSet single;
    single.pairs.push_back({0, 1, PairLabel::positive});
    single.scores = Vector::Ones(1);
    CHECK_THROWS_AS(auc_tpr(single, targets), invalid_parameter);
}

TEST_CASE("auc_tpr against the pair-counting oracle") {
    RngStream rng(35);
    for (int trial = 0; trial < 10; ++trial) {
        PairScoreSet set;
        set.scores = Vector(10);
        for (int i = 0; i < 4; ++i) {
            set.pairs.push_back({i, i + 1, PairLabel::positive});
            set.scores(i) = rng.normal();
        }
        for (int i = 4; i < 10; ++i) {
            set.pairs.push_back({i, i + 1, PairLabel::negative});
            set.scores(i) = rng.normal();
        }
        // O(P*N) oracle with ties counted half
        double wins = 0.0;
        for (int p = 0; p < 4; ++p) {
            for (int q = 4; q < 10; ++q) {
                if (set.scores(p) > set.scores(q)) {
                    wins += 1.0;
                } else if (set.scores(p) == set.scores(q)) {
                    wins += 0.5;
                }
            }
        }
        Vector targets(2);
        targets << 0.0, 0.5;
        AucResult res = auc_tpr(set, targets);
        CHECK(res.auc == doctest::Approx(wins / 24.0).epsilon(1e-12));

        // FPR 0: the largest threshold keeping every negative out
        double neg_max = -1e300;
        for (int q = 4; q < 10; ++q) neg_max = std::max(neg_max, set.scores(q));
        double tp0 = 0.0;
        for (int p = 0; p < 4; ++p) {
            if (set.scores(p) > neg_max) tp0 += 1.0;
        }
        CHECK(res.tpr_at(0) == doctest::Approx(tp0 / 4.0).epsilon(1e-12));

        // FPR <= 0.5: best TPR over thresholds admitting at most 3 negatives
        std::vector<double> thresholds(set.scores.data(), set.scores.data() + 10);
        std::sort(thresholds.begin(), thresholds.end());
        double best_tpr = 0.0;
        for (double t : thresholds) {
            int fp = 0, tp = 0;
            for (int q = 4; q < 10; ++q) {
                if (set.scores(q) >= t) ++fp;
            }
            for (int p = 0; p < 4; ++p) {
                if (set.scores(p) >= t) ++tp;
            }
            if (fp <= 3) best_tpr = std::max(best_tpr, tp / 4.0);
        }
        CHECK(res.tpr_at(1) == doctest::Approx(best_tpr).epsilon(1e-12));
    }
}

TEST_CASE("auc is invariant under strictly increasing score transforms") {
    RngStream rng(36);
    PairScoreSet set;
    set.scores = Vector(12);
    for (int i = 0; i < 12; ++i) {
        set.pairs.push_back({i, i + 1, i < 5 ? PairLabel::positive : PairLabel::negative});
        set.scores(i) = rng.normal();
    }
    Vector targets(1);
    targets << 0.1;
    const double base = auc_tpr(set, targets).auc;
    PairScoreSet warped = set;
    warped.scores = (3.0 * set.scores.array() + 1.0).tanh();
    CHECK(auc_tpr(warped, targets).auc == doctest::Approx(base).epsilon(1e-12));
}
