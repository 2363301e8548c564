#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mslbm/clustering.hpp"
#include "test_util.hpp"

using namespace mslbm;

namespace {

// three well-separated planar clouds
LowRankFactor three_clouds(int per_cloud, RngStream& rng, std::vector<int>* truth = nullptr) {
    Matrix pts(3 * per_cloud, 2);
    const double centers[3][2] = {{0.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}};
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < per_cloud; ++i) {
            pts(c * per_cloud + i, 0) = centers[c][0] + 0.3 * rng.normal();
            pts(c * per_cloud + i, 1) = centers[c][1] + 0.3 * rng.normal();
            if (truth) truth->push_back(c);
        }
    }
    return LowRankFactor{pts};
}

// exhaustive assignment search with the given centroid rule
double enumerate_best(const Matrix& pts, int K, bool median_centroids) {
    const int n = static_cast<int>(pts.rows());
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> labels(n);
    const long total = static_cast<long>(std::pow(K, n));
    for (long code = 0; code < total; ++code) {
        long c = code;
        std::vector<int> counts(K, 0);
        for (int i = 0; i < n; ++i) {
            labels[i] = static_cast<int>(c % K);
            ++counts[labels[i]];
            c /= K;
        }
        if (std::find(counts.begin(), counts.end(), 0) != counts.end()) continue;
        Matrix centroids = Matrix::Zero(K, pts.cols());
        if (!median_centroids) {
            for (int i = 0; i < n; ++i) centroids.row(labels[i]) += pts.row(i);
            for (int k = 0; k < K; ++k) centroids.row(k) /= counts[k];
        } else {
            for (int k = 0; k < K; ++k) {
                for (int d = 0; d < pts.cols(); ++d) {
                    std::vector<double> vals;
                    for (int i = 0; i < n; ++i) {
                        if (labels[i] == k) vals.push_back(pts(i, d));
                    }
                    std::sort(vals.begin(), vals.end());
                    const std::size_t mid = vals.size() / 2;
                    centroids(k, d) = vals.size() % 2 == 1
                                          ? vals[mid]
                                          : 0.5 * (vals[mid - 1] + vals[mid]);
                }
            }
        }
        double obj = 0.0;
        for (int i = 0; i < n; ++i) obj += (pts.row(i) - centroids.row(labels[i])).squaredNorm();
        best = std::min(best, obj);
    }
    return best;
}

}  // namespace

TEST_CASE("kmeans with K = 1") {
    RngStream rng(1);
    LowRankFactor u{testutil::random_matrix(7, 3, rng)};
    KMeansResult res = kmeans(u, 1, 3, RngStream(2));
    for (int lab : res.labels.labels) CHECK(lab == 0);
    CHECK((res.centroids.row(0) - u.rows.colwise().mean()).cwiseAbs().maxCoeff() <= 1e-12);

    double scatter = 0.0;
    for (int i = 0; i < 7; ++i) scatter += (u.rows.row(i) - res.centroids.row(0)).squaredNorm();
    CHECK(res.objective == doctest::Approx(scatter).epsilon(1e-10));
}

TEST_CASE("kmeans recovers well-separated clouds exactly") {
    RngStream rng(3);
    std::vector<int> truth;
    LowRankFactor u = three_clouds(8, rng, &truth);
    KMeansResult res = kmeans(u, 3, 5, RngStream(4));

    // same partition up to label names
    for (int i = 0; i < u.n(); ++i) {
        for (int j = 0; j < u.n(); ++j) {
            CHECK((truth[i] == truth[j]) ==
                  (res.labels.labels[i] == res.labels.labels[j]));
        }
    }
    // objective equals within-cloud scatter
    Matrix centroids = Matrix::Zero(3, 2);
    std::vector<int> counts(3, 0);
    for (int i = 0; i < u.n(); ++i) {
        centroids.row(truth[i]) += u.rows.row(i);
        ++counts[truth[i]];
    }
    for (int k = 0; k < 3; ++k) centroids.row(k) /= counts[k];
    double scatter = 0.0;
    for (int i = 0; i < u.n(); ++i) scatter += (u.rows.row(i) - centroids.row(truth[i])).squaredNorm();
    CHECK(res.objective == doctest::Approx(scatter).epsilon(1e-9));
}

TEST_CASE("kmeans objective matches exhaustive enumeration on a small instance") {
    RngStream rng(5);
    LowRankFactor u{testutil::random_matrix(8, 2, rng)};
    KMeansResult res = kmeans(u, 2, 20, RngStream(6));
    const double best = enumerate_best(u.rows, 2, false);
    CHECK(res.objective <= best + 1e-9);
    CHECK(res.objective >= best - 1e-9);
}

TEST_CASE("kmeans rejects K > n and bad restarts") {
    RngStream rng(7);
    LowRankFactor u{testutil::random_matrix(3, 2, rng)};
    CHECK_THROWS_AS(kmeans(u, 4, 1, RngStream(8)), invalid_parameter);
    CHECK_THROWS_AS(kmeans(u, 2, 0, RngStream(8)), invalid_parameter);
}

TEST_CASE("kmeans restart objective is monotone in the restart budget") {
    RngStream rng(9);
    LowRankFactor u{testutil::random_matrix(40, 3, rng)};
    double prev = std::numeric_limits<double>::infinity();
    for (int restarts : {1, 2, 4, 8, 16}) {
        KMeansResult res = kmeans(u, 5, restarts, RngStream(10));
        CHECK(res.objective <= prev + 1e-12);
        prev = res.objective;
    }
}

TEST_CASE("kmeans is deterministic given the stream") {
    RngStream rng(11);
    LowRankFactor u{testutil::random_matrix(30, 3, rng)};
    KMeansResult a = kmeans(u, 4, 5, RngStream(12));
    KMeansResult b = kmeans(u, 4, 5, RngStream(12));
    CHECK(a.labels.labels == b.labels.labels);
    CHECK(a.objective == b.objective);
}

TEST_CASE("kmedian with K = n gives zero objective") {
    RngStream rng(13);
    LowRankFactor u = normalize_rows(LowRankFactor{testutil::random_matrix(5, 2, rng)});
    KMeansResult res = kmedian(u, 5, 5, RngStream(14));
    CHECK(res.objective == doctest::Approx(0.0).epsilon(1e-12));
    std::vector<int> sorted = res.labels.labels;
    std::sort(sorted.begin(), sorted.end());
    for (int k = 0; k < 5; ++k) CHECK(sorted[k] == k);
}

TEST_CASE("kmedian centroid resists a single outlier") {
    Matrix pts = Matrix::Zero(10, 2);
    for (int i = 0; i < 9; ++i) pts.row(i) << 1.0, 2.0;
    pts.row(9) << 50.0, -30.0;
    KMeansResult res = kmedian(LowRankFactor{pts}, 1, 1, RngStream(15));
    CHECK(res.centroids(0, 0) == doctest::Approx(1.0));
    CHECK(res.centroids(0, 1) == doctest::Approx(2.0));
}

TEST_CASE("kmedian objective matches enumeration with median centroids") {
    RngStream rng(16);
    LowRankFactor u{testutil::random_matrix(7, 2, rng)};
    KMeansResult res = kmedian(u, 2, 30, RngStream(17));
    const double best = enumerate_best(u.rows, 2, true);
    CHECK(res.objective <= best + 1e-9);
}

TEST_CASE("omega_hat block means") {
    // exact recovery when labels equal the truth
    RngStream rng(18);
    GroupWeights gw = gen_omega(3, 2, 0.6, rng);
    Membership z{{0, 1, 2, 0, 1, 2, 0, 1, 2}, 3};
    SymMatrix c = assemble_c(z, gw);
    GroupWeights est = omega_hat(z, c);
    CHECK((est.omega - gw.omega).cwiseAbs().maxCoeff() <= 1e-12);

    // K = 1 mean of everything
    Membership one{std::vector<int>(9, 0), 1};
    GroupWeights flat = omega_hat(one, c);
    CHECK(flat.omega(0, 0) == doctest::Approx(c.mat().mean()).epsilon(1e-12));

    // random C against the double-loop oracle
    SymMatrix rc = testutil::random_sym(9, rng);
    GroupWeights rest = omega_hat(z, rc);
    for (int k = 0; k < 3; ++k) {
        for (int l = 0; l < 3; ++l) {
            double sum = 0.0;
            int count = 0;
            for (int i = 0; i < 9; ++i) {
                for (int j = 0; j < 9; ++j) {
                    if (z.labels[i] == k && z.labels[j] == l) {
                        sum += rc(i, j);
                        ++count;
                    }
                }
            }
            CHECK(rest.omega(k, l) == doctest::Approx(sum / count).epsilon(1e-12));
        }
    }

    // thresholding zeroes small entries
    GroupWeights cut = omega_hat(z, rc, 1e6);
    CHECK(cut.omega.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("omega_hat label-permutation invariance and rank bound") {
    RngStream rng(19);
    GroupWeights gw = gen_omega(4, 2, 0.6, rng);
    Membership z{{0, 1, 2, 3, 0, 1, 2, 3}, 4};
    SymMatrix c = assemble_c(z, gw);

    // relabel clusters by the cycle k -> (k+1) mod 4
    Membership zp = z;
    for (int& lab : zp.labels) lab = (lab + 1) % 4;
    GroupWeights a = omega_hat(z, c);
    GroupWeights b = omega_hat(zp, c);
    for (int k = 0; k < 4; ++k) {
        for (int l = 0; l < 4; ++l) {
            CHECK(b.omega((k + 1) % 4, (l + 1) % 4) == doctest::Approx(a.omega(k, l)).epsilon(1e-12));
        }
    }

    // rank(omega_hat) <= r: block means of a rank-2 C
    EigenPairs ep = sym_eigen(SymMatrix(a.omega));
    CHECK(ep.values.size() == 4);
    CHECK(std::abs(ep.values(2)) <= 1e-10);

    Membership empty{{0, 0, 2, 2, 0, 0, 2, 2}, 3};  // cluster 1 empty
    CHECK_THROWS_AS(omega_hat(empty, SymMatrix(Matrix::Identity(8, 8))), invalid_parameter);
}

TEST_CASE("select_k_unsupervised silhouette and monotone WSS") {
    RngStream rng(20);
    LowRankFactor u = three_clouds(10, rng);
    KSelectionReport rep = select_k_unsupervised(u, {2, 3, 4, 5}, 5, RngStream(21));
    REQUIRE(rep.candidates.size() == 4);

    // silhouette peaks at the true K = 3
    double best_sil = -2.0;
    int best_k = 0;
    for (const auto& c : rep.candidates) {
        REQUIRE(c.silhouette.has_value());
        if (*c.silhouette > best_sil) {
            best_sil = *c.silhouette;
            best_k = c.K;
        }
    }
    CHECK(best_k == 3);

    // WSS non-increasing in K
    for (std::size_t i = 1; i < rep.candidates.size(); ++i) {
        CHECK(rep.candidates[i].wss <= rep.candidates[i - 1].wss + 1e-9);
    }

    // K = 1 has no silhouette
    KSelectionReport single = select_k_unsupervised(u, {1}, 2, RngStream(22));
    CHECK(!single.candidates[0].silhouette.has_value());
}

TEST_CASE("select_k_unsupervised WSS monotone on hard data too") {
    RngStream rng(23);
    LowRankFactor u{testutil::random_matrix(60, 4, rng)};
    std::vector<int> grid;
    for (int k = 2; k <= 20; k += 2) grid.push_back(k);
    KSelectionReport rep = select_k_unsupervised(u, grid, 3, RngStream(24));
    for (std::size_t i = 1; i < rep.candidates.size(); ++i) {
        CHECK(rep.candidates[i].wss <= rep.candidates[i - 1].wss + 1e-9);
    }
}

TEST_CASE("select_k_pairs composite score") {
    RngStream rng(25);
    std::vector<int> truth;
    LowRankFactor u = three_clouds(8, rng, &truth);

    VertexPairs pos, neg;
    for (int c = 0; c < 3; ++c) {
        pos.emplace_back(c * 8, c * 8 + 1);
        pos.emplace_back(c * 8 + 2, c * 8 + 5);
    }
    neg.emplace_back(0, 8);
    neg.emplace_back(1, 16);
    neg.emplace_back(9, 17);
    neg.emplace_back(3, 10);

    auto [best, rep] = select_k_pairs(u, {1, 2, 3, 4}, pos, neg, 5, RngStream(26));
    CHECK(best == 3);  // perfect clustering: composite = 2 at the true K
    for (const auto& c : rep.candidates) {
        REQUIRE(c.composite.has_value());
        if (c.K == 3) CHECK(*c.composite == doctest::Approx(2.0));
        if (c.K == 1) CHECK(*c.composite == doctest::Approx(1.0));  // sens 1, spec 0
    }

    VertexPairs bad{{0, 99}};
    CHECK_THROWS_AS(select_k_pairs(u, {2}, bad, neg, 2, RngStream(27)), invalid_parameter);
}
