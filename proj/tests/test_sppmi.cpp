#include <doctest.h>

#include <cmath>

#include "mslbm/sppmi.hpp"
#include "test_util.hpp"

using namespace mslbm;

TEST_CASE("build_sppmi direct formula") {
    // counts(0,1)=4 with marginals 5 and 4 out of 10 pairs: PMI = log 2
    CooccurrenceCounts counts;
    counts.n = 3;
    counts.counts = {{0, 1, 4}, {0, 2, 1}, {1, 2, 0}, {2, 2, 5}};
    counts.total = 10;
    counts.marginals = {5, 4, 6};
    SymMatrix w = build_sppmi(counts);
    CHECK(w(0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(w(1, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("build_sppmi clips at zero") {
    // a pair with P(x,y) = P(x) P(y) sits exactly on the boundary,
    // a rarer-than-independent pair clips to zero
    CooccurrenceCounts c = CooccurrenceCounts::from_counts(
        3, {{0, 0, 4}, {0, 1, 2}, {1, 1, 1}, {2, 2, 8}, {1, 2, 1}});
    SymMatrix w = build_sppmi(c);
    const double total = 16.0;
    auto pmi = [&](double pxy, double px, double py) {
        return std::log((pxy / total) / ((px / total) * (py / total)));
    };
    // marginals: 4+2=6, 2+1+1=4, 8+1=9 (diagonal counted once)
    CHECK(w(0, 1) == doctest::Approx(std::max(0.0, pmi(2, 6, 4))).epsilon(1e-12));
    CHECK(w(1, 2) == doctest::Approx(std::max(0.0, pmi(1, 4, 9))).epsilon(1e-12));
    CHECK(w(0, 2) == 0.0);  // zero count stays zero, never -inf
}

TEST_CASE("build_sppmi output is symmetric nonnegative with matching support") {
    RngStream rng(1);
    std::vector<CountEntry> entries;
    const int n = 10;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            if (rng.uniform() < 0.4) {
                entries.push_back({i, j, static_cast<std::int64_t>(1 + rng.uniform_int(20))});
            }
        }
    }
    CooccurrenceCounts counts = CooccurrenceCounts::from_counts(n, entries);
    SymMatrix w = build_sppmi(counts);
    Matrix dense = Matrix::Zero(n, n);
    for (const auto& e : counts.counts) {
        dense(e.i, e.j) = static_cast<double>(e.count);
        dense(e.j, e.i) = static_cast<double>(e.count);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            CHECK(w(i, j) >= 0.0);
            CHECK(w(i, j) == w(j, i));
            if (dense(i, j) == 0.0) CHECK(w(i, j) == 0.0);
        }
    }

    // scaling all counts by an integer leaves the output unchanged
    std::vector<CountEntry> scaled = entries;
    for (auto& e : scaled) e.count *= 7;
    SymMatrix w7 = build_sppmi(CooccurrenceCounts::from_counts(n, scaled));
    CHECK((w7.mat() - w.mat()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("build_sppmi optional shift") {
    CooccurrenceCounts c = CooccurrenceCounts::from_counts(2, {{0, 1, 8}, {0, 0, 1}, {1, 1, 1}});
    SymMatrix base = build_sppmi(c, 0.0);
    SymMatrix shifted = build_sppmi(c, 0.2);
    CHECK(shifted(0, 1) == doctest::Approx(std::max(0.0, base(0, 1) - 0.2)).epsilon(1e-12));
}

TEST_CASE("CooccurrenceCounts validation") {
    CooccurrenceCounts bad;
    bad.n = 2;
    bad.counts = {{0, 1, 3}};
    bad.total = 3;
    bad.marginals = {3, 2};  // wrong: should be 3, 3
    CHECK_THROWS_AS(bad.validate(), inconsistency_error);

    CooccurrenceCounts dup;
    dup.n = 2;
    dup.counts = {{0, 1, 1}, {0, 1, 2}};
    dup.total = 3;
    dup.marginals = {3, 3};
    CHECK_THROWS_AS(dup.validate(), invalid_parameter);

    CooccurrenceCounts empty;
    empty.n = 1;
    empty.total = 0;
    empty.marginals = {0};
    CHECK_THROWS_AS(build_sppmi(empty), invalid_parameter);
}
