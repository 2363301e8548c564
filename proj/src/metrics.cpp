#include "mslbm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mslbm {

namespace {

// Hungarian method with potentials, O(n^3), exact for real costs.
std::vector<int> solve_assignment_min(const Matrix& cost) {
    const int n = static_cast<int>(cost.rows());
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> perm(n, -1);
    for (int j = 1; j <= n; ++j) {
        if (p[j] > 0) perm[p[j] - 1] = j - 1;
    }
    return perm;
}

}  // namespace

std::vector<int> solve_assignment_max(const Matrix& scores) {
    if (scores.rows() != scores.cols() || scores.rows() == 0) {
        throw invalid_parameter("solve_assignment_max: need a nonempty square matrix");
    }
    const double shift = scores.maxCoeff();
    return solve_assignment_min(Matrix(shift - scores.array()));
}

MceMatching mce_with_matching(const Membership& labels_hat, const Membership& labels_true) {
    labels_hat.validate();
    labels_true.validate();
    if (labels_hat.n() != labels_true.n()) {
        throw invalid_parameter("mce: label vectors have different lengths");
    }
    const int n = labels_hat.n();
    const int q = std::max(labels_hat.K, labels_true.K);
    Matrix counts = Matrix::Zero(q, q);
    for (int i = 0; i < n; ++i) counts(labels_hat.labels[i], labels_true.labels[i]) += 1.0;

    MceMatching out;
    out.perm = solve_assignment_max(counts);
    double matched = 0.0;
    for (int k = 0; k < q; ++k) matched += counts(k, out.perm[k]);
    out.perm.resize(labels_hat.K);
    out.mce = (static_cast<double>(n) - matched) / static_cast<double>(n);
    return out;
}

double mce(const Membership& labels_hat, const Membership& labels_true) {
    return mce_with_matching(labels_hat, labels_true).mce;
}

double rel_l2(const Matrix& s_hat, const Matrix& s) {
    if (s_hat.rows() != s.rows() || s_hat.cols() != s.cols()) {
        throw invalid_parameter("rel_l2: shape mismatch");
    }
    const double denom = s.squaredNorm();
    if (denom <= 0.0) throw invalid_parameter("rel_l2: reference matrix is zero");
    return (s_hat - s).squaredNorm() / denom;
}

double l0_loss(const Matrix& s_hat, const Matrix& s, double denom, double support_tol) {
    if (s_hat.rows() != s.rows() || s_hat.cols() != s.cols()) {
        throw invalid_parameter("l0_loss: shape mismatch");
    }
    if (!(denom > 0.0)) throw invalid_parameter("l0_loss: denom must be positive");
    long diff = 0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            const bool a = std::abs(s_hat(i, j)) > support_tol;
            const bool b = std::abs(s(i, j)) > support_tol;
            if (a != b) ++diff;
        }
    }
    return static_cast<double>(diff) / denom;
}

namespace {

// average ranks, ties averaged
Vector ranks_of(const Vector& x) {
    const Eigen::Index n = x.size();
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return x(a) < x(b); });
    Vector ranks(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && x(idx[j + 1]) == x(idx[i])) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Eigen::Index k = i; k <= j; ++k) ranks(idx[k]) = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const Vector& x, const Vector& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw invalid_parameter("spearman: need equal lengths >= 2");
    }
    const Vector rx = ranks_of(x);
    const Vector ry = ranks_of(y);
    const Vector cx = rx.array() - rx.mean();
    const Vector cy = ry.array() - ry.mean();
    const double sx = cx.norm();
    const double sy = cy.norm();
    if (sx == 0.0 || sy == 0.0) {
        throw undefined_correlation("spearman: zero rank variance");
    }
    return cx.dot(cy) / (sx * sy);
}

void PairScoreSet::validate() const {
    if (scores.size() != static_cast<Eigen::Index>(pairs.size())) {
        throw invalid_parameter("PairScoreSet: scores not aligned with pairs");
    }
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
        if (std::isnan(scores(i))) throw invalid_parameter("PairScoreSet: NaN score");
    }
}

AucResult auc_tpr(const PairScoreSet& set, const Vector& fpr_targets) {
    set.validate();
    Eigen::Index pos = 0;
    for (const auto& p : set.pairs) {
        if (p.label == PairLabel::positive) ++pos;
    }
    const Eigen::Index neg = static_cast<Eigen::Index>(set.pairs.size()) - pos;
    if (pos == 0 || neg == 0) {
        throw invalid_parameter("auc_tpr: need at least one positive and one negative pair");
    }

    // AUC from average ranks: (R_pos - P(P+1)/2) / (P N), ties counted half
    const Vector ranks = ranks_of(set.scores);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < set.pairs.size(); ++i) {
        if (set.pairs[i].label == PairLabel::positive) rank_sum += ranks(static_cast<Eigen::Index>(i));
    }
    const double p = static_cast<double>(pos);
    const double auc = (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));

    // empirical ROC sweep: predict positive when score >= threshold
    std::vector<std::size_t> order(set.pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return set.scores(static_cast<Eigen::Index>(a)) > set.scores(static_cast<Eigen::Index>(b));
    });

    AucResult out;
    out.auc = auc;
    out.tpr_at = Vector::Zero(fpr_targets.size());
    Vector best_tpr = Vector::Zero(fpr_targets.size());
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;  // all pairs sharing this score flip together
        while (j < order.size() &&
               set.scores(static_cast<Eigen::Index>(order[j])) ==
                   set.scores(static_cast<Eigen::Index>(order[i]))) {
            if (set.pairs[order[j]].label == PairLabel::positive) {
                ++tp;
            } else {
                ++fp;
            }
            ++j;
        }
        const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
        const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
        for (Eigen::Index t = 0; t < fpr_targets.size(); ++t) {
            if (fpr <= fpr_targets(t)) best_tpr(t) = std::max(best_tpr(t), tpr);
        }
        i = j;
    }
    out.tpr_at = best_tpr;
    return out;
}

}  // namespace mslbm
