#ifndef MSLBM_METRICS_HPP
#define MSLBM_METRICS_HPP

#include <tuple>
#include <vector>

#include "mslbm/linalg.hpp"
#include "mslbm/model.hpp"

namespace mslbm {

/// Exact maximum-score assignment on a square score matrix (Hungarian
/// method). Returns perm with perm[row] = assigned column.
std::vector<int> solve_assignment_max(const Matrix& scores);

/// Mis-clustering error: minimum misassigned fraction over all matchings of
/// predicted to true cluster ids. Exact via the assignment solver; cluster
/// counts may differ (the score matrix is padded with zeros).
double mce(const Membership& labels_hat, const Membership& labels_true);

struct MceMatching {
    double mce = 0.0;
    std::vector<int> perm;  // perm[hat cluster] = matched true cluster
};
MceMatching mce_with_matching(const Membership& labels_hat, const Membership& labels_true);

/// ||S_hat - S||_F^2 / ||S||_F^2.
double rel_l2(const Matrix& s_hat, const Matrix& s);

/// Symmetric support difference count (entries where exactly one side
/// exceeds support_tol in magnitude) divided by denom.
double l0_loss(const Matrix& s_hat, const Matrix& s, double denom, double support_tol = 1e-12);

/// Spearman rank correlation with average ranks for ties.
double spearman(const Vector& x, const Vector& y);

enum class PairLabel { positive, negative };

struct ScoredPair {
    int i = 0;
    int j = 0;
    PairLabel label = PairLabel::positive;
};

struct PairScoreSet {
    std::vector<ScoredPair> pairs;
    Vector scores;  // aligned with pairs
    void validate() const;
};

struct AucResult {
    double auc = 0.0;
    Vector tpr_at;  // aligned with the requested FPR targets
};

/// AUC by the rank statistic (ties counted half) and TPR at each target FPR
/// read from the empirical ROC.
AucResult auc_tpr(const PairScoreSet& scores, const Vector& fpr_targets);

}  // namespace mslbm

#endif
