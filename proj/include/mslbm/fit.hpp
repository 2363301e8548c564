#ifndef MSLBM_FIT_HPP
#define MSLBM_FIT_HPP

#include <vector>

#include "mslbm/asalm.hpp"
#include "mslbm/linalg.hpp"
#include "mslbm/model.hpp"

namespace mslbm {

enum class FitMode { exact, inexact };

struct FitConfig {
    int r = 1;
    Vector alpha;        // length m, positive, sums to 1
    Vector lambda;       // length m, nonnegative
    double kappa1 = 100.0;
    int iter_max = 100;
    double tol = 1e-6;   // relative change of C between outer iterations
    FitMode mode = FitMode::inexact;
    int reh_iter_max = 100;
    double reh_tol = 1e-6;

    void validate(int m) const;
};

struct ModelEstimate {
    LowRankFactor u;                       // unit rows; C = U U^T
    std::vector<HeterogeneityDiag> h;      // one per view
    std::vector<SparseDeviation> theta;    // one per view
    std::vector<double> objective_trace;   // value at init, then per iteration
    std::vector<double> kappa_trace;       // cond(U) per iteration
    int iterations = 0;
};

/// Truncated PSD rank-r correlation extraction: clamp negative eigenvalues,
/// keep the top r, split W ~ U U^T into row norms H and unit-row factor.
struct RecResult {
    SymMatrix c;
    HeterogeneityDiag h;
    LowRankFactor u;
};
RecResult rec(const SymMatrix& w, int r);

/// Heterogeneity refit: alternate the two ridge-regularized coordinate
/// updates with the regularizer lambda starting at 1 and incremented each
/// loop; stop when ||H1 - H2||_F <= tol; return the average.
HeterogeneityDiag reh(const SymMatrix& w_tilde, const SymMatrix& c_tilde,
                      const HeterogeneityDiag& h0, int iter_max, double tol);

/// Sparse refit: entrywise soft threshold of W - H C H at tau_s.
SparseDeviation retheta(const SymMatrix& w, const HeterogeneityDiag& h, const SymMatrix& c,
                        double tau_s);

/// Exact U update: fold the views into the weighted low-rank approximation
/// data (X, Y) and descend from u_prev.
LowRankFactor update_u_exact(const MultiViewData& views, const std::vector<SparseDeviation>& theta,
                             const std::vector<HeterogeneityDiag>& h, const FitConfig& cfg,
                             const LowRankFactor& u_prev);

/// Inexact U update: per-view truncated correlation, weighted average,
/// final re-truncation.
struct InexactUpdate {
    SymMatrix c;
    LowRankFactor u;
    std::vector<SymMatrix> per_view_c;
};
InexactUpdate update_u_inexact(const MultiViewData& views,
                               const std::vector<SparseDeviation>& theta, const FitConfig& cfg);

/// The penalized objective: 1/2 sum_s alpha_s ||W_s - Theta_s - H_s U U^T H_s||_F^2
/// + sum_s lambda_s |Theta_s|_1.
double fit_objective(const MultiViewData& views, const LowRankFactor& u,
                     const std::vector<HeterogeneityDiag>& h,
                     const std::vector<SparseDeviation>& theta, const Vector& alpha,
                     const Vector& lambda);

/// Alternating minimization from a warm start. Exact mode updates U through
/// the weighted low-rank subproblem; inexact mode averages per-view
/// truncated correlations and refreshes them after the sparse update.
ModelEstimate fit(const MultiViewData& views, const FitConfig& cfg, const ModelEstimate& init);

/// Full warm start: per-view convex decomposition, per-view truncated
/// correlation, data-driven weights, ensemble of the per-view correlations.
struct WarmStart {
    ModelEstimate init;
    Vector alpha;
    Vector lambda;
    Vector sigma_hat;
    Vector h_hat;                    // mean diagonal of each low-rank part
    std::vector<int> rank_by_view;   // estimate_rank at rel_gap 0.05
    std::vector<AsalmResult> asalm;  // kept for single-view baselines
};
WarmStart warm_start(const MultiViewData& views, int r, const std::vector<AsalmConfig>& cfgs);

}  // namespace mslbm

#endif
