#include "mslbm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mslbm/fit.hpp"

namespace mslbm {

const char* baseline_name(BaselineMethod m) {
    switch (m) {
        case BaselineMethod::sam_mean: return "sam_mean";
        case BaselineMethod::sam_median: return "sam_median";
        case BaselineMethod::mase: return "mase";
        case BaselineMethod::mase_scaled: return "mase_scaled";
        case BaselineMethod::single_view: return "single_view";
    }
    return "?";
}

namespace {

// top-r eigenpairs ranked by |eigenvalue|, keeping the descending-eigenvalue
// order within the selection deterministic
std::pair<Matrix, Vector> top_r_abs(const SymMatrix& w, int r) {
    EigenPairs ep = sym_eigen(w);
    const int n = w.dim();
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return std::abs(ep.values(a)) > std::abs(ep.values(b));
    });
    Matrix v(n, r);
    Vector d(r);
    for (int k = 0; k < r; ++k) {
        v.col(k) = ep.vectors.col(idx[k]);
        d(k) = ep.values(idx[k]);
    }
    return {std::move(v), std::move(d)};
}

}  // namespace

BaselineEmbedding sam_embed(const MultiViewData& views, int r) {
    if (views.m() < 1) throw invalid_parameter("sam_embed: no views");
    if (r < 1 || r > views.n) throw invalid_parameter("sam_embed: bad rank");
    Matrix sum = Matrix::Zero(views.n, views.n);
    for (const SymMatrix& w : views.views) sum += w.mat();
    auto [v, d] = top_r_abs(SymMatrix(std::move(sum)), r);
    return BaselineEmbedding{BaselineMethod::sam_mean, LowRankFactor{std::move(v)}, false};
}

BaselineEmbedding mase_embed(const MultiViewData& views, int r, bool scaled) {
    if (views.m() < 1) throw invalid_parameter("mase_embed: no views");
    if (r < 1 || r > views.n) throw invalid_parameter("mase_embed: bad rank");
    const int m = views.m();
    Matrix stack(views.n, static_cast<Eigen::Index>(m) * r);
    for (int s = 0; s < m; ++s) {
        auto [v, d] = top_r_abs(views.views[s], r);
        if (scaled) {
            for (int k = 0; k < r; ++k) v.col(k) *= std::sqrt(std::abs(d(k)));
        }
        stack.middleCols(static_cast<Eigen::Index>(s) * r, r) = v;
    }
    Eigen::BDCSVD<Matrix> svd(stack, Eigen::ComputeThinU);
    return BaselineEmbedding{scaled ? BaselineMethod::mase_scaled : BaselineMethod::mase,
                             LowRankFactor{svd.matrixU().leftCols(r)}, false};
}

SingleViewResult single_view_pipeline(const SymMatrix& w, int r, int K, const AsalmConfig& cfg,
                                      RngStream rng, int restarts) {
    AsalmResult a = asalm_decompose(w, cfg);
    RecResult rc = rec(a.low_rank, r);
    KMeansResult km = kmeans(rc.u, K, restarts, rng.substream("kmeans"));
    GroupWeights omega = omega_hat(km.labels, rc.c);
    return SingleViewResult{std::move(km.labels), std::move(omega), std::move(a.theta),
                            std::move(rc.c)};
}

}  // namespace mslbm
