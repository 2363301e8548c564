#ifndef MSLBM_BASELINES_HPP
#define MSLBM_BASELINES_HPP

#include "mslbm/asalm.hpp"
#include "mslbm/clustering.hpp"
#include "mslbm/linalg.hpp"
#include "mslbm/model.hpp"

namespace mslbm {

enum class BaselineMethod { sam_mean, sam_median, mase, mase_scaled, single_view };

const char* baseline_name(BaselineMethod m);

struct BaselineEmbedding {
    BaselineMethod method;
    LowRankFactor u;
    bool normalized = false;
};

/// Leading r eigenvectors (by absolute eigenvalue) of the summed views.
/// Downstream: kmeans on the rows (SAM-mean) or kmedian on row-normalized
/// rows (SAM-median).
BaselineEmbedding sam_embed(const MultiViewData& views, int r);

/// Joint subspace of the per-view spectral embeddings: stack the per-view
/// top-r eigenvector blocks (optionally scaled by |D_s|^{1/2}) and keep the
/// top-r left singular vectors of the stack.
BaselineEmbedding mase_embed(const MultiViewData& views, int r, bool scaled);

struct SingleViewResult {
    Membership labels;
    GroupWeights omega;
    SparseDeviation theta;
    SymMatrix c_hat;
};

/// One-view pipeline: convex decomposition, truncated correlation, kmeans,
/// block-mean group weights.
SingleViewResult single_view_pipeline(const SymMatrix& w, int r, int K, const AsalmConfig& cfg,
                                      RngStream rng, int restarts = 10);

}  // namespace mslbm

#endif
