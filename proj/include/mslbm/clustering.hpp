#ifndef MSLBM_CLUSTERING_HPP
#define MSLBM_CLUSTERING_HPP

#include <optional>
#include <utility>
#include <vector>

#include "mslbm/linalg.hpp"
#include "mslbm/model.hpp"
#include "mslbm/rng.hpp"

namespace mslbm {

struct KMeansResult {
    Membership labels;
    Matrix centroids;  // K x r
    double objective = 0.0;  // sum of squared distances to assigned centroid
    int restarts_used = 0;
};

/// Best-of-restarts Lloyd with kmeans++ seeding. Each restart runs until
/// assignments are stable or 300 iterations; empty clusters are repaired by
/// stealing the point farthest from its centroid. Restart seeds are derived
/// as (rng, restart index), so a longer restart budget extends rather than
/// replaces a shorter one.
KMeansResult kmeans(const LowRankFactor& u, int K, int restarts, RngStream rng);

/// Lloyd-style alternation with Euclidean assignment and coordinate-wise
/// median centroid update, on row-normalized input.
KMeansResult kmedian(const LowRankFactor& u_normalized, int K, int restarts, RngStream rng);

/// Block means of C_hat over the label partition; entries below threshold
/// in absolute value are zeroed.
GroupWeights omega_hat(const Membership& labels, const SymMatrix& c_hat, double threshold = 0.0);

struct KCandidate {
    int K = 0;
    double wss = 0.0;
    std::optional<double> silhouette;
    std::optional<double> composite;
};

struct KSelectionReport {
    std::vector<KCandidate> candidates;  // sorted by K ascending
};

/// WSS and mean silhouette per grid value. Report only; no automatic elbow.
/// Each K also seeds one extra Lloyd run from the previous K's best
/// centroids plus the farthest point, which makes WSS non-increasing in K.
KSelectionReport select_k_unsupervised(const LowRankFactor& u, const std::vector<int>& k_grid,
                                       int restarts, RngStream rng);

using VertexPairs = std::vector<std::pair<int, int>>;

/// Composite score = sensitivity (positive pairs co-clustered) + specificity
/// (negative pairs separated); best K is the argmax, ties to the smallest K.
std::pair<int, KSelectionReport> select_k_pairs(const LowRankFactor& u,
                                                const std::vector<int>& k_grid,
                                                const VertexPairs& positive_pairs,
                                                const VertexPairs& negative_pairs, int restarts,
                                                RngStream rng);

}  // namespace mslbm

#endif
