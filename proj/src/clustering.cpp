#include "mslbm/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mslbm {

namespace {

constexpr int kLloydIterMax = 300;

double sq_dist(const Matrix& pts, int i, const Matrix& centroids, int k) {
    return (pts.row(i) - centroids.row(k)).squaredNorm();
}

// kmeans++: first centroid uniform, then proportional to squared distance.
Matrix seed_plus_plus(const Matrix& pts, int K, RngStream& rng) {
    const int n = static_cast<int>(pts.rows());
    Matrix centroids(K, pts.cols());
    centroids.row(0) = pts.row(static_cast<int>(rng.uniform_int(n)));
    Vector d2(n);
    for (int i = 0; i < n; ++i) d2(i) = (pts.row(i) - centroids.row(0)).squaredNorm();
    for (int k = 1; k < K; ++k) {
        const double total = d2.sum();
        int pick;
        if (total <= 0.0) {
            pick = static_cast<int>(rng.uniform_int(n));
        } else {
            double target = rng.uniform() * total;
            pick = n - 1;
            for (int i = 0; i < n; ++i) {
                target -= d2(i);
                if (target <= 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.row(k) = pts.row(pick);
        for (int i = 0; i < n; ++i) {
            d2(i) = std::min(d2(i), (pts.row(i) - centroids.row(k)).squaredNorm());
        }
    }
    return centroids;
}

std::vector<int> assign(const Matrix& pts, const Matrix& centroids) {
    const int n = static_cast<int>(pts.rows());
    const int K = static_cast<int>(centroids.rows());
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        double best_d = sq_dist(pts, i, centroids, 0);
        for (int k = 1; k < K; ++k) {
            const double d = sq_dist(pts, i, centroids, k);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        labels[i] = best;
    }
    return labels;
}

// give each empty cluster the point currently farthest from its own centroid
void repair_empty(const Matrix& pts, Matrix& centroids, std::vector<int>& labels) {
    const int n = static_cast<int>(pts.rows());
    const int K = static_cast<int>(centroids.rows());
    std::vector<int> counts(K, 0);
    for (int lab : labels) ++counts[lab];
    for (int k = 0; k < K; ++k) {
        if (counts[k] > 0) continue;
        int far = -1;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
            if (counts[labels[i]] <= 1) continue;
            const double d = sq_dist(pts, i, centroids, labels[i]);
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        if (far < 0) break;  // fewer distinct points than clusters
        --counts[labels[far]];
        labels[far] = k;
        counts[k] = 1;
        centroids.row(k) = pts.row(far);
    }
}

enum class CentroidRule { mean, median };

void update_centroids(const Matrix& pts, const std::vector<int>& labels, Matrix& centroids,
                      CentroidRule rule) {
    const int K = static_cast<int>(centroids.rows());
    const int dim = static_cast<int>(pts.cols());
    if (rule == CentroidRule::mean) {
        centroids.setZero();
        std::vector<int> counts(K, 0);
        for (int i = 0; i < pts.rows(); ++i) {
            centroids.row(labels[i]) += pts.row(i);
            ++counts[labels[i]];
        }
        for (int k = 0; k < K; ++k) {
            if (counts[k] > 0) centroids.row(k) /= static_cast<double>(counts[k]);
        }
    } else {
        std::vector<std::vector<int>> members(K);
        for (int i = 0; i < pts.rows(); ++i) members[labels[i]].push_back(i);
        for (int k = 0; k < K; ++k) {
            if (members[k].empty()) continue;
            for (int d = 0; d < dim; ++d) {
                std::vector<double> vals;
                vals.reserve(members[k].size());
                for (int i : members[k]) vals.push_back(pts(i, d));
                std::sort(vals.begin(), vals.end());
                const std::size_t mid = vals.size() / 2;
                centroids(k, d) = vals.size() % 2 == 1 ? vals[mid]
                                                       : 0.5 * (vals[mid - 1] + vals[mid]);
            }
        }
    }
}

double scatter(const Matrix& pts, const std::vector<int>& labels, const Matrix& centroids) {
    double obj = 0.0;
    for (int i = 0; i < pts.rows(); ++i) obj += sq_dist(pts, i, centroids, labels[i]);
    return obj;
}

KMeansResult lloyd_from(const Matrix& pts, Matrix centroids, CentroidRule rule) {
    std::vector<int> labels = assign(pts, centroids);
    repair_empty(pts, centroids, labels);
    for (int it = 0; it < kLloydIterMax; ++it) {
        update_centroids(pts, labels, centroids, rule);
        std::vector<int> next = assign(pts, centroids);
        repair_empty(pts, centroids, next);
        if (next == labels) break;
        labels = std::move(next);
    }
    KMeansResult res;
    res.objective = scatter(pts, labels, centroids);
    res.labels = Membership{std::move(labels), static_cast<int>(centroids.rows())};
    res.centroids = std::move(centroids);
    return res;
}

KMeansResult best_of_restarts(const Matrix& pts, int K, int restarts, RngStream& rng,
                              CentroidRule rule, const Matrix* extra_start = nullptr) {
    if (K < 1) throw invalid_parameter("clustering: K must be >= 1");
    if (K > pts.rows()) throw invalid_parameter("clustering: K exceeds number of points");
    if (restarts < 1) throw invalid_parameter("clustering: restarts must be >= 1");

    KMeansResult best;
    best.objective = std::numeric_limits<double>::infinity();
    for (int rstart = 0; rstart < restarts; ++rstart) {
        RngStream sub = rng.substream("restart", static_cast<std::uint64_t>(rstart));
        KMeansResult cand = lloyd_from(pts, seed_plus_plus(pts, K, sub), rule);
        if (cand.objective < best.objective) best = std::move(cand);
    }
    if (extra_start && extra_start->rows() == K) {
        KMeansResult cand = lloyd_from(pts, *extra_start, rule);
        if (cand.objective < best.objective) best = std::move(cand);
    }
    best.restarts_used = restarts;
    return best;
}

}  // namespace

KMeansResult kmeans(const LowRankFactor& u, int K, int restarts, RngStream rng) {
    return best_of_restarts(u.rows, K, restarts, rng, CentroidRule::mean);
}

KMeansResult kmedian(const LowRankFactor& u_normalized, int K, int restarts, RngStream rng) {
    return best_of_restarts(u_normalized.rows, K, restarts, rng, CentroidRule::median);
}

GroupWeights omega_hat(const Membership& labels, const SymMatrix& c_hat, double threshold) {
    labels.validate();
    if (threshold < 0.0) throw invalid_parameter("omega_hat: negative threshold");
    if (labels.n() != c_hat.dim()) throw invalid_parameter("omega_hat: dimension mismatch");
    const std::vector<int> sizes = labels.cluster_sizes();
    for (int k = 0; k < labels.K; ++k) {
        if (sizes[k] == 0) {
            throw invalid_parameter("omega_hat: cluster " + std::to_string(k) + " is empty");
        }
    }
    const int K = labels.K;
    Matrix sums = Matrix::Zero(K, K);
    for (int i = 0; i < labels.n(); ++i) {
        for (int j = 0; j < labels.n(); ++j) {
            sums(labels.labels[i], labels.labels[j]) += c_hat(i, j);
        }
    }
    Matrix omega(K, K);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < K; ++l) {
            double v = sums(k, l) / (static_cast<double>(sizes[k]) * sizes[l]);
            if (std::abs(v) < threshold) v = 0.0;
            omega(k, l) = v;
        }
    }
    return GroupWeights{K, 0.5 * (omega + omega.transpose().eval())};
}

namespace {

std::optional<double> mean_silhouette(const Matrix& pts, const Membership& labels) {
    const int K = labels.K;
    if (K < 2) return std::nullopt;
    const int n = labels.n();
    const std::vector<int> sizes = labels.cluster_sizes();
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (sizes[labels.labels[i]] <= 1) continue;  // singleton: s_i = 0
        Vector mean_d = Vector::Zero(K);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            mean_d(labels.labels[j]) += (pts.row(i) - pts.row(j)).norm();
        }
        const int own = labels.labels[i];
        const double a = mean_d(own) / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) {
            if (k == own || sizes[k] == 0) continue;
            b = std::min(b, mean_d(k) / static_cast<double>(sizes[k]));
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

// farthest point from its assigned centroid, used to grow K by one
int farthest_point(const Matrix& pts, const KMeansResult& res) {
    int far = 0;
    double far_d = -1.0;
    for (int i = 0; i < pts.rows(); ++i) {
        const double d = sq_dist(pts, i, res.centroids, res.labels.labels[i]);
        if (d > far_d) {
            far_d = d;
            far = i;
        }
    }
    return far;
}

}  // namespace

KSelectionReport select_k_unsupervised(const LowRankFactor& u, const std::vector<int>& k_grid,
                                       int restarts, RngStream rng) {
    if (k_grid.empty()) throw invalid_parameter("select_k_unsupervised: empty grid");
    std::vector<int> grid = k_grid;
    std::sort(grid.begin(), grid.end());

    KSelectionReport report;
    Matrix prev_centroids;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        const int K = grid[gi];
        RngStream sub = rng.substream("k", static_cast<std::uint64_t>(K));
        Matrix warm;
        if (gi > 0 && prev_centroids.rows() > 0 && prev_centroids.rows() < K) {
            // top up the previous solution's centroids with farthest points
            warm = Matrix(K, u.r());
            warm.topRows(prev_centroids.rows()) = prev_centroids;
            Matrix partial = prev_centroids;
            for (int k = static_cast<int>(prev_centroids.rows()); k < K; ++k) {
                std::vector<int> labs = assign(u.rows, warm.topRows(k));
                KMeansResult tmp;
                tmp.centroids = warm.topRows(k);
                tmp.labels = Membership{labs, k};
                warm.row(k) = u.rows.row(farthest_point(u.rows, tmp));
            }
        }
        KMeansResult res = best_of_restarts(u.rows, K, restarts, sub, CentroidRule::mean,
                                            warm.rows() == K ? &warm : nullptr);
        KCandidate cand;
        cand.K = K;
        cand.wss = res.objective;
        cand.silhouette = mean_silhouette(u.rows, res.labels);
        report.candidates.push_back(cand);
        prev_centroids = res.centroids;
    }
    return report;
}

std::pair<int, KSelectionReport> select_k_pairs(const LowRankFactor& u,
                                                const std::vector<int>& k_grid,
                                                const VertexPairs& positive_pairs,
                                                const VertexPairs& negative_pairs, int restarts,
                                                RngStream rng) {
    if (k_grid.empty()) throw invalid_parameter("select_k_pairs: empty grid");
    if (positive_pairs.empty() || negative_pairs.empty()) {
        throw invalid_parameter("select_k_pairs: need nonempty positive and negative pair sets");
    }
    auto check = [&](const VertexPairs& pairs) {
        for (const auto& [i, j] : pairs) {
            if (i < 0 || i >= u.n() || j < 0 || j >= u.n()) {
                throw invalid_parameter("select_k_pairs: pair index out of range");
            }
        }
    };
    check(positive_pairs);
    check(negative_pairs);

    std::vector<int> grid = k_grid;
    std::sort(grid.begin(), grid.end());

    KSelectionReport report;
    int best_k = grid.front();
    double best_composite = -std::numeric_limits<double>::infinity();
    for (int K : grid) {
        RngStream sub = rng.substream("k", static_cast<std::uint64_t>(K));
        KMeansResult res = best_of_restarts(u.rows, K, restarts, sub, CentroidRule::mean);

        int co = 0;
        for (const auto& [i, j] : positive_pairs) {
            if (res.labels.labels[i] == res.labels.labels[j]) ++co;
        }
        int sep = 0;
        for (const auto& [i, j] : negative_pairs) {
            if (res.labels.labels[i] != res.labels.labels[j]) ++sep;
        }
        const double sensitivity = static_cast<double>(co) / positive_pairs.size();
        const double specificity = static_cast<double>(sep) / negative_pairs.size();

        KCandidate cand;
        cand.K = K;
        cand.wss = res.objective;
        cand.silhouette = mean_silhouette(u.rows, res.labels);
        cand.composite = sensitivity + specificity;
        report.candidates.push_back(cand);
        if (*cand.composite > best_composite) {  // strict: ties keep the smaller K
            best_composite = *cand.composite;
            best_k = K;
        }
    }
    return {best_k, report};
}

}  // namespace mslbm
