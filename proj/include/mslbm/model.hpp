#ifndef MSLBM_MODEL_HPP
#define MSLBM_MODEL_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "mslbm/linalg.hpp"
#include "mslbm/rng.hpp"

namespace mslbm {

/// Hard K-partition of n vertices, labels in [0, K).
struct Membership {
    std::vector<int> labels;
    int K = 0;

    int n() const { return static_cast<int>(labels.size()); }
    void validate() const;
    std::vector<int> cluster_sizes() const;
};

/// Symmetric K x K group-level weight matrix.
struct GroupWeights {
    int K = 0;
    Matrix omega;
};

/// Per-view diagonal of node information content, entries > 0.
struct HeterogeneityDiag {
    Vector h;
    void validate() const;
};

struct SparseEntry {
    int i = 0;
    int j = 0;  // i <= j; the (j, i) mirror is implied
    double value = 0.0;
};

/// Symmetric sparse deviation stored as an upper-triangle coordinate list.
struct SparseDeviation {
    int n = 0;
    std::vector<SparseEntry> entries;

    Matrix dense() const;
    double l1_norm() const;  // of the full symmetric matrix
    std::size_t support_size() const { return entries.size(); }
    static SparseDeviation from_dense(const Matrix& m, double tol = 0.0);
    void validate() const;
};

struct MultiViewData {
    int n = 0;
    std::vector<SymMatrix> views;
    int m() const { return static_cast<int>(views.size()); }
};

struct GroundTruth {
    Membership membership;
    GroupWeights omega;
    std::vector<HeterogeneityDiag> h;
    std::vector<SparseDeviation> theta;
    Vector sigma;
};

struct SimConfig {
    int n = 0;
    int m = 0;
    int K = 0;
    int r = 0;
    int setting = 1;  // 1: heterogeneous H_s, sparse Theta_s; 2: H_s = lambda sqrt(s) I, Theta_s = 0
    double pi0 = 0.2;
    double pi = 0.05;
    double tau = 5.0;
    double lambda_signal = 1.0;
    Vector sigma;            // length m
    double noise_mass = 0.5; // probability an error entry is non-zero
    std::uint64_t seed = 0;
    bool noise_on_diagonal = true;
    bool theta_diagonal_zero = true;

    void validate() const;
};

/// Sparse K x r factor with unit rows, Omega = A A^T. All-zero rows of A are
/// resampled, so diag(Omega) = 1 and rank(Omega) <= r.
GroupWeights gen_omega(int K, int r, double pi0, RngStream& rng);

/// Draw one msLBM instance. Deterministic in cfg (seed included); each
/// (object, view) pair uses its own substream.
std::pair<MultiViewData, GroundTruth> gen_instance(const SimConfig& cfg);

/// C(i, j) = Omega(z_i, z_j).
SymMatrix assemble_c(const Membership& z, const GroupWeights& omega);

/// Exact eigenstructure of W = H (Z Omega Z^T) H: the group-mass diagonal
/// N_H, eigenvalues D of N_H Omega N_H with eigenvectors L, and the weight
/// eigenvector factor Ubar = H Z N_H^{-1} L.
struct LbmOracle {
    Vector n_h;        // length K, tilde h_k = sqrt(sum_{j in V_k} h_j^2)
    Vector d;          // positive eigenvalues, descending
    Matrix l;          // K x rank
    LowRankFactor ubar;
};
LbmOracle lbm_oracle(const Membership& z, const GroupWeights& omega, const HeterogeneityDiag& h);

struct SeparationDeltas {
    double delta_omega = 0.0;    // min_{k1<k2} ||Omega(k1,:) - Omega(k2,:)||
    double delta_h_omega = 0.0;  // min over cross-group vertex pairs of ||(e_j1 - e_j2)^T H Z Omega||
};
SeparationDeltas separation_deltas(const Membership& z, const GroupWeights& omega,
                                   const HeterogeneityDiag& h);

struct IncoherenceReport {
    double mu = 0.0;     // max_j ||e_j^T U_r||^2 * n / r
    double kappa = 0.0;  // lambda_1 / lambda_r
};
IncoherenceReport incoherence_check(const SymMatrix& l, int r);

}  // namespace mslbm

#endif
