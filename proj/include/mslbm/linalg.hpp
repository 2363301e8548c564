#ifndef MSLBM_LINALG_HPP
#define MSLBM_LINALG_HPP

#include <Eigen/Dense>
#include <vector>

#include "mslbm/errors.hpp"

namespace mslbm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. Construction validates symmetry (relative
/// asymmetry above 1e-12 is an error) and finiteness, then mirrors the
/// average of the two triangles so entries(i,j) == entries(j,i) exactly.
class SymMatrix {
public:
    explicit SymMatrix(Matrix m);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& mat() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

private:
    Matrix m_;
};

/// Full eigendecomposition of a symmetric matrix: values sorted descending,
/// vectors column-aligned, deterministic sign (largest-magnitude entry of
/// each eigenvector positive, ties broken by lowest index).
struct EigenPairs {
    Vector values;
    Matrix vectors;
};

/// n x r factor; rows are the per-vertex embedding vectors.
struct LowRankFactor {
    Matrix rows;
    int n() const { return static_cast<int>(rows.rows()); }
    int r() const { return static_cast<int>(rows.cols()); }
};

EigenPairs sym_eigen(const SymMatrix& a);

/// Entrywise shrinkage: max{|M_ij| - a, 0} * sign(M_ij).
Matrix soft_threshold(const Matrix& m, double a);

/// Soft-threshold the singular values of M and recompose.
Matrix sv_threshold(const Matrix& m, double a);

/// Same operator restricted to symmetric input, computed through the
/// eigendecomposition (signed shrinkage of eigenvalues). Exactly symmetric
/// output; agrees with sv_threshold on symmetric matrices.
SymMatrix sv_threshold_sym(const SymMatrix& m, double a);

double wlra_objective(const SymMatrix& x, const SymMatrix& y, const LowRankFactor& u);

struct WlraResult {
    LowRankFactor u;
    std::vector<double> objective_trace;
    int iterations = 0;
};

/// Weighted low-rank approximation under the unit-row constraint:
/// approximately minimize ||(U U^T) o X - Y||_F^2 over n x r factors U with
/// unit-norm rows. Projected gradient descent with backtracking line search
/// (halving, Armijo c = 1e-4), rows renormalized after every step; stops on
/// relative objective change < 1e-8 or 500 iterations. The returned
/// objective never exceeds the objective at u0.
WlraResult wlra(const SymMatrix& x, const SymMatrix& y, int r, const LowRankFactor& u0);

/// Spectral norm of V1 V1^T - V2 V2^T for orthonormal-column factors.
double projector_distance(const LowRankFactor& v1, const LowRankFactor& v2);

/// Row-normalize a factor; rows with norm below 1e-12 become the first
/// canonical direction (and their reported norm is 1e-12).
LowRankFactor normalize_rows(const LowRankFactor& u, Vector* row_norms = nullptr);

}  // namespace mslbm

#endif
