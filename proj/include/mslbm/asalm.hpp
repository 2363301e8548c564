#ifndef MSLBM_ASALM_HPP
#define MSLBM_ASALM_HPP

#include <utility>
#include <vector>

#include "mslbm/linalg.hpp"
#include "mslbm/model.hpp"

namespace mslbm {

struct AsalmConfig {
    double mu = 1.0;    // nuclear-norm weight
    double tau = 1.0;   // l1 weight
    double beta = 1.0;  // augmented-Lagrangian parameter
    int iter_max = 200;
    double tol = 1e-7;  // relative primal residual

    void validate() const;
};

/// mu = sqrt(n) * sigma0 and tau = sigma0 * sqrt(2 log n) with sigma0 the
/// MAD scale of the off-diagonal entries of W. Used when no probe tuning
/// is available.
AsalmConfig default_asalm_config(const SymMatrix& w, double beta = 1.0, int iter_max = 200,
                                 double tol = 1e-7);

struct AsalmResult {
    SymMatrix low_rank;       // L
    SparseDeviation theta;    // nonzeros of the soft-thresholded iterate
    SymMatrix noise;          // E
    SymMatrix dual;           // Lambda
    int iterations = 0;
    double primal_residual = 0.0;  // ||L + Theta + E - W||_F at exit
    std::vector<double> residual_trace;
};

/// Splitting augmented-Lagrangian decomposition of W into low-rank L,
/// sparse Theta and residual E, from the zero initial state.
AsalmResult asalm_decompose(const SymMatrix& w, const AsalmConfig& cfg);

/// Number of eigenvalues above rel_gap * lambda_1 (absolute values,
/// negative eigenvalues clamped to zero). Returns 0 for the zero matrix.
int estimate_rank(const SymMatrix& l, double rel_gap);

/// sqrt(||W - L - Theta||_F^2 / n^2).
double estimate_sigma(const SymMatrix& w, const SymMatrix& l, const SparseDeviation& theta);

struct TunedWeights {
    Vector alpha;   // proportional to h^-4 sigma^-2, normalized to sum 1
    Vector lambda;  // alpha_s * sigma_s * sqrt(log n)
};
TunedWeights tune_weights(const Vector& h_hat, const Vector& sigma_hat, int n);

struct ProbeEntry {
    int i = 0;
    int j = 0;
    double target = 0.0;
};

/// Grid search for (mu, tau): decompose per grid point, score by the MSE of
/// L against the probe targets, return the argmin (ties to first in grid
/// order). Throws tuning_failure if every grid point diverges.
std::pair<double, double> tune_mu_tau(const SymMatrix& w, const std::vector<ProbeEntry>& probes,
                                      const std::vector<std::pair<double, double>>& grid,
                                      const AsalmConfig& base);

}  // namespace mslbm

#endif
