#include "mslbm/asalm.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace mslbm {

void AsalmConfig::validate() const {
    if (!(mu > 0.0 && tau > 0.0 && beta > 0.0 && tol > 0.0)) {
        throw invalid_parameter("AsalmConfig: mu, tau, beta, tol must be positive");
    }
    if (iter_max < 1) throw invalid_parameter("AsalmConfig: iter_max must be >= 1");
}

AsalmConfig default_asalm_config(const SymMatrix& w, double beta, int iter_max, double tol) {
    const int n = w.dim();
    std::vector<double> off;
    off.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) off.push_back(w(i, j));
    }
    double sigma0 = 1.0;
    if (!off.empty()) {
        auto median_of = [](std::vector<double>& v) {
            const std::size_t mid = v.size() / 2;
            std::nth_element(v.begin(), v.begin() + mid, v.end());
            double hi = v[mid];
            if (v.size() % 2 == 0) {
                std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
                return 0.5 * (hi + v[mid - 1]);
            }
            return hi;
        };
        const double med = median_of(off);
        for (double& v : off) v = std::abs(v - med);
        sigma0 = 1.4826 * median_of(off);
        if (!(sigma0 > 0.0)) sigma0 = 1e-3;
    }
    AsalmConfig cfg;
    cfg.mu = std::sqrt(static_cast<double>(n)) * sigma0;
    cfg.tau = sigma0 * std::sqrt(2.0 * std::log(std::max(2.0, static_cast<double>(n))));
    cfg.beta = beta;
    cfg.iter_max = iter_max;
    cfg.tol = tol;
    return cfg;
}

AsalmResult asalm_decompose(const SymMatrix& w, const AsalmConfig& cfg) {
    cfg.validate();
    const int n = w.dim();
    const Matrix& wm = w.mat();
    const double wnorm = std::max(1.0, wm.norm());
    const double beta = cfg.beta;

    Matrix low = Matrix::Zero(n, n);
    Matrix theta = Matrix::Zero(n, n);
    Matrix noise = Matrix::Zero(n, n);
    Matrix dual = Matrix::Zero(n, n);

    AsalmResult res{SymMatrix(low), SparseDeviation{}, SymMatrix(noise), SymMatrix(dual), 0, 0.0, {}};
    res.residual_trace.reserve(cfg.iter_max);

    int it = 0;
    double residual = wm.norm();
    for (; it < cfg.iter_max; ++it) {
        const Matrix base = wm + dual / beta;
        noise = (beta / (1.0 + beta)) * (base - low - theta);
        theta = soft_threshold(base - noise - low, cfg.tau / beta);
        low = sv_threshold_sym(SymMatrix(base - noise - theta), cfg.mu / beta).mat();
        const Matrix gap = low + theta + noise - wm;
        dual -= beta * gap;

        residual = gap.norm();
        if (!std::isfinite(residual)) {
            throw solver_failure("asalm_decompose: non-finite iterate", residual, it + 1);
        }
        res.residual_trace.push_back(residual);
        if (residual / wnorm <= cfg.tol) {
            ++it;
            break;
        }
    }

    res.low_rank = SymMatrix(std::move(low));
    res.theta = SparseDeviation::from_dense(theta);
    res.noise = SymMatrix(std::move(noise));
    res.dual = SymMatrix(std::move(dual));
    res.iterations = std::min(it, cfg.iter_max);
    res.primal_residual = residual;
    return res;
}

int estimate_rank(const SymMatrix& l, double rel_gap) {
    if (!(rel_gap > 0.0 && rel_gap < 1.0)) {
        throw invalid_parameter("estimate_rank: rel_gap must be in (0,1)");
    }
    EigenPairs ep = sym_eigen(l);
    Vector lam = ep.values.cwiseMax(0.0);
    const double lead = lam(0);
    if (lead <= 0.0) return 0;
    int count = 0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam(i) > rel_gap * lead) ++count;
    }
    return count;
}

double estimate_sigma(const SymMatrix& w, const SymMatrix& l, const SparseDeviation& theta) {
    if (w.dim() != l.dim() || theta.n != w.dim()) {
        throw invalid_parameter("estimate_sigma: dimension mismatch");
    }
    const double n = static_cast<double>(w.dim());
    return (w.mat() - l.mat() - theta.dense()).norm() / n;
}

TunedWeights tune_weights(const Vector& h_hat, const Vector& sigma_hat, int n) {
    if (h_hat.size() != sigma_hat.size() || h_hat.size() == 0) {
        throw invalid_parameter("tune_weights: h_hat and sigma_hat must have equal nonzero length");
    }
    if ((h_hat.array() <= 0.0).any()) {
        throw invalid_parameter("tune_weights: h_hat entries must be positive");
    }
    const Eigen::Index m = h_hat.size();
    Vector sig = sigma_hat;
    for (Eigen::Index s = 0; s < m; ++s) {
        if (sig(s) <= 0.0) {
            std::cerr << "tune_weights: sigma_hat[" << s << "] = " << sig(s)
                      << " floored to 1e-12\n";
            sig(s) = 1e-12;
        }
    }
    TunedWeights out;
    out.alpha = Vector(m);
    for (Eigen::Index s = 0; s < m; ++s) {
        out.alpha(s) = 1.0 / (std::pow(h_hat(s), 4) * sig(s) * sig(s));
    }
    out.alpha /= out.alpha.sum();
    out.lambda = Vector(m);
    const double root_log_n = std::sqrt(std::log(std::max(2.0, static_cast<double>(n))));
    for (Eigen::Index s = 0; s < m; ++s) out.lambda(s) = out.alpha(s) * sig(s) * root_log_n;
    return out;
}

std::pair<double, double> tune_mu_tau(const SymMatrix& w, const std::vector<ProbeEntry>& probes,
                                      const std::vector<std::pair<double, double>>& grid,
                                      const AsalmConfig& base) {
    if (grid.empty()) throw invalid_parameter("tune_mu_tau: empty grid");
    if (probes.empty()) throw invalid_parameter("tune_mu_tau: no probe entries");
    for (const auto& p : probes) {
        if (p.i < 0 || p.i >= w.dim() || p.j < 0 || p.j >= w.dim()) {
            throw invalid_parameter("tune_mu_tau: probe coordinate out of range");
        }
    }

    double best_score = std::numeric_limits<double>::infinity();
    std::pair<double, double> best = grid.front();
    bool any_ok = false;
    for (const auto& [mu, tau] : grid) {
        AsalmConfig cfg = base;
        cfg.mu = mu;
        cfg.tau = tau;
        double score = 0.0;
        try {
            const AsalmResult r = asalm_decompose(w, cfg);
            for (const auto& p : probes) {
                const double d = r.low_rank(p.i, p.j) - p.target;
                score += d * d;
            }
            score /= static_cast<double>(probes.size());
        } catch (const solver_failure&) {
            continue;
        }
        any_ok = true;
        if (score < best_score) {  // strict: ties keep the earlier grid point
            best_score = score;
            best = {mu, tau};
        }
    }
    if (!any_ok) throw tuning_failure("tune_mu_tau: every grid point diverged");
    return best;
}

}  // namespace mslbm
