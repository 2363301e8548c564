#include "mslbm/fit.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mslbm {

void FitConfig::validate(int m) const {
    if (r < 1) throw invalid_parameter("FitConfig: r must be >= 1");
    if (alpha.size() != m || lambda.size() != m) {
        throw invalid_parameter("FitConfig: alpha and lambda must have length m");
    }
    if ((alpha.array() <= 0.0).any()) throw invalid_parameter("FitConfig: alpha must be positive");
    if (std::abs(alpha.sum() - 1.0) > 1e-10) {
        throw invalid_parameter("FitConfig: alpha must sum to 1");
    }
    if ((lambda.array() < 0.0).any()) throw invalid_parameter("FitConfig: lambda must be >= 0");
    if (!(kappa1 > 1.0)) throw invalid_parameter("FitConfig: kappa1 must be > 1");
    if (iter_max < 1 || reh_iter_max < 1) throw invalid_parameter("FitConfig: iteration caps must be >= 1");
    if (!(tol > 0.0 && reh_tol > 0.0)) throw invalid_parameter("FitConfig: tolerances must be positive");
}

RecResult rec(const SymMatrix& w, int r) {
    if (r < 1) throw invalid_parameter("rec: r must be >= 1");
    const int n = w.dim();
    EigenPairs ep = sym_eigen(w);

    const int keep = std::min(r, n);
    Matrix u(n, r);
    u.setZero();
    for (int k = 0; k < keep; ++k) {
        const double lam = std::max(ep.values(k), 0.0);
        u.col(k) = std::sqrt(lam) * ep.vectors.col(k);
    }

    Vector norms;
    LowRankFactor u_tilde = normalize_rows(LowRankFactor{std::move(u)}, &norms);
    Matrix c = u_tilde.rows * u_tilde.rows.transpose();
    return RecResult{SymMatrix(0.5 * (c + c.transpose().eval())), HeterogeneityDiag{std::move(norms)},
                     std::move(u_tilde)};
}

HeterogeneityDiag reh(const SymMatrix& w_tilde, const SymMatrix& c_tilde,
                      const HeterogeneityDiag& h0, int iter_max, double tol) {
    const int n = w_tilde.dim();
    if (c_tilde.dim() != n || h0.h.size() != n) throw invalid_parameter("reh: dimension mismatch");

    const Matrix wc = w_tilde.mat().cwiseProduct(c_tilde.mat());
    const Matrix c2 = c_tilde.mat().cwiseProduct(c_tilde.mat());

    Vector h1 = h0.h;
    Vector h2 = h0.h;
    double lambda = 1.0;
    for (int t = 0; t < iter_max; ++t) {
        Vector denom1 = c2 * h2.cwiseProduct(h2);
        denom1.array() += lambda;
        h1 = (wc * h2 + lambda * h2).cwiseQuotient(denom1);
        Vector denom2 = c2 * h1.cwiseProduct(h1);
        denom2.array() += lambda;
        h2 = (wc * h1 + lambda * h1).cwiseQuotient(denom2);
        if (!h1.allFinite() || !h2.allFinite()) {
            throw solver_failure("reh: non-finite iterate", 0.0, t + 1);
        }
        if ((h1 - h2).norm() <= tol) break;
        lambda += 1.0;
    }
    return HeterogeneityDiag{0.5 * (h1 + h2)};
}

SparseDeviation retheta(const SymMatrix& w, const HeterogeneityDiag& h, const SymMatrix& c,
                        double tau_s) {
    if (tau_s < 0.0) throw invalid_parameter("retheta: negative threshold");
    const Matrix residual =
        w.mat() - Matrix(h.h.asDiagonal() * c.mat() * h.h.asDiagonal());
    return SparseDeviation::from_dense(soft_threshold(residual, tau_s));
}

namespace {

Matrix view_minus_theta(const SymMatrix& w, const SparseDeviation& theta) {
    Matrix m = w.mat();
    for (const auto& e : theta.entries) {
        m(e.i, e.j) -= e.value;
        if (e.i != e.j) m(e.j, e.i) -= e.value;
    }
    return m;
}

double cond_of_factor(const LowRankFactor& u) {
    Eigen::JacobiSVD<Matrix> svd(u.rows);
    const Vector& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

}  // namespace

LowRankFactor update_u_exact(const MultiViewData& views, const std::vector<SparseDeviation>& theta,
                             const std::vector<HeterogeneityDiag>& h, const FitConfig& cfg,
                             const LowRankFactor& u_prev) {
    const int n = views.n;
    const int m = views.m();
    Matrix x2 = Matrix::Zero(n, n);  // X o X
    Matrix xy = Matrix::Zero(n, n);  // X o Y
    for (int s = 0; s < m; ++s) {
        const Matrix hh = h[s].h * h[s].h.transpose();
        x2 += cfg.alpha(s) * hh.cwiseProduct(hh);
        xy += cfg.alpha(s) * hh.cwiseProduct(view_minus_theta(views.views[s], theta[s]));
    }
    Matrix x = x2.cwiseSqrt();
    Matrix y(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            y(i, j) = x(i, j) > 0.0 ? xy(i, j) / x(i, j) : 0.0;
        }
    }
    WlraResult res = wlra(SymMatrix(std::move(x)), SymMatrix(std::move(y)), cfg.r, u_prev);
    return std::move(res.u);
}

InexactUpdate update_u_inexact(const MultiViewData& views,
                               const std::vector<SparseDeviation>& theta, const FitConfig& cfg) {
    const int m = views.m();
    InexactUpdate out{SymMatrix(Matrix::Zero(1, 1)), LowRankFactor{}, {}};
    Matrix acc = Matrix::Zero(views.n, views.n);
    const double alpha_sum = cfg.alpha.sum();
    for (int s = 0; s < m; ++s) {
        RecResult r = rec(SymMatrix(view_minus_theta(views.views[s], theta[s])), cfg.r);
        acc += (cfg.alpha(s) / alpha_sum) * r.c.mat();
        out.per_view_c.push_back(std::move(r.c));
    }
    RecResult final_rec = rec(SymMatrix(std::move(acc)), cfg.r);
    out.c = std::move(final_rec.c);
    out.u = std::move(final_rec.u);
    return out;
}

double fit_objective(const MultiViewData& views, const LowRankFactor& u,
                     const std::vector<HeterogeneityDiag>& h,
                     const std::vector<SparseDeviation>& theta, const Vector& alpha,
                     const Vector& lambda) {
    const Matrix c = u.rows * u.rows.transpose();
    double obj = 0.0;
    for (int s = 0; s < views.m(); ++s) {
        const Matrix fitted = h[s].h.asDiagonal() * c * h[s].h.asDiagonal();
        obj += 0.5 * alpha(s) * (view_minus_theta(views.views[s], theta[s]) - fitted).squaredNorm();
        obj += lambda(s) * theta[s].l1_norm();
    }
    return obj;
}

ModelEstimate fit(const MultiViewData& views, const FitConfig& cfg, const ModelEstimate& init) {
    const int m = views.m();
    cfg.validate(m);
    if (init.u.n() != views.n || init.u.r() != cfg.r) {
        throw invalid_parameter("fit: init U shape mismatch");
    }
    if (static_cast<int>(init.h.size()) != m || static_cast<int>(init.theta.size()) != m) {
        throw invalid_parameter("fit: init H/Theta count mismatch");
    }

    ModelEstimate est;
    est.u = normalize_rows(init.u);
    est.h = init.h;
    est.theta = init.theta;
    est.objective_trace.push_back(
        fit_objective(views, est.u, est.h, est.theta, cfg.alpha, cfg.lambda));

    Matrix c_prev = est.u.rows * est.u.rows.transpose();

    // inexact mode carries per-view correlations between iterations
    std::vector<SymMatrix> per_view_c;
    if (cfg.mode == FitMode::inexact) {
        for (int s = 0; s < m; ++s) {
            per_view_c.push_back(rec(SymMatrix(view_minus_theta(views.views[s], est.theta[s])), cfg.r).c);
        }
    }

    int t = 0;
    bool stop = false;
    for (; t < cfg.iter_max && !stop; ++t) {
        try {
            SymMatrix c_new(Matrix::Zero(1, 1));
            if (cfg.mode == FitMode::exact) {
                est.u = update_u_exact(views, est.theta, est.h, cfg, est.u);
                Matrix c = est.u.rows * est.u.rows.transpose();
                c_new = SymMatrix(0.5 * (c + c.transpose().eval()));
            } else {
                Matrix acc = Matrix::Zero(views.n, views.n);
                const double alpha_sum = cfg.alpha.sum();
                for (int s = 0; s < m; ++s) acc += (cfg.alpha(s) / alpha_sum) * per_view_c[s].mat();
                RecResult r = rec(SymMatrix(std::move(acc)), cfg.r);
                c_new = std::move(r.c);
                est.u = std::move(r.u);
            }

            const double change = (c_new.mat() - c_prev).norm();
            const bool converged = change <= cfg.tol * std::max(1.0, c_prev.norm());
            // the inexact scheme checks convergence right after the C update,
            // before touching H and Theta; the exact scheme checks at the end
            if (cfg.mode == FitMode::inexact && converged) {
                c_prev = c_new.mat();
                stop = true;
            } else {
                for (int s = 0; s < m; ++s) {
                    est.h[s] = reh(SymMatrix(view_minus_theta(views.views[s], est.theta[s])), c_new,
                                   est.h[s], cfg.reh_iter_max, cfg.reh_tol);
                }
                for (int s = 0; s < m; ++s) {
                    est.theta[s] =
                        retheta(views.views[s], est.h[s], c_new, cfg.lambda(s) / cfg.alpha(s));
                }
                if (cfg.mode == FitMode::inexact) {
                    for (int s = 0; s < m; ++s) {
                        per_view_c[s] =
                            rec(SymMatrix(view_minus_theta(views.views[s], est.theta[s])), cfg.r).c;
                    }
                }
                c_prev = c_new.mat();
                if (cfg.mode == FitMode::exact && converged) stop = true;
            }

            est.objective_trace.push_back(
                fit_objective(views, est.u, est.h, est.theta, cfg.alpha, cfg.lambda));
            est.kappa_trace.push_back(cond_of_factor(est.u));
        } catch (const solver_failure& e) {
            throw solver_failure("fit: iteration " + std::to_string(t + 1) + ": " + e.what(),
                                 e.residual, t + 1);
        }
    }
    est.iterations = t;
    return est;
}

WarmStart warm_start(const MultiViewData& views, int r, const std::vector<AsalmConfig>& cfgs) {
    const int m = views.m();
    if (static_cast<int>(cfgs.size()) != m) {
        throw invalid_parameter("warm_start: need one AsalmConfig per view");
    }
    WarmStart ws;
    ws.sigma_hat = Vector(m);
    ws.h_hat = Vector(m);

    std::vector<RecResult> recs;
    for (int s = 0; s < m; ++s) {
        ws.asalm.push_back(asalm_decompose(views.views[s], cfgs[s]));
        const AsalmResult& a = ws.asalm.back();
        ws.sigma_hat(s) = estimate_sigma(views.views[s], a.low_rank, a.theta);
        ws.h_hat(s) = std::max(a.low_rank.mat().diagonal().mean(), 1e-12);
        ws.rank_by_view.push_back(estimate_rank(a.low_rank, 0.05));
        recs.push_back(rec(a.low_rank, r));
    }

    TunedWeights tw = tune_weights(ws.h_hat, ws.sigma_hat, views.n);
    ws.alpha = tw.alpha;
    ws.lambda = tw.lambda;

    // ensemble the per-view correlations with the tuned weights
    Matrix acc = Matrix::Zero(views.n, views.n);
    for (int s = 0; s < m; ++s) acc += ws.alpha(s) * recs[s].c.mat();
    RecResult ensemble = rec(SymMatrix(std::move(acc)), r);

    ws.init.u = std::move(ensemble.u);
    for (int s = 0; s < m; ++s) {
        ws.init.h.push_back(std::move(recs[s].h));
        ws.init.theta.push_back(ws.asalm[s].theta);
    }
    return ws;
}

}  // namespace mslbm
