#include "mslbm/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace mslbm {

void Membership::validate() const {
    if (K < 1) throw invalid_parameter("Membership: K must be >= 1");
    for (int lab : labels) {
        if (lab < 0 || lab >= K) {
            throw invalid_parameter("Membership: label " + std::to_string(lab) +
                                    " out of range [0, " + std::to_string(K) + ")");
        }
    }
}

std::vector<int> Membership::cluster_sizes() const {
    std::vector<int> sizes(K, 0);
    for (int lab : labels) ++sizes.at(lab);
    return sizes;
}

void HeterogeneityDiag::validate() const {
    for (Eigen::Index i = 0; i < h.size(); ++i) {
        if (!(h(i) > 0.0) || !std::isfinite(h(i))) {
            throw invalid_parameter("HeterogeneityDiag: entry " + std::to_string(i) +
                                    " is not positive and finite");
        }
    }
}

void SparseDeviation::validate() const {
    std::set<std::pair<int, int>> seen;
    for (const auto& e : entries) {
        if (e.i > e.j || e.i < 0 || e.j >= n) {
            throw invalid_parameter("SparseDeviation: coordinate out of order or range");
        }
        if (e.value == 0.0) throw invalid_parameter("SparseDeviation: stored zero value");
        if (!seen.insert({e.i, e.j}).second) {
            throw invalid_parameter("SparseDeviation: duplicate coordinate (" +
                                    std::to_string(e.i) + ", " + std::to_string(e.j) + ")");
        }
    }
}

Matrix SparseDeviation::dense() const {
    Matrix m = Matrix::Zero(n, n);
    for (const auto& e : entries) {
        m(e.i, e.j) = e.value;
        m(e.j, e.i) = e.value;
    }
    return m;
}

double SparseDeviation::l1_norm() const {
    double s = 0.0;
    for (const auto& e : entries) s += (e.i == e.j ? 1.0 : 2.0) * std::abs(e.value);
    return s;
}

SparseDeviation SparseDeviation::from_dense(const Matrix& m, double tol) {
    SparseDeviation out;
    out.n = static_cast<int>(m.rows());
    for (int i = 0; i < out.n; ++i) {
        for (int j = i; j < out.n; ++j) {
            if (std::abs(m(i, j)) > tol) out.entries.push_back({i, j, m(i, j)});
        }
    }
    return out;
}

void SimConfig::validate() const {
    if (n < 1 || m < 1) throw invalid_parameter("SimConfig: n and m must be >= 1");
    if (!(r >= 1 && r <= K && K <= n)) throw invalid_parameter("SimConfig: need 1 <= r <= K <= n");
    if (setting != 1 && setting != 2) throw invalid_parameter("SimConfig: setting must be 1 or 2");
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw invalid_parameter("SimConfig: pi0 must be in (0,1)");
    if (!(pi >= 0.0 && pi < 1.0)) throw invalid_parameter("SimConfig: pi must be in [0,1)");
    if (!(tau > 0.0)) throw invalid_parameter("SimConfig: tau must be positive");
    if (!(lambda_signal > 0.0)) throw invalid_parameter("SimConfig: lambda_signal must be positive");
    if (sigma.size() != m) throw invalid_parameter("SimConfig: sigma must have length m");
    if ((sigma.array() < 0.0).any()) throw invalid_parameter("SimConfig: sigma entries must be >= 0");
    if (!(noise_mass > 0.0 && noise_mass <= 1.0)) {
        throw invalid_parameter("SimConfig: noise_mass must be in (0,1]");
    }
}

GroupWeights gen_omega(int K, int r, double pi0, RngStream& rng) {
    if (r < 1 || r > K) throw invalid_parameter("gen_omega: need 1 <= r <= K");
    if (!(pi0 > 0.0 && pi0 < 1.0)) throw invalid_parameter("gen_omega: pi0 must be in (0,1)");

    Matrix a = Matrix::Zero(K, r);
    for (int i = 0; i < K; ++i) {
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (int j = 0; j < r; ++j) {
                const double mask = rng.uniform();
                const double val = rng.uniform();
                a(i, j) = mask < pi0 ? val : 0.0;
                norm2 += a(i, j) * a(i, j);
            }
        } while (norm2 == 0.0);  // the row normalization is undefined at zero
        a.row(i) /= std::sqrt(norm2);
    }
    return GroupWeights{K, a * a.transpose()};
}

namespace {

Membership balanced_membership(int n, int K, RngStream rng) {
    Membership z;
    z.K = K;
    z.labels.resize(n);
    for (int i = 0; i < n; ++i) z.labels[i] = i % K;
    // Fisher-Yates with the seeded stream
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
        std::swap(z.labels[i], z.labels[j]);
    }
    return z;
}

// value = N(0, scale^2) w.p. mass, else 0. Always consumes the same number
// of draws regardless of the outcome so entry positions stay aligned.
double sparse_gaussian(RngStream& rng, double mass, double scale) {
    const double u = rng.uniform();
    const double z = rng.normal();
    return u < mass ? scale * z : 0.0;
}

}  // namespace

std::pair<MultiViewData, GroundTruth> gen_instance(const SimConfig& cfg) {
    cfg.validate();
    RngStream root(cfg.seed);

    GroundTruth truth;
    truth.membership = balanced_membership(cfg.n, cfg.K, root.substream("labels"));
    {
        RngStream omega_rng = root.substream("omega");
        truth.omega = gen_omega(cfg.K, cfg.r, cfg.pi0, omega_rng);
    }
    truth.sigma = cfg.sigma;

    const Matrix c = assemble_c(truth.membership, truth.omega).mat();

    MultiViewData data;
    data.n = cfg.n;

    for (int s = 0; s < cfg.m; ++s) {
        const double d_s = cfg.lambda_signal * std::sqrt(static_cast<double>(s + 1));

        HeterogeneityDiag h;
        h.h = Vector(cfg.n);
        if (cfg.setting == 1) {
            RngStream h_rng = root.substream("h", static_cast<std::uint64_t>(s));
            for (int i = 0; i < cfg.n; ++i) h.h(i) = d_s * h_rng.uniform();
        } else {
            h.h.setConstant(d_s);
        }

        Matrix theta = Matrix::Zero(cfg.n, cfg.n);
        if (cfg.setting == 1 && cfg.pi > 0.0) {
            RngStream t_rng = root.substream("theta", static_cast<std::uint64_t>(s));
            for (int i = 0; i < cfg.n; ++i) {
                for (int j = i; j < cfg.n; ++j) {
                    if (i == j && cfg.theta_diagonal_zero) continue;
                    const double v = sparse_gaussian(t_rng, cfg.pi, cfg.tau);
                    theta(i, j) = v;
                    theta(j, i) = v;
                }
            }
        }

        Matrix e = Matrix::Zero(cfg.n, cfg.n);
        if (cfg.sigma(s) > 0.0) {
            RngStream e_rng = root.substream("noise", static_cast<std::uint64_t>(s));
            for (int i = 0; i < cfg.n; ++i) {
                for (int j = i; j < cfg.n; ++j) {
                    if (i == j && !cfg.noise_on_diagonal) continue;
                    const double v = sparse_gaussian(e_rng, cfg.noise_mass, cfg.sigma(s));
                    e(i, j) = v;
                    e(j, i) = v;
                }
            }
        }

        Matrix w = h.h.asDiagonal() * c * h.h.asDiagonal();
        w += theta + e;

        truth.h.push_back(h);
        truth.theta.push_back(SparseDeviation::from_dense(theta));
        data.views.emplace_back(w);
    }
    return {std::move(data), std::move(truth)};
}

SymMatrix assemble_c(const Membership& z, const GroupWeights& omega) {
    z.validate();
    if (z.K != omega.K) throw invalid_parameter("assemble_c: membership K != omega K");
    const int n = z.n();
    Matrix c(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) c(i, j) = omega.omega(z.labels[i], z.labels[j]);
    }
    return SymMatrix(std::move(c));
}

LbmOracle lbm_oracle(const Membership& z, const GroupWeights& omega, const HeterogeneityDiag& h) {
    z.validate();
    h.validate();
    const int n = z.n();
    const int K = z.K;
    if (omega.K != K) throw invalid_parameter("lbm_oracle: omega K mismatch");
    if (h.h.size() != n) throw invalid_parameter("lbm_oracle: h length mismatch");

    Vector n_h = Vector::Zero(K);
    for (int i = 0; i < n; ++i) n_h(z.labels[i]) += h.h(i) * h.h(i);
    for (int k = 0; k < K; ++k) {
        if (n_h(k) <= 0.0) {
            throw invalid_parameter("lbm_oracle: group " + std::to_string(k) +
                                    " has zero heterogeneity mass");
        }
        n_h(k) = std::sqrt(n_h(k));
    }

    const Matrix core = n_h.asDiagonal() * omega.omega * n_h.asDiagonal();
    EigenPairs ep = sym_eigen(SymMatrix(core));
    const double lead = std::max(ep.values.cwiseAbs().maxCoeff(), 1e-300);
    int rank = 0;
    while (rank < K && ep.values(rank) > 1e-10 * lead) ++rank;

    LbmOracle out;
    out.n_h = n_h;
    out.d = ep.values.head(rank);
    out.l = ep.vectors.leftCols(rank);

    // Ubar = H Z N_H^{-1} L: row j is h_j / tilde_h_{z_j} times L(z_j, :)
    Matrix ubar(n, rank);
    for (int i = 0; i < n; ++i) {
        ubar.row(i) = (h.h(i) / n_h(z.labels[i])) * out.l.row(z.labels[i]);
    }
    out.ubar = LowRankFactor{std::move(ubar)};
    return out;
}

SeparationDeltas separation_deltas(const Membership& z, const GroupWeights& omega,
                                   const HeterogeneityDiag& h) {
    z.validate();
    if (z.K < 2) throw invalid_parameter("separation_deltas: need K >= 2");
    if (omega.K != z.K) throw invalid_parameter("separation_deltas: omega K mismatch");
    if (h.h.size() != z.n()) throw invalid_parameter("separation_deltas: h length mismatch");

    SeparationDeltas out;
    out.delta_omega = std::numeric_limits<double>::infinity();
    for (int k1 = 0; k1 < z.K; ++k1) {
        for (int k2 = k1 + 1; k2 < z.K; ++k2) {
            out.delta_omega =
                std::min(out.delta_omega, (omega.omega.row(k1) - omega.omega.row(k2)).norm());
        }
    }

    // (e_j1 - e_j2)^T H Z Omega = h_j1 Omega(z_j1, :) - h_j2 Omega(z_j2, :)
    out.delta_h_omega = std::numeric_limits<double>::infinity();
    const int n = z.n();
    for (int j1 = 0; j1 < n; ++j1) {
        for (int j2 = j1 + 1; j2 < n; ++j2) {
            if (z.labels[j1] == z.labels[j2]) continue;
            const double d = (h.h(j1) * omega.omega.row(z.labels[j1]) -
                              h.h(j2) * omega.omega.row(z.labels[j2]))
                                 .norm();
            out.delta_h_omega = std::min(out.delta_h_omega, d);
        }
    }
    return out;
}

IncoherenceReport incoherence_check(const SymMatrix& l, int r) {
    if (r < 1 || r > l.dim()) throw invalid_parameter("incoherence_check: bad rank");
    EigenPairs ep = sym_eigen(l);
    const double lead = ep.values(0);
    if (ep.values(l.dim() - 1) < -1e-10 * std::max(1.0, lead)) {
        throw invalid_parameter("incoherence_check: input is not PSD");
    }
    const double lam_r = ep.values(r - 1);
    if (lam_r <= 1e-12 * lead) {
        throw rank_deficiency("incoherence_check: lambda_r below 1e-12 * lambda_1");
    }
    const Matrix u_r = ep.vectors.leftCols(r);
    double max_row = 0.0;
    for (int i = 0; i < l.dim(); ++i) max_row = std::max(max_row, u_r.row(i).squaredNorm());
    return IncoherenceReport{max_row * static_cast<double>(l.dim()) / static_cast<double>(r),
                             lead / lam_r};
}

}  // namespace mslbm
