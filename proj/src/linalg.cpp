#include "mslbm/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace mslbm {

SymMatrix::SymMatrix(Matrix m) {
    if (m.rows() != m.cols()) {
        throw invalid_parameter("SymMatrix: matrix is " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + ", not square");
    }
    if (!m.allFinite()) {
        throw invalid_parameter("SymMatrix: non-finite entries");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale) {
        throw invalid_parameter("SymMatrix: asymmetry " + std::to_string(asym) +
                                " exceeds 1e-12 relative tolerance");
    }
    m_ = 0.5 * (m + m.transpose().eval());
}

EigenPairs sym_eigen(const SymMatrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a.mat());
    if (solver.info() != Eigen::Success) {
        const double res = a.mat().norm();
        throw solver_failure("sym_eigen: eigensolver did not converge", res);
    }
    const int n = a.dim();
    EigenPairs out;
    out.values = Vector(n);
    out.vectors = Matrix(n, n);
    // Eigen returns ascending order; reverse to descending.
    for (int k = 0; k < n; ++k) {
        out.values(k) = solver.eigenvalues()(n - 1 - k);
        out.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
    }
    // Sign convention: largest-magnitude entry positive, ties to lowest index.
    for (int k = 0; k < n; ++k) {
        int arg = 0;
        double best = std::abs(out.vectors(0, k));
        for (int i = 1; i < n; ++i) {
            const double v = std::abs(out.vectors(i, k));
            if (v > best) {
                best = v;
                arg = i;
            }
        }
        if (out.vectors(arg, k) < 0.0) out.vectors.col(k) = -out.vectors.col(k);
    }
    return out;
}

Matrix soft_threshold(const Matrix& m, double a) {
    if (a < 0.0) throw invalid_parameter("soft_threshold: negative threshold");
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const double v = m(i, j);
            const double mag = std::abs(v) - a;
            out(i, j) = mag > 0.0 ? (v > 0.0 ? mag : -mag) : 0.0;
        }
    }
    return out;
}

Matrix sv_threshold(const Matrix& m, double a) {
    if (a < 0.0) throw invalid_parameter("sv_threshold: negative threshold");
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector s = svd.singularValues();
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = std::max(s(i) - a, 0.0);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

SymMatrix sv_threshold_sym(const SymMatrix& m, double a) {
    if (a < 0.0) throw invalid_parameter("sv_threshold_sym: negative threshold");
    EigenPairs ep = sym_eigen(m);
    Vector lam = ep.values;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        const double mag = std::abs(lam(i)) - a;
        lam(i) = mag > 0.0 ? (lam(i) > 0.0 ? mag : -mag) : 0.0;
    }
    Matrix rec = ep.vectors * lam.asDiagonal() * ep.vectors.transpose();
    return SymMatrix(0.5 * (rec + rec.transpose().eval()));
}

LowRankFactor normalize_rows(const LowRankFactor& u, Vector* row_norms) {
    const int n = u.n();
    LowRankFactor out{Matrix::Zero(n, u.r())};
    if (row_norms) *row_norms = Vector(n);
    for (int i = 0; i < n; ++i) {
        const double norm = u.rows.row(i).norm();
        if (norm < 1e-12) {
            out.rows(i, 0) = 1.0;
            if (row_norms) (*row_norms)(i) = 1e-12;
        } else {
            out.rows.row(i) = u.rows.row(i) / norm;
            if (row_norms) (*row_norms)(i) = norm;
        }
    }
    return out;
}

double wlra_objective(const SymMatrix& x, const SymMatrix& y, const LowRankFactor& u) {
    const Matrix c = u.rows * u.rows.transpose();
    return (c.cwiseProduct(x.mat()) - y.mat()).squaredNorm();
}

WlraResult wlra(const SymMatrix& x, const SymMatrix& y, int r, const LowRankFactor& u0) {
    if (x.dim() != y.dim()) throw invalid_parameter("wlra: X and Y dimensions differ");
    if ((x.mat().array() < 0.0).any()) throw invalid_parameter("wlra: X has negative entries");
    if (u0.n() != x.dim() || u0.r() != r) throw invalid_parameter("wlra: U0 shape mismatch");

    const Matrix& xm = x.mat();
    const Matrix x2 = xm.cwiseProduct(xm);

    LowRankFactor u = normalize_rows(u0);
    double obj = wlra_objective(x, y, u);

    WlraResult res;
    res.objective_trace.push_back(obj);

    constexpr double armijo_c = 1e-4;
    constexpr int iter_max = 500;
    constexpr double rel_tol = 1e-8;
    double step = 1.0;

    for (int it = 0; it < iter_max; ++it) {
        const Matrix c = u.rows * u.rows.transpose();
        // grad = 4 ((C o X - Y) o X) U, with C o X - Y expressed through X^2
        const Matrix g = 4.0 * (c.cwiseProduct(x2) - y.mat().cwiseProduct(xm)) * u.rows;
        const double gnorm2 = g.squaredNorm();
        if (!std::isfinite(gnorm2)) {
            throw solver_failure("wlra: non-finite gradient", obj, it);
        }
        if (gnorm2 == 0.0) break;

        double t = std::min(4.0 * step, 1e6);
        bool accepted = false;
        double new_obj = obj;
        LowRankFactor cand;
        for (int ls = 0; ls < 60; ++ls) {
            cand = normalize_rows(LowRankFactor{u.rows - t * g});
            new_obj = wlra_objective(x, y, cand);
            if (new_obj <= obj - armijo_c * t * gnorm2) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;  // no descent direction left at any scale: stationary

        step = t;
        u = std::move(cand);
        res.objective_trace.push_back(new_obj);
        res.iterations = it + 1;
        const bool converged = std::abs(obj - new_obj) <= rel_tol * std::max(1.0, std::abs(obj));
        obj = new_obj;
        if (converged) break;
    }
    res.u = std::move(u);
    return res;
}

double projector_distance(const LowRankFactor& v1, const LowRankFactor& v2) {
    if (v1.n() != v2.n()) throw invalid_parameter("projector_distance: dimension mismatch");
    auto check_orthonormal = [](const LowRankFactor& v, const char* which) {
        const Matrix gram = v.rows.transpose() * v.rows;
        const double dev = (gram - Matrix::Identity(v.r(), v.r())).cwiseAbs().maxCoeff();
        if (dev > 1e-8) {
            throw invalid_parameter(std::string("projector_distance: ") + which +
                                    " is not orthonormal (deviation " + std::to_string(dev) + ")");
        }
    };
    check_orthonormal(v1, "V1");
    check_orthonormal(v2, "V2");
    const Matrix diff =
        v1.rows * v1.rows.transpose() - v2.rows * v2.rows.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> solver(diff);
    if (solver.info() != Eigen::Success) throw solver_failure("projector_distance: eigensolver failed");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace mslbm
