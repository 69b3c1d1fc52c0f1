#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "mets/core.hpp"
#include "mets/isomap.hpp"

namespace mets {

enum class WeightKind { exponential_decay, gaussian_kernel };

/// Temporal weighting omega(tau) and the window size K of the temporal
/// neighborhood graph.
struct TemporalWeighting {
    WeightKind kind = WeightKind::exponential_decay;
    double alpha = 0.0;
    Index window = 10;

    void validate() const {
        require(std::isfinite(alpha) && alpha >= 0.0, "TemporalWeighting: alpha must be >= 0");
        require(window >= 1, "TemporalWeighting: window K must be >= 1");
    }
};

inline double temporal_weight(const TemporalWeighting& w, std::int64_t tau) {
    require(tau >= 0, "temporal_weight: tau must be >= 0");
    const double t = static_cast<double>(tau);
    switch (w.kind) {
        case WeightKind::gaussian_kernel: return std::exp(-w.alpha * t * t);
        case WeightKind::exponential_decay: break;
    }
    return std::exp(-w.alpha * t);
}

/// Weighted Laplacian of the temporal neighborhood graph.
struct TemporalLaplacian {
    Matrix a;  // N x N

    Index size() const { return a.rows(); }
};

/// Assembles A = sum_i sum_{j in window(i), j != i} omega(|t_i - t_j|) B_ij.
/// The window of i is the index range [i - K/2, i + K/2] truncated to the
/// sequence, so every unordered pair within reach is visited from both ends
/// and contributes twice.
inline TemporalLaplacian temporal_laplacian(const std::vector<std::int64_t>& timestamps,
                                            const TemporalWeighting& w) {
    w.validate();
    check_strictly_increasing(timestamps, "temporal_laplacian");
    const Index n = static_cast<Index>(timestamps.size());
    const Index half = w.window / 2;
    Matrix a = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        const Index lo = std::max<Index>(0, i - half);
        const Index hi = std::min<Index>(n - 1, i + half);
        for (Index j = lo; j <= hi; ++j) {
            if (j == i) continue;
            const auto tau = std::abs(timestamps[static_cast<std::size_t>(i)] - timestamps[static_cast<std::size_t>(j)]);
            const double omega = temporal_weight(w, tau);
            a(i, i) += omega;
            a(j, j) += omega;
            a(i, j) -= omega;
            a(j, i) -= omega;
        }
    }
    return TemporalLaplacian{std::move(a)};
}

/// The quantities shared by OoSE and METS for a fixed training embedding and
/// distance data: D = L L^T, Q = 1/2 (mean(delta_n) 1^T - delta_x), C = -2 L Q.
struct ExtensionProblem {
    Matrix l;  // m x n
    Matrix d;  // m x m
    Matrix q;  // n x N
    Matrix c;  // m x N

    Index dim() const { return l.rows(); }
    Index count() const { return q.cols(); }
};

inline ExtensionProblem make_problem(const TrainedEmbedding& emb, const Matrix& delta_n, const Matrix& delta_x) {
    const Index n = emb.size();
    require(delta_n.rows() == n && delta_n.cols() == n, "extension: delta_n must be n x n");
    require(delta_x.rows() == n, "extension: delta_x must have n rows");
    require(all_finite(delta_x), "extension: non-finite entry in delta_x");
    ExtensionProblem p;
    p.l = emb.l_matrix;
    p.d = p.l * p.l.transpose();
    const Vector column_mean = delta_n.rowwise().mean();
    p.q = 0.5 * ((-delta_x).colwise() + column_mean);
    p.c = -2.0 * p.l * p.q;
    return p;
}

/// Plain Isomap out-of-sample extension: X = 1/2 L# (mean(delta_n) 1^T - delta_x).
inline Matrix isomap_oose(const TrainedEmbedding& emb, const Matrix& delta_n, const Matrix& delta_x) {
    const Index n = emb.size();
    require(delta_n.rows() == n && delta_n.cols() == n, "isomap_oose: delta_n must be n x n");
    require(delta_x.rows() == n, "isomap_oose: delta_x must have n rows");
    const Vector column_mean = delta_n.rowwise().mean();
    const Matrix rhs = (-delta_x).colwise() + column_mean;
    return 0.5 * pseudo_inverse_transpose(emb) * rhs;
}

/// Tr(A X^T X), evaluated as sum_{i<j} -A_ij ||x_i - x_j||^2 (valid because
/// every row of a Laplacian sums to zero); never negative for Laplacians with
/// nonpositive off-diagonals.
inline double compactness(const Matrix& x, const TemporalLaplacian& a) {
    require(a.a.rows() == x.cols() && a.a.cols() == x.cols(), "compactness: shape mismatch");
    double total = 0.0;
    for (Index j = 0; j < x.cols(); ++j)
        for (Index i = j + 1; i < x.cols(); ++i) {
            const double w = -a.a(i, j);
            if (w != 0.0) total += w * (x.col(i) - x.col(j)).squaredNorm();
        }
    return total;
}

inline double fit_residual(const ExtensionProblem& p, const Matrix& x) {
    return (p.q - p.l.transpose() * x).squaredNorm();
}

/// J(X) = ||Q - L^T X||_F^2 + lambda * Tr(A X^T X).
inline double objective(const ExtensionProblem& p, const TemporalLaplacian& a, double lambda, const Matrix& x) {
    return fit_residual(p, x) + lambda * compactness(x, a);
}

/// dJ/dX = C + 2 D X + 2 lambda X A.
inline Matrix gradient(const ExtensionProblem& p, const TemporalLaplacian& a, double lambda, const Matrix& x) {
    return p.c + 2.0 * p.d * x + 2.0 * lambda * x * a.a;
}

inline double gradient_residual(const ExtensionProblem& p, const TemporalLaplacian& a, double lambda,
                                const Matrix& x) {
    return gradient(p, a, lambda, x).norm();
}

inline double gradient_residual(const TrainedEmbedding& emb, const Matrix& delta_n, const Matrix& delta_x,
                                const TemporalLaplacian& a, double lambda, const Matrix& x) {
    return gradient_residual(make_problem(emb, delta_n, delta_x), a, lambda, x);
}

enum class Solver { kronecker_direct, sylvester_eigen };

struct ExtensionResult {
    Matrix x;  // m x N
    double lambda = 0.0;
    double fit_residual = 0.0;
    double compactness = 0.0;
};

namespace detail {

/// vec(X) = -1/2 ((I (x) D) + lambda (A^T (x) I))^{-1} vec(C), materialized.
inline Matrix solve_kronecker(const ExtensionProblem& p, const Matrix& a, double lambda) {
    const Index m = p.dim();
    const Index n = p.count();
    Matrix system = Matrix::Zero(m * n, m * n);
    for (Index col = 0; col < n; ++col)
        for (Index row = 0; row < n; ++row) {
            auto block = system.block(row * m, col * m, m, m);
            if (row == col) block += p.d;
            block.diagonal().array() += lambda * a(col, row);
        }
    const Eigen::FullPivLU<Matrix> lu(system);
    if (!lu.isInvertible())
        throw ComputationError("mets_solve: singular system (rank " + std::to_string(lu.rank()) + " of " +
                               std::to_string(m * n) + ")");
    const Eigen::Map<const Vector> vec_c(p.c.data(), p.c.size());
    const Vector vec_x = lu.solve(-0.5 * vec_c);
    return Eigen::Map<const Matrix>(vec_x.data(), m, n);
}

/// Solves D X + lambda X A = -C/2 in the joint eigenbasis: with A = V S V^T
/// and D = U G U^T each entry decouples as x''_ij = r''_ij / (g_i + lambda s_j).
inline Matrix solve_sylvester(const ExtensionProblem& p, const Matrix& a, double lambda) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig_a(a);
    Eigen::SelfAdjointEigenSolver<Matrix> eig_d(p.d);
    if (eig_a.info() != Eigen::Success || eig_d.info() != Eigen::Success)
        throw ComputationError("mets_solve: eigendecomposition failed");
    const Matrix& v = eig_a.eigenvectors();
    const Matrix& u = eig_d.eigenvectors();
    const Vector& s = eig_a.eigenvalues();
    const Vector& g = eig_d.eigenvalues();

    Matrix rotated = u.transpose() * (-0.5 * p.c) * v;
    const double scale = std::max(g.cwiseAbs().maxCoeff(), std::abs(lambda) * s.cwiseAbs().maxCoeff());
    const double tol = 64.0 * std::numeric_limits<double>::epsilon() * std::max(scale, 1e-300);
    for (Index j = 0; j < rotated.cols(); ++j)
        for (Index i = 0; i < rotated.rows(); ++i) {
            const double denom = g(i) + lambda * s(j);
            if (!(denom > tol)) {
                std::ostringstream msg;
                msg << "mets_solve: singular system (pivot " << denom << " for embedding mode " << i
                    << ", temporal mode " << j << ")";
                throw ComputationError(msg.str());
            }
            rotated(i, j) /= denom;
        }
    return u * rotated * v.transpose();
}

}  // namespace detail

inline ExtensionResult mets_solve(const ExtensionProblem& p, const TemporalLaplacian& a, double lambda,
                                  Solver solver = Solver::sylvester_eigen) {
    require(std::isfinite(lambda) && lambda >= 0.0, "mets_solve: lambda must be finite and >= 0");
    require(a.a.rows() == p.count() && a.a.cols() == p.count(), "mets_solve: Laplacian size does not match N");
    ExtensionResult r;
    r.lambda = lambda;
    r.x = solver == Solver::kronecker_direct ? detail::solve_kronecker(p, a.a, lambda)
                                             : detail::solve_sylvester(p, a.a, lambda);
    if (!all_finite(r.x)) throw ComputationError("mets_solve: non-finite solution");
    r.fit_residual = fit_residual(p, r.x);
    r.compactness = compactness(r.x, a);
    return r;
}

/// METS: out-of-sample extension with temporal-Laplacian regularization.
inline ExtensionResult mets_solve(const TrainedEmbedding& emb, const Matrix& delta_n, const Matrix& delta_x,
                                  const TemporalLaplacian& a, double lambda,
                                  Solver solver = Solver::sylvester_eigen) {
    return mets_solve(make_problem(emb, delta_n, delta_x), a, lambda, solver);
}

}  // namespace mets
