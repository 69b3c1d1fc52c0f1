#pragma once

#include <algorithm>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "mets/core.hpp"
#include "mets/geodesics.hpp"

namespace mets {

/// Classical-MDS embedding of the training points.
struct TrainedEmbedding {
    Matrix l_matrix;     // m x n, row i = sqrt(lambda_i) * v_i^T
    Vector eigenvalues;  // m, descending, all positive
    Matrix eigenvectors; // n x m, orthonormal columns

    Index dim() const { return l_matrix.rows(); }
    Index size() const { return l_matrix.cols(); }
};

/// Returns -1/2 H delta H with H the n x n centering matrix.
inline Matrix center_squared_distances(const Matrix& delta_n) {
    require(delta_n.rows() == delta_n.cols(), "center_squared_distances: matrix must be square");
    const Vector row_mean = delta_n.rowwise().mean();
    const Eigen::RowVectorXd col_mean = delta_n.colwise().mean();
    const double grand = delta_n.mean();
    Matrix c = delta_n;
    c.colwise() -= row_mean;
    c.rowwise() -= col_mean;
    c.array() += grand;
    c *= -0.5;
    // Exact symmetry regardless of summation order.
    return 0.5 * (c + c.transpose());
}

/// Number of eigenvalues treated as strictly positive.
inline Index positive_spectrum_size(const Vector& descending) {
    if (descending.size() == 0) return 0;
    const double scale = descending.cwiseAbs().maxCoeff();
    const double tol = static_cast<double>(descending.size()) * std::numeric_limits<double>::epsilon() * scale;
    Index count = 0;
    while (count < descending.size() && descending(count) > tol) ++count;
    return count;
}

namespace detail {

/// Flip each column so that its first clearly nonzero entry is positive.
inline void canonicalize_signs(Matrix& vectors) {
    for (Index c = 0; c < vectors.cols(); ++c) {
        for (Index r = 0; r < vectors.rows(); ++r) {
            if (std::abs(vectors(r, c)) > 1e-10) {
                if (vectors(r, c) < 0) vectors.col(c) *= -1.0;
                break;
            }
        }
    }
}

}  // namespace detail

/// Isomap/MDS embedding from squared geodesic distances: top-m eigenpairs of
/// the double-centered matrix.
inline TrainedEmbedding isomap_embed(const Matrix& delta_n, Index m) {
    require(m >= 1, "isomap_embed: m must be >= 1");
    require(delta_n.rows() == delta_n.cols() && delta_n.rows() >= 2, "isomap_embed: delta_n must be n x n, n >= 2");
    require(all_finite(delta_n), "isomap_embed: non-finite distance");

    const Matrix centered = center_squared_distances(delta_n);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(centered);
    if (solver.info() != Eigen::Success) throw ComputationError("isomap_embed: eigendecomposition failed");

    // Eigen returns ascending order.
    const Vector values = solver.eigenvalues().reverse();
    const Index positive = positive_spectrum_size(values);
    if (m > positive) {
        std::ostringstream msg;
        msg << "isomap_embed: requested m = " << m << " but the centered distance matrix has only "
            << positive << " positive eigenvalues";
        throw ComputationError(msg.str());
    }

    TrainedEmbedding emb;
    emb.eigenvalues = values.head(m);
    emb.eigenvectors = solver.eigenvectors().rowwise().reverse().leftCols(m);
    detail::canonicalize_signs(emb.eigenvectors);
    emb.l_matrix = (emb.eigenvectors * emb.eigenvalues.cwiseSqrt().asDiagonal()).transpose();
    return emb;
}

/// L#: row i equals v_i^T / sqrt(lambda_i).
inline Matrix pseudo_inverse_transpose(const TrainedEmbedding& emb) {
    return (emb.eigenvectors * emb.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal()).transpose();
}

/// Training-side state needed to extend new points: data, neighborhood
/// graph, squared geodesics and the embedding.
struct IsomapModel {
    Dataset data;
    NeighborGraph graph;
    Matrix delta_n;
    TrainedEmbedding embedding;
    Index k = 20;

    /// Squared geodesic distances from the training points to new points.
    Matrix distances_to(const Matrix& points) const { return extend_distances(data, graph, delta_n, points, k); }
};

inline IsomapModel fit_isomap(Dataset data, NeighborGraph graph, Index k, Index m) {
    IsomapModel model;
    model.delta_n = shortest_path_distances(graph).delta_n;
    model.embedding = isomap_embed(model.delta_n, m);
    model.data = std::move(data);
    model.graph = std::move(graph);
    model.k = k;
    return model;
}

inline IsomapModel fit_isomap(Dataset data, Index k, Index m, Diagnostics* diag = nullptr) {
    NeighborGraph graph = build_knn_graph(data, k, diag);
    return fit_isomap(std::move(data), std::move(graph), k, m);
}

}  // namespace mets
