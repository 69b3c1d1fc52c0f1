#pragma once

#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mets/core.hpp"
#include "mets/extension.hpp"
#include "mets/geodesics.hpp"
#include "mets/isomap.hpp"

namespace mets {

// ---------------------------------------------------------------------------
// ST-Isomap
// ---------------------------------------------------------------------------

struct StIsomapParams {
    double c_atn = 1.0;  // adjacent temporal neighbors
    double c_ctn = 1.0;  // common temporal neighbors
    Index epsilon = 1;   // trivial-match window (indices)
    Index k = 20;

    void validate() const {
        require(c_atn >= 1.0 && c_ctn >= 1.0, "StIsomapParams: scaling factors must be >= 1");
        require(epsilon >= 1, "StIsomapParams: epsilon must be >= 1");
        require(k >= 1, "StIsomapParams: k must be >= 1");
    }
};

/// Common temporal neighbors of every point: the kNN entries that are no
/// farther than the closest trivial match (index window of +-epsilon).
inline std::vector<std::vector<Index>> common_temporal_neighbors(const Matrix& dist,
                                                                 const std::vector<std::vector<Index>>& knn,
                                                                 Index epsilon) {
    const Index n = dist.rows();
    std::vector<std::vector<Index>> ctn(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        double closest_trivial = std::numeric_limits<double>::infinity();
        for (Index j = std::max<Index>(0, i - epsilon); j <= std::min<Index>(n - 1, i + epsilon); ++j)
            if (j != i) closest_trivial = std::min(closest_trivial, dist(i, j));
        for (Index j : knn[static_cast<std::size_t>(i)])
            if (dist(i, j) <= closest_trivial) ctn[static_cast<std::size_t>(i)].push_back(j);
    }
    return ctn;
}

/// ST-Isomap neighborhood graph: kNN graph plus adjacent-temporal-neighbor
/// edges. CTN edges are divided by c_ctn; remaining ATN edges by c_atn. An
/// edge that is both is divided by c_ctn only.
inline NeighborGraph st_isomap_graph(const Dataset& data, const std::vector<std::int64_t>& timestamps,
                                     const StIsomapParams& p, Diagnostics* diag = nullptr) {
    data.validate();
    p.validate();
    require(static_cast<Index>(timestamps.size()) == data.size(), "st_isomap_graph: timestamp count mismatch");
    require(p.k < data.size(), "st_isomap_graph: need k < n");
    check_strictly_increasing(timestamps, "st_isomap_graph");

    const Matrix dist = pairwise_distances(data.points);
    const auto knn = knn_lists(dist, p.k);
    NeighborGraph g = detail::graph_from_knn(dist, knn, diag);
    const auto ctn = common_temporal_neighbors(dist, knn, p.epsilon);

    constexpr double tiny = std::numeric_limits<double>::epsilon();
    const auto base = [&](Index i, Index j) { return std::max(dist(i, j), tiny); };

    std::set<std::pair<Index, Index>> ctn_edges;
    for (Index i = 0; i < data.size(); ++i)
        for (Index j : ctn[static_cast<std::size_t>(i)]) ctn_edges.emplace(std::min(i, j), std::max(i, j));

    for (Index i = 0; i + 1 < data.size(); ++i) {
        const auto gap = timestamps[static_cast<std::size_t>(i + 1)] - timestamps[static_cast<std::size_t>(i)];
        if (gap == 1 && !ctn_edges.count({i, i + 1})) g.set_edge(i, i + 1, base(i, i + 1) / p.c_atn);
    }
    for (const auto& [i, j] : ctn_edges) g.set_edge(i, j, base(i, j) / p.c_ctn);
    return g;
}

inline IsomapModel fit_st_isomap(const Dataset& data, const std::vector<std::int64_t>& timestamps,
                                 const StIsomapParams& p, Index m, Diagnostics* diag = nullptr) {
    NeighborGraph g = st_isomap_graph(data, timestamps, p, diag);
    return fit_isomap(data, std::move(g), p.k, m);
}

struct StIsomapResult {
    Matrix clean_embedding;  // m x n
    Matrix extension;        // m x N
};

/// ST-Isomap with an Isomap-style out-of-sample extension: new points link to
/// their k nearest training points, paths follow the ST-Isomap graph.
inline StIsomapResult st_isomap_oose(const Dataset& data, const std::vector<std::int64_t>& timestamps,
                                     const TimeSeriesSet& oos, const StIsomapParams& p, Index m,
                                     Diagnostics* diag = nullptr) {
    oos.validate();
    const IsomapModel model = fit_st_isomap(data, timestamps, p, m, diag);
    const Matrix delta_x = model.distances_to(oos.points);
    return {model.embedding.l_matrix, isomap_oose(model.embedding, model.delta_n, delta_x)};
}

// ---------------------------------------------------------------------------
// Manifold blurring mean shift
// ---------------------------------------------------------------------------

struct MbmsParams {
    double sigma = 1.0;
    Index local_dim = 1;
    Index k = 20;
    Index iterations = 3;

    void validate(Index count, Index ambient) const {
        require(std::isfinite(sigma) && sigma > 0.0, "MbmsParams: sigma must be positive");
        require(iterations >= 1, "MbmsParams: iterations must be >= 1");
        require(local_dim >= 1 && local_dim < ambient, "MbmsParams: need 1 <= local_dim < ambient dimension");
        require(k >= 1 && k < count, "MbmsParams: need 1 <= k < point count");
    }
};

/// MBMS denoising of the rows of `points`. Each round moves every point to the
/// Gaussian-weighted mean of itself and its k nearest neighbors, keeping only
/// the part of the move orthogonal to the local PCA tangent space of that
/// neighborhood. Updates within a round read only the previous iterate.
inline Matrix mbms_denoise(const Matrix& points, const MbmsParams& p, Diagnostics* diag = nullptr) {
    p.validate(points.rows(), points.cols());
    require(all_finite(points), "mbms_denoise: non-finite entry");

    const Index count = points.rows();
    const double inv_two_sigma2 = 1.0 / (2.0 * p.sigma * p.sigma);
    Matrix current = points.transpose();  // d x count, one column per point
    Matrix next(current.rows(), current.cols());

    for (Index it = 0; it < p.iterations; ++it) {
        const Matrix dist = pairwise_distances(current.transpose());
        Index skipped = 0;
        for (Index i = 0; i < count; ++i) {
            auto hood = k_smallest(dist.col(i), p.k, i);
            hood.insert(hood.begin(), i);
            const Index h = static_cast<Index>(hood.size());

            Matrix local(current.rows(), h);
            Vector w(h);
            for (Index c = 0; c < h; ++c) {
                const Index j = hood[static_cast<std::size_t>(c)];
                local.col(c) = current.col(j);
                w(c) = std::exp(-dist(i, j) * dist(i, j) * inv_two_sigma2);
            }
            const Vector shifted = local * w / w.sum();
            Vector step = shifted - current.col(i);

            const Vector centroid = local.rowwise().mean();
            const Matrix centered = local.colwise() - centroid;
            Eigen::SelfAdjointEigenSolver<Matrix> eig(centered.transpose() * centered);
            const Vector mu = eig.eigenvalues().reverse();
            const Matrix coeffs = eig.eigenvectors().rowwise().reverse();
            const Index ldim = std::min(p.local_dim, h);
            if (ldim < p.local_dim || mu(ldim - 1) <= 1e-24 + 1e-12 * mu(0)) {
                ++skipped;
            } else {
                Matrix tangent = centered * coeffs.leftCols(ldim);
                for (Index c = 0; c < ldim; ++c) tangent.col(c) /= std::sqrt(mu(c));
                step -= tangent * (tangent.transpose() * step);
            }
            next.col(i) = current.col(i) + step;
        }
        if (skipped > 0)
            warn(diag, "mbms_denoise: iteration " + std::to_string(it + 1) + ": projection skipped for " +
                           std::to_string(skipped) + " points with neighborhood rank below " +
                           std::to_string(p.local_dim));
        std::swap(current, next);
    }
    return current.transpose();
}

}  // namespace mets
