#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <sstream>
#include <utility>
#include <vector>

#include "mets/core.hpp"

namespace mets {

struct Edge {
    Index to;
    double weight;
};

/// Undirected weighted graph stored as sorted adjacency lists.
class NeighborGraph {
public:
    NeighborGraph() = default;
    explicit NeighborGraph(Index nodes) : adj_(static_cast<std::size_t>(nodes)) {}

    Index node_count() const { return static_cast<Index>(adj_.size()); }

    const std::vector<Edge>& neighbors(Index i) const { return adj_[static_cast<std::size_t>(i)]; }

    std::size_t edge_count() const {
        std::size_t total = 0;
        for (const auto& list : adj_) total += list.size();
        return total / 2;
    }

    std::optional<double> weight(Index i, Index j) const {
        const auto& list = neighbors(i);
        auto it = std::lower_bound(list.begin(), list.end(), j,
                                   [](const Edge& e, Index v) { return e.to < v; });
        if (it == list.end() || it->to != j) return std::nullopt;
        return it->weight;
    }

    bool has_edge(Index i, Index j) const { return weight(i, j).has_value(); }

    /// Inserts the undirected edge (i, j) or overwrites its weight.
    void set_edge(Index i, Index j, double w) {
        require(i != j, "NeighborGraph: self-loops are not allowed");
        require(i >= 0 && j >= 0 && i < node_count() && j < node_count(),
                "NeighborGraph: node index out of range");
        require(std::isfinite(w) && w > 0.0, "NeighborGraph: edge weight must be positive and finite");
        upsert(i, j, w);
        upsert(j, i, w);
    }

    std::vector<std::string> warnings;

private:
    void upsert(Index from, Index to, double w) {
        auto& list = adj_[static_cast<std::size_t>(from)];
        auto it = std::lower_bound(list.begin(), list.end(), to,
                                   [](const Edge& e, Index v) { return e.to < v; });
        if (it != list.end() && it->to == to)
            it->weight = w;
        else
            list.insert(it, Edge{to, w});
    }

    std::vector<std::vector<Edge>> adj_;
};

/// Squared geodesic distances among training points and, optionally, to
/// out-of-sample points.
struct GeodesicField {
    Matrix delta_n;                // n x n
    std::optional<Matrix> delta_x;  // n x N
};

/// Euclidean distances between the rows of `a` and the rows of `b`.
inline Matrix pairwise_distances(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.cols(), "pairwise_distances: dimension mismatch");
    const Matrix at = a.transpose();
    const Matrix bt = b.transpose();
    Matrix out(a.rows(), b.rows());
    for (Index j = 0; j < bt.cols(); ++j)
        for (Index i = 0; i < at.cols(); ++i) out(i, j) = (at.col(i) - bt.col(j)).norm();
    return out;
}

/// Symmetric pairwise distances among the rows of `a`.
inline Matrix pairwise_distances(const Matrix& a) {
    const Matrix at = a.transpose();
    const Index n = at.cols();
    Matrix out = Matrix::Zero(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = j + 1; i < n; ++i) out(i, j) = out(j, i) = (at.col(i) - at.col(j)).norm();
    return out;
}

/// Indices of the k smallest entries of `dist`, ordered by (distance, index).
/// `skip` (if non-negative) is never selected.
inline std::vector<Index> k_smallest(const Eigen::Ref<const Vector>& dist, Index k, Index skip = -1) {
    std::vector<Index> idx;
    idx.reserve(static_cast<std::size_t>(dist.size()));
    for (Index j = 0; j < dist.size(); ++j)
        if (j != skip) idx.push_back(j);
    const auto cmp = [&](Index x, Index y) {
        return dist(x) < dist(y) || (dist(x) == dist(y) && x < y);
    };
    const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(kk), idx.end(), cmp);
    idx.resize(kk);
    return idx;
}

/// For every row of the symmetric distance matrix, its k nearest other rows.
inline std::vector<std::vector<Index>> knn_lists(const Matrix& dist, Index k) {
    std::vector<std::vector<Index>> lists(static_cast<std::size_t>(dist.rows()));
    for (Index i = 0; i < dist.rows(); ++i)
        lists[static_cast<std::size_t>(i)] = k_smallest(dist.col(i), k, i);
    return lists;
}

namespace detail {

inline NeighborGraph graph_from_knn(const Matrix& dist, const std::vector<std::vector<Index>>& knn,
                                    Diagnostics* diag) {
    const Index n = dist.rows();
    NeighborGraph g(n);
    constexpr double tiny = std::numeric_limits<double>::epsilon();
    for (Index i = 0; i < n; ++i) {
        for (Index j : knn[static_cast<std::size_t>(i)]) {
            double w = dist(i, j);
            if (w <= 0.0) {
                std::ostringstream msg;
                msg << "duplicate points " << std::min(i, j) << " and " << std::max(i, j)
                    << ": zero-length edge replaced by machine epsilon";
                if (!g.has_edge(i, j)) {
                    g.warnings.push_back(msg.str());
                    warn(diag, msg.str());
                }
                w = tiny;
            }
            g.set_edge(i, j, w);
        }
    }
    return g;
}

}  // namespace detail

/// Symmetrized (union) k-nearest-neighbor graph with Euclidean edge weights.
inline NeighborGraph build_knn_graph(const Dataset& data, Index k, Diagnostics* diag = nullptr) {
    data.validate();
    require(k >= 1 && k < data.size(), "build_knn_graph: need 1 <= k < n");
    const Matrix dist = pairwise_distances(data.points);
    return detail::graph_from_knn(dist, knn_lists(dist, k), diag);
}

/// Sizes of the connected components, largest first.
inline std::vector<Index> component_sizes(const NeighborGraph& g) {
    const Index n = g.node_count();
    std::vector<Index> label(static_cast<std::size_t>(n), -1);
    std::vector<Index> sizes;
    std::vector<Index> stack;
    for (Index s = 0; s < n; ++s) {
        if (label[static_cast<std::size_t>(s)] >= 0) continue;
        const Index c = static_cast<Index>(sizes.size());
        sizes.push_back(0);
        stack.push_back(s);
        label[static_cast<std::size_t>(s)] = c;
        while (!stack.empty()) {
            const Index v = stack.back();
            stack.pop_back();
            ++sizes.back();
            for (const Edge& e : g.neighbors(v)) {
                if (label[static_cast<std::size_t>(e.to)] < 0) {
                    label[static_cast<std::size_t>(e.to)] = c;
                    stack.push_back(e.to);
                }
            }
        }
    }
    std::sort(sizes.begin(), sizes.end(), std::greater<>());
    return sizes;
}

/// Dijkstra shortest-path lengths (unsquared) from `source`.
inline Vector dijkstra(const NeighborGraph& g, Index source) {
    const Index n = g.node_count();
    Vector dist = Vector::Constant(n, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist(source) = 0.0;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
        const auto [d, v] = heap.top();
        heap.pop();
        if (d > dist(v)) continue;
        for (const Edge& e : g.neighbors(v)) {
            const double cand = d + e.weight;
            if (cand < dist(e.to)) {
                dist(e.to) = cand;
                heap.emplace(cand, e.to);
            }
        }
    }
    return dist;
}

/// All-pairs unsquared geodesic lengths. Throws if the graph is disconnected.
inline Matrix geodesic_lengths(const NeighborGraph& g) {
    const auto sizes = component_sizes(g);
    if (sizes.size() > 1) {
        std::ostringstream msg;
        msg << "neighborhood graph is disconnected into " << sizes.size() << " components of sizes";
        for (std::size_t c = 0; c < sizes.size() && c < 16; ++c) msg << (c ? ", " : " ") << sizes[c];
        if (sizes.size() > 16) msg << ", ...";
        msg << "; increase k";
        throw ComputationError(msg.str());
    }
    const Index n = g.node_count();
    Matrix lengths(n, n);
    for (Index s = 0; s < n; ++s) lengths.col(s) = dijkstra(g, s);
    // Dijkstra from either endpoint may differ in the last bit; keep one.
    for (Index j = 0; j < n; ++j)
        for (Index i = j + 1; i < n; ++i) lengths(j, i) = lengths(i, j);
    return lengths;
}

/// Squared geodesic distances over the training graph (delta_n only).
inline GeodesicField shortest_path_distances(const NeighborGraph& g) {
    const Matrix lengths = geodesic_lengths(g);
    return GeodesicField{lengths.array().square().matrix(), std::nullopt};
}

/// Squared geodesic distances from the training points to new points. Each
/// new point links only to its k nearest training points; paths then follow
/// the precomputed training geodesics.
inline Matrix extend_distances(const Dataset& data, const NeighborGraph& graph, const Matrix& delta_n,
                               const Matrix& oos_points, Index k) {
    const Index n = data.size();
    require(graph.node_count() == n, "extend_distances: graph does not match training data");
    require(delta_n.rows() == n && delta_n.cols() == n, "extend_distances: delta_n must be n x n");
    require(oos_points.cols() == data.dim(), "extend_distances: dimension mismatch");
    require(k >= 1 && k <= n, "extend_distances: need 1 <= k <= n");
    require(all_finite(oos_points), "extend_distances: non-finite out-of-sample entry");

    const Matrix lengths = delta_n.array().sqrt().matrix();
    const Matrix links = pairwise_distances(data.points, oos_points);  // n x N
    Matrix delta_x(n, oos_points.rows());
    for (Index j = 0; j < oos_points.rows(); ++j) {
        const auto nearest = k_smallest(links.col(j), k);
        for (Index i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (Index t : nearest) best = std::min(best, links(t, j) + lengths(t, i));
            delta_x(i, j) = best * best;
        }
    }
    return delta_x;
}

inline Matrix extend_distances(const Dataset& data, const NeighborGraph& graph, const Matrix& delta_n,
                               const TimeSeriesSet& oos, Index k) {
    oos.validate();
    return extend_distances(data, graph, delta_n, oos.points, k);
}

}  // namespace mets
