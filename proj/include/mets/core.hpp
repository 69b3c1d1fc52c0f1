#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mets {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments: shape mismatches, out-of-range parameters.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A numerical routine could not produce a result (disconnected graph,
/// singular system, insufficient spectrum, degenerate alignment).
class ComputationError : public Error {
public:
    using Error::Error;
};

/// File format or filesystem failures.
class IoError : public Error {
public:
    using Error::Error;
};

/// Collects non-fatal warnings produced by an operation.
struct Diagnostics {
    std::vector<std::string> warnings;

    void warn(std::string message) { warnings.push_back(std::move(message)); }
};

inline void warn(Diagnostics* diag, std::string message) {
    if (diag != nullptr) diag->warn(std::move(message));
}

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidArgument(message);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Ordered collection of training points, one point per row.
struct Dataset {
    Matrix points;  // n x d

    Dataset() = default;
    explicit Dataset(Matrix pts) : points(std::move(pts)) { validate(); }

    Index size() const { return points.rows(); }
    Index dim() const { return points.cols(); }

    void validate() const {
        require(points.rows() >= 2, "Dataset: need at least 2 points");
        require(points.cols() >= 1, "Dataset: ambient dimension must be >= 1");
        require(all_finite(points), "Dataset: non-finite entry");
    }
};

/// Out-of-sample sequence with strictly increasing integer timestamps.
struct TimeSeriesSet {
    Matrix points;  // N x d
    std::vector<std::int64_t> timestamps;

    TimeSeriesSet() = default;
    TimeSeriesSet(Matrix pts, std::vector<std::int64_t> ts)
        : points(std::move(pts)), timestamps(std::move(ts)) {
        validate();
    }

    /// Unit-step timestamps 0, 1, ..., N-1.
    static TimeSeriesSet uniform(Matrix pts) {
        std::vector<std::int64_t> ts(static_cast<std::size_t>(pts.rows()));
        for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = static_cast<std::int64_t>(i);
        return {std::move(pts), std::move(ts)};
    }

    Index size() const { return points.rows(); }
    Index dim() const { return points.cols(); }

    void validate() const {
        require(points.rows() >= 2, "TimeSeriesSet: need at least 2 points");
        require(static_cast<Index>(timestamps.size()) == points.rows(),
                "TimeSeriesSet: timestamp count does not match point count");
        require(all_finite(points), "TimeSeriesSet: non-finite entry");
        for (std::size_t i = 1; i < timestamps.size(); ++i)
            require(timestamps[i] > timestamps[i - 1],
                    "TimeSeriesSet: timestamps must be strictly increasing");
    }
};

inline void check_strictly_increasing(const std::vector<std::int64_t>& ts, const char* who) {
    for (std::size_t i = 1; i < ts.size(); ++i)
        require(ts[i] > ts[i - 1], std::string(who) + ": timestamps must be strictly increasing");
}

// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t base, Rest... rest) {
    std::uint64_t s = mix_seed(base);
    ((s = mix_seed(s ^ static_cast<std::uint64_t>(rest))), ...);
    return s;
}

}  // namespace mets
