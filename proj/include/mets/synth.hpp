#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mets/core.hpp"
#include "mets/corruption.hpp"

namespace mets {

/// Synthetic two-parameter image manifold: each image is a Gaussian blob
/// whose center is the parameter point. Training parameters sample a
/// (jittered) uniform grid visited in serpentine order; test parameters
/// follow a closed 1:2 Lissajous curve with unit-step timestamps.
struct SyntheticSpec {
    Index height = 24;
    Index width = 24;
    double blob_width = 2.0;   // Gaussian standard deviation, pixels
    Index n = 900;
    Index count = 100;         // N, out-of-sample points
    std::uint64_t seed = 42;
    double jitter = 0.1;       // fraction of the grid spacing
    double amplitude = 0.35;   // Lissajous amplitude in parameter units

    double margin() const { return 2.0 * blob_width; }

    void validate() const {
        require(height >= 1 && width >= 1, "SyntheticSpec: image size must be positive");
        require(n >= 2 && count >= 2, "SyntheticSpec: need n >= 2 and N >= 2");
        require(std::isfinite(blob_width) && blob_width > 0.0, "SyntheticSpec: blob width must be positive");
        require(static_cast<double>(std::min(height, width) - 1) > 2.0 * margin(),
                "SyntheticSpec: blob does not fit the image (need min(H, W) - 1 > 4 * blob_width)");
        require(jitter >= 0.0 && jitter < 0.5, "SyntheticSpec: jitter must lie in [0, 0.5)");
        require(amplitude > 0.0 && amplitude <= 0.5, "SyntheticSpec: amplitude must lie in (0, 0.5]");
    }
};

struct SyntheticData {
    Dataset training;                               // n x (H*W)
    std::vector<std::int64_t> training_timestamps;  // serpentine visiting order
    Matrix training_params;                         // n x 2
    TimeSeriesSet clean_test;                       // N x (H*W)
    Matrix ground_truth;                            // N x 2
};

/// Row-major flattened blob image for the parameter point (p0, p1) in [0,1]^2:
/// p0 moves the blob horizontally, p1 vertically.
inline Eigen::RowVectorXd blob_image(const SyntheticSpec& spec, double p0, double p1) {
    const double cx = spec.margin() + p0 * (static_cast<double>(spec.width - 1) - 2.0 * spec.margin());
    const double cy = spec.margin() + p1 * (static_cast<double>(spec.height - 1) - 2.0 * spec.margin());
    const double inv = 1.0 / (2.0 * spec.blob_width * spec.blob_width);
    Eigen::RowVectorXd row(spec.height * spec.width);
    for (Index r = 0; r < spec.height; ++r)
        for (Index c = 0; c < spec.width; ++c) {
            const double dy = static_cast<double>(r) - cy;
            const double dx = static_cast<double>(c) - cx;
            row(r * spec.width + c) = std::exp(-(dx * dx + dy * dy) * inv);
        }
    return row;
}

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(derive_seed(spec.seed, 0x5917ULL));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    const auto grid_cols = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(spec.n))));
    const Index grid_rows = (spec.n + grid_cols - 1) / grid_cols;
    const double step0 = grid_cols > 1 ? 1.0 / static_cast<double>(grid_cols - 1) : 0.0;
    const double step1 = grid_rows > 1 ? 1.0 / static_cast<double>(grid_rows - 1) : 0.0;

    SyntheticData out;
    out.training_params.resize(spec.n, 2);
    for (Index i = 0; i < spec.n; ++i) {
        const Index gr = i / grid_cols;
        const Index along = i % grid_cols;
        const Index gc = gr % 2 == 0 ? along : grid_cols - 1 - along;
        double p0 = grid_cols > 1 ? static_cast<double>(gc) * step0 : 0.5;
        double p1 = grid_rows > 1 ? static_cast<double>(gr) * step1 : 0.5;
        p0 += spec.jitter * step0 * unit(rng);
        p1 += spec.jitter * step1 * unit(rng);
        out.training_params(i, 0) = std::clamp(p0, 0.0, 1.0);
        out.training_params(i, 1) = std::clamp(p1, 0.0, 1.0);
    }

    constexpr double two_pi = 6.28318530717958647692;
    const double phase = two_pi * 0.5 * (unit(rng) + 1.0);
    out.ground_truth.resize(spec.count, 2);
    for (Index i = 0; i < spec.count; ++i) {
        const double s = two_pi * static_cast<double>(i) / static_cast<double>(spec.count);
        out.ground_truth(i, 0) = 0.5 + spec.amplitude * std::sin(s + phase);
        out.ground_truth(i, 1) = 0.5 + spec.amplitude * std::sin(2.0 * s + phase);
    }

    Matrix train(spec.n, spec.height * spec.width);
    for (Index i = 0; i < spec.n; ++i)
        train.row(i) = blob_image(spec, out.training_params(i, 0), out.training_params(i, 1));
    Matrix test(spec.count, spec.height * spec.width);
    for (Index i = 0; i < spec.count; ++i)
        test.row(i) = blob_image(spec, out.ground_truth(i, 0), out.ground_truth(i, 1));

    out.training = Dataset(std::move(train));
    out.training_timestamps.resize(static_cast<std::size_t>(spec.n));
    for (Index i = 0; i < spec.n; ++i) out.training_timestamps[static_cast<std::size_t>(i)] = i;
    out.clean_test = TimeSeriesSet::uniform(std::move(test));
    return out;
}

}  // namespace mets
