#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mets/core.hpp"

namespace mets {

/// Grayscale image with intensities in [0, 1]; rows x cols = H x W.
using Image = Matrix;

enum class NoiseKind { salt_pepper, gaussian, motion_blur };

inline std::string to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::salt_pepper: return "salt-pepper";
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::motion_blur: return "motion-blur";
    }
    return "unknown";
}

inline NoiseKind parse_noise_kind(const std::string& name) {
    if (name == "salt-pepper") return NoiseKind::salt_pepper;
    if (name == "gaussian") return NoiseKind::gaussian;
    if (name == "motion-blur") return NoiseKind::motion_blur;
    throw InvalidArgument("unknown noise kind '" + name + "' (expected salt-pepper, gaussian or motion-blur)");
}

/// One point of a noise grid. `level` is p for salt-pepper, the standard
/// deviation for gaussian and the Gamma scale beta for motion-blur.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double level = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        require(std::isfinite(level), "NoiseSpec: level must be finite");
        switch (kind) {
            case NoiseKind::salt_pepper: require(level >= 0.0 && level <= 1.0, "NoiseSpec: p must lie in [0, 1]"); break;
            case NoiseKind::gaussian: require(level >= 0.0, "NoiseSpec: sigma must be >= 0"); break;
            case NoiseKind::motion_blur: require(level > 0.0, "NoiseSpec: beta must be > 0"); break;
        }
    }
};

/// Default sweeps: p and sigma from 0.1/0.2 in steps of 0.1, beta 10..50.
inline std::vector<double> default_noise_grid(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::salt_pepper: return {0.2, 0.3, 0.4, 0.5, 0.6};
        case NoiseKind::gaussian: return {0.1, 0.2, 0.3, 0.4, 0.5};
        case NoiseKind::motion_blur: return {10, 20, 30, 40, 50};
    }
    return {};
}

inline Image clip_unit(Image img) { return img.cwiseMax(0.0).cwiseMin(1.0); }

inline Image salt_pepper(const Image& img, double p, std::uint64_t seed) {
    require(p >= 0.0 && p <= 1.0, "salt_pepper: p must lie in [0, 1]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Image out = img;
    for (Index c = 0; c < out.cols(); ++c)
        for (Index r = 0; r < out.rows(); ++r) {
            const double u = unit(rng);
            if (u < 0.5 * p)
                out(r, c) = 0.0;
            else if (u < p)
                out(r, c) = 1.0;
        }
    return out;
}

inline Image gaussian_noise(const Image& img, double sigma, std::uint64_t seed) {
    require(std::isfinite(sigma) && sigma >= 0.0, "gaussian_noise: sigma must be >= 0");
    if (sigma == 0.0) return img;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma);
    Image out = img;
    for (Index c = 0; c < out.cols(); ++c)
        for (Index r = 0; r < out.rows(); ++r) out(r, c) += normal(rng);
    return clip_unit(std::move(out));
}

/// Linear-motion kernel: a centered segment of length eta pixels at theta
/// degrees counterclockwise, rasterized with bilinear weights and normalized.
/// The kernel has odd size and its center pixel is the origin.
inline Matrix motion_blur_kernel(double eta, double theta_degrees) {
    require(std::isfinite(eta) && eta >= 1.0, "motion_blur_kernel: eta must be >= 1");
    require(std::isfinite(theta_degrees), "motion_blur_kernel: theta must be finite");
    constexpr double pi = 3.14159265358979323846;
    const double rad = theta_degrees * pi / 180.0;
    const auto snap = [](double v) { return std::abs(v) < 1e-12 ? 0.0 : v; };
    const double dx = snap(std::cos(rad));
    const double dy = snap(std::sin(rad));

    const auto samples = std::max<Index>(1, static_cast<Index>(std::ceil(eta - 1e-9)));
    const double half = 0.5 * (eta - 1.0);
    std::map<std::pair<Index, Index>, double> mass;  // (row, col) offset -> weight
    for (Index s = 0; s < samples; ++s) {
        const double t = samples == 1 ? 0.0 : -half + 2.0 * half * static_cast<double>(s) / static_cast<double>(samples - 1);
        const double x = t * dx;
        const double y = -t * dy;  // image rows grow downward
        const double x0 = std::floor(x);
        const double y0 = std::floor(y);
        const double fx = x - x0;
        const double fy = y - y0;
        const double w[2][2] = {{(1 - fy) * (1 - fx), (1 - fy) * fx}, {fy * (1 - fx), fy * fx}};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                if (w[a][b] > 0.0)
                    mass[{static_cast<Index>(y0) + a, static_cast<Index>(x0) + b}] += w[a][b];
    }
    Index ry = 0;
    Index rx = 0;
    for (const auto& [pos, _] : mass) {
        ry = std::max(ry, std::abs(pos.first));
        rx = std::max(rx, std::abs(pos.second));
    }
    Matrix kernel = Matrix::Zero(2 * ry + 1, 2 * rx + 1);
    for (const auto& [pos, v] : mass) kernel(pos.first + ry, pos.second + rx) += v;
    return kernel / kernel.sum();
}

/// 2-D convolution with replicate borders; the kernel center is its middle
/// pixel.
inline Image convolve_replicate(const Image& img, const Matrix& kernel) {
    const Index cy = kernel.rows() / 2;
    const Index cx = kernel.cols() / 2;
    const Index h = img.rows();
    const Index w = img.cols();
    Image out = Image::Zero(h, w);
    for (Index a = 0; a < kernel.rows(); ++a)
        for (Index b = 0; b < kernel.cols(); ++b) {
            const double k = kernel(kernel.rows() - 1 - a, kernel.cols() - 1 - b);
            if (k == 0.0) continue;
            for (Index c = 0; c < w; ++c) {
                const Index sc = std::clamp<Index>(c + b - cx, 0, w - 1);
                for (Index r = 0; r < h; ++r) out(r, c) += k * img(std::clamp<Index>(r + a - cy, 0, h - 1), sc);
            }
        }
    return out;
}

struct MotionSample {
    double eta;
    double theta;
};

/// theta ~ U[0, 360), eta ~ Gamma(shape 1, scale beta) clamped below at 1.
template <typename Rng>
MotionSample sample_motion(double beta, Rng& rng) {
    require(std::isfinite(beta) && beta > 0.0, "motion_blur: beta must be > 0");
    std::uniform_real_distribution<double> angle(0.0, 360.0);
    std::exponential_distribution<double> length(1.0 / beta);
    const double theta = angle(rng);
    const double eta = length(rng);
    return {std::max(eta, 1.0), theta};
}

inline Image motion_blur(const Image& img, double beta, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const MotionSample s = sample_motion(beta, rng);
    return clip_unit(convolve_replicate(img, motion_blur_kernel(s.eta, s.theta)));
}

inline Image corrupt(const Image& img, const NoiseSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case NoiseKind::salt_pepper: return salt_pepper(img, spec.level, spec.seed);
        case NoiseKind::gaussian: return gaussian_noise(img, spec.level, spec.seed);
        case NoiseKind::motion_blur: return motion_blur(img, spec.level, spec.seed);
    }
    return img;
}

/// Row-major flattening (d = H * W) between images and dataset rows.
inline Eigen::RowVectorXd flatten(const Image& img) {
    Eigen::RowVectorXd row(img.size());
    for (Index r = 0; r < img.rows(); ++r) row.segment(r * img.cols(), img.cols()) = img.row(r);
    return row;
}

inline Image unflatten(const Eigen::Ref<const Eigen::RowVectorXd>& row, Index height, Index width) {
    require(row.size() == height * width, "unflatten: size does not match H x W");
    Image img(height, width);
    for (Index r = 0; r < height; ++r) img.row(r) = row.segment(r * width, width);
    return img;
}

/// Number of noise instances generated per grid point (one for tuning, the
/// rest for evaluation).
inline constexpr int kNoiseInstances = 6;

/// Corrupts every row (an H x W image) of `points` independently. Image j of
/// instance i uses a seed derived from (spec.seed, i, j).
inline Matrix corrupt_rows(const Matrix& points, Index height, Index width, const NoiseSpec& spec, int instance) {
    spec.validate();
    require(points.cols() == height * width, "corrupt_rows: row length does not match H x W");
    Matrix out(points.rows(), points.cols());
    for (Index j = 0; j < points.rows(); ++j) {
        NoiseSpec s = spec;
        s.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(instance), static_cast<std::uint64_t>(j));
        out.row(j) = flatten(corrupt(unflatten(points.row(j), height, width), s));
    }
    return out;
}

/// All kNoiseInstances corrupted copies for one grid point.
inline std::vector<Matrix> noise_instances(const Matrix& points, Index height, Index width, const NoiseSpec& spec) {
    std::vector<Matrix> out;
    out.reserve(kNoiseInstances);
    for (int i = 0; i < kNoiseInstances; ++i) out.push_back(corrupt_rows(points, height, width, spec, i));
    return out;
}

}  // namespace mets
