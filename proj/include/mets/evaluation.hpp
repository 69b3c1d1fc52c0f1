#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "mets/baselines.hpp"
#include "mets/core.hpp"
#include "mets/corruption.hpp"
#include "mets/extension.hpp"
#include "mets/geodesics.hpp"
#include "mets/isomap.hpp"

namespace mets {

// ---------------------------------------------------------------------------
// Procrustes alignment and the error metric
// ---------------------------------------------------------------------------

/// x -> scale * rotation * x + translation, applied column-wise.
struct AlignmentTransform {
    Matrix rotation;  // m x m, orthogonal (reflections allowed)
    double scale = 1.0;
    Vector translation;

    Matrix apply(const Matrix& w) const { return ((scale * rotation) * w).colwise() + translation; }
};

struct Alignment {
    AlignmentTransform transform;
    Matrix aligned;
};

/// Similarity transform of `target` minimizing ||reference - (sRW + t1^T)||_F
/// over the full orthogonal group.
inline Alignment procrustes_align(const Matrix& reference, const Matrix& target) {
    require(reference.rows() == target.rows() && reference.cols() == target.cols(),
            "procrustes_align: shape mismatch");
    require(target.cols() >= target.rows(), "procrustes_align: need at least m points");
    require(all_finite(reference) && all_finite(target), "procrustes_align: non-finite input");

    const Vector ref_mean = reference.rowwise().mean();
    const Vector tgt_mean = target.rowwise().mean();
    const Matrix ref_c = reference.colwise() - ref_mean;
    const Matrix tgt_c = target.colwise() - tgt_mean;
    const double tgt_energy = tgt_c.squaredNorm();
    if (!(tgt_energy > std::numeric_limits<double>::min() * static_cast<double>(target.size())))
        throw ComputationError("procrustes_align: degenerate target (all points identical)");

    const Eigen::JacobiSVD<Matrix> svd(ref_c * tgt_c.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
    Alignment out;
    out.transform.rotation = svd.matrixU() * svd.matrixV().transpose();
    out.transform.scale = svd.singularValues().sum() / tgt_energy;
    out.transform.translation = ref_mean - out.transform.scale * out.transform.rotation * tgt_mean;
    out.aligned = out.transform.apply(target);
    return out;
}

/// Mean Euclidean distance between matching columns.
inline double oose_error(const Matrix& z, const Matrix& w) {
    require(z.rows() == w.rows() && z.cols() == w.cols(), "oose_error: shape mismatch");
    require(z.cols() >= 1, "oose_error: empty input");
    return (z - w).colwise().norm().mean();
}

/// Error of `w` after optimal alignment onto `reference`.
inline double aligned_error(const Matrix& reference, const Matrix& w) {
    return oose_error(reference, procrustes_align(reference, w).aligned);
}

inline double sample_stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// Standard error of the mean: s / sqrt(count).
inline double standard_error(const std::vector<double>& v) {
    return v.empty() ? 0.0 : sample_stddev(v) / std::sqrt(static_cast<double>(v.size()));
}

// ---------------------------------------------------------------------------
// Parameter tuning
// ---------------------------------------------------------------------------

template <typename Param>
struct TuneResult {
    Param best;
    double best_error = std::numeric_limits<double>::infinity();
    std::vector<double> errors;  // one per grid entry
};

/// Grid search: evaluates `error_of(param)` for every grid entry and returns
/// the argmin. Ties go to the smallest parameter value.
template <typename Param, typename ErrorFn>
TuneResult<Param> tune_parameter(const std::vector<Param>& grid, ErrorFn&& error_of) {
    require(!grid.empty(), "tune_parameter: empty grid");
    TuneResult<Param> r{grid.front(), std::numeric_limits<double>::infinity(), {}};
    r.errors.reserve(grid.size());
    bool have = false;
    for (const Param& p : grid) {
        const double e = error_of(p);
        r.errors.push_back(e);
        if (!have || e < r.best_error || (e == r.best_error && p < r.best)) {
            r.best = p;
            r.best_error = e;
            have = true;
        }
    }
    return r;
}

/// Grid search for a method producing embeddings: each candidate embedding is
/// Procrustes-aligned to `reference` before scoring.
template <typename Param, typename ExtendFn>
TuneResult<Param> tune_parameter(const std::vector<Param>& grid, ExtendFn&& extend, const Matrix& reference) {
    return tune_parameter(grid, [&](const Param& p) { return aligned_error(reference, extend(p)); });
}

/// Protocol for one grid cell: tune on instance 0, score instances 1..5.
struct CellResult {
    std::vector<double> tuning_errors;
    std::vector<double> errors;  // instances 1..5
    std::size_t best_index = 0;
};

template <typename Param, typename ErrorFn>
CellResult evaluate_cell(const std::vector<Param>& grid, const std::vector<Matrix>& instances, ErrorFn&& error_of) {
    require(instances.size() == static_cast<std::size_t>(kNoiseInstances), "evaluate_cell: expected 6 noise instances");
    const auto tuned = tune_parameter(grid, [&](const Param& p) { return error_of(p, instances.front()); });
    CellResult r;
    r.tuning_errors = tuned.errors;
    r.best_index = static_cast<std::size_t>(std::find(grid.begin(), grid.end(), tuned.best) - grid.begin());
    for (std::size_t i = 1; i < instances.size(); ++i) r.errors.push_back(error_of(tuned.best, instances[i]));
    return r;
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

enum class Method { isomap, mets, st_isomap, mbms };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::isomap: return "isomap";
        case Method::mets: return "mets";
        case Method::st_isomap: return "st-isomap";
        case Method::mbms: return "mbms";
    }
    return "unknown";
}

inline Method parse_method(const std::string& name) {
    if (name == "isomap") return Method::isomap;
    if (name == "mets") return Method::mets;
    if (name == "st-isomap") return Method::st_isomap;
    if (name == "mbms") return Method::mbms;
    throw InvalidArgument("unknown method '" + name + "' (expected isomap, mets, st-isomap or mbms)");
}

struct StGridPoint {
    Index epsilon;
    double c_ctn;
    auto operator<=>(const StGridPoint&) const = default;
};

struct MbmsGridPoint {
    double sigma;
    Index local_dim;
    auto operator<=>(const MbmsGridPoint&) const = default;
};

/// Default METS regularization grid: 0 and {1, 2, 5} x 10^e for e = -1..6.
inline std::vector<double> default_lambda_grid() {
    std::vector<double> grid{0.0};
    for (int e = -1; e <= 6; ++e)
        for (double mant : {1.0, 2.0, 5.0}) grid.push_back(mant * std::pow(10.0, e));
    return grid;
}

/// Reported lambda choices for the eyeglasses salt-and-pepper sweep
/// (p = 0.2 .. 0.6). Useful as a fixed preset when no tuning instance exists.
/// They belong to that dataset's distance scale and do not transfer as-is.
inline std::vector<double> eyeglasses_salt_pepper_lambdas() { return {2e3, 1.4e4, 2e4, 5.3e4, 9e5}; }

struct NoiseGrid {
    NoiseKind kind;
    std::vector<double> levels;
};

/// Everything the experiment needs, with data already in memory.
struct ExperimentSetup {
    Dataset training;
    std::vector<std::int64_t> training_timestamps;
    TimeSeriesSet clean_test;
    Index height = 0;
    Index width = 0;

    std::vector<Method> methods{Method::isomap, Method::mets, Method::st_isomap, Method::mbms};
    std::vector<NoiseGrid> noise;

    Index k = 20;
    Index m = 2;
    TemporalWeighting weighting{};
    Solver solver = Solver::sylvester_eigen;
    std::vector<double> lambda_grid = default_lambda_grid();

    double c_atn = 1.0;
    std::vector<Index> epsilon_grid{1, 2, 3, 5};
    std::vector<double> c_ctn_grid{1, 2, 5, 10};

    std::vector<double> sigma_grid{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
    std::vector<Index> mbms_dims{1, 2};
    Index mbms_k = 20;
    Index mbms_iterations = 3;

    std::uint64_t seed = 42;
};

struct ExperimentReport {
    std::string method;
    std::string noise_kind;
    double noise_level = 0.0;
    double mean_error = std::numeric_limits<double>::quiet_NaN();
    double sem = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> per_instance_errors;
    std::map<std::string, double> tuned_params;
    std::string error;  // non-empty when the cell failed

    bool ok() const { return error.empty(); }
};

inline NoiseSpec noise_spec_for(const ExperimentSetup& s, NoiseKind kind, std::size_t level_index) {
    const auto& grid = *std::find_if(s.noise.begin(), s.noise.end(), [&](const NoiseGrid& g) { return g.kind == kind; });
    return NoiseSpec{kind, grid.levels.at(level_index),
                     derive_seed(s.seed, static_cast<std::uint64_t>(kind) + 1, static_cast<std::uint64_t>(level_index))};
}

namespace detail {

inline std::vector<StGridPoint> st_grid(const ExperimentSetup& s) {
    std::vector<StGridPoint> g;
    for (Index e : s.epsilon_grid)
        for (double c : s.c_ctn_grid) g.push_back({e, c});
    return g;
}

inline std::vector<MbmsGridPoint> mbms_grid(const ExperimentSetup& s) {
    std::vector<MbmsGridPoint> g;
    for (Index l : s.mbms_dims)
        for (double sg : s.sigma_grid) g.push_back({sg, l});
    return g;
}

/// Shared state for one run: the clean model, the reference embedding Z and
/// lazily fitted ST-Isomap models.
class ExperimentContext {
public:
    explicit ExperimentContext(const ExperimentSetup& s)
        : setup_(s),
          clean_(fit_isomap(s.training, s.k, s.m)),
          reference_(isomap_oose(clean_.embedding, clean_.delta_n, clean_.distances_to(s.clean_test.points))),
          laplacian_(temporal_laplacian(s.clean_test.timestamps, s.weighting)) {}

    const Matrix& reference() const { return reference_; }
    const IsomapModel& clean_model() const { return clean_; }
    const TemporalLaplacian& laplacian() const { return laplacian_; }

    double isomap_error(const Matrix& noisy) const {
        return aligned_error(reference_, isomap_oose(clean_.embedding, clean_.delta_n, clean_.distances_to(noisy)));
    }

    double mets_error(double lambda, const Matrix& noisy) const {
        const Matrix delta_x = clean_.distances_to(noisy);
        const auto result = mets_solve(clean_.embedding, clean_.delta_n, delta_x, laplacian_, lambda, setup_.solver);
        return aligned_error(reference_, result.x);
    }

    double st_error(const StGridPoint& g, const Matrix& noisy) {
        const auto& st = st_model(g);
        const Matrix x = isomap_oose(st.model.embedding, st.model.delta_n, st.model.distances_to(noisy));
        return aligned_error(st.reference, x);
    }

    double mbms_error(const MbmsGridPoint& g, const Matrix& noisy) const {
        const Index n = setup_.training.size();
        Matrix joint(n + noisy.rows(), noisy.cols());
        joint << setup_.training.points, noisy;
        const Matrix denoised = mbms_denoise(joint, MbmsParams{g.sigma, g.local_dim, setup_.mbms_k, setup_.mbms_iterations});
        const Dataset train_dn(denoised.topRows(n));
        const NeighborGraph graph = build_knn_graph(train_dn, setup_.k);
        const Matrix delta_n = shortest_path_distances(graph).delta_n;
        const Matrix delta_x = extend_distances(train_dn, graph, delta_n, Matrix(denoised.bottomRows(noisy.rows())), setup_.k);
        return aligned_error(reference_, isomap_oose(clean_.embedding, delta_n, delta_x));
    }

private:
    struct StEntry {
        IsomapModel model;
        Matrix reference;  // ST-Isomap clean OoSE aligned onto Z
    };

    const StEntry& st_model(const StGridPoint& g) {
        const auto key = std::make_pair(g.epsilon, g.c_ctn);
        auto it = st_cache_.find(key);
        if (it == st_cache_.end()) {
            StIsomapParams p{setup_.c_atn, g.c_ctn, g.epsilon, setup_.k};
            StEntry e{fit_st_isomap(setup_.training, setup_.training_timestamps, p, setup_.m), {}};
            const Matrix clean_st = isomap_oose(e.model.embedding, e.model.delta_n, e.model.distances_to(setup_.clean_test.points));
            e.reference = procrustes_align(reference_, clean_st).aligned;
            it = st_cache_.emplace(key, std::move(e)).first;
        }
        return it->second;
    }

    const ExperimentSetup& setup_;
    IsomapModel clean_;
    Matrix reference_;
    TemporalLaplacian laplacian_;
    std::map<std::pair<Index, double>, StEntry> st_cache_;
};

inline void finish_report(ExperimentReport& r, const CellResult& cell) {
    r.per_instance_errors = cell.errors;
    double sum = 0.0;
    for (double e : cell.errors) sum += e;
    r.mean_error = sum / static_cast<double>(cell.errors.size());
    r.sem = standard_error(cell.errors);
}

inline ExperimentReport run_cell(ExperimentContext& ctx, const ExperimentSetup& s, Method method,
                                 const NoiseSpec& noise, const std::vector<Matrix>& instances) {
    ExperimentReport r;
    r.method = to_string(method);
    r.noise_kind = to_string(noise.kind);
    r.noise_level = noise.level;
    try {
        switch (method) {
            case Method::isomap: {
                const std::vector<int> none{0};
                finish_report(r, evaluate_cell(none, instances, [&](int, const Matrix& y) { return ctx.isomap_error(y); }));
                break;
            }
            case Method::mets: {
                const auto cell = evaluate_cell(s.lambda_grid, instances,
                                                [&](double lambda, const Matrix& y) { return ctx.mets_error(lambda, y); });
                finish_report(r, cell);
                r.tuned_params["lambda"] = s.lambda_grid[cell.best_index];
                break;
            }
            case Method::st_isomap: {
                const auto grid = st_grid(s);
                const auto cell = evaluate_cell(grid, instances,
                                                [&](const StGridPoint& g, const Matrix& y) { return ctx.st_error(g, y); });
                finish_report(r, cell);
                r.tuned_params["epsilon"] = static_cast<double>(grid[cell.best_index].epsilon);
                r.tuned_params["c_ctn"] = grid[cell.best_index].c_ctn;
                r.tuned_params["c_atn"] = s.c_atn;
                break;
            }
            case Method::mbms: {
                const auto grid = mbms_grid(s);
                const auto cell = evaluate_cell(grid, instances,
                                                [&](const MbmsGridPoint& g, const Matrix& y) { return ctx.mbms_error(g, y); });
                finish_report(r, cell);
                r.tuned_params["sigma"] = grid[cell.best_index].sigma;
                r.tuned_params["local_dim"] = static_cast<double>(grid[cell.best_index].local_dim);
                break;
            }
        }
    } catch (const std::exception& e) {
        r = ExperimentReport{r.method, r.noise_kind, r.noise_level};
        r.error = e.what();
    }
    return r;
}

}  // namespace detail

inline void validate(const ExperimentSetup& s) {
    s.training.validate();
    s.clean_test.validate();
    require(s.training.dim() == s.clean_test.dim(), "experiment: training and test dimensions differ");
    require(s.height * s.width == s.training.dim(), "experiment: H x W does not match the point dimension");
    require(static_cast<Index>(s.training_timestamps.size()) == s.training.size(),
            "experiment: training timestamp count mismatch");
    require(!s.methods.empty(), "experiment: no methods");
    require(s.k >= 1 && s.k < s.training.size(), "experiment: need 1 <= k < n");
    require(s.m >= 1, "experiment: need m >= 1");
    require(!s.lambda_grid.empty() && !s.epsilon_grid.empty() && !s.c_ctn_grid.empty() && !s.sigma_grid.empty() &&
                !s.mbms_dims.empty(),
            "experiment: parameter grids must be nonempty");
    for (const auto& g : s.noise) require(!g.levels.empty(), "experiment: noise grid for " + to_string(g.kind) + " is empty");
}

/// Runs every method on every noise grid point. Noise instances are shared
/// across methods. Reports come back ordered by (method, noise kind, level)
/// in configuration order. Failed cells carry an error message.
inline std::vector<ExperimentReport> run_experiment(const ExperimentSetup& s) {
    validate(s);
    detail::ExperimentContext ctx(s);
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, ExperimentReport> cells;
    for (std::size_t g = 0; g < s.noise.size(); ++g) {
        for (std::size_t l = 0; l < s.noise[g].levels.size(); ++l) {
            const NoiseSpec spec = noise_spec_for(s, s.noise[g].kind, l);
            const auto instances = noise_instances(s.clean_test.points, s.height, s.width, spec);
            for (std::size_t mi = 0; mi < s.methods.size(); ++mi)
                cells.emplace(std::make_tuple(mi, g, l), detail::run_cell(ctx, s, s.methods[mi], spec, instances));
        }
    }
    std::vector<ExperimentReport> out;
    out.reserve(cells.size());
    for (auto& [key, report] : cells) out.push_back(std::move(report));
    return out;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_params(const std::map<std::string, double>& params) {
    std::string out;
    for (const auto& [k, v] : params) {
        if (!out.empty()) out += ';';
        out += k + "=" + format_number(v);
    }
    return out;
}

inline std::string reports_to_csv(const std::vector<ExperimentReport>& reports) {
    std::string out = "method,noise_kind,noise_level,mean_error,sem,tuned_params\n";
    for (const auto& r : reports)
        out += r.method + "," + r.noise_kind + "," + format_number(r.noise_level) + "," + format_number(r.mean_error) +
               "," + format_number(r.sem) + "," + format_params(r.tuned_params) + "\n";
    return out;
}

}  // namespace mets
