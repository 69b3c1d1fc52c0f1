#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mets/core.hpp"
#include "mets/dataio.hpp"
#include "mets/evaluation.hpp"
#include "mets/synth.hpp"

namespace mets {

using json = nlohmann::json;

/// Where the experiment data comes from: the synthetic generator or matrix
/// files (rows are flattened H x W images).
struct DatasetConfig {
    std::string kind = "synthetic";
    SyntheticSpec synthetic{};
    std::string train;
    std::string test;
    std::string train_timestamps;  // optional, n x 1
    std::string test_timestamps;   // optional, N x 1
    Index height = 0;
    Index width = 0;
};

/// Parsed experiment configuration. Defaults: k = 20, m = 2, K = 10,
/// alpha = 0, c_atn = 1, three MBMS iterations, the standard noise sweeps.
struct ExperimentConfig {
    DatasetConfig dataset;
    std::vector<std::string> methods{"isomap", "mets", "st-isomap", "mbms"};
    Index k = 20;
    Index m = 2;
    Index window = 10;  // K
    double alpha = 0.0;
    std::string weighting = "exponential";
    std::string solver = "sylvester";
    std::vector<double> lambda_grid = default_lambda_grid();
    double c_atn = 1.0;
    std::vector<Index> epsilon_grid{1, 2, 3, 5};
    std::vector<double> c_ctn_grid{1, 2, 5, 10};
    std::vector<double> sigma_grid{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
    std::vector<Index> mbms_dims{1, 2};
    Index mbms_k = 20;
    Index mbms_iterations = 3;
    std::vector<NoiseGrid> noise{{NoiseKind::salt_pepper, default_noise_grid(NoiseKind::salt_pepper)},
                                 {NoiseKind::gaussian, default_noise_grid(NoiseKind::gaussian)},
                                 {NoiseKind::motion_blur, default_noise_grid(NoiseKind::motion_blur)}};
    std::uint64_t seed = 42;
    std::string out = "results";
};

namespace detail {

inline void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw InvalidArgument("config: '" + where + "' must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : obj.items())
        if (!ok.count(item.key())) throw InvalidArgument("config: unknown key '" + item.key() + "' in " + where);
}

template <typename T>
void read_value(const json& obj, const char* key, T& target, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        target = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidArgument("config: bad value for '" + std::string(key) + "' in " + where + ": " + e.what());
    }
}

template <typename T>
void read_grid(const json& obj, const char* key, std::vector<T>& target, const std::string& where) {
    read_value(obj, key, target, where);
    if (obj.contains(key) && target.empty())
        throw InvalidArgument("config: grid '" + std::string(key) + "' in " + where + " must be nonempty");
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& doc) {
    using detail::read_grid;
    using detail::read_value;
    detail::reject_unknown_keys(doc,
                                {"dataset", "methods", "k", "m", "K", "alpha", "weighting", "solver", "lambda_grid",
                                 "c_atn", "epsilon_grid", "c_ctn_grid", "sigma_grid", "mbms_dims", "mbms_k",
                                 "mbms_iterations", "noise", "seed", "out"},
                                "top level");
    ExperimentConfig c;
    if (doc.contains("dataset")) {
        const json& ds = doc.at("dataset");
        detail::reject_unknown_keys(ds,
                                    {"kind", "height", "width", "blob_width", "n", "N", "seed", "jitter", "amplitude",
                                     "train", "test", "train_timestamps", "test_timestamps"},
                                    "dataset");
        read_value(ds, "kind", c.dataset.kind, "dataset");
        read_value(ds, "height", c.dataset.synthetic.height, "dataset");
        read_value(ds, "width", c.dataset.synthetic.width, "dataset");
        read_value(ds, "blob_width", c.dataset.synthetic.blob_width, "dataset");
        read_value(ds, "n", c.dataset.synthetic.n, "dataset");
        read_value(ds, "N", c.dataset.synthetic.count, "dataset");
        read_value(ds, "seed", c.dataset.synthetic.seed, "dataset");
        read_value(ds, "jitter", c.dataset.synthetic.jitter, "dataset");
        read_value(ds, "amplitude", c.dataset.synthetic.amplitude, "dataset");
        read_value(ds, "train", c.dataset.train, "dataset");
        read_value(ds, "test", c.dataset.test, "dataset");
        read_value(ds, "train_timestamps", c.dataset.train_timestamps, "dataset");
        read_value(ds, "test_timestamps", c.dataset.test_timestamps, "dataset");
        c.dataset.height = c.dataset.synthetic.height;
        c.dataset.width = c.dataset.synthetic.width;
        if (c.dataset.kind != "synthetic" && c.dataset.kind != "files")
            throw InvalidArgument("config: dataset.kind must be 'synthetic' or 'files'");
    }
    read_grid(doc, "methods", c.methods, "top level");
    for (const auto& name : c.methods) parse_method(name);
    read_value(doc, "k", c.k, "top level");
    read_value(doc, "m", c.m, "top level");
    read_value(doc, "K", c.window, "top level");
    read_value(doc, "alpha", c.alpha, "top level");
    read_value(doc, "weighting", c.weighting, "top level");
    read_value(doc, "solver", c.solver, "top level");
    read_grid(doc, "lambda_grid", c.lambda_grid, "top level");
    read_value(doc, "c_atn", c.c_atn, "top level");
    read_grid(doc, "epsilon_grid", c.epsilon_grid, "top level");
    read_grid(doc, "c_ctn_grid", c.c_ctn_grid, "top level");
    read_grid(doc, "sigma_grid", c.sigma_grid, "top level");
    read_grid(doc, "mbms_dims", c.mbms_dims, "top level");
    read_value(doc, "mbms_k", c.mbms_k, "top level");
    read_value(doc, "mbms_iterations", c.mbms_iterations, "top level");
    read_value(doc, "seed", c.seed, "top level");
    read_value(doc, "out", c.out, "top level");
    if (doc.contains("noise")) {
        const json& noise = doc.at("noise");
        detail::reject_unknown_keys(noise, {"salt-pepper", "gaussian", "motion-blur"}, "noise");
        c.noise.clear();
        for (NoiseKind kind : {NoiseKind::salt_pepper, NoiseKind::gaussian, NoiseKind::motion_blur}) {
            const auto name = to_string(kind);
            if (!noise.contains(name)) continue;
            NoiseGrid g{kind, {}};
            read_grid(noise, name.c_str(), g.levels, "noise");
            for (double level : g.levels) NoiseSpec{kind, level, 0}.validate();
            c.noise.push_back(std::move(g));
        }
    }
    if (c.weighting != "exponential" && c.weighting != "gaussian")
        throw InvalidArgument("config: weighting must be 'exponential' or 'gaussian'");
    if (c.solver != "sylvester" && c.solver != "kronecker")
        throw InvalidArgument("config: solver must be 'sylvester' or 'kronecker'");
    require(c.k >= 1, "config: k must be >= 1");
    require(c.m >= 1, "config: m must be >= 1");
    require(c.window >= 1, "config: K must be >= 1");
    require(c.alpha >= 0.0, "config: alpha must be >= 0");
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw InvalidArgument("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

inline Solver parse_solver(const std::string& name) {
    if (name == "sylvester") return Solver::sylvester_eigen;
    if (name == "kronecker") return Solver::kronecker_direct;
    throw InvalidArgument("unknown solver '" + name + "' (expected sylvester or kronecker)");
}

inline WeightKind parse_weighting(const std::string& name) {
    if (name == "exponential") return WeightKind::exponential_decay;
    if (name == "gaussian") return WeightKind::gaussian_kernel;
    throw InvalidArgument("unknown weighting '" + name + "' (expected exponential or gaussian)");
}

inline std::vector<std::int64_t> read_timestamps(const std::filesystem::path& path, Index expected) {
    const Matrix m = read_matrix(path);
    if (m.size() != expected)
        throw InvalidArgument("timestamps '" + path.string() + "': expected " + std::to_string(expected) + " values");
    std::vector<std::int64_t> ts(static_cast<std::size_t>(expected));
    for (Index i = 0; i < expected; ++i) {
        const double v = m.data()[i];
        if (v != std::floor(v)) throw InvalidArgument("timestamps '" + path.string() + "': values must be integers");
        ts[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(v);
    }
    return ts;
}

inline std::vector<std::int64_t> index_timestamps(Index count) {
    std::vector<std::int64_t> ts(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) ts[static_cast<std::size_t>(i)] = i;
    return ts;
}

/// Loads or synthesizes the data and resolves every named option.
inline ExperimentSetup build_setup(const ExperimentConfig& c) {
    ExperimentSetup s;
    if (c.dataset.kind == "synthetic") {
        auto data = generate_synthetic(c.dataset.synthetic);
        s.training = std::move(data.training);
        s.training_timestamps = std::move(data.training_timestamps);
        s.clean_test = std::move(data.clean_test);
        s.height = c.dataset.synthetic.height;
        s.width = c.dataset.synthetic.width;
    } else {
        if (c.dataset.train.empty() || c.dataset.test.empty())
            throw InvalidArgument("config: dataset.kind 'files' needs 'train' and 'test' paths");
        s.training = Dataset(read_matrix(c.dataset.train));
        const Matrix test = read_matrix(c.dataset.test);
        s.training_timestamps = c.dataset.train_timestamps.empty() ? index_timestamps(s.training.size())
                                                                   : read_timestamps(c.dataset.train_timestamps, s.training.size());
        s.clean_test = TimeSeriesSet(test, c.dataset.test_timestamps.empty()
                                               ? index_timestamps(test.rows())
                                               : read_timestamps(c.dataset.test_timestamps, test.rows()));
        s.height = c.dataset.height;
        s.width = c.dataset.width;
    }
    s.methods.clear();
    for (const auto& name : c.methods) s.methods.push_back(parse_method(name));
    s.noise = c.noise;
    s.k = c.k;
    s.m = c.m;
    s.weighting = TemporalWeighting{parse_weighting(c.weighting), c.alpha, c.window};
    s.solver = parse_solver(c.solver);
    s.lambda_grid = c.lambda_grid;
    s.c_atn = c.c_atn;
    s.epsilon_grid = c.epsilon_grid;
    s.c_ctn_grid = c.c_ctn_grid;
    s.sigma_grid = c.sigma_grid;
    s.mbms_dims = c.mbms_dims;
    s.mbms_k = c.mbms_k;
    s.mbms_iterations = c.mbms_iterations;
    s.seed = c.seed;
    validate(s);
    return s;
}

/// One JSON object per line, keys in a fixed order.
inline std::string reports_to_jsonl(const std::vector<ExperimentReport>& reports) {
    std::string out;
    for (const auto& r : reports) {
        nlohmann::ordered_json j;
        j["method"] = r.method;
        j["noise_kind"] = r.noise_kind;
        j["noise_level"] = r.noise_level;
        if (r.ok()) {
            j["mean_error"] = r.mean_error;
            j["sem"] = r.sem;
            j["per_instance_errors"] = r.per_instance_errors;
        } else {
            j["mean_error"] = nullptr;
            j["sem"] = nullptr;
            j["per_instance_errors"] = nlohmann::ordered_json::array();
            j["error"] = r.error;
        }
        j["tuned_params"] = r.tuned_params;
        out += j.dump() + "\n";
    }
    return out;
}

}  // namespace mets
