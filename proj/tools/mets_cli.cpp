#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mets/mets.hpp"

namespace fs = std::filesystem;
using namespace mets;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitComputation = 1;
constexpr int kExitUsage = 2;

// Model options shared by extend, embed and eval. Unset flags fall back to the
// config file (when given) and then to the built-in defaults.
struct ModelFlags {
    std::string config;
    std::optional<Index> k;
    std::optional<Index> m;
    std::optional<Index> window;
    std::optional<double> alpha;
    std::optional<std::string> solver;
    std::optional<std::string> weighting;
    std::optional<std::uint64_t> seed;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--config", config, "JSON configuration file")->check(CLI::ExistingFile);
        cmd.add_option("--k", k, "spatial neighbors of the geodesic graph");
        cmd.add_option("--m", m, "embedding dimension");
        cmd.add_option("--K", window, "temporal window size");
        cmd.add_option("--alpha", alpha, "temporal decay parameter");
        cmd.add_option("--solver", solver, "METS solver")->check(CLI::IsMember({"kronecker", "sylvester"}));
        cmd.add_option("--weighting", weighting, "temporal weighting")->check(CLI::IsMember({"exponential", "gaussian"}));
        cmd.add_option("--seed", seed, "master seed");
    }

    ExperimentConfig resolve() const {
        ExperimentConfig c = config.empty() ? ExperimentConfig{} : load_config(config);
        if (k) c.k = *k;
        if (m) c.m = *m;
        if (window) c.window = *window;
        if (alpha) c.alpha = *alpha;
        if (solver) c.solver = *solver;
        if (weighting) c.weighting = *weighting;
        if (seed) c.seed = *seed;
        require(c.k >= 1 && c.m >= 1 && c.window >= 1 && c.alpha >= 0.0, "invalid k, m, K or alpha");
        return c;
    }
};

std::vector<std::int64_t> timestamps_for(const std::string& path, Index count) {
    return path.empty() ? index_timestamps(count) : read_timestamps(path, count);
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

void print_warnings(const Diagnostics& diag) {
    for (const auto& w : diag.warnings) std::cerr << "warning: " << w << "\n";
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string config;
    std::string out = "data";
    std::optional<Index> n, count, height, width;
    std::optional<double> blob_width;
    std::optional<std::uint64_t> seed;
    bool csv = false;
};

int run_synth(const SynthArgs& a) {
    SyntheticSpec spec = a.config.empty() ? SyntheticSpec{} : load_config(a.config).dataset.synthetic;
    if (a.n) spec.n = *a.n;
    if (a.count) spec.count = *a.count;
    if (a.height) spec.height = *a.height;
    if (a.width) spec.width = *a.width;
    if (a.blob_width) spec.blob_width = *a.blob_width;
    if (a.seed) spec.seed = *a.seed;
    const auto data = generate_synthetic(spec);
    const fs::path dir(a.out);
    fs::create_directories(dir);
    const std::string ext = a.csv ? ".csv" : ".met";
    write_matrix(dir / ("train" + ext), data.training.points);
    write_matrix(dir / ("test" + ext), data.clean_test.points);
    write_matrix(dir / ("ground_truth" + ext), data.ground_truth);
    std::cerr << "wrote " << spec.n << " training and " << spec.count << " test images (" << spec.height << "x"
              << spec.width << ") to " << dir.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct EmbedArgs {
    ModelFlags model;
    std::string train;
    std::string out;
};

int run_embed(const EmbedArgs& a) {
    const auto c = a.model.resolve();
    Diagnostics diag;
    const auto model = fit_isomap(Dataset(read_matrix(a.train)), c.k, c.m, &diag);
    print_warnings(diag);
    ensure_parent(a.out);
    write_matrix(a.out, model.embedding.l_matrix);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ExtendArgs {
    ModelFlags model;
    std::string train, test, train_timestamps, test_timestamps, out;
    std::string method = "mets";
    std::optional<double> lambda;
    std::optional<Index> epsilon;
    std::optional<double> c_ctn, c_atn;
    double sigma = 1.0;
    Index local_dim = 1;
    std::optional<Index> mbms_k;
    std::optional<Index> iterations;
};

int run_extend(const ExtendArgs& a) {
    const auto c = a.model.resolve();
    const Dataset train(read_matrix(a.train));
    Matrix test_points = read_matrix(a.test);
    const Index count = test_points.rows();
    const TimeSeriesSet test(std::move(test_points), timestamps_for(a.test_timestamps, count));
    Diagnostics diag;
    Matrix x;
    const Method method = parse_method(a.method);
    switch (method) {
        case Method::isomap:
        case Method::mets: {
            const auto model = fit_isomap(train, c.k, c.m, &diag);
            const Matrix delta_x = model.distances_to(test.points);
            if (method == Method::isomap) {
                x = isomap_oose(model.embedding, model.delta_n, delta_x);
            } else {
                require(a.lambda.has_value(), "extend: --method mets needs --lambda");
                const auto lap = temporal_laplacian(test.timestamps, {parse_weighting(c.weighting), c.alpha, c.window});
                x = mets_solve(model.embedding, model.delta_n, delta_x, lap, *a.lambda, parse_solver(c.solver)).x;
            }
            break;
        }
        case Method::st_isomap: {
            const StIsomapParams p{a.c_atn.value_or(c.c_atn), a.c_ctn.value_or(1.0), a.epsilon.value_or(1), c.k};
            x = st_isomap_oose(train, timestamps_for(a.train_timestamps, train.size()), test, p, c.m, &diag).extension;
            break;
        }
        case Method::mbms: {
            const Index n = train.size();
            Matrix joint(n + test.size(), train.dim());
            joint << train.points, test.points;
            const MbmsParams p{a.sigma, a.local_dim, a.mbms_k.value_or(c.mbms_k), a.iterations.value_or(c.mbms_iterations)};
            const Matrix denoised = mbms_denoise(joint, p, &diag);
            const auto clean = fit_isomap(train, c.k, c.m, &diag);
            const Dataset train_dn(denoised.topRows(n));
            const NeighborGraph graph = build_knn_graph(train_dn, c.k, &diag);
            const Matrix delta_n = shortest_path_distances(graph).delta_n;
            const Matrix delta_x = extend_distances(train_dn, graph, delta_n, Matrix(denoised.bottomRows(test.size())), c.k);
            x = isomap_oose(clean.embedding, delta_n, delta_x);
            break;
        }
    }
    print_warnings(diag);
    ensure_parent(a.out);
    write_matrix(a.out, x);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct CorruptArgs {
    std::string input, out, noise;
    double level = 0.0;
    Index height = 0, width = 0;
    std::uint64_t seed = 42;
    int instance = 0;
};

int run_corrupt(const CorruptArgs& a) {
    const Matrix points = read_matrix(a.input);
    const NoiseSpec spec{parse_noise_kind(a.noise), a.level, a.seed};
    const Matrix noisy = corrupt_rows(points, a.height, a.width, spec, a.instance);
    ensure_parent(a.out);
    write_matrix(a.out, noisy);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    ModelFlags model;
    std::optional<std::string> out;
    std::vector<std::string> methods;
    std::vector<double> lambdas;
};

int run_eval(const EvalArgs& a) {
    ExperimentConfig c = a.model.resolve();
    if (a.out) c.out = *a.out;
    if (!a.methods.empty()) c.methods = a.methods;
    if (!a.lambdas.empty()) c.lambda_grid = a.lambdas;
    const ExperimentSetup setup = build_setup(c);
    const auto reports = run_experiment(setup);

    const fs::path dir(c.out);
    fs::create_directories(dir);
    detail::write_file(dir / "report.jsonl", reports_to_jsonl(reports));
    detail::write_file(dir / "report.csv", reports_to_csv(reports));

    int failed = 0;
    for (const auto& r : reports) {
        if (r.ok()) {
            std::fprintf(stderr, "%-10s %-12s %-6g E = %.6g +- %.3g  [%s]\n", r.method.c_str(), r.noise_kind.c_str(),
                         r.noise_level, r.mean_error, r.sem, format_params(r.tuned_params).c_str());
        } else {
            ++failed;
            std::fprintf(stderr, "%-10s %-12s %-6g FAILED: %s\n", r.method.c_str(), r.noise_kind.c_str(), r.noise_level,
                         r.error.c_str());
        }
    }
    return failed == 0 ? kExitOk : kExitComputation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Out-of-sample extension of Isomap embeddings for noisy time series"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic image-manifold dataset");
    synth_cmd->add_option("--config", synth.config, "JSON configuration (dataset section)")->check(CLI::ExistingFile);
    synth_cmd->add_option("--out", synth.out, "output directory")->capture_default_str();
    synth_cmd->add_option("--n", synth.n, "training images");
    synth_cmd->add_option("--N", synth.count, "test images");
    synth_cmd->add_option("--height", synth.height, "image height");
    synth_cmd->add_option("--width", synth.width, "image width");
    synth_cmd->add_option("--blob-width", synth.blob_width, "blob standard deviation in pixels");
    synth_cmd->add_option("--seed", synth.seed, "generator seed");
    synth_cmd->add_flag("--csv", synth.csv, "write CSV instead of binary matrices");

    EmbedArgs embed;
    auto* embed_cmd = app.add_subcommand("embed", "train Isomap and write the m x n embedding");
    embed.model.add_to(*embed_cmd);
    embed_cmd->add_option("--train", embed.train, "training matrix (rows are points)")->required();
    embed_cmd->add_option("--out", embed.out, "output matrix file")->required();

    ExtendArgs ext;
    auto* extend_cmd = app.add_subcommand("extend", "embed a test sequence with an out-of-sample method");
    ext.model.add_to(*extend_cmd);
    extend_cmd->add_option("--train", ext.train, "training matrix")->required();
    extend_cmd->add_option("--test", ext.test, "test sequence matrix")->required();
    extend_cmd->add_option("--train-timestamps", ext.train_timestamps, "training timestamps (st-isomap)");
    extend_cmd->add_option("--test-timestamps", ext.test_timestamps, "test timestamps");
    extend_cmd->add_option("--method", ext.method, "isomap, mets, st-isomap or mbms")
        ->check(CLI::IsMember({"isomap", "mets", "st-isomap", "mbms"}))
        ->capture_default_str();
    extend_cmd->add_option("--lambda", ext.lambda, "METS regularization weight")->check(CLI::NonNegativeNumber);
    extend_cmd->add_option("--epsilon", ext.epsilon, "ST-Isomap trivial-match window");
    extend_cmd->add_option("--c-ctn", ext.c_ctn, "ST-Isomap CTN scaling");
    extend_cmd->add_option("--c-atn", ext.c_atn, "ST-Isomap ATN scaling");
    extend_cmd->add_option("--sigma", ext.sigma, "MBMS kernel width")->capture_default_str();
    extend_cmd->add_option("--local-dim", ext.local_dim, "MBMS local PCA dimension")->capture_default_str();
    extend_cmd->add_option("--mbms-k", ext.mbms_k, "MBMS neighbors");
    extend_cmd->add_option("--iterations", ext.iterations, "MBMS iterations");
    extend_cmd->add_option("--out", ext.out, "output m x N matrix")->required();

    CorruptArgs cor;
    auto* corrupt_cmd = app.add_subcommand("corrupt", "apply a noise model to every image row");
    corrupt_cmd->add_option("--input", cor.input, "matrix of flattened images")->required();
    corrupt_cmd->add_option("--noise", cor.noise, "salt-pepper, gaussian or motion-blur")
        ->required()
        ->check(CLI::IsMember({"salt-pepper", "gaussian", "motion-blur"}));
    corrupt_cmd->add_option("--level", cor.level, "p, sigma or beta")->required();
    corrupt_cmd->add_option("--height", cor.height, "image height")->required();
    corrupt_cmd->add_option("--width", cor.width, "image width")->required();
    corrupt_cmd->add_option("--seed", cor.seed, "noise seed")->capture_default_str();
    corrupt_cmd->add_option("--instance", cor.instance, "noise instance index")->capture_default_str();
    corrupt_cmd->add_option("--out", cor.out, "output matrix file")->required();

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "run the noise-sweep evaluation and write reports");
    ev.model.add_to(*eval_cmd);
    eval_cmd->add_option("--out", ev.out, "report directory");
    eval_cmd->add_option("--method", ev.methods, "methods to evaluate (repeatable)")
        ->check(CLI::IsMember({"isomap", "mets", "st-isomap", "mbms"}));
    eval_cmd->add_option("--lambda", ev.lambdas, "METS lambda grid (repeatable)")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*synth_cmd) return run_synth(synth);
        if (*embed_cmd) return run_embed(embed);
        if (*extend_cmd) return run_extend(ext);
        if (*corrupt_cmd) return run_corrupt(cor);
        if (*eval_cmd) return run_eval(ev);
    } catch (const ComputationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitComputation;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitComputation;
    }
    return kExitUsage;
}
