#include <gtest/gtest.h>

#include <random>

#include "mets/evaluation.hpp"
#include "mets/synth.hpp"
#include "oracles.hpp"

using namespace mets;

namespace {

Matrix random_orthogonal(Index m, std::uint64_t seed, bool reflect) {
    Eigen::HouseholderQR<Matrix> qr(oracle::random_matrix(m, m, seed));
    Matrix q = qr.householderQ();
    if ((q.determinant() < 0) != reflect) q.col(0) *= -1.0;
    return q;
}

Matrix similarity(const Matrix& w, double s, const Matrix& r, const Vector& t) {
    return ((s * r * w).colwise() + t).eval();
}

ExperimentSetup small_setup(std::vector<Method> methods, std::vector<NoiseGrid> noise) {
    SyntheticSpec spec;
    spec.height = spec.width = 16;
    spec.n = 100;
    spec.count = 20;
    spec.seed = 3;
    const auto syn = generate_synthetic(spec);
    ExperimentSetup s;
    s.training = syn.training;
    s.training_timestamps = syn.training_timestamps;
    s.clean_test = syn.clean_test;
    s.height = s.width = 16;
    s.methods = std::move(methods);
    s.noise = std::move(noise);
    s.k = 10;
    s.epsilon_grid = {1, 2};
    s.c_ctn_grid = {1, 2};
    s.sigma_grid = {1, 2};
    s.mbms_dims = {2};
    s.mbms_k = 10;
    return s;
}

}  // namespace

TEST(Procrustes, IdenticalInputsGiveIdentity) {
    const Matrix z = oracle::random_matrix(2, 10, 1);
    const auto a = procrustes_align(z, z);
    EXPECT_TRUE(a.transform.rotation.isApprox(Matrix::Identity(2, 2), 1e-12));
    EXPECT_NEAR(a.transform.scale, 1.0, 1e-12);
    EXPECT_LE(a.transform.translation.norm(), 1e-12);
    EXPECT_LE((a.aligned - z).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Procrustes, RecoversRotatedScaledShiftedCopy) {
    const Matrix z = oracle::random_matrix(2, 25, 2);
    const double a = 30.0 * 3.14159265358979323846 / 180.0;
    Matrix r(2, 2);
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    const Matrix w = similarity(z, 2.0, r, Vector::Constant(2, 3.5));
    const auto al = procrustes_align(z, w);
    EXPECT_LE((al.aligned - z).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(al.transform.scale, 0.5, 1e-12);
    EXPECT_LE(oose_error(z, al.aligned), 1e-10);
}

TEST(Procrustes, RecoversRandomSimilaritiesIncludingReflections) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Index m = 1 + static_cast<Index>(s % 3);
        const Matrix z = oracle::random_matrix(m, 30, 10 + s);
        const Matrix r = random_orthogonal(m, 40 + s, s % 2 == 1);
        const Matrix w = similarity(z, 0.1 + static_cast<double>(s), r, oracle::random_matrix(m, 1, 70 + s, 5.0));
        const auto al = procrustes_align(z, w);
        EXPECT_LE((al.aligned - z).cwiseAbs().maxCoeff(), 1e-10) << "trial " << s;
        const Matrix& q = al.transform.rotation;
        EXPECT_TRUE((q.transpose() * q).isApprox(Matrix::Identity(m, m), 1e-10));
        EXPECT_GT(al.transform.scale, 0.0);
    }
}

TEST(Procrustes, NoWorseThanRotationGridSearch) {
    const Matrix z = oracle::random_matrix(2, 40, 5);
    const Matrix r = random_orthogonal(2, 6, false);
    const Matrix w = similarity(z, 1.7, r, Vector::Constant(2, -1.0)) + oracle::random_matrix(2, 40, 7, 0.01);
    const auto al = procrustes_align(z, w);
    EXPECT_LE((z - al.aligned).norm(), oracle::grid_procrustes_residual(z, w) + 1e-4);
}

TEST(Procrustes, Idempotent) {
    const Matrix z = oracle::random_matrix(3, 20, 8);
    const Matrix w = z + oracle::random_matrix(3, 20, 9, 0.3);
    const auto once = procrustes_align(z, w);
    const auto twice = procrustes_align(z, once.aligned);
    EXPECT_TRUE(twice.transform.rotation.isApprox(Matrix::Identity(3, 3), 1e-10));
    EXPECT_NEAR(twice.transform.scale, 1.0, 1e-10);
    EXPECT_LE(twice.transform.translation.norm(), 1e-10);
}

TEST(Procrustes, BeatsRandomSimilarityTransforms) {
    const Matrix z = oracle::random_matrix(2, 30, 11);
    const Matrix w = z + oracle::random_matrix(2, 30, 12, 0.2);
    const double best = (z - procrustes_align(z, w).aligned).norm();
    for (std::uint64_t s = 0; s < 200; ++s) {
        const Matrix r = random_orthogonal(2, 300 + s, s % 2 == 0);
        const Matrix cand = similarity(w, 0.5 + static_cast<double>(s % 10) / 10.0, r, oracle::random_matrix(2, 1, 600 + s, 0.1));
        EXPECT_LE(best, (z - cand).norm() + 1e-12);
    }
}

TEST(Procrustes, DegenerateTargetIsAnError) {
    const Matrix z = oracle::random_matrix(2, 5, 13);
    EXPECT_THROW(procrustes_align(z, Matrix::Constant(2, 5, 1.0)), ComputationError);
    EXPECT_THROW(procrustes_align(z, Matrix::Zero(2, 4)), InvalidArgument);
}

TEST(OoseError, Examples) {
    const Matrix z = oracle::random_matrix(2, 10, 14);
    EXPECT_EQ(oose_error(z, z), 0.0);
    EXPECT_NEAR(oose_error(z, z.colwise() + Eigen::Vector2d(3, 4)), 5.0, 1e-12);
    const Matrix w = oracle::random_matrix(2, 10, 15);
    double sum = 0.0;
    for (Index j = 0; j < 10; ++j) sum += std::hypot(z(0, j) - w(0, j), z(1, j) - w(1, j));
    EXPECT_NEAR(oose_error(z, w), sum / 10.0, 1e-14);
}

TEST(Statistics, StandardErrorUsesSampleDeviation) {
    const std::vector<double> v{1, 2, 3, 4, 5};
    EXPECT_NEAR(sample_stddev(v), std::sqrt(2.5), 1e-15);
    EXPECT_NEAR(standard_error(v), std::sqrt(2.5) / std::sqrt(5.0), 1e-15);
}

TEST(Tuning, ArgminAndTieRule) {
    const std::vector<double> grid{1.0, 2.0, 3.0};
    const std::vector<double> e1{3, 1, 2};
    EXPECT_EQ(tune_parameter(grid, [&](double p) { return e1[static_cast<std::size_t>(p) - 1]; }).best, 2.0);
    const std::vector<double> e2{1, 1, 2};
    EXPECT_EQ(tune_parameter(grid, [&](double p) { return e2[static_cast<std::size_t>(p) - 1]; }).best, 1.0);
    // The tie rule looks at parameter values, not grid positions.
    const std::vector<double> reversed{3.0, 2.0, 1.0};
    EXPECT_EQ(tune_parameter(reversed, [](double) { return 0.5; }).best, 1.0);
    EXPECT_THROW(tune_parameter(std::vector<double>{}, [](double) { return 0.0; }), InvalidArgument);
}

TEST(Tuning, CellUsesOnlyTheFirstInstanceForSelection) {
    std::vector<Matrix> inst(6, Matrix::Zero(1, 1));
    for (int i = 0; i < 6; ++i) inst[static_cast<std::size_t>(i)](0, 0) = i;
    const std::vector<double> grid{0.0, 1.0, 2.0};
    auto run = [&](double bias) {
        return evaluate_cell(grid, inst, [&](double p, const Matrix& y) {
            // Instance 0 prefers p = 1; later instances would prefer p = 2.
            return y(0, 0) == 0 ? std::abs(p - 1.0) : std::abs(p - 2.0) + bias * y(0, 0);
        });
    };
    const auto a = run(0.0);
    const auto b = run(7.0);
    EXPECT_EQ(a.best_index, 1u);
    EXPECT_EQ(b.best_index, 1u);
    EXPECT_EQ(a.errors.size(), 5u);
    EXPECT_EQ(a.tuning_errors, (std::vector<double>{1, 0, 1}));
}

TEST(Tuning, CleanDataPrefersZeroLambda) {
    auto s = small_setup({Method::mets}, {});
    detail::ExperimentContext ctx(s);
    const auto r = tune_parameter(s.lambda_grid, [&](double l) { return ctx.mets_error(l, s.clean_test.points); });
    EXPECT_EQ(r.best, 0.0);
    EXPECT_LE(r.best_error, 1e-10);
}

TEST(Presets, LambdaGridAndReportedChoices) {
    const auto grid = default_lambda_grid();
    EXPECT_EQ(grid.front(), 0.0);
    EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
    EXPECT_EQ(eyeglasses_salt_pepper_lambdas(), (std::vector<double>{0.02e5, 0.14e5, 0.2e5, 0.53e5, 9.0e5}));
}

TEST(Methods, NamesRoundTrip) {
    for (auto m : {Method::isomap, Method::mets, Method::st_isomap, Method::mbms}) EXPECT_EQ(parse_method(to_string(m)), m);
    EXPECT_THROW(parse_method("lle"), InvalidArgument);
}

TEST(Experiment, ZeroNoiseIsomapHasZeroError) {
    const auto s = small_setup({Method::isomap}, {{NoiseKind::salt_pepper, {0.0}}});
    const auto reports = run_experiment(s);
    ASSERT_EQ(reports.size(), 1u);
    ASSERT_TRUE(reports[0].ok()) << reports[0].error;
    EXPECT_LE(reports[0].mean_error, 1e-10);
    for (double e : reports[0].per_instance_errors) EXPECT_LE(e, 1e-10);
}

TEST(Experiment, OrderingStatisticsAndDeterminism) {
    const auto s = small_setup({Method::isomap, Method::mets, Method::st_isomap},
                               {{NoiseKind::gaussian, {0.1, 0.3}}, {NoiseKind::salt_pepper, {0.2}}});
    const auto a = run_experiment(s);
    ASSERT_EQ(a.size(), 9u);
    const std::vector<std::string> methods{"isomap", "mets", "st-isomap"};
    std::size_t idx = 0;
    for (const auto& m : methods)
        for (const auto& [kind, level] : std::vector<std::pair<std::string, double>>{
                 {"gaussian", 0.1}, {"gaussian", 0.3}, {"salt-pepper", 0.2}}) {
            const auto& r = a[idx++];
            ASSERT_TRUE(r.ok()) << r.error;
            EXPECT_EQ(r.method, m);
            EXPECT_EQ(r.noise_kind, kind);
            EXPECT_EQ(r.noise_level, level);
            ASSERT_EQ(r.per_instance_errors.size(), 5u);
            EXPECT_NEAR(r.sem, sample_stddev(r.per_instance_errors) / std::sqrt(5.0), 1e-15);
        }
    EXPECT_TRUE(a[3].tuned_params.count("lambda"));
    EXPECT_TRUE(a[6].tuned_params.count("epsilon"));
    EXPECT_TRUE(a[6].tuned_params.count("c_ctn"));
    EXPECT_EQ(reports_to_csv(a), reports_to_csv(run_experiment(s)));
}

TEST(Experiment, FailedCellIsRecordedAndOthersContinue) {
    auto s = small_setup({Method::isomap, Method::mbms}, {{NoiseKind::gaussian, {0.1}}});
    s.mbms_k = 200;  // more neighbors than points
    const auto r = run_experiment(s);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_TRUE(r[0].ok());
    EXPECT_FALSE(r[1].ok());
    EXPECT_NE(r[1].error.find("k"), std::string::npos);
    EXPECT_NE(reports_to_csv(r).find("mbms,gaussian,0.10000000000000001,nan,nan,"), std::string::npos);
}

TEST(Experiment, MbmsCellRuns) {
    auto s = small_setup({Method::mbms}, {{NoiseKind::gaussian, {0.2}}});
    s.sigma_grid = {2};
    const auto r = run_experiment(s);
    ASSERT_EQ(r.size(), 1u);
    ASSERT_TRUE(r[0].ok()) << r[0].error;
    EXPECT_EQ(r[0].tuned_params.at("sigma"), 2.0);
    EXPECT_EQ(r[0].tuned_params.at("local_dim"), 2.0);
    EXPECT_TRUE(std::isfinite(r[0].mean_error));
}

TEST(Experiment, ValidationRejectsBadSetups) {
    auto s = small_setup({Method::isomap}, {{NoiseKind::gaussian, {}}});
    EXPECT_THROW(run_experiment(s), InvalidArgument);
    s = small_setup({}, {{NoiseKind::gaussian, {0.1}}});
    EXPECT_THROW(run_experiment(s), InvalidArgument);
    s = small_setup({Method::isomap}, {{NoiseKind::gaussian, {0.1}}});
    s.width = 15;
    EXPECT_THROW(run_experiment(s), InvalidArgument);
}
