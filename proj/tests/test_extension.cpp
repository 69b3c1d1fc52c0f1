#include <gtest/gtest.h>

#include <random>

#include "mets/extension.hpp"
#include "oracles.hpp"

using namespace mets;

namespace {

struct Instance {
    IsomapModel model;
    Matrix delta_x;
    std::vector<std::int64_t> timestamps;
};

Instance make_instance(Index n, Index count, Index dim, Index k, Index m, std::uint64_t seed) {
    Instance in{fit_isomap(Dataset(oracle::random_matrix(n, dim, seed)), k, m), {}, {}};
    in.delta_x = in.model.distances_to(oracle::random_matrix(count, dim, seed + 1));
    for (Index i = 0; i < count; ++i) in.timestamps.push_back(i);
    return in;
}

std::vector<std::int64_t> unit_times(Index n) {
    std::vector<std::int64_t> t;
    for (Index i = 0; i < n; ++i) t.push_back(i);
    return t;
}

double relative(const Matrix& a, const Matrix& b) { return (a - b).norm() / (1.0 + b.norm()); }

}  // namespace

TEST(TemporalWeight, Values) {
    EXPECT_EQ(temporal_weight({WeightKind::exponential_decay, 0.0, 10}, 7), 1.0);
    EXPECT_NEAR(temporal_weight({WeightKind::exponential_decay, 0.3, 10}, 1), 0.740818, 1e-6);
    EXPECT_DOUBLE_EQ(temporal_weight({WeightKind::gaussian_kernel, 0.3, 10}, 2), std::exp(-1.2));
    EXPECT_EQ(temporal_weight({WeightKind::gaussian_kernel, 5.0, 10}, 0), 1.0);
    EXPECT_THROW(temporal_weight({WeightKind::exponential_decay, 0.3, 10}, -1), InvalidArgument);
}

TEST(TemporalWeighting, Validation) {
    EXPECT_THROW((TemporalWeighting{WeightKind::exponential_decay, -0.1, 10}.validate()), InvalidArgument);
    EXPECT_THROW((TemporalWeighting{WeightKind::exponential_decay, 0.0, 0}.validate()), InvalidArgument);
}

TEST(Laplacian, ThreePointHandTrace) {
    const auto a = temporal_laplacian(unit_times(3), {WeightKind::exponential_decay, 0.0, 2});
    Matrix expected(3, 3);
    expected << 2, -2, 0, -2, 4, -2, 0, -2, 2;
    EXPECT_EQ(a.a, expected);
}

TEST(Laplacian, MatchesExplicitBSum) {
    const auto a = temporal_laplacian(unit_times(5), {WeightKind::exponential_decay, 0.5, 4});
    EXPECT_LE((a.a - oracle::laplacian_by_b(unit_times(5), 4, 0.5, false)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Laplacian, NonUniformTimestampsAndGaussianKernel) {
    const std::vector<std::int64_t> t{0, 1, 4, 5, 9, 10, 11, 20};
    const auto a = temporal_laplacian(t, {WeightKind::gaussian_kernel, 0.2, 5});
    EXPECT_LE((a.a - oracle::laplacian_by_b(t, 5, 0.2, true)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Laplacian, StructuralInvariantsOverRandomSettings) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        const Index n = 2 + static_cast<Index>(rng() % 40);
        std::vector<std::int64_t> t{static_cast<std::int64_t>(rng() % 5)};
        for (Index i = 1; i < n; ++i) t.push_back(t.back() + 1 + static_cast<std::int64_t>(rng() % 3));
        const TemporalWeighting w{trial % 2 ? WeightKind::gaussian_kernel : WeightKind::exponential_decay,
                                  static_cast<double>(rng() % 100) / 100.0, 1 + static_cast<Index>(rng() % 20)};
        const Matrix a = temporal_laplacian(t, w).a;
        EXPECT_EQ(a, a.transpose());
        EXPECT_LE((a * Vector::Ones(n)).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(a).eigenvalues().minCoeff(), -1e-10);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j)
                if (i != j) EXPECT_LE(a(i, j), 0.0);
    }
}

TEST(Laplacian, RejectsNonIncreasingTimestamps) {
    EXPECT_THROW(temporal_laplacian({0, 2, 2}, {}), InvalidArgument);
}

TEST(Oose, SelfExtensionReproducesTrainingEmbedding) {
    const auto model = fit_isomap(Dataset(oracle::random_matrix(20, 3, 40)), 5, 2);
    const Matrix x = isomap_oose(model.embedding, model.delta_n, model.delta_n);
    EXPECT_LE((x - model.embedding.l_matrix).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Oose, MeanColumnsGiveZero) {
    const auto in = make_instance(15, 4, 3, 5, 2, 41);
    const Vector mean = in.model.delta_n.rowwise().mean();
    const Matrix dx = mean * Eigen::RowVectorXd::Ones(4);
    EXPECT_LE(isomap_oose(in.model.embedding, in.model.delta_n, dx).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Oose, LeastSquaresOptimality) {
    const auto in = make_instance(30, 5, 4, 6, 2, 42);
    const auto p = make_problem(in.model.embedding, in.model.delta_n, in.delta_x);
    const Matrix x = isomap_oose(in.model.embedding, in.model.delta_n, in.delta_x);
    const Matrix grad = -2.0 * p.l * (p.q - p.l.transpose() * x);
    EXPECT_LE(grad.norm(), 1e-9 * (1.0 + p.c.norm()));
    const Matrix ref = oracle::lstsq_oose(in.model.embedding.l_matrix, in.model.delta_n, in.delta_x);
    EXPECT_LE(relative(x, ref), 1e-10);
}

TEST(Mets, LambdaZeroEqualsOose) {
    const auto in = make_instance(25, 12, 3, 6, 2, 43);
    const auto a = temporal_laplacian(in.timestamps, {});
    const Matrix ref = isomap_oose(in.model.embedding, in.model.delta_n, in.delta_x);
    for (Solver s : {Solver::sylvester_eigen, Solver::kronecker_direct}) {
        const auto r = mets_solve(in.model.embedding, in.model.delta_n, in.delta_x, a, 0.0, s);
        EXPECT_LE(relative(r.x, ref), 1e-10);
        EXPECT_EQ(r.lambda, 0.0);
    }
}

TEST(Mets, SolversAgreeAndZeroTheGradient) {
    const auto in = make_instance(8, 5, 3, 7, 2, 44);
    const auto a = temporal_laplacian(in.timestamps, {});
    const auto p = make_problem(in.model.embedding, in.model.delta_n, in.delta_x);
    const auto syl = mets_solve(p, a, 3.0, Solver::sylvester_eigen);
    const auto kron = mets_solve(p, a, 3.0, Solver::kronecker_direct);
    EXPECT_LE((syl.x - kron.x).norm(), 1e-8);
    EXPECT_LE(gradient_residual(p, a, 3.0, syl.x), 1e-6 * (1.0 + p.c.norm()));
    EXPECT_LE(gradient_residual(p, a, 3.0, kron.x), 1e-6 * (1.0 + p.c.norm()));
}

TEST(Mets, SylvesterMatchesIndependentKroneckerSystem) {
    const auto in = make_instance(12, 7, 3, 5, 3, 45);
    const auto a = temporal_laplacian(in.timestamps, {WeightKind::exponential_decay, 0.3, 4});
    const auto p = make_problem(in.model.embedding, in.model.delta_n, in.delta_x);
    const double lambda = 2.5;
    const Index m = 3;
    const Index n = 7;
    // Build (I (x) D + lambda A^T (x) I) entry by entry.
    Matrix sys = Matrix::Zero(m * n, m * n);
    for (Index r = 0; r < m * n; ++r)
        for (Index c = 0; c < m * n; ++c) {
            const Index ri = r % m, rj = r / m, ci = c % m, cj = c / m;
            if (rj == cj) sys(r, c) += p.d(ri, ci);
            if (ri == ci) sys(r, c) += lambda * a.a(cj, rj);
        }
    const Vector rhs = -0.5 * Eigen::Map<const Vector>(p.c.data(), m * n);
    const Vector vx = sys.colPivHouseholderQr().solve(rhs);
    const Matrix ref = Eigen::Map<const Matrix>(vx.data(), m, n);
    EXPECT_LE((mets_solve(p, a, lambda).x - ref).norm(), 1e-8);
}

TEST(Mets, SingularSystemIsReported) {
    ExtensionProblem p;
    p.l = Matrix::Zero(1, 3);
    p.d = Matrix::Zero(1, 1);
    p.q = Matrix::Zero(3, 3);
    p.c = Matrix::Ones(1, 3);
    const auto a = temporal_laplacian(unit_times(3), {});
    EXPECT_THROW(mets_solve(p, a, 0.0, Solver::sylvester_eigen), ComputationError);
    EXPECT_THROW(mets_solve(p, a, 0.0, Solver::kronecker_direct), ComputationError);
    // A alone is singular too (constant mode), so even lambda > 0 cannot help.
    EXPECT_THROW(mets_solve(p, a, 1.0, Solver::sylvester_eigen), ComputationError);
}

TEST(Mets, RejectsBadLambdaAndShapes) {
    const auto in = make_instance(10, 4, 2, 4, 1, 46);
    const auto a = temporal_laplacian(in.timestamps, {});
    EXPECT_THROW(mets_solve(in.model.embedding, in.model.delta_n, in.delta_x, a, -1.0), InvalidArgument);
    const auto small = temporal_laplacian(unit_times(3), {});
    EXPECT_THROW(mets_solve(in.model.embedding, in.model.delta_n, in.delta_x, small, 1.0), InvalidArgument);
}

TEST(Compactness, Examples) {
    const auto a = temporal_laplacian(unit_times(3), {WeightKind::exponential_decay, 0.0, 2});
    Matrix same = Matrix::Constant(2, 3, 1.7);
    EXPECT_NEAR(compactness(same, a), 0.0, 1e-14);
    Matrix x(1, 3);
    x << 0, 1, 3;
    EXPECT_DOUBLE_EQ(compactness(x, a), 10.0);
}

TEST(Compactness, MatchesTraceAndPairwiseSum) {
    const auto t = unit_times(9);
    const auto a = temporal_laplacian(t, {WeightKind::exponential_decay, 0.4, 4});
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Matrix x = oracle::random_matrix(2, 9, 500 + s);
        const double value = compactness(x, a);
        EXPECT_GE(value, 0.0);
        EXPECT_NEAR(value, (a.a * x.transpose() * x).trace(), 1e-10);
        EXPECT_NEAR(value, oracle::pairwise_compactness(x, t, 4, 0.4), 1e-10);
    }
}

TEST(GradientResidual, SolverBoundAndPerturbation) {
    const auto in = make_instance(20, 10, 3, 5, 2, 47);
    const auto a = temporal_laplacian(in.timestamps, {});
    const auto p = make_problem(in.model.embedding, in.model.delta_n, in.delta_x);
    const double bound = 1e-6 * (1.0 + p.c.norm());
    const auto r = mets_solve(p, a, 10.0);
    const double at_solution = gradient_residual(in.model.embedding, in.model.delta_n, in.delta_x, a, 10.0, r.x);
    EXPECT_LE(at_solution, bound);
    Matrix bumped = r.x;
    bumped(1, 4) += 1.0;
    EXPECT_GT(gradient_residual(p, a, 10.0, bumped), at_solution);
    const Matrix oose = isomap_oose(in.model.embedding, in.model.delta_n, in.delta_x);
    EXPECT_LE(gradient_residual(p, a, 0.0, oose), bound);
}

TEST(Mets, RegularizationPath) {
    const auto in = make_instance(40, 30, 4, 6, 2, 48);
    const auto a = temporal_laplacian(in.timestamps, {});
    const auto p = make_problem(in.model.embedding, in.model.delta_n, in.delta_x);
    double prev_c = std::numeric_limits<double>::infinity();
    double prev_f = -1.0;
    for (double lambda : {0.0, 1e-2, 1e-1, 1.0, 10.0, 1e2, 1e3, 1e4}) {
        const auto r = mets_solve(p, a, lambda);
        EXPECT_LE(gradient_residual(p, a, lambda, r.x), 1e-6 * (1.0 + p.c.norm()));
        EXPECT_LE(r.compactness, prev_c + 1e-10 * (1.0 + prev_c)) << lambda;
        EXPECT_GE(r.fit_residual, prev_f - 1e-10 * (1.0 + std::abs(prev_f))) << lambda;
        prev_c = r.compactness;
        prev_f = r.fit_residual;
    }
}

TEST(Mets, ObjectiveBeatsRandomPerturbations) {
    const auto in = make_instance(20, 10, 3, 5, 2, 49);
    const auto a = temporal_laplacian(in.timestamps, {});
    const auto p = make_problem(in.model.embedding, in.model.delta_n, in.delta_x);
    const auto r = mets_solve(p, a, 5.0);
    const double best = objective(p, a, 5.0, r.x);
    for (std::uint64_t s = 0; s < 100; ++s) {
        const Matrix perturbed = r.x + oracle::random_matrix(2, 10, 900 + s, 1e-3);
        EXPECT_GE(objective(p, a, 5.0, perturbed), best);
    }
}
