#include <doctest.h>

#include <Eigen/Cholesky>
#include <random>

#include "gphmc/chebyshev.hpp"
#include "gphmc/gp_posterior.hpp"
#include "support/test_util.hpp"

using namespace gphmc;

namespace {

struct Fixture {
    std::shared_ptr<Dataset> data;
    TargetModel target;
    SolverOptions solver;
};

Fixture make_fixture(Eigen::Index n, int dim, std::uint64_t seed, double sigma_sq = 0.1) {
    Fixture f;
    std::mt19937_64 rng(seed);
    f.data = std::make_shared<Dataset>(test::random_dataset(n, dim, rng));
    HyperParams proto;
    proto.dim = dim;
    proto.n_cheb = 2;
    Eigen::Index total = 1;
    for (int j = 0; j < dim; ++j) total *= 2;
    proto.cheb = Eigen::VectorXd::Zero(total);
    proto.log_sigma = log_sigma_for(std::sqrt(sigma_sq));
    proto.log_ell = log_ell_for(1.0);
    f.target = make_target(TargetKind::pseudofermion, *f.data, proto);
    f.solver.cg.tol = 1e-12;
    f.solver.cg.max_iter = 2000;
    return f;
}

}  // namespace

TEST_SUITE_BEGIN("gp_posterior");

TEST_CASE("predictive mean is zero for zero observations and far queries") {
    Fixture f = make_fixture(5, 1, 1);
    f.data->observations.setZero();
    std::mt19937_64 rng(2);
    const Eigen::VectorXd theta = 0.2 * test::random_vector(2, rng);
    PredictionGrid grid;
    grid.points = Eigen::MatrixXd::Zero(3, 1);
    grid.points << -0.5, 0.0, 0.5;
    CHECK(predictive_mean(f.target, theta, grid, f.solver).norm() == 0.0);

    // Narrow kernel: a query across the box from all data is numerically
    // uncorrelated, so the mean falls back to zero.
    Fixture g = make_fixture(5, 1, 3);
    g.data->points = Eigen::MatrixXd::Constant(5, 1, -0.9);
    g.data->points += 0.01 * Eigen::MatrixXd::Random(5, 1);
    g.target = make_target(TargetKind::pseudofermion, *g.data, [&] {
        HyperParams p = g.target.prototype;
        p.log_ell = log_ell_for(0.01);  // 2 ell^2 = 0.01
        return p;
    }());
    PredictionGrid far;
    far.points = Eigen::MatrixXd::Constant(1, 1, 0.95);
    const Eigen::VectorXd mean =
        predictive_mean(g.target, Eigen::VectorXd::Zero(2), far, g.solver);
    CHECK(std::abs(mean[0]) < 1e-8);
}

TEST_CASE("predictive mean matches the dense formula") {
    Fixture f = make_fixture(5, 2, 5);
    std::mt19937_64 rng(7);
    const Eigen::VectorXd theta = 0.3 * test::random_vector(4, rng);
    PredictionGrid grid;
    grid.points = Eigen::MatrixXd::Random(7, 2);

    const KernelOperator op = f.target.operator_for(theta);
    const Eigen::MatrixXd a = dense_A(op);
    const Eigen::VectorXd alpha = a.llt().solve(f.data->observations);
    const Eigen::VectorXd mean = predictive_mean(f.target, theta, grid, f.solver);
    for (Eigen::Index q = 0; q < grid.size(); ++q) {
        const Eigen::VectorXd cross = kernel_cross(op, grid.points.row(q));
        CHECK(mean[q] == doctest::Approx(cross.dot(alpha)).epsilon(1e-8));
    }
}

TEST_CASE("predictive mean is linear in the observations") {
    Fixture f = make_fixture(6, 1, 9);
    std::mt19937_64 rng(11);
    const Eigen::VectorXd theta = 0.2 * test::random_vector(2, rng);
    PredictionGrid grid;
    grid.points = Eigen::MatrixXd::Random(4, 1);

    const Eigen::VectorXd y1 = test::random_vector(6, rng);
    const Eigen::VectorXd y2 = test::random_vector(6, rng);
    const auto mean_for = [&](const Eigen::VectorXd& y) {
        f.data->observations = y;
        return predictive_mean(f.target, theta, grid, f.solver);
    };
    const Eigen::VectorXd m1 = mean_for(y1);
    const Eigen::VectorXd m2 = mean_for(y2);
    const Eigen::VectorXd m12 = mean_for(y1 + y2);
    CHECK((m12 - m1 - m2).norm() <= 1e-8 * (m1.norm() + m2.norm()));
}

TEST_CASE("conditional variance: dense oracle, prior limit, Schur bound") {
    Fixture f = make_fixture(5, 1, 13);
    std::mt19937_64 rng(17);
    const Eigen::VectorXd theta = 0.25 * test::random_vector(2, rng);
    const KernelOperator op = f.target.operator_for(theta);
    const Eigen::MatrixXd a = dense_A(op);

    for (double q : {-0.7, 0.1, 0.8}) {
        Eigen::RowVectorXd query(1);
        query << q;
        const Eigen::VectorXd cross = kernel_cross(op, query);
        const double prior = std::exp(2.0 * chebyshev_field(op.params, query));
        const double exact = prior - cross.dot(a.llt().solve(cross));
        const double via = conditional_variance(f.target, theta, query, f.solver);
        CHECK(via == doctest::Approx(exact).epsilon(1e-8));
        CHECK(via <= prior + 1e-8);  // Schur complement bound
        CHECK(via >= 0.0);
    }
}

TEST_CASE("conditional variance decreases with the noise floor at a training point") {
    std::mt19937_64 rng(19);
    Eigen::RowVectorXd query(1);
    query << 0.3;
    double previous = std::numeric_limits<double>::infinity();
    for (double sigma_sq : {1e-1, 1e-2, 1e-3}) {
        Fixture f = make_fixture(5, 1, 21, sigma_sq);
        f.data->points(2, 0) = 0.3;  // duplicate the query into the training set
        const double var =
            conditional_variance(f.target, Eigen::VectorXd::Zero(2), query, f.solver);
        CHECK(var < previous);
        previous = var;
    }
}

TEST_CASE("total variance summary trivia and brute-force agreement") {
    Fixture f = make_fixture(6, 1, 23);
    std::mt19937_64 rng(29);
    PredictionGrid grid;
    grid.points = Eigen::MatrixXd::Random(3, 1);

    SUBCASE("identical samples have zero variance-of-mean") {
        const Eigen::VectorXd theta = 0.2 * test::random_vector(2, rng);
        std::vector<std::vector<Eigen::VectorXd>> samples{{theta, theta, theta}};
        const PosteriorSummary s = total_variance_summary(f.target, samples, grid, f.solver);
        CHECK(s.variance_of_mean.norm() <= 1e-14);
        const Eigen::VectorXd direct = conditional_variances(f.target, theta, grid, f.solver);
        CHECK((s.expected_var - direct).norm() <= 1e-12);
        CHECK((s.total_std.array().square().matrix() -
               (s.expected_var + s.variance_of_mean))
                  .norm() <= 1e-12);
    }

    SUBCASE("matches a direct recomputation over a tiny sample set") {
        std::vector<std::vector<Eigen::VectorXd>> samples(2);
        for (int c = 0; c < 2; ++c)
            for (int s = 0; s < 3; ++s)
                samples[c].push_back(0.3 * test::random_vector(2, rng));

        const PosteriorSummary summary =
            total_variance_summary(f.target, samples, grid, f.solver);

        Eigen::MatrixXd means(6, 3);
        Eigen::MatrixXd vars(6, 3);
        int row = 0;
        for (const auto& chain : samples)
            for (const auto& theta : chain) {
                means.row(row) = predictive_mean(f.target, theta, grid, f.solver).transpose();
                vars.row(row) =
                    conditional_variances(f.target, theta, grid, f.solver).transpose();
                ++row;
            }
        for (int q = 0; q < 3; ++q) {
            const double mean = means.col(q).mean();
            const double e_var = vars.col(q).mean();
            const double var_mean =
                (means.col(q).array() - mean).square().sum() / (6.0 - 1.0);
            CHECK(summary.mean[q] == doctest::Approx(mean).epsilon(1e-12));
            CHECK(summary.expected_var[q] == doctest::Approx(e_var).epsilon(1e-12));
            CHECK(summary.variance_of_mean[q] == doctest::Approx(var_mean).epsilon(1e-10));
            CHECK(summary.total_std[q] ==
                  doctest::Approx(std::sqrt(e_var + var_mean)).epsilon(1e-10));
            CHECK(summary.expected_var[q] >= 0.0);
            CHECK(summary.variance_of_mean[q] >= 0.0);
        }
    }

    SUBCASE("needs at least two draws") {
        std::vector<std::vector<Eigen::VectorXd>> one{{Eigen::VectorXd::Zero(2)}};
        CHECK_THROWS_AS(total_variance_summary(f.target, one, grid, f.solver),
                        std::invalid_argument);
    }
}

TEST_SUITE_END();
