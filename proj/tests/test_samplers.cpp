#include <doctest.h>

#include <cmath>
#include <random>

#include "gphmc/chain_runner.hpp"
#include "gphmc/samplers.hpp"
#include "gphmc/target.hpp"
#include "support/test_util.hpp"

using namespace gphmc;

namespace {

// The small verification instance: equispaced points on [-1,1), unit
// observations, N_cheb = 2, d = 1, 2 ell^2 = 1, sigma^2 = 0.1.
Dataset verification_data(Eigen::Index n = 10) {
    Dataset data;
    data.points.resize(n, 1);
    for (Eigen::Index i = 0; i < n; ++i)
        data.points(i, 0) = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n);
    data.observations = Eigen::VectorXd::Ones(n);
    return data;
}

HyperParams verification_proto(int n_cheb = 2, bool infer_scales = false) {
    HyperParams hp;
    hp.n_cheb = n_cheb;
    hp.dim = 1;
    hp.cheb = Eigen::VectorXd::Zero(n_cheb);
    hp.log_sigma = log_sigma_for(std::sqrt(0.1));
    hp.log_ell = log_ell_for(1.0);
    hp.infer_sigma = infer_scales;
    hp.infer_ell = infer_scales;
    return hp;
}

SolverOptions tight_solver() {
    SolverOptions solver;
    solver.cg.tol = 1e-12;
    solver.cg.max_iter = 2000;
    return solver;
}

}  // namespace

TEST_SUITE_BEGIN("samplers");

TEST_CASE("gibbs update on a scalar instance is xi / sqrt(a)") {
    const Dataset data = verification_data(1);
    const HyperParams proto = verification_proto(1);
    const TargetModel target = make_target(TargetKind::pseudofermion, data, proto);
    ExtendedState state(Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Zero(1));
    std::mt19937_64 rng(7);
    gibbs_update_phi(state, target, tight_solver(), rng);

    const KernelOperator op = target.operator_for(state.theta());
    const double a = dense_A(op)(0, 0);
    // Replay the RNG stream: one draw seeds the power method, one is xi.
    std::mt19937_64 replay(7);
    (void)replay();
    std::normal_distribution<double> normal;
    const double xi = normal(replay);
    CHECK(state.phi()[0] == doctest::Approx(xi / std::sqrt(a)).epsilon(1e-8));
}

TEST_CASE("gibbs update is reproducible bit for bit") {
    const Dataset data = verification_data(6);
    const TargetModel target =
        make_target(TargetKind::pseudofermion, data, verification_proto());
    for (int rep = 0; rep < 2; ++rep) {
        ExtendedState a(Eigen::VectorXd::Constant(2, 0.01), Eigen::VectorXd::Zero(6));
        ExtendedState b = a;
        std::mt19937_64 rng_a(123), rng_b(123);
        gibbs_update_phi(a, target, tight_solver(), rng_a);
        gibbs_update_phi(b, target, tight_solver(), rng_b);
        CHECK(a.phi() == b.phi());
    }
}

TEST_CASE("gibbs draws satisfy the Gaussian moment identity E[phi^T A phi] = N") {
    const Dataset data = verification_data(6);
    const TargetModel target =
        make_target(TargetKind::pseudofermion, data, verification_proto());
    ExtendedState state(Eigen::VectorXd::Constant(2, 0.2), Eigen::VectorXd::Zero(6));
    const KernelOperator op = target.operator_for(state.theta());
    std::mt19937_64 rng(31);
    const int draws = 4000;
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < draws; ++s) {
        gibbs_update_phi(state, target, tight_solver(), rng);
        const double q = state.phi().dot(apply_A(op, state.phi()));
        sum += q;
        sum_sq += q * q;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum_sq / draws - mean * mean) / draws);
    // E[phi^T A phi] = N for phi ~ N(0, A^{-1}); checked to 5 standard errors.
    CHECK(std::abs(mean - 6.0) <= 5.0 * se);
}

TEST_CASE("potential trivial values") {
    Dataset data = verification_data(1);
    data.observations.setZero();
    const TargetModel target =
        make_target(TargetKind::pseudofermion, data, verification_proto(1));
    ExtendedState state(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
    SolverOptions solver = tight_solver();
    CHECK(potential(state, target, solver) == doctest::Approx(0.0));

    // N = 1: U = y^2 / (2a) + phi^2 a / 2.
    Dataset one = verification_data(1);
    one.observations[0] = 1.7;
    const TargetModel t1 = make_target(TargetKind::pseudofermion, one, verification_proto(1));
    ExtendedState s1(Eigen::VectorXd::Constant(1, 0.4), Eigen::VectorXd::Constant(1, -0.9));
    const double a = dense_A(t1.operator_for(s1.theta()))(0, 0);
    const double expected = 0.5 * 1.7 * 1.7 / a + 0.5 * 0.81 * a;
    CHECK(potential(s1, t1, solver) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("pseudofermion and determinant potentials differ by E_phi[phi^T A phi / 2] = N/2") {
    const Dataset data = verification_data(6);
    const HyperParams proto = verification_proto();
    const TargetModel pf = make_target(TargetKind::pseudofermion, data, proto);
    const TargetModel det = make_target(TargetKind::determinant, data, proto);
    SolverOptions solver = tight_solver();

    ExtendedState state(Eigen::VectorXd::Constant(2, 0.15), Eigen::VectorXd::Zero(6));
    ExtendedState det_state = state;
    const double u_det = potential(det_state, det, solver);
    const KernelOperator op = pf.operator_for(state.theta());
    const double log_det = std::log(dense_A(op).determinant());

    std::mt19937_64 rng(17);
    const int draws = 4000;
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < draws; ++s) {
        gibbs_update_phi(state, pf, solver, rng);
        const double u_pf = potential(state, pf, solver);
        const double diff = u_pf - (u_det - 0.5 * log_det);  // = phi^T A phi / 2
        sum += diff;
        sum_sq += diff * diff;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum_sq / draws - mean * mean) / draws);
    CHECK(std::abs(mean - 3.0) <= 5.0 * se);
}

TEST_CASE("force vanishes on the flat instance") {
    Dataset data = verification_data(8);
    data.observations.setZero();
    const TargetModel target = make_target(TargetKind::pseudofermion, data,
                                           verification_proto());
    ExtendedState state(Eigen::VectorXd::Constant(2, 0.37), Eigen::VectorXd::Zero(8));
    SolverOptions solver = tight_solver();
    CHECK(force(state, target, solver).norm() == 0.0);
}

TEST_CASE("force matches central finite differences of the potential") {
    std::mt19937_64 rng(43);
    const Dataset data = verification_data(8);
    const HyperParams proto = verification_proto(2, /*infer_scales=*/true);  // n = 4
    const TargetModel target = make_target(TargetKind::pseudofermion, data, proto);
    SolverOptions solver = tight_solver();

    for (int rep = 0; rep < 5; ++rep) {
        const Eigen::VectorXd theta = 0.3 * test::random_vector(4, rng);
        const Eigen::VectorXd phi = test::random_vector(8, rng);
        ExtendedState state(theta, phi);
        const Eigen::VectorXd analytic = force(state, target, solver);
        const auto u_of = [&](const Eigen::VectorXd& t) {
            ExtendedState s(t, phi);
            return potential(s, target, solver);
        };
        const Eigen::VectorXd numeric = test::central_diff(u_of, theta, 1e-5);
        CHECK((analytic - numeric).norm() <= 1e-5 * numeric.norm());
    }
}

TEST_CASE("determinant force matches finite differences of the determinant potential") {
    std::mt19937_64 rng(47);
    const Dataset data = verification_data(8);
    const HyperParams proto = verification_proto(2, /*infer_scales=*/true);
    const TargetModel target = make_target(TargetKind::determinant, data, proto);
    SolverOptions solver = tight_solver();
    const Eigen::VectorXd theta = 0.25 * test::random_vector(4, rng);
    ExtendedState state(theta, Eigen::VectorXd::Zero(8));
    const Eigen::VectorXd analytic = force(state, target, solver);
    const auto u_of = [&](const Eigen::VectorXd& t) {
        ExtendedState s(t, Eigen::VectorXd::Zero(8));
        return potential(s, target, solver);
    };
    const Eigen::VectorXd numeric = test::central_diff(u_of, theta, 1e-5);
    CHECK((analytic - numeric).norm() <= 1e-5 * numeric.norm());
}

TEST_CASE("leapfrog free particle and reversibility") {
    Dataset data = verification_data(8);
    data.observations.setZero();
    const TargetModel target =
        make_target(TargetKind::pseudofermion, data, verification_proto());
    SolverOptions solver = tight_solver();
    HMCConfig config;
    config.dt = 0.3;
    config.n_int = 4;

    ExtendedState state(Eigen::VectorXd::Constant(2, 0.05), Eigen::VectorXd::Zero(8));
    Eigen::VectorXd pi0(2);
    pi0 << 0.7, -0.2;
    const TrajectoryResult free = leapfrog_trajectory(state, pi0, config, target, solver);
    CHECK(free.force_evaluations == 4);
    CHECK((free.theta - (state.theta() + 4 * 0.3 * pi0)).norm() <= 1e-12);
    CHECK((free.pi - pi0).norm() <= 1e-12);

    // Reversibility on the interacting instance.
    const Dataset full = verification_data(8);
    const TargetModel interacting =
        make_target(TargetKind::pseudofermion, full, verification_proto());
    std::mt19937_64 rng(3);
    ExtendedState s2(0.2 * test::random_vector(2, rng), test::random_vector(8, rng));
    const TrajectoryResult fwd = leapfrog_trajectory(s2, pi0, config, interacting, solver);
    ExtendedState s3 = s2;
    s3.set_theta(fwd.theta);
    const TrajectoryResult back =
        leapfrog_trajectory(s3, (-fwd.pi).eval(), config, interacting, solver);
    CHECK((back.theta - s2.theta()).norm() <= 1e-10);
    CHECK((back.pi + pi0).norm() <= 1e-10);
}

TEST_CASE("leapfrog energy error scales as dt^2") {
    const Dataset data = verification_data(8);
    const TargetModel target =
        make_target(TargetKind::pseudofermion, data, verification_proto());
    SolverOptions solver = tight_solver();
    std::mt19937_64 rng(11);
    ExtendedState state(0.15 * test::random_vector(2, rng), test::random_vector(8, rng));
    Eigen::VectorXd pi0 = test::random_vector(2, rng);

    const auto energy_error = [&](double dt, int n_int) {
        HMCConfig config;
        config.dt = dt;
        config.n_int = n_int;
        ExtendedState work = state;
        const double h0 = potential(work, target, solver) + 0.5 * pi0.squaredNorm();
        const TrajectoryResult traj = leapfrog_trajectory(work, pi0, config, target, solver);
        work.set_theta(traj.theta);
        const double h1 = potential(work, target, solver) + 0.5 * traj.pi.squaredNorm();
        return std::abs(h1 - h0);
    };
    const double e1 = energy_error(0.02, 5);
    const double e2 = energy_error(0.01, 10);
    const double e3 = energy_error(0.005, 20);
    const double slope = std::log(e1 / e3) / std::log(4.0);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.15));
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("implicit midpoint: free particle, residuals, reversibility") {
    SolverOptions solver = tight_solver();
    HMCConfig config;
    config.dt = 0.15;
    config.n_int = 1;
    config.anderson.tol = 1e-12;
    config.anderson.max_iter = 400;

    // Free particle: y = 0, phi = 0 makes the force vanish identically.
    Dataset flat = verification_data(8);
    flat.observations.setZero();
    const TargetModel free_target =
        make_target(TargetKind::pseudofermion, flat, verification_proto());
    Eigen::VectorXd theta0 = Eigen::VectorXd::Constant(2, 0.1);
    Eigen::VectorXd pi0(2);
    pi0 << 0.4, -0.9;
    const ImplicitStepResult free_step = implicit_midpoint_step(
        free_target, theta0, pi0, Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(8), config,
        solver);
    CHECK(free_step.converged);
    CHECK((free_step.theta - (theta0 + 0.15 * pi0)).norm() <= 1e-10);
    CHECK((free_step.pi - pi0).norm() <= 1e-10);

    // Interacting instance: all three residuals of the defining system.
    const Dataset data = verification_data(8);
    const TargetModel target =
        make_target(TargetKind::pseudofermion, data, verification_proto());
    std::mt19937_64 rng(13);
    const Eigen::VectorXd phi = test::random_vector(8, rng);
    ExtendedState state(Eigen::VectorXd::Constant(2, 0.01), phi);
    (void)potential(state, target, solver);  // warm the x cache
    const ImplicitStepResult step = implicit_midpoint_step(
        target, state.theta(), pi0, *state.cached_x(), phi, config, solver);
    REQUIRE(step.converged);
    const Eigen::VectorXd theta_mid = 0.5 * (state.theta() + step.theta);
    const Eigen::VectorXd r1 = step.theta - state.theta() - 0.15 * 0.5 * (pi0 + step.pi);
    const Eigen::VectorXd r2 =
        step.pi - pi0 + 0.15 * frozen_force(target, theta_mid, step.x, phi);
    const KernelOperator op_mid = target.operator_for(theta_mid);
    const Eigen::VectorXd r3 = apply_A(op_mid, step.x) - data.observations;
    CHECK(r1.norm() <= 1e-8);
    CHECK(r2.norm() <= 1e-8);
    CHECK(r3.norm() <= 1e-8);

    // Reversibility of the converged map.
    const ImplicitStepResult back = implicit_midpoint_step(
        target, step.theta, (-step.pi).eval(), step.x, phi, config, solver);
    REQUIRE(back.converged);
    CHECK((back.theta - state.theta()).norm() <= 1e-8);
    CHECK((back.pi + pi0).norm() <= 1e-8);
}

TEST_CASE("integrator maps preserve phase-space volume (|det J| = 1)") {
    // n = 1 instance: the (theta, pi) phase space is 2-dimensional.
    const Dataset data = verification_data(6);
    const TargetModel target =
        make_target(TargetKind::pseudofermion, data, verification_proto(1));
    SolverOptions solver = tight_solver();
    std::mt19937_64 rng(29);
    const Eigen::VectorXd phi = test::random_vector(6, rng);

    for (IntegratorKind kind : {IntegratorKind::leapfrog, IntegratorKind::implicit_midpoint}) {
        HMCConfig config;
        config.dt = 0.2;
        config.n_int = 2;
        config.integrator = kind;
        config.anderson.tol = 1e-13;
        config.anderson.max_iter = 500;

        const auto flow = [&](double theta, double pi) {
            ExtendedState s(Eigen::VectorXd::Constant(1, theta), phi);
            (void)potential(s, target, solver);
            Eigen::VectorXd pi_v = Eigen::VectorXd::Constant(1, pi);
            if (kind == IntegratorKind::leapfrog) {
                const TrajectoryResult t = leapfrog_trajectory(s, pi_v, config, target, solver);
                return std::pair<double, double>(t.theta[0], t.pi[0]);
            }
            Eigen::VectorXd x = *s.cached_x();
            Eigen::VectorXd th = s.theta(), p = pi_v;
            for (int i = 0; i < config.n_int; ++i) {
                const ImplicitStepResult r =
                    implicit_midpoint_step(target, th, p, x, phi, config, solver);
                REQUIRE(r.converged);
                th = r.theta;
                p = r.pi;
                x = r.x;
            }
            return std::pair<double, double>(th[0], p[0]);
        };

        const double h = 1e-5, t0 = 0.07, p0 = -0.4;
        const auto [tp, pp] = flow(t0 + h, p0);
        const auto [tm, pm] = flow(t0 - h, p0);
        const auto [tp2, pp2] = flow(t0, p0 + h);
        const auto [tm2, pm2] = flow(t0, p0 - h);
        const double j00 = (tp - tm) / (2 * h), j01 = (tp2 - tm2) / (2 * h);
        const double j10 = (pp - pm) / (2 * h), j11 = (pp2 - pm2) / (2 * h);
        const double det = j00 * j11 - j01 * j10;
        CHECK(std::abs(std::abs(det) - 1.0) <= 1e-4);
    }
}

TEST_CASE("hmc update: dt = 0 always accepts with zero energy change") {
    const Dataset data = verification_data(6);
    const TargetModel target =
        make_target(TargetKind::pseudofermion, data, verification_proto());
    SolverOptions solver = tight_solver();
    std::mt19937_64 rng(31);
    ExtendedState state(Eigen::VectorXd::Constant(2, 0.01), test::random_vector(6, rng));
    const Eigen::VectorXd before = state.theta();
    for (IntegratorKind kind : {IntegratorKind::leapfrog, IntegratorKind::implicit_midpoint}) {
        HMCConfig config;
        config.dt = 0.0;
        config.n_int = 3;
        config.integrator = kind;
        const StepReport report = hmc_update(state, config, target, solver, rng);
        CHECK(report.accepted);
        CHECK(report.delta_h == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(state.theta() == before);
    }
}

TEST_CASE("rejected proposals leave the state bitwise unchanged") {
    const Dataset data = verification_data(10);
    const TargetModel target =
        make_target(TargetKind::pseudofermion, data, verification_proto());
    SolverOptions solver = tight_solver();
    std::mt19937_64 rng(37);
    ExtendedState state(Eigen::VectorXd::Constant(2, 0.01), test::random_vector(10, rng));
    HMCConfig config;
    config.dt = 40.0;  // hopeless step size: essentially certain rejection
    config.n_int = 3;
    const Eigen::VectorXd theta_before = state.theta();
    const Eigen::VectorXd phi_before = state.phi();
    int rejections = 0;
    for (int i = 0; i < 10; ++i) {
        const StepReport report = hmc_update(state, config, target, solver, rng);
        if (!report.accepted) {
            ++rejections;
            CHECK(state.theta() == theta_before);
            CHECK(state.phi() == phi_before);
        }
    }
    CHECK(rejections > 0);
}

TEST_CASE("rwm: dt = 0 and flat targets always accept") {
    Dataset flat = verification_data(6);
    flat.observations.setZero();
    const TargetModel target =
        make_target(TargetKind::pseudofermion, flat, verification_proto());
    SolverOptions solver = tight_solver();
    std::mt19937_64 rng(41);
    ExtendedState state(Eigen::VectorXd::Constant(2, 0.01), Eigen::VectorXd::Zero(6));
    const Eigen::VectorXd before = state.theta();
    StepReport report = rwm_update(state, 0.0, target, solver, rng);
    CHECK(report.accepted);
    CHECK(state.theta() == before);
    for (int i = 0; i < 20; ++i) {
        report = rwm_update(state, 0.5, target, solver, rng);
        CHECK(report.accepted);  // flat target: delta U = 0 exactly
    }
}

TEST_CASE("samplers reproduce a 1-d Gaussian prior target") {
    // y = 0 and phi = 0 reduce U to the prior S(theta) = theta^2 / 2, an
    // analytic standard normal in one dimension.
    Dataset flat = verification_data(4);
    flat.observations.setZero();
    HyperParams proto = verification_proto(1);
    TargetModel target = make_target(TargetKind::pseudofermion, flat, proto);
    target.prior.neg_log_density = [](const Eigen::VectorXd& t) {
        return 0.5 * t.squaredNorm();
    };
    target.prior.gradient = [](const Eigen::VectorXd& t) { return t; };
    SolverOptions solver;
    solver.cg.tol = 1e-10;

    const auto ks_against_normal = [](const std::vector<double>& samples) {
        std::vector<double> sorted = samples;
        std::sort(sorted.begin(), sorted.end());
        double ks = 0.0;
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            const double cdf = 0.5 * std::erfc(-sorted[i] / std::sqrt(2.0));
            const double lo = static_cast<double>(i) / sorted.size();
            const double hi = static_cast<double>(i + 1) / sorted.size();
            ks = std::max(ks, std::max(std::abs(cdf - lo), std::abs(cdf - hi)));
        }
        return ks;
    };

    SUBCASE("hmc leapfrog") {
        std::mt19937_64 rng(43);
        ExtendedState state(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(4));
        HMCConfig config;
        config.dt = 0.5;
        config.n_int = 3;
        std::vector<double> samples;
        for (int i = 0; i < 100000; ++i) {
            hmc_update(state, config, target, solver, rng);
            samples.push_back(state.theta()[0]);
        }
        CHECK(ks_against_normal(samples) < 0.02);
    }
    SUBCASE("rwm") {
        std::mt19937_64 rng(47);
        ExtendedState state(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(4));
        std::vector<double> samples;
        for (int i = 0; i < 100000; ++i) {
            rwm_update(state, 2.0, target, solver, rng);
            samples.push_back(state.theta()[0]);
        }
        CHECK(ks_against_normal(samples) < 0.02);
    }
}

TEST_CASE("run_chains determinism and trace shape") {
    const Dataset data = verification_data(10);
    const TargetModel target =
        make_target(TargetKind::pseudofermion, data, verification_proto());
    RunSpec spec;
    spec.sampler.kind = SamplerKind::hmc_leapfrog;
    spec.sampler.dt = 0.4;
    spec.sampler.n_int = 3;
    spec.chains = 2;
    spec.steps = 3;
    spec.seed = 999;
    spec.precond.policy = PrecondPolicy::nystrom;
    spec.precond.rank = 5;
    spec.precond.refresh = 2;

    const RunResult a = run_chains(target, spec);
    const RunResult b = run_chains(target, spec);
    REQUIRE(a.chains.size() == 2);
    for (int c = 0; c < 2; ++c) {
        CHECK_FALSE(a.chains[c].failed);
        CHECK(a.chains[c].thetas.rows() == 4);  // T + 1 records
        CHECK(a.chains[c].thetas.cols() == 2);
        CHECK(a.chains[c].thetas == b.chains[c].thetas);
        CHECK(a.chains[c].delta_h == b.chains[c].delta_h);
        CHECK((a.chains[c].thetas.row(0).transpose().array() == 0.01).all());
    }
}

TEST_CASE("failed solves reject without killing the chain") {
    const Dataset data = verification_data(6);
    HyperParams proto = verification_proto();
    TargetModel target = make_target(TargetKind::pseudofermion, data, proto);
    RunSpec spec;
    spec.sampler.kind = SamplerKind::rwm;
    spec.sampler.dt = 0.25;
    spec.chains = 2;
    spec.steps = 4;
    spec.seed = 5;
    spec.solver.cg.max_iter = 1;  // every solve misses tolerance
    spec.solver.cg.tol = 1e-14;
    const RunResult result = run_chains(target, spec);
    for (const auto& chain : result.chains) {
        CHECK_FALSE(chain.failed);  // failed solves reject; the chain keeps running
        CHECK(chain.acceptance_rate() == 0.0);
        CHECK(chain.thetas.rows() == 5);
    }
}

TEST_SUITE_END();
