#include "gphmc/samplers.hpp"

#include <cmath>
#include <limits>

#include "gphmc/errors.hpp"

namespace gphmc {

MassMatrix MassMatrix::diagonal(Eigen::VectorXd diag) {
    if ((diag.array() <= 0.0).any())
        throw std::invalid_argument("mass matrix: diagonal entries must be positive");
    MassMatrix m;
    m.kind_ = Kind::diagonal;
    m.sqrt_diag_ = diag.array().sqrt();
    m.diag_ = std::move(diag);
    return m;
}

MassMatrix MassMatrix::dense(const Eigen::MatrixXd& mat) {
    MassMatrix m;
    m.kind_ = Kind::dense;
    m.dense_ = 0.5 * (mat + mat.transpose());
    m.llt_.compute(m.dense_);
    if (m.llt_.info() != Eigen::Success)
        throw std::invalid_argument("mass matrix: dense matrix must be SPD");
    m.chol_l_ = m.llt_.matrixL();
    return m;
}

Eigen::VectorXd MassMatrix::apply_inverse(const Eigen::Ref<const Eigen::VectorXd>& pi) const {
    switch (kind_) {
        case Kind::identity: return pi;
        case Kind::diagonal: return pi.cwiseQuotient(diag_);
        case Kind::dense: return llt_.solve(pi);
    }
    return pi;
}

double MassMatrix::kinetic(const Eigen::Ref<const Eigen::VectorXd>& pi) const {
    return 0.5 * pi.dot(apply_inverse(pi));
}

Eigen::VectorXd MassMatrix::sample(Eigen::Index n, std::mt19937_64& rng) const {
    std::normal_distribution<double> normal;
    Eigen::VectorXd xi(n);
    for (Eigen::Index i = 0; i < n; ++i) xi[i] = normal(rng);
    switch (kind_) {
        case Kind::identity: return xi;
        case Kind::diagonal: return sqrt_diag_.cwiseProduct(xi);
        case Kind::dense: return chol_l_ * xi;
    }
    return xi;
}

TrajectoryResult leapfrog_trajectory(const ExtendedState& state,
                                     const Eigen::Ref<const Eigen::VectorXd>& pi0,
                                     const HMCConfig& config, const TargetModel& target,
                                     const SolverOptions& solver) {
    TrajectoryResult out;
    ExtendedState work = state;
    Eigen::VectorXd pi = pi0;
    const double dt = config.dt;
    // theta_half rolls through the interior: the trailing and leading drift
    // half-steps of consecutive leapfrog steps fuse into one full step.
    Eigen::VectorXd theta_half = state.theta() + 0.5 * dt * config.mass.apply_inverse(pi);
    for (int step = 0; step < config.n_int; ++step) {
        work.set_theta(theta_half);
        pi -= dt * force(work, target, solver);
        out.solver_iterations += work.x_iterations();
        ++out.force_evaluations;
        if (step + 1 < config.n_int)
            theta_half += dt * config.mass.apply_inverse(pi);
        else
            theta_half += 0.5 * dt * config.mass.apply_inverse(pi);
    }
    out.theta = std::move(theta_half);
    out.pi = std::move(pi);
    return out;
}

ImplicitStepResult implicit_midpoint_step(const TargetModel& target,
                                          const Eigen::Ref<const Eigen::VectorXd>& theta0,
                                          const Eigen::Ref<const Eigen::VectorXd>& pi0,
                                          const Eigen::Ref<const Eigen::VectorXd>& x0,
                                          const Eigen::Ref<const Eigen::VectorXd>& phi,
                                          const HMCConfig& config,
                                          const SolverOptions& solver) {
    const Eigen::Index n = theta0.size();
    const Eigen::Index n_data = target.data_size();
    const Eigen::VectorXd& y = target.data->observations;
    const double dt = config.dt;

    // Linear-block preconditioner R(theta_0).
    PrecondFn r_apply;
    double rescale = 1.0;
    const KernelOperator op0 = target.operator_for(theta0);
    if (config.phi_precond == PrecondPolicy::rescale) {
        const double c = power_method(as_operator(op0), solver.power_iters);
        rescale = c > 0.0 ? 1.0 / c : 1.0;
    } else if (config.phi_precond == PrecondPolicy::nystrom && solver.nystrom) {
        r_apply = woodbury_preconditioner(*solver.nystrom, op0.sigma_sq, 0.0);
    }

    const auto phi_map = [&](const Eigen::Ref<const Eigen::VectorXd>& v) {
        const auto theta = v.head(n);
        const auto pi = v.segment(n, n);
        const auto x = v.tail(n_data);
        const Eigen::VectorXd theta_mid = 0.5 * (theta0 + theta);
        const KernelOperator op = target.operator_for(theta_mid);

        KernelMatvecPair pair_x;
        if (op.params.infer_ell)
            pair_x = apply_K_with_r2(op, x);
        else
            pair_x.kz = apply_K(op, x);
        Eigen::VectorXd f = -0.5 * quad_form_grad(op, x, pair_x);
        f += 0.5 * quad_form_grad(op, phi);
        if (target.prior.gradient) f += target.prior.gradient(theta_mid);

        Eigen::VectorXd out(2 * n + n_data);
        out.head(n) = theta0 + dt * config.mass.apply_inverse(0.5 * (pi0 + pi));
        out.segment(n, n) = pi0 - dt * f;
        const Eigen::VectorXd residual = y - (pair_x.kz + op.sigma_sq * x);
        out.tail(n_data) = x + (r_apply ? r_apply(residual) : rescale * residual).eval();
        return out;
    };

    Eigen::VectorXd v0(2 * n + n_data);
    v0 << theta0, pi0, x0;
    const AndersonResult sol = anderson_solve(phi_map, v0, config.anderson);

    ImplicitStepResult out;
    out.anderson_iterations = sol.iterations;
    out.converged = sol.converged();
    out.theta = sol.x.head(n);
    out.pi = sol.x.segment(n, n);
    out.x = sol.x.tail(n_data);
    return out;
}

namespace {

TrajectoryResult implicit_trajectory(const ExtendedState& state,
                                     const Eigen::Ref<const Eigen::VectorXd>& pi0,
                                     const HMCConfig& config, const TargetModel& target,
                                     const SolverOptions& solver) {
    TrajectoryResult out;
    Eigen::VectorXd theta = state.theta();
    Eigen::VectorXd pi = pi0;
    Eigen::VectorXd x = *state.cached_x();  // warm start for the linear block
    for (int step = 0; step < config.n_int; ++step) {
        const ImplicitStepResult res =
            implicit_midpoint_step(target, theta, pi, x, state.phi(), config, solver);
        out.anderson_iterations += res.anderson_iterations;
        if (!res.converged) {
            out.ok = false;
            return out;
        }
        theta = res.theta;
        pi = res.pi;
        x = res.x;
    }
    out.theta = std::move(theta);
    out.pi = std::move(pi);
    return out;
}

}  // namespace

StepReport hmc_update(ExtendedState& state, const HMCConfig& config, const TargetModel& target,
                      const SolverOptions& solver, std::mt19937_64& rng) {
    StepReport report;
    std::uniform_real_distribution<double> uniform;
    const Eigen::VectorXd pi0 = config.mass.sample(state.theta().size(), rng);
    // Draw the acceptance variate up front so the RNG stream advances
    // identically whether or not the proposal fails.
    const double accept_draw = uniform(rng);
    try {
        const double h0 = potential(state, target, solver) + config.mass.kinetic(pi0);
        report.solver_iterations += state.x_iterations();

        TrajectoryResult traj;
        if (config.integrator == IntegratorKind::leapfrog)
            traj = leapfrog_trajectory(state, pi0, config, target, solver);
        else
            traj = implicit_trajectory(state, pi0, config, target, solver);
        report.force_evaluations = traj.force_evaluations;
        report.solver_iterations += traj.solver_iterations;
        report.anderson_iterations = traj.anderson_iterations;
        if (!traj.ok) {
            report.delta_h = std::numeric_limits<double>::infinity();
            report.solver_failed = true;
            return report;
        }

        ExtendedState proposal = state;
        proposal.set_theta(traj.theta);
        const double h1 =
            potential(proposal, target, solver) + config.mass.kinetic(traj.pi);
        report.solver_iterations += proposal.x_iterations();
        report.delta_h = h1 - h0;
        if (accept_draw <= std::exp(-report.delta_h)) {
            state = std::move(proposal);
            report.accepted = true;
        }
    } catch (const SolverFailure&) {
        report.delta_h = std::numeric_limits<double>::infinity();
        report.solver_failed = true;
    } catch (const NumericalError&) {
        report.delta_h = std::numeric_limits<double>::infinity();
        report.solver_failed = true;
    }
    return report;
}

StepReport rwm_update(ExtendedState& state, double dt, const TargetModel& target,
                      const SolverOptions& solver, std::mt19937_64& rng) {
    StepReport report;
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform;
    Eigen::VectorXd step(state.theta().size());
    for (Eigen::Index i = 0; i < step.size(); ++i) step[i] = normal(rng);
    const double accept_draw = uniform(rng);
    try {
        const double u0 = potential(state, target, solver);
        report.solver_iterations += state.x_iterations();
        ExtendedState proposal = state;
        proposal.set_theta(state.theta() + dt * step);
        const double u1 = potential(proposal, target, solver);
        report.solver_iterations += proposal.x_iterations();
        report.delta_h = u1 - u0;
        if (accept_draw <= std::exp(-report.delta_h)) {
            state = std::move(proposal);
            report.accepted = true;
        }
    } catch (const SolverFailure&) {
        report.delta_h = std::numeric_limits<double>::infinity();
        report.solver_failed = true;
    } catch (const NumericalError&) {
        report.delta_h = std::numeric_limits<double>::infinity();
        report.solver_failed = true;
    }
    return report;
}

}  // namespace gphmc
