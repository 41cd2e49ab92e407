#include "gphmc/target.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

#include "gphmc/chebyshev.hpp"
#include "gphmc/errors.hpp"

namespace gphmc {

TargetModel make_target(TargetKind kind, const Dataset& data, const HyperParams& prototype,
                        Eigen::Index tile, Eigen::Index dense_limit) {
    validate_dataset(data);
    if (prototype.dim != data.dim())
        throw std::invalid_argument("target: hyperparameter dimension != data dimension");
    if (kind == TargetKind::determinant && data.size() > dense_limit)
        throw std::invalid_argument("target: determinant kind limited to N <= " +
                                    std::to_string(dense_limit));
    TargetModel target;
    target.kind = kind;
    target.data = &data;
    target.basis = chebyshev_basis(data.points, prototype.n_cheb, prototype.dim);
    target.prototype = prototype;
    target.tile = tile;
    target.dense_limit = dense_limit;
    return target;
}

namespace {

std::string theta_string(const Eigen::VectorXd& theta) {
    std::ostringstream os;
    os << theta.transpose();
    return os.str();
}

// Ensures the x_theta = A^{-1} y cache and the data term 1/2 y^T x.
// Determinant targets factorize densely (also filling log|A|); pseudofermion
// targets run preconditioned CG.
void ensure_data_solve(ExtendedState& state, const TargetModel& target,
                       const SolverOptions& solver, const KernelOperator& op) {
    if (state.cached_x() && state.data_term_) return;
    const Eigen::VectorXd& y = target.data->observations;
    if (target.kind == TargetKind::determinant) {
        Eigen::MatrixXd a = dense_A(op);
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() != Eigen::Success)
            throw NumericalError("potential: dense factorization failed at theta = " +
                                 theta_string(state.theta()));
        state.store_x(llt.solve(y), 0);
        state.log_det_ = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    } else {
        SolveConfig config = solver.cg;
        if (solver.nystrom)
            config.precond = woodbury_preconditioner(*solver.nystrom, op.sigma_sq, 0.0);
        const LinearOperator a_op = as_operator(op);
        CgResult res = cg_solve(a_op, y, config);
        if (!res.converged)
            throw SolverFailure("potential: A x = y solve missed tolerance at theta = " +
                                    theta_string(state.theta()),
                                res.rel_residual, res.iterations);
        state.store_x(std::move(res.x), res.iterations);
    }
    state.data_term_ = 0.5 * y.dot(*state.cached_x());
}

double prior_term(const TargetModel& target, const Eigen::VectorXd& theta) {
    return target.prior.neg_log_density ? target.prior.neg_log_density(theta) : 0.0;
}

Eigen::VectorXd prior_gradient(const TargetModel& target, const Eigen::VectorXd& theta) {
    return target.prior.gradient ? target.prior.gradient(theta)
                                 : Eigen::VectorXd::Zero(theta.size());
}

}  // namespace

double potential(ExtendedState& state, const TargetModel& target, const SolverOptions& solver) {
    const KernelOperator op = target.operator_for(state.theta());
    ensure_data_solve(state, target, solver, op);
    double u = prior_term(target, state.theta()) + *state.data_term_;
    if (target.kind == TargetKind::determinant) {
        u += 0.5 * *state.log_det_;
    } else {
        if (!state.phi_term_)
            state.phi_term_ = 0.5 * state.phi().dot(apply_A(op, state.phi()));
        u += *state.phi_term_;
    }
    return u;
}

Eigen::VectorXd frozen_force(const TargetModel& target,
                             const Eigen::Ref<const Eigen::VectorXd>& theta,
                             const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& phi) {
    const KernelOperator op = target.operator_for(theta);
    Eigen::VectorXd f = prior_gradient(target, theta);
    f -= 0.5 * quad_form_grad(op, x);
    f += 0.5 * quad_form_grad(op, phi);
    return f;
}

namespace {

// Determinant-target force: grad S + 1/2 tr(A^{-1) dA) - 1/2 x^T dA x with
// the trace evaluated densely through W = A^{-1} and E = K W.
Eigen::VectorXd determinant_force(ExtendedState& state, const TargetModel& target,
                                  const KernelOperator& op) {
    const HyperParams& hp = op.params;
    const Eigen::MatrixXd k = dense_K(op);
    Eigen::MatrixXd a = k;
    a.diagonal().array() += op.sigma_sq;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        throw NumericalError("force: dense factorization failed at theta = " +
                             theta_string(state.theta()));
    const Eigen::Index n_data = target.data_size();
    const Eigen::MatrixXd w = llt.solve(Eigen::MatrixXd::Identity(n_data, n_data));
    const Eigen::VectorXd e_diag = (k * w).diagonal();

    Eigen::VectorXd trace_grad(hp.n());
    trace_grad.head(hp.cheb.size()).noalias() = 2.0 * target.basis.transpose() * e_diag;
    Eigen::Index idx = hp.cheb.size();
    if (hp.infer_sigma)
        trace_grad[idx++] = 2.0 * hp.sigma() * std::exp(hp.log_sigma) * w.trace();
    if (hp.infer_ell) {
        const double s = op.two_ell_sq;
        const Eigen::MatrixXd r2 = dense_sq_dist(*target.data);
        trace_grad[idx++] =
            std::exp(hp.log_ell) / (s * s) * (w.array() * k.array() * r2.array()).sum();
    }
    return prior_gradient(target, state.theta()) + 0.5 * trace_grad -
           0.5 * quad_form_grad(op, *state.cached_x());
}

}  // namespace

Eigen::VectorXd force(ExtendedState& state, const TargetModel& target,
                      const SolverOptions& solver) {
    const KernelOperator op = target.operator_for(state.theta());
    ensure_data_solve(state, target, solver, op);
    if (target.kind == TargetKind::determinant) return determinant_force(state, target, op);
    return frozen_force(target, state.theta(), *state.cached_x(), state.phi());
}

void gibbs_update_phi(ExtendedState& state, const TargetModel& target,
                      const SolverOptions& solver, std::mt19937_64& rng, GibbsStats* stats) {
    if (target.kind != TargetKind::pseudofermion)
        throw std::logic_error("gibbs_update_phi: pseudofermion target required");
    const KernelOperator op = target.operator_for(state.theta());
    const LinearOperator a_op = as_operator(op);

    SpectralBounds bounds;
    bounds.min_eig = op.sigma_sq;
    bounds.max_eig = std::max(
        solver.bound_inflation * power_method(a_op, solver.power_iters, rng()), op.sigma_sq);
    const PoleExpansion expansion =
        build_pole_expansion(bounds, solver.n_poles, PoleMode::inv_sqrt);

    std::normal_distribution<double> normal;
    Eigen::VectorXd xi(target.data_size());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi[i] = normal(rng);

    ShiftPrecondFactory factory;
    if (solver.nystrom) factory = woodbury_factory(*solver.nystrom, op.sigma_sq);
    PoleApplyStats pole_stats;
    Eigen::VectorXd phi = apply_inv_sqrt(a_op, xi, expansion, solver.cg, factory,
                                         solver.shared_krylov_shifts, &pole_stats);
    state.set_phi(std::move(phi));
    if (stats) {
        stats->solver_iterations = pole_stats.total_iterations;
        stats->spectral_upper = bounds.max_eig;
    }
}

}  // namespace gphmc
