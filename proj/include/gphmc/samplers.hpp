#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <random>

#include "gphmc/anderson.hpp"
#include "gphmc/target.hpp"

namespace gphmc {

// Mass matrix descriptor: identity by default, optionally diagonal or dense
// SPD with factorized sampling and inversion.
class MassMatrix {
public:
    static MassMatrix identity() { return MassMatrix(); }
    static MassMatrix diagonal(Eigen::VectorXd diag);
    static MassMatrix dense(const Eigen::MatrixXd& m);

    Eigen::VectorXd apply_inverse(const Eigen::Ref<const Eigen::VectorXd>& pi) const;
    double kinetic(const Eigen::Ref<const Eigen::VectorXd>& pi) const;
    Eigen::VectorXd sample(Eigen::Index n, std::mt19937_64& rng) const;

private:
    enum class Kind { identity, diagonal, dense } kind_ = Kind::identity;
    Eigen::VectorXd diag_, sqrt_diag_;
    Eigen::MatrixXd dense_, chol_l_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

enum class IntegratorKind { leapfrog, implicit_midpoint };
enum class PrecondPolicy { none, rescale, nystrom };

struct HMCConfig {
    double dt = 0.1;  // >= 0; 0 makes every proposal the current point
    int n_int = 1;
    MassMatrix mass = MassMatrix::identity();
    IntegratorKind integrator = IntegratorKind::leapfrog;
    AndersonConfig anderson;        // implicit midpoint only
    PrecondPolicy phi_precond = PrecondPolicy::none;  // R(theta_0) in the Phi map
};

struct TrajectoryResult {
    Eigen::VectorXd theta;
    Eigen::VectorXd pi;
    int force_evaluations = 0;
    int solver_iterations = 0;   // CG iterations inside force solves
    int anderson_iterations = 0; // implicit midpoint only
    bool ok = true;              // false: solver/fixed-point failure, reject
};

// N_int Stoermer-Verlet steps with fused interior half-steps: exactly
// N_int force evaluations and N_int + 1 mass inversions; returns only the
// endpoint.
TrajectoryResult leapfrog_trajectory(const ExtendedState& state,
                                     const Eigen::Ref<const Eigen::VectorXd>& pi0,
                                     const HMCConfig& config, const TargetModel& target,
                                     const SolverOptions& solver);

// One implicit-midpoint (1-stage Gauss-Legendre) step: Anderson-accelerated
// fixed point of the fused map over (theta_1, pi_1, x). `x0` seeds the linear
// block. On convergence the returned x solves A((theta_0+theta_1)/2) x = y.
struct ImplicitStepResult {
    Eigen::VectorXd theta;
    Eigen::VectorXd pi;
    Eigen::VectorXd x;  // midpoint solve, reusable as the next step's seed
    int anderson_iterations = 0;
    bool converged = false;
};
ImplicitStepResult implicit_midpoint_step(const TargetModel& target,
                                          const Eigen::Ref<const Eigen::VectorXd>& theta0,
                                          const Eigen::Ref<const Eigen::VectorXd>& pi0,
                                          const Eigen::Ref<const Eigen::VectorXd>& x0,
                                          const Eigen::Ref<const Eigen::VectorXd>& phi,
                                          const HMCConfig& config, const SolverOptions& solver);

struct StepReport {
    bool accepted = false;
    double delta_h = 0.0;          // H(proposal) - H(current); +inf on failure
    int phi_iterations = 0;        // filled by the chain runner
    int solver_iterations = 0;     // CG iterations in force/potential solves
    int anderson_iterations = 0;
    int force_evaluations = 0;
    bool solver_failed = false;
};

// Full HMC update: momentum refresh, trajectory, Metropolis correction.
// Solver and fixed-point failures inside the proposal reject the step and
// leave the state untouched.
StepReport hmc_update(ExtendedState& state, const HMCConfig& config, const TargetModel& target,
                      const SolverOptions& solver, std::mt19937_64& rng);

// Random walk Metropolis: theta' ~ N(theta, dt^2 I), accept with
// min(1, exp(U(theta) - U(theta'))).
StepReport rwm_update(ExtendedState& state, double dt, const TargetModel& target,
                      const SolverOptions& solver, std::mt19937_64& rng);

}  // namespace gphmc
