#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "gphmc/linear_operator.hpp"

namespace gphmc {

using PrecondFn = std::function<Eigen::VectorXd(const Eigen::Ref<const Eigen::VectorXd>&)>;

struct SolveConfig {
    double tol = 1e-6;  // relative residual ||Ax-b|| / ||b||
    int max_iter = 2000;
    PrecondFn precond;  // SPD approximation of A^{-1}; empty = unpreconditioned
};

struct CgResult {
    Eigen::VectorXd x;
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

// Preconditioned conjugate gradients from a zero initial guess.
// Convergence failures are reported in the result, never thrown; callers in
// the samplers decide whether a failed solve rejects a proposal.
CgResult cg_solve(const LinearOperator& op, const Eigen::Ref<const Eigen::VectorXd>& b,
                  const SolveConfig& config);

// Builds an A^{-1}-like preconditioner for the system (A + shift I).
using ShiftPrecondFactory = std::function<PrecondFn(double shift)>;

// Solves (A + lambda_p I) x_p = b for every shift. Default: one independent
// (optionally preconditioned) CG run per shift. With shared_krylov = true and
// no preconditioner, all systems ride a single Krylov recurrence
// (multi-shift CG), one matvec per iteration total.
std::vector<CgResult> batched_shifted_solve(const LinearOperator& op,
                                            const Eigen::Ref<const Eigen::VectorXd>& b,
                                            const std::vector<double>& shifts,
                                            const SolveConfig& config,
                                            const ShiftPrecondFactory& precond_factory = {},
                                            bool shared_krylov = false);

// Rayleigh-quotient estimate of the spectral radius after `iters` power
// iterations from a seeded random start. Never exceeds the true largest
// eigenvalue of a symmetric operator beyond round-off.
double power_method(const LinearOperator& op, int iters,
                    std::uint64_t seed = 0x9e3779b97f4a7c15ull);

}  // namespace gphmc
