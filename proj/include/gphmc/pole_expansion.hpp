#pragma once

#include <Eigen/Core>
#include <vector>

#include "gphmc/cg.hpp"
#include "gphmc/linear_operator.hpp"

namespace gphmc {

// Eigenvalue bracket for the expansion contour. For A = sigma^2 I + K with K
// positive semidefinite, min_eig = sigma^2 exactly; max_eig is an inflated
// power-method estimate.
struct SpectralBounds {
    double min_eig = 0.0;
    double max_eig = 0.0;
};

enum class PoleMode { sqrt, inv_sqrt };

// Rational approximation A^{+-1/2} ~ [A] sum_p w_p (A + lambda_p I)^{-1} with
// elliptic-function nodes; the leading A factor is present in sqrt mode only.
// Weights and shifts are real by construction (imaginary nodes enter through
// the Jacobi imaginary transformation, never through complex arithmetic).
struct PoleExpansion {
    Eigen::VectorXd weights;  // ascending node index
    Eigen::VectorXd shifts;   // strictly positive
    PoleMode mode = PoleMode::inv_sqrt;
    int n_poles() const { return static_cast<int>(weights.size()); }
};

PoleExpansion build_pole_expansion(const SpectralBounds& bounds, int n_poles, PoleMode mode);

struct PoleApplyStats {
    int total_iterations = 0;  // summed CG iterations over all shifts
    int max_iterations = 0;
    bool converged = true;
};

// sum_p w_p (A + lambda_p I)^{-1} v, summed in ascending node order. Shifted
// solves run independently (with Woodbury-adapted preconditioning when a
// factory is supplied) or on one shared Krylov recurrence when unpreconditioned.
// Throws SolverFailure if any shift misses the residual contract.
Eigen::VectorXd apply_inv_sqrt(const LinearOperator& op,
                               const Eigen::Ref<const Eigen::VectorXd>& v,
                               const PoleExpansion& expansion, const SolveConfig& config,
                               const ShiftPrecondFactory& precond_factory = {},
                               bool shared_krylov = false, PoleApplyStats* stats = nullptr);

// As above with one extra application of A at the end.
Eigen::VectorXd apply_sqrt(const LinearOperator& op,
                           const Eigen::Ref<const Eigen::VectorXd>& v,
                           const PoleExpansion& expansion, const SolveConfig& config,
                           const ShiftPrecondFactory& precond_factory = {},
                           bool shared_krylov = false, PoleApplyStats* stats = nullptr);

}  // namespace gphmc
