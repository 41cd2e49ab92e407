#pragma once

#include <Eigen/Core>
#include <random>

#include "gphmc/cg.hpp"
#include "gphmc/linear_operator.hpp"

namespace gphmc {

// Randomized Nystrom factorization K ~ U diag(eigs) U^T of the kernel-only
// matrix. One factorization is recycled across all diagonal shifts via the
// Woodbury identity.
struct NystromPreconditioner {
    Eigen::MatrixXd factor;      // N x rank, orthonormal columns
    Eigen::VectorXd eigenvalues; // descending, >= 0
    int rank = 0;
};

// Single-pass sketch with a Gaussian test matrix (oversampling columns beyond
// `rank`) and the stabilizing eps-scale shift before the pseudo-inversion.
NystromPreconditioner nystrom_factorize(const LinearOperator& kernel_op, int rank,
                                        std::mt19937_64& rng, int oversample = 10);

// (U diag(eigs) U^T + (sigma_sq + shift) I)^{-1} v in O(N rank).
Eigen::VectorXd woodbury_apply(const NystromPreconditioner& precond, double sigma_sq,
                               double shift, const Eigen::Ref<const Eigen::VectorXd>& v);

// Preconditioner callback for CG on (A + shift I), A = sigma^2 I + K.
PrecondFn woodbury_preconditioner(const NystromPreconditioner& precond, double sigma_sq,
                                  double shift);

// Factory adapting one factorization to every pole shift.
ShiftPrecondFactory woodbury_factory(const NystromPreconditioner& precond, double sigma_sq);

}  // namespace gphmc
