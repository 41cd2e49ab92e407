#pragma once

#include <Eigen/Core>

#include "gphmc/dataset.hpp"
#include "gphmc/hyperparams.hpp"

namespace gphmc {

// Matrix-free view of the regularized kernel matrix
//   A(theta) = sigma^2 I + K(theta),
//   K_ij = exp(C_theta(x_i)) exp(C_theta(x_j)) exp(-|x_i-x_j|^2 / (2 ell^2)).
// The matrix is never formed; applies stream over row/column tiles so an
// apply uses O(N) memory plus O(tile^2) scratch. Row tiles are processed in
// ascending order and column tiles accumulate in ascending order, which fixes
// the reduction order and makes results deterministic (also under the
// optional OpenMP parallelization over row tiles, since each row tile owns a
// disjoint output slice).
struct KernelOperator {
    const Dataset* data = nullptr;
    const Eigen::MatrixXd* basis = nullptr;  // Chebyshev tensor rows, N x n_cheb^d
    HyperParams params;
    Eigen::VectorXd amplitude;  // exp(C_theta(x_i))
    double sigma_sq = 0.0;
    double two_ell_sq = 1.0;
    Eigen::Index tile = 1024;

    Eigen::Index size() const { return data->size(); }
};

KernelOperator make_kernel_operator(const Dataset& data, const Eigen::MatrixXd& basis,
                                    const HyperParams& params, Eigen::Index tile = 1024);

// (sigma^2 I + K) z. Throws NumericalError on non-finite output.
Eigen::VectorXd apply_A(const KernelOperator& op, const Eigen::Ref<const Eigen::VectorXd>& z);

// K z only (no diagonal shift).
Eigen::VectorXd apply_K(const KernelOperator& op, const Eigen::Ref<const Eigen::VectorXd>& z);

// Fused pass producing K z together with (K .* r^2) z, where r^2 is the
// pairwise squared distance; the second vector feeds the log_ell gradient.
struct KernelMatvecPair {
    Eigen::VectorXd kz;
    Eigen::VectorXd kr2z;
};
KernelMatvecPair apply_K_with_r2(const KernelOperator& op,
                                 const Eigen::Ref<const Eigen::VectorXd>& z);

// Analytic gradient of z^T A(theta) z with respect to the inferred theta,
// for z independent of theta. Layout matches HyperParams::pack():
//   d/dTheta_I  = 2 sum_i T_I(x_i) z_i (K z)_i
//   d/dlog_sigma = 2 sigma exp(log_sigma) ||z||^2          (when inferred)
//   d/dlog_ell   = exp(log_ell)/s^2 * z^T (K .* r^2) z,  s = 2 ell^2 (when inferred)
Eigen::VectorXd quad_form_grad(const KernelOperator& op,
                               const Eigen::Ref<const Eigen::VectorXd>& z);

// Variant reusing a precomputed matvec pair for z (kr2z may be empty when
// log_ell is frozen); lets callers share the kernel pass with an A-apply.
Eigen::VectorXd quad_form_grad(const KernelOperator& op,
                               const Eigen::Ref<const Eigen::VectorXd>& z,
                               const KernelMatvecPair& pair);

// Pointwise kernel evaluation K_theta(x, y) for arbitrary points.
double kernel_entry(const HyperParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                    const Eigen::Ref<const Eigen::RowVectorXd>& y);

// Cross-covariance vector K_theta(q) with entries K_theta(q, x_j) over the
// dataset, streamed in tiles.
Eigen::VectorXd kernel_cross(const KernelOperator& op,
                             const Eigen::Ref<const Eigen::RowVectorXd>& query);

// Dense materializations for small instances (tests, determinant target,
// quadrature references).
Eigen::MatrixXd dense_K(const KernelOperator& op);
Eigen::MatrixXd dense_A(const KernelOperator& op);
Eigen::MatrixXd dense_sq_dist(const Dataset& data);

}  // namespace gphmc
