#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

#include "gphmc/hyperparams.hpp"

namespace gphmc {

namespace detail {
inline double checked_unit_coordinate(double x) {
    if (std::abs(x) > 1.0 + 1e-12)
        throw std::domain_error("chebyshev: coordinate outside [-1,1]");
    return std::clamp(x, -1.0, 1.0);
}
}  // namespace detail

// First-kind Chebyshev values T_0(x)..T_{m-1}(x) by the three-term
// recurrence T_{n+1} = 2 x T_n - T_{n-1}.
template <typename Scalar>
void chebyshev_values(Scalar x, Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& out) {
    const Eigen::Index m = out.size();
    if (m == 0) return;
    out[0] = Scalar(1);
    if (m > 1) out[1] = x;
    for (Eigen::Index k = 2; k < m; ++k) out[k] = Scalar(2) * x * out[k - 1] - out[k - 2];
}

// Tensor-product Chebyshev row for one point: entry I = (i_1,...,i_d) equals
// T_{i_1}(x^1)...T_{i_d}(x^d), flattened with the first axis fastest.
inline Eigen::VectorXd chebyshev_tensor_row(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                            int n_cheb) {
    const int d = static_cast<int>(x.size());
    Eigen::MatrixXd per_axis(n_cheb, d);
    for (int j = 0; j < d; ++j) {
        Eigen::VectorXd col(n_cheb);
        chebyshev_values(detail::checked_unit_coordinate(x[j]), col);
        per_axis.col(j) = col;
    }
    Eigen::Index total = 1;
    for (int j = 0; j < d; ++j) total *= n_cheb;
    Eigen::VectorXd row = Eigen::VectorXd::Ones(total);
    Eigen::Index block = 1;  // stride of axis j in the flattened tensor
    for (int j = 0; j < d; ++j) {
        for (Eigen::Index idx = 0; idx < total; ++idx)
            row[idx] *= per_axis((idx / block) % n_cheb, j);
        block *= n_cheb;
    }
    return row;
}

// N x n_cheb^d matrix of tensor rows for a point set; C_theta(x_i) = (B * cheb)_i.
inline Eigen::MatrixXd chebyshev_basis(const Eigen::Ref<const Eigen::MatrixXd>& points,
                                       int n_cheb, int dim) {
    if (points.cols() != dim)
        throw std::invalid_argument("chebyshev_basis: point dimension mismatch");
    Eigen::Index total = 1;
    for (int j = 0; j < dim; ++j) total *= n_cheb;
    Eigen::MatrixXd basis(points.rows(), total);
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        basis.row(i) = chebyshev_tensor_row(points.row(i), n_cheb).transpose();
    return basis;
}

// C_theta(x) = sum_I Theta_I T_I(x) for a single point.
inline double chebyshev_field(const HyperParams& params,
                              const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    if (x.size() != params.dim)
        throw std::invalid_argument("chebyshev_field: point dimension mismatch");
    return chebyshev_tensor_row(x, params.n_cheb).dot(params.cheb);
}

}  // namespace gphmc
