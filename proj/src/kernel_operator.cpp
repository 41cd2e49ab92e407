#include "gphmc/kernel_operator.hpp"

#include <cmath>
#include <stdexcept>

#include "gphmc/chebyshev.hpp"
#include "gphmc/errors.hpp"

namespace gphmc {

namespace {

// Squared distances between a row tile and a column tile of the point set.
Eigen::MatrixXd tile_sq_dist(const Eigen::MatrixXd& pts, Eigen::Index r0, Eigen::Index nr,
                             Eigen::Index c0, Eigen::Index nc) {
    const auto rows = pts.middleRows(r0, nr);
    const auto cols = pts.middleRows(c0, nc);
    Eigen::MatrixXd d2 = (-2.0 * rows * cols.transpose()).eval();
    d2.colwise() += rows.rowwise().squaredNorm();
    d2.rowwise() += cols.rowwise().squaredNorm().transpose();
    return d2.cwiseMax(0.0);
}

}  // namespace

KernelOperator make_kernel_operator(const Dataset& data, const Eigen::MatrixXd& basis,
                                    const HyperParams& params, Eigen::Index tile) {
    if (tile < 1) throw std::invalid_argument("kernel operator: tile size must be positive");
    if (basis.rows() != data.size() || basis.cols() != params.cheb.size())
        throw std::invalid_argument("kernel operator: basis shape mismatch");
    KernelOperator op;
    op.data = &data;
    op.basis = &basis;
    op.params = params;
    op.amplitude = (basis * params.cheb).array().exp();
    op.sigma_sq = params.sigma_sq();
    op.two_ell_sq = params.two_ell_sq();
    op.tile = tile;
    if (!op.amplitude.allFinite())
        throw NumericalError("kernel operator: exp(C_theta) overflowed; extreme coefficients");
    return op;
}

namespace {

// Shared tiled driver. Computes out = K z and, when out_r2 is non-null,
// out_r2 = (K .* r^2) z in the same pass.
void kernel_matvec(const KernelOperator& op, const Eigen::Ref<const Eigen::VectorXd>& z,
                   Eigen::VectorXd& out, Eigen::VectorXd* out_r2) {
    const Eigen::Index n = op.size();
    if (z.size() != n) throw std::invalid_argument("apply: vector length mismatch");
    const Eigen::MatrixXd& pts = op.data->points;
    const Eigen::VectorXd zg = op.amplitude.cwiseProduct(z);
    const double inv_s = 1.0 / op.two_ell_sq;
    out.setZero(n);
    if (out_r2) out_r2->setZero(n);
    const Eigen::Index tile = op.tile;
    const Eigen::Index n_row_tiles = (n + tile - 1) / tile;

#pragma omp parallel for schedule(dynamic, 1) if (n_row_tiles > 1)
    for (Eigen::Index rt = 0; rt < n_row_tiles; ++rt) {
        const Eigen::Index r0 = rt * tile;
        const Eigen::Index nr = std::min(tile, n - r0);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(nr);
        Eigen::VectorXd acc_r2;
        if (out_r2) acc_r2 = Eigen::VectorXd::Zero(nr);
        for (Eigen::Index c0 = 0; c0 < n; c0 += tile) {
            const Eigen::Index nc = std::min(tile, n - c0);
            const Eigen::MatrixXd d2 = tile_sq_dist(pts, r0, nr, c0, nc);
            const Eigen::MatrixXd g = (-d2.array() * inv_s).exp();
            acc.noalias() += g * zg.segment(c0, nc);
            if (out_r2) acc_r2.noalias() += g.cwiseProduct(d2) * zg.segment(c0, nc);
        }
        out.segment(r0, nr) = op.amplitude.segment(r0, nr).cwiseProduct(acc);
        if (out_r2)
            out_r2->segment(r0, nr) = op.amplitude.segment(r0, nr).cwiseProduct(acc_r2);
    }
}

}  // namespace

Eigen::VectorXd apply_K(const KernelOperator& op, const Eigen::Ref<const Eigen::VectorXd>& z) {
    Eigen::VectorXd out;
    kernel_matvec(op, z, out, nullptr);
    if (!out.allFinite()) throw NumericalError("apply_K: non-finite output");
    return out;
}

Eigen::VectorXd apply_A(const KernelOperator& op, const Eigen::Ref<const Eigen::VectorXd>& z) {
    Eigen::VectorXd out;
    kernel_matvec(op, z, out, nullptr);
    out += op.sigma_sq * z;
    if (!out.allFinite()) throw NumericalError("apply_A: non-finite output");
    return out;
}

KernelMatvecPair apply_K_with_r2(const KernelOperator& op,
                                 const Eigen::Ref<const Eigen::VectorXd>& z) {
    KernelMatvecPair pair;
    kernel_matvec(op, z, pair.kz, &pair.kr2z);
    if (!pair.kz.allFinite() || !pair.kr2z.allFinite())
        throw NumericalError("apply_K_with_r2: non-finite output");
    return pair;
}

Eigen::VectorXd quad_form_grad(const KernelOperator& op,
                               const Eigen::Ref<const Eigen::VectorXd>& z,
                               const KernelMatvecPair& pair) {
    const HyperParams& hp = op.params;
    Eigen::VectorXd grad(hp.n());
    grad.head(hp.cheb.size()).noalias() =
        2.0 * op.basis->transpose() * z.cwiseProduct(pair.kz);
    Eigen::Index k = hp.cheb.size();
    if (hp.infer_sigma)
        grad[k++] = 2.0 * hp.sigma() * std::exp(hp.log_sigma) * z.squaredNorm();
    if (hp.infer_ell) {
        const double s = op.two_ell_sq;
        grad[k++] = std::exp(hp.log_ell) / (s * s) * z.dot(pair.kr2z);
    }
    return grad;
}

Eigen::VectorXd quad_form_grad(const KernelOperator& op,
                               const Eigen::Ref<const Eigen::VectorXd>& z) {
    KernelMatvecPair pair;
    if (op.params.infer_ell) {
        pair = apply_K_with_r2(op, z);
    } else {
        pair.kz = apply_K(op, z);
    }
    return quad_form_grad(op, z, pair);
}

double kernel_entry(const HyperParams& params, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                    const Eigen::Ref<const Eigen::RowVectorXd>& y) {
    const double cx = chebyshev_field(params, x);
    const double cy = chebyshev_field(params, y);
    const double d2 = (x - y).squaredNorm();
    return std::exp(cx + cy - d2 / params.two_ell_sq());
}

Eigen::VectorXd kernel_cross(const KernelOperator& op,
                             const Eigen::Ref<const Eigen::RowVectorXd>& query) {
    const Eigen::Index n = op.size();
    const double amp_q = std::exp(chebyshev_field(op.params, query));
    const double inv_s = 1.0 / op.two_ell_sq;
    Eigen::VectorXd out(n);
    for (Eigen::Index r0 = 0; r0 < n; r0 += op.tile) {
        const Eigen::Index nr = std::min(op.tile, n - r0);
        const auto rows = op.data->points.middleRows(r0, nr);
        Eigen::VectorXd d2 = (rows.rowwise() - query).rowwise().squaredNorm();
        out.segment(r0, nr) =
            amp_q * op.amplitude.segment(r0, nr).array() * (-d2.array() * inv_s).exp();
    }
    return out;
}

Eigen::MatrixXd dense_sq_dist(const Dataset& data) {
    const Eigen::MatrixXd& pts = data.points;
    Eigen::MatrixXd d2 = (-2.0 * pts * pts.transpose()).eval();
    d2.colwise() += pts.rowwise().squaredNorm();
    d2.rowwise() += pts.rowwise().squaredNorm().transpose();
    return d2.cwiseMax(0.0);
}

Eigen::MatrixXd dense_K(const KernelOperator& op) {
    Eigen::MatrixXd d2 = dense_sq_dist(*op.data);
    Eigen::MatrixXd k = (-d2.array() / op.two_ell_sq).exp();
    return op.amplitude.asDiagonal() * k * op.amplitude.asDiagonal();
}

Eigen::MatrixXd dense_A(const KernelOperator& op) {
    Eigen::MatrixXd a = dense_K(op);
    a.diagonal().array() += op.sigma_sq;
    return a;
}

}  // namespace gphmc
