#include "gphmc/quadrature.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

#include "gphmc/errors.hpp"

namespace gphmc {

namespace {

Eigen::VectorXd trapezoid_weights(Eigen::Index n, double h) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, h);
    w[0] = w[n - 1] = 0.5 * h;
    return w;
}

}  // namespace

QuadratureReference quadrature_reference(const TargetModel& target,
                                         const QuadratureGridSpec& spec) {
    if (target.n() != 2)
        throw std::invalid_argument(
            "quadrature_reference: supported only for exactly two inferred hyperparameters");
    if (spec.points < 2 || !(spec.hi > spec.lo))
        throw std::invalid_argument("quadrature_reference: bad grid spec");
    if (target.data_size() > target.dense_limit)
        throw std::invalid_argument("quadrature_reference: dataset exceeds dense limit");

    const Eigen::Index g = spec.points;
    QuadratureReference ref;
    ref.axis0 = Eigen::VectorXd::LinSpaced(g, spec.lo, spec.hi);
    ref.axis1 = ref.axis0;
    const double h = (spec.hi - spec.lo) / static_cast<double>(g - 1);
    const Eigen::VectorXd w = trapezoid_weights(g, h);

    // log P(theta) = -1/2 log|A| - 1/2 y^T A^{-1} y - S(theta), up to a constant.
    const Eigen::VectorXd& y = target.data->observations;
    Eigen::MatrixXd log_density(g, g);
    for (Eigen::Index i = 0; i < g; ++i) {
        for (Eigen::Index j = 0; j < g; ++j) {
            Eigen::Vector2d theta(ref.axis0[i], ref.axis1[j]);
            const KernelOperator op = target.operator_for(theta);
            Eigen::MatrixXd a = dense_A(op);
            Eigen::LLT<Eigen::MatrixXd> llt(a);
            if (llt.info() != Eigen::Success)
                throw NumericalError("quadrature_reference: factorization failed on grid");
            const double log_det =
                2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
            double v = -0.5 * log_det - 0.5 * y.dot(llt.solve(y));
            if (target.prior.neg_log_density)
                v -= target.prior.neg_log_density(theta);
            log_density(i, j) = v;
        }
    }

    const double peak = log_density.maxCoeff();
    ref.density = (log_density.array() - peak).exp();
    const double mass = w.dot(ref.density * w);
    ref.density /= mass;

    // Marginals by trapezoid over the other axis; CDFs by cumulative
    // trapezoid along the axis, pinned to end at exactly 1.
    ref.marginal_cdf.resize(2, g);
    for (int axis = 0; axis < 2; ++axis) {
        Eigen::VectorXd marginal =
            axis == 0 ? Eigen::VectorXd(ref.density * w) : Eigen::VectorXd(ref.density.transpose() * w);
        ref.means[axis] = w.dot(ref.axis0.cwiseProduct(marginal));
        Eigen::VectorXd cdf(g);
        cdf[0] = 0.0;
        for (Eigen::Index i = 1; i < g; ++i)
            cdf[i] = cdf[i - 1] + 0.5 * h * (marginal[i - 1] + marginal[i]);
        ref.marginal_cdf.row(axis) = (cdf / cdf[g - 1]).transpose();
    }
    return ref;
}

}  // namespace gphmc
