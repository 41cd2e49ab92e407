#include "gphmc/nystrom.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <limits>
#include <stdexcept>

namespace gphmc {

NystromPreconditioner nystrom_factorize(const LinearOperator& kernel_op, int rank,
                                        std::mt19937_64& rng, int oversample) {
    const Eigen::Index n = kernel_op.size;
    if (rank < 1 || rank > n)
        throw std::invalid_argument("nystrom_factorize: rank must be in [1, N]");
    const Eigen::Index sketch = std::min<Eigen::Index>(rank + std::max(oversample, 0), n);

    std::normal_distribution<double> normal;
    Eigen::MatrixXd omega(n, sketch);
    for (Eigen::Index j = 0; j < sketch; ++j)
        for (Eigen::Index i = 0; i < n; ++i) omega(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(omega);
    omega = qr.householderQ() * Eigen::MatrixXd::Identity(n, sketch);

    Eigen::MatrixXd y(n, sketch);
    for (Eigen::Index j = 0; j < sketch; ++j) y.col(j) = kernel_op.apply(omega.col(j));

    // Stabilizing shift: a small multiple of machine epsilon at the sketch's
    // trace scale, increased if the Gram factorization still fails.
    double nu = std::numeric_limits<double>::epsilon() * y.norm();
    if (nu == 0.0) nu = std::numeric_limits<double>::epsilon();
    Eigen::MatrixXd b;
    for (int attempt = 0;; ++attempt) {
        const Eigen::MatrixXd y_nu = y + nu * omega;
        Eigen::MatrixXd gram = omega.transpose() * y_nu;
        gram = 0.5 * (gram + gram.transpose()).eval();
        Eigen::LLT<Eigen::MatrixXd> llt(gram);
        if (llt.info() == Eigen::Success) {
            b = llt.matrixL().solve(y_nu.transpose()).transpose();
            break;
        }
        if (attempt >= 6)
            throw std::runtime_error("nystrom_factorize: Gram factorization failed");
        nu *= 100.0;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU);
    const int keep = static_cast<int>(std::min<Eigen::Index>(rank, svd.singularValues().size()));
    NystromPreconditioner out;
    out.rank = keep;
    out.factor = svd.matrixU().leftCols(keep);
    out.eigenvalues =
        (svd.singularValues().head(keep).array().square() - nu).max(0.0).matrix();
    return out;
}

Eigen::VectorXd woodbury_apply(const NystromPreconditioner& precond, double sigma_sq,
                               double shift, const Eigen::Ref<const Eigen::VectorXd>& v) {
    const double beta = sigma_sq + shift;
    if (beta <= 0.0) throw std::invalid_argument("woodbury_apply: sigma_sq + shift must be > 0");
    if (precond.rank == 0) return v / beta;
    const Eigen::VectorXd t = precond.factor.transpose() * v;
    const Eigen::ArrayXd scale = precond.eigenvalues.array() / (precond.eigenvalues.array() + beta);
    return (v - precond.factor * (scale * t.array()).matrix()) / beta;
}

PrecondFn woodbury_preconditioner(const NystromPreconditioner& precond, double sigma_sq,
                                  double shift) {
    return [&precond, sigma_sq, shift](const Eigen::Ref<const Eigen::VectorXd>& v) {
        return woodbury_apply(precond, sigma_sq, shift, v);
    };
}

ShiftPrecondFactory woodbury_factory(const NystromPreconditioner& precond, double sigma_sq) {
    return [&precond, sigma_sq](double shift) {
        return woodbury_preconditioner(precond, sigma_sq, shift);
    };
}

}  // namespace gphmc
