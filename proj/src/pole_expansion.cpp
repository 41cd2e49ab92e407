#include "gphmc/pole_expansion.hpp"

#include <cmath>
#include <stdexcept>

#include "gphmc/elliptic.hpp"
#include "gphmc/errors.hpp"

namespace gphmc {

PoleExpansion build_pole_expansion(const SpectralBounds& bounds, int n_poles, PoleMode mode) {
    if (!(bounds.min_eig > 0.0) || !(bounds.max_eig >= bounds.min_eig))
        throw std::invalid_argument("pole expansion: need 0 < min_eig <= max_eig");
    if (n_poles < 1) throw std::invalid_argument("pole expansion: n_poles must be >= 1");

    const double m = bounds.min_eig;
    // k^2 = m/M, clamped away from 1 so K(k^2) stays finite when m = M.
    const double k_sq = std::min(m / bounds.max_eig, 1.0 - 1e-12);
    const double kp_sq = 1.0 - k_sq;  // complementary parameter
    const double quarter_period_c = elliptic_K(kp_sq);  // K' = K(1 - k^2)

    // Nodes t_j = i (j - 1/2) K'/N_p are purely imaginary. The imaginary
    // transformation sn(iu|k^2) = i sn(u|k'^2)/cn(u|k'^2), cn(iu|k^2) =
    // 1/cn(u|k'^2), dn(iu|k^2) = dn(u|k'^2)/cn(u|k'^2) turns everything into
    // real evaluations at parameter k'^2:
    //   shift_j  = -w(t_j)^2 = m sn^2/cn^2 > 0
    //   weight_j = (2 K' sqrt(m) / (pi N_p)) dn/cn^2.
    PoleExpansion expansion;
    expansion.mode = mode;
    expansion.weights.resize(n_poles);
    expansion.shifts.resize(n_poles);
    const double prefactor = 2.0 * quarter_period_c * std::sqrt(m) / (M_PI * n_poles);
    for (int j = 1; j <= n_poles; ++j) {
        const double u = (j - 0.5) * quarter_period_c / n_poles;
        const auto [sn, cn, dn] = jacobi_elliptic(u, kp_sq, k_sq);
        expansion.shifts[j - 1] = m * (sn / cn) * (sn / cn);
        expansion.weights[j - 1] = prefactor * dn / (cn * cn);
    }
    if (!expansion.weights.allFinite() || !(expansion.shifts.array() > 0.0).all())
        throw NumericalError("pole expansion: degenerate weights or shifts");
    return expansion;
}

Eigen::VectorXd apply_inv_sqrt(const LinearOperator& op,
                               const Eigen::Ref<const Eigen::VectorXd>& v,
                               const PoleExpansion& expansion, const SolveConfig& config,
                               const ShiftPrecondFactory& precond_factory,
                               bool shared_krylov, PoleApplyStats* stats) {
    std::vector<double> shifts(expansion.shifts.data(),
                               expansion.shifts.data() + expansion.shifts.size());
    const auto solves =
        batched_shifted_solve(op, v, shifts, config, precond_factory, shared_krylov);

    PoleApplyStats local;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
    for (std::size_t p = 0; p < solves.size(); ++p) {
        local.total_iterations += solves[p].iterations;
        local.max_iterations = std::max(local.max_iterations, solves[p].iterations);
        if (!solves[p].converged) {
            if (stats) {
                stats->converged = false;
                stats->total_iterations = local.total_iterations;
            }
            throw SolverFailure("pole expansion: shifted solve " + std::to_string(p) +
                                    " missed tolerance",
                                solves[p].rel_residual, solves[p].iterations);
        }
        out += expansion.weights[static_cast<Eigen::Index>(p)] * solves[p].x;
    }
    if (stats) *stats = local;
    return out;
}

Eigen::VectorXd apply_sqrt(const LinearOperator& op,
                           const Eigen::Ref<const Eigen::VectorXd>& v,
                           const PoleExpansion& expansion, const SolveConfig& config,
                           const ShiftPrecondFactory& precond_factory, bool shared_krylov,
                           PoleApplyStats* stats) {
    return op.apply(
        apply_inv_sqrt(op, v, expansion, config, precond_factory, shared_krylov, stats));
}

}  // namespace gphmc
