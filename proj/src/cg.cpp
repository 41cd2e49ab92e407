#include "gphmc/cg.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace gphmc {

CgResult cg_solve(const LinearOperator& op, const Eigen::Ref<const Eigen::VectorXd>& b,
                  const SolveConfig& config) {
    if (config.tol <= 0.0 || config.max_iter < 1)
        throw std::invalid_argument("cg_solve: tol must be > 0 and max_iter >= 1");
    const Eigen::Index n = b.size();
    CgResult result;
    result.x = Eigen::VectorXd::Zero(n);
    const double b_norm = b.norm();
    if (b_norm == 0.0) {
        result.converged = true;
        return result;
    }

    Eigen::VectorXd r = b;
    Eigen::VectorXd z = config.precond ? config.precond(r) : r;
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    double res_norm = b_norm;

    for (int it = 0; it < config.max_iter; ++it) {
        const Eigen::VectorXd ap = op.apply(p);
        const double p_ap = p.dot(ap);
        if (p_ap <= 0.0) break;  // operator not SPD to round-off; report best iterate
        const double alpha = rz / p_ap;
        result.x += alpha * p;
        r -= alpha * ap;
        res_norm = r.norm();
        result.iterations = it + 1;
        if (res_norm <= config.tol * b_norm) {
            result.converged = true;
            break;
        }
        z = config.precond ? config.precond(r) : r;
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    result.rel_residual = res_norm / b_norm;
    return result;
}

namespace {

// Multi-shift CG (single Krylov space, seed system A x = b). The shifted
// residuals satisfy r_p = zeta_p * r, so their norms come for free.
std::vector<CgResult> shifted_cg_shared(const LinearOperator& op,
                                        const Eigen::Ref<const Eigen::VectorXd>& b,
                                        const std::vector<double>& shifts,
                                        const SolveConfig& config) {
    const Eigen::Index n = b.size();
    const std::size_t ns = shifts.size();
    std::vector<CgResult> results(ns);
    const double b_norm = b.norm();
    for (auto& r : results) r.x = Eigen::VectorXd::Zero(n);
    if (b_norm == 0.0) {
        for (auto& r : results) r.converged = true;
        return results;
    }

    Eigen::VectorXd r = b;
    Eigen::VectorXd p = b;
    std::vector<Eigen::VectorXd> p_s(ns, b);
    std::vector<double> zeta(ns, 1.0), zeta_prev(ns, 1.0);
    std::vector<bool> done(ns, false);
    double alpha_prev = 1.0, beta_prev = 0.0;
    double rr = r.squaredNorm();

    for (int it = 0; it < config.max_iter; ++it) {
        const Eigen::VectorXd ap = op.apply(p);
        const double p_ap = p.dot(ap);
        if (p_ap <= 0.0) break;
        const double alpha = rr / p_ap;

        std::vector<double> zeta_next(ns);
        for (std::size_t s = 0; s < ns; ++s) {
            if (done[s]) continue;
            const double denom = alpha * beta_prev * (zeta_prev[s] - zeta[s]) +
                                 zeta_prev[s] * alpha_prev * (1.0 + shifts[s] * alpha);
            zeta_next[s] = zeta[s] * zeta_prev[s] * alpha_prev / denom;
            const double alpha_s = alpha * zeta_next[s] / zeta[s];
            results[s].x += alpha_s * p_s[s];
        }

        r -= alpha * ap;
        const double rr_next = r.squaredNorm();
        const double beta = rr_next / rr;
        const double r_norm = std::sqrt(rr_next);

        bool all_done = true;
        for (std::size_t s = 0; s < ns; ++s) {
            if (done[s]) continue;
            const double beta_s = beta * (zeta_next[s] / zeta[s]) * (zeta_next[s] / zeta[s]);
            p_s[s] = zeta_next[s] * r + beta_s * p_s[s];
            results[s].iterations = it + 1;
            results[s].rel_residual = std::abs(zeta_next[s]) * r_norm / b_norm;
            if (results[s].rel_residual <= config.tol)
                done[s] = true;
            else
                all_done = false;
            zeta_prev[s] = zeta[s];
            zeta[s] = zeta_next[s];
        }

        p = r + beta * p;
        rr = rr_next;
        alpha_prev = alpha;
        beta_prev = beta;
        if (all_done) break;
    }
    for (std::size_t s = 0; s < ns; ++s)
        results[s].converged = results[s].rel_residual <= config.tol;
    return results;
}

}  // namespace

std::vector<CgResult> batched_shifted_solve(const LinearOperator& op,
                                            const Eigen::Ref<const Eigen::VectorXd>& b,
                                            const std::vector<double>& shifts,
                                            const SolveConfig& config,
                                            const ShiftPrecondFactory& precond_factory,
                                            bool shared_krylov) {
    for (double s : shifts)
        if (s < 0.0) throw std::invalid_argument("batched_shifted_solve: shifts must be >= 0");
    if (shared_krylov && !precond_factory && !config.precond)
        return shifted_cg_shared(op, b, shifts, config);

    std::vector<CgResult> results;
    results.reserve(shifts.size());
    for (double shift : shifts) {
        SolveConfig per_shift = config;
        if (precond_factory) per_shift.precond = precond_factory(shift);
        results.push_back(cg_solve(shifted_operator(op, shift), b, per_shift));
    }
    return results;
}

double power_method(const LinearOperator& op, int iters, std::uint64_t seed) {
    if (iters < 1) throw std::invalid_argument("power_method: iters must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(op.size);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
    v.normalize();
    Eigen::VectorXd av;
    for (int it = 0; it < iters; ++it) {
        av = op.apply(v);
        const double norm = av.norm();
        if (norm == 0.0) return 0.0;
        if (it + 1 < iters) v = av / norm;
    }
    return v.dot(av);  // Rayleigh quotient at the final iterate
}

}  // namespace gphmc
