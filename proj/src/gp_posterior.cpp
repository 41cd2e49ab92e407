#include "gphmc/gp_posterior.hpp"

#include <cmath>
#include <stdexcept>

#include "gphmc/chebyshev.hpp"
#include "gphmc/diagnostics.hpp"
#include "gphmc/errors.hpp"

namespace gphmc {

PredictionGrid regular_grid(int dim, int per_axis) {
    if (dim < 1 || per_axis < 1) throw std::invalid_argument("regular_grid: bad shape");
    Eigen::Index total = 1;
    for (int j = 0; j < dim; ++j) total *= per_axis;
    Eigen::VectorXd axis = per_axis == 1
                               ? Eigen::VectorXd(Eigen::VectorXd::Zero(1))
                               : Eigen::VectorXd(Eigen::VectorXd::LinSpaced(per_axis, -1.0, 1.0));
    PredictionGrid grid;
    grid.points.resize(total, dim);
    for (Eigen::Index idx = 0; idx < total; ++idx) {
        Eigen::Index rem = idx;
        for (int j = 0; j < dim; ++j) {
            grid.points(idx, j) = axis[rem % per_axis];
            rem /= per_axis;
        }
    }
    return grid;
}

namespace {

SolveConfig configured_cg(const TargetModel&, const SolverOptions& solver, double sigma_sq) {
    SolveConfig config = solver.cg;
    if (solver.nystrom)
        config.precond = woodbury_preconditioner(*solver.nystrom, sigma_sq, 0.0);
    return config;
}

}  // namespace

Eigen::VectorXd predictive_mean(const TargetModel& model,
                                const Eigen::Ref<const Eigen::VectorXd>& theta,
                                const PredictionGrid& grid, const SolverOptions& solver) {
    const KernelOperator op = model.operator_for(theta);
    const CgResult sol = cg_solve(as_operator(op), model.data->observations,
                                  configured_cg(model, solver, op.sigma_sq));
    if (!sol.converged)
        throw SolverFailure("predictive_mean: A x = y solve missed tolerance",
                            sol.rel_residual, sol.iterations);
    Eigen::VectorXd out(grid.size());
    for (Eigen::Index q = 0; q < grid.size(); ++q)
        out[q] = kernel_cross(op, grid.points.row(q)).dot(sol.x);
    return out;
}

namespace {

double conditional_variance_impl(const KernelOperator& op, const SolveConfig& config,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& query,
                                 int* clamp_warnings) {
    const Eigen::VectorXd k_cross = kernel_cross(op, query);
    const CgResult sol = cg_solve(as_operator(op), k_cross, config);
    if (!sol.converged)
        throw SolverFailure("conditional_variance: solve missed tolerance", sol.rel_residual,
                            sol.iterations);
    const double prior_var = std::exp(2.0 * chebyshev_field(op.params, query));
    const double var = prior_var - k_cross.dot(sol.x);
    if (var < -1e-6 && clamp_warnings) ++(*clamp_warnings);
    return std::max(var, 0.0);
}

}  // namespace

double conditional_variance(const TargetModel& model,
                            const Eigen::Ref<const Eigen::VectorXd>& theta,
                            const Eigen::Ref<const Eigen::RowVectorXd>& query,
                            const SolverOptions& solver) {
    const KernelOperator op = model.operator_for(theta);
    return conditional_variance_impl(op, configured_cg(model, solver, op.sigma_sq), query,
                                     nullptr);
}

Eigen::VectorXd conditional_variances(const TargetModel& model,
                                      const Eigen::Ref<const Eigen::VectorXd>& theta,
                                      const PredictionGrid& grid, const SolverOptions& solver,
                                      int* clamp_warnings) {
    const KernelOperator op = model.operator_for(theta);
    const SolveConfig config = configured_cg(model, solver, op.sigma_sq);
    Eigen::VectorXd out(grid.size());
    for (Eigen::Index q = 0; q < grid.size(); ++q)
        out[q] = conditional_variance_impl(op, config, grid.points.row(q), clamp_warnings);
    return out;
}

PosteriorSummary total_variance_summary(const TargetModel& model,
                                        const std::vector<std::vector<Eigen::VectorXd>>& samples,
                                        const PredictionGrid& grid,
                                        const SolverOptions& solver) {
    Eigen::Index total_draws = 0;
    for (const auto& chain : samples) total_draws += static_cast<Eigen::Index>(chain.size());
    if (total_draws < 2)
        throw std::invalid_argument("total_variance_summary: need at least 2 samples");

    const Eigen::Index n_points = grid.size();
    PosteriorSummary summary;
    summary.mean.setZero(n_points);
    summary.expected_var.setZero(n_points);
    summary.iat.setZero(n_points);
    summary.ci_radius.setZero(n_points);

    // Per-sample conditional means, stored to form the variance-of-mean term
    // and the per-point mean chains for IAT / CI diagnostics.
    std::vector<Eigen::MatrixXd> mean_chains;  // per chain: draws x points
    mean_chains.reserve(samples.size());
    Eigen::VectorXd mean_sq = Eigen::VectorXd::Zero(n_points);
    for (const auto& chain : samples) {
        Eigen::MatrixXd rows(static_cast<Eigen::Index>(chain.size()), n_points);
        for (std::size_t s = 0; s < chain.size(); ++s) {
            const Eigen::VectorXd m = predictive_mean(model, chain[s], grid, solver);
            const Eigen::VectorXd v =
                conditional_variances(model, chain[s], grid, solver, &summary.clamp_warnings);
            rows.row(static_cast<Eigen::Index>(s)) = m.transpose();
            summary.mean += m;
            mean_sq += m.cwiseProduct(m);
            summary.expected_var += v;
        }
        mean_chains.push_back(std::move(rows));
    }
    const double inv_draws = 1.0 / static_cast<double>(total_draws);
    summary.mean *= inv_draws;
    summary.expected_var *= inv_draws;
    // Unbiased empirical variance of the conditional mean over draws.
    summary.variance_of_mean =
        ((mean_sq * inv_draws - summary.mean.cwiseProduct(summary.mean)) *
         (static_cast<double>(total_draws) / static_cast<double>(total_draws - 1)))
            .cwiseMax(0.0);
    summary.total_std = (summary.expected_var + summary.variance_of_mean).cwiseSqrt();

    // Average the per-point mean chain over the batch dimension, then compute
    // IAT and the 95% CI radius 2 sqrt(Var X) / sqrt(B L / tau).
    const Eigen::Index min_len = [&] {
        Eigen::Index len = mean_chains.front().rows();
        for (const auto& m : mean_chains) len = std::min(len, m.rows());
        return len;
    }();
    const Eigen::Index n_chains = static_cast<Eigen::Index>(mean_chains.size());
    for (Eigen::Index q = 0; q < n_points; ++q) {
        Eigen::VectorXd averaged = Eigen::VectorXd::Zero(min_len);
        double var_x = 0.0, mean_x = 0.0;
        Eigen::Index count = 0;
        for (const auto& m : mean_chains) {
            averaged += m.col(q).head(min_len);
            for (Eigen::Index t = 0; t < m.rows(); ++t) {
                mean_x += m(t, q);
                var_x += m(t, q) * m(t, q);
                ++count;
            }
        }
        averaged /= static_cast<double>(n_chains);
        mean_x /= static_cast<double>(count);
        var_x = std::max(0.0, var_x / static_cast<double>(count) - mean_x * mean_x);
        double tau = 1.0;
        if (min_len >= 2) {
            try {
                tau = iat_estimate(averaged).tau;
            } catch (const std::domain_error&) {
                tau = 1.0;  // constant chain: effectively uncorrelated
            }
        }
        summary.iat[q] = tau;
        summary.ci_radius[q] =
            2.0 * std::sqrt(var_x) /
            std::sqrt(static_cast<double>(n_chains) * static_cast<double>(min_len) /
                      std::max(tau, 1e-300));
    }
    return summary;
}

}  // namespace gphmc
