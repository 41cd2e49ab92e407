#pragma once

#include <Eigen/Core>
#include <vector>

#include "gphmc/target.hpp"

namespace gphmc {

// Query points in [-1,1]^d, one per row.
struct PredictionGrid {
    Eigen::MatrixXd points;
    Eigen::Index size() const { return points.rows(); }
};

// Regular tensor grid over [-1,1]^d with `per_axis` points per axis.
PredictionGrid regular_grid(int dim, int per_axis);

// Posterior GP mean at every grid point for one hyperparameter sample:
// mean(q) = K_theta(q)^T A^{-1} y, reusing a single linear solve.
Eigen::VectorXd predictive_mean(const TargetModel& model,
                                const Eigen::Ref<const Eigen::VectorXd>& theta,
                                const PredictionGrid& grid, const SolverOptions& solver);

// Conditional variance Var(f(q) | theta) = K(q,q) - K_theta(q)^T A^{-1}
// K_theta(q); round-off negatives are clamped at zero (a warning counter
// tracks clamps beyond 1e-6, which indicate under-converged solves).
double conditional_variance(const TargetModel& model,
                            const Eigen::Ref<const Eigen::VectorXd>& theta,
                            const Eigen::Ref<const Eigen::RowVectorXd>& query,
                            const SolverOptions& solver);

// One CG per query point, all sharing the preconditioner.
Eigen::VectorXd conditional_variances(const TargetModel& model,
                                      const Eigen::Ref<const Eigen::VectorXd>& theta,
                                      const PredictionGrid& grid, const SolverOptions& solver,
                                      int* clamp_warnings = nullptr);

// Law-of-total-variance aggregation over hyperparameter samples:
//   Var(f(q)) = E[Var(f(q)|theta)] + Var(E[f(q)|theta]).
struct PosteriorSummary {
    Eigen::VectorXd mean;             // E over samples of the conditional mean
    Eigen::VectorXd expected_var;     // E[Var | theta]
    Eigen::VectorXd variance_of_mean; // Var[E | theta]
    Eigen::VectorXd total_std;        // sqrt of the term sum
    Eigen::VectorXd iat;              // per point, over the mean chain
    Eigen::VectorXd ci_radius;        // 2 * estimator std of the mean
    int clamp_warnings = 0;
};

// `samples` holds thinned theta draws in chain order (outer: chains,
// inner: per-chain thinned samples). Needs at least 2 draws in total.
PosteriorSummary total_variance_summary(const TargetModel& model,
                                        const std::vector<std::vector<Eigen::VectorXd>>& samples,
                                        const PredictionGrid& grid,
                                        const SolverOptions& solver);

}  // namespace gphmc
