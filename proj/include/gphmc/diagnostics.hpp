#pragma once

#include <Eigen/Core>
#include <vector>

#include "gphmc/chain_trace.hpp"

namespace gphmc {

struct IatConfig {
    double window_constant = 5.0;  // c in the window rule M > c * tau
    double min_length_multiple = 50.0;  // reliability requires N >= this * tau
};

struct IatResult {
    double tau = 1.0;
    Eigen::Index window = 0;
    bool reliable = false;
};

// Integrated autocorrelation time tau = 1 + 2 sum_{j<=M} C(j)/C(0) with the
// windowed autocovariance estimator and the smallest window M obeying
// M > c * tau(M). Affine-invariant in the chain. Throws on constant chains.
IatResult iat_estimate(const Eigen::Ref<const Eigen::VectorXd>& chain,
                       const IatConfig& config = {});

// Moving-window transform: T_i = mean(X_{floor(i/2)} .. X_i), 0-indexed.
Eigen::VectorXd moving_window_mean(const Eigen::Ref<const Eigen::VectorXd>& chain);

// sqrt(Var X) / sqrt(B i / (2 tau)) with the variance estimated on the
// window floor(i/2)..i pooled across the B chains. Twice this value is the
// 95% confidence radius.
double estimator_std(const std::vector<Eigen::VectorXd>& component_chains, Eigen::Index i,
                     double tau);
double estimator_std_from(double window_variance, Eigen::Index n_chains, Eigen::Index i,
                          double tau);

// sup over grid points of |ECDF(samples) - reference CDF|.
double ecdf_sup_error(const Eigen::Ref<const Eigen::VectorXd>& samples,
                      const Eigen::Ref<const Eigen::VectorXd>& grid,
                      const Eigen::Ref<const Eigen::VectorXd>& reference_cdf);

// Total wall time divided by the effective sample count B*L/tau.
double wall_time_per_independent_sample(double wall_seconds, Eigen::Index n_chains,
                                        Eigen::Index chain_length, double tau);

// Per-component IAT aggregates over a batch of traces (failed chains are
// skipped). Component chains are analyzed per chain, then averaged/maxed.
struct IatSummary {
    Eigen::VectorXd mean_tau;  // per component
    Eigen::VectorXd max_tau;
    double mean = 0.0;  // over components and chains
    double max = 0.0;
};
IatSummary iat_summary(const std::vector<ChainTrace>& traces, const IatConfig& config = {});

}  // namespace gphmc
