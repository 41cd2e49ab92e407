#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

namespace gphmc {

struct AndersonConfig {
    int history = 10;       // truncation depth k
    int max_iter = 200;
    double tol = 1e-10;     // on ||x - g(x)|| relative to 1 + ||x0||
    double ls_regularization = 0.0;  // Tikhonov weight for the difference LS
};

enum class AndersonStatus { converged, max_iterations, diverged };

struct AndersonResult {
    Eigen::VectorXd x;  // best iterate (the fixed point when converged)
    int iterations = 0;
    std::vector<double> residual_history;
    AndersonStatus status = AndersonStatus::max_iterations;
    bool converged() const { return status == AndersonStatus::converged; }
};

// Anderson-accelerated fixed-point iteration for x = g(x). Each step picks
// combination weights alpha minimizing ||sum_i alpha_i f(x_{n-i})||^2 subject
// to sum alpha_i = 1 over the last <= k residuals f(x) = x - g(x), then sets
// x_n = sum_i alpha_i g(x_{n-i}). The constraint is eliminated through the
// residual-difference formulation; the reduced least squares is solved by a
// rank-revealing QR with column dropping (or Tikhonov-regularized normal
// equations when ls_regularization > 0). Exactly one evaluation of g per
// iterate. With history = 1 the method is plain fixed-point iteration.
AndersonResult anderson_solve(
    const std::function<Eigen::VectorXd(const Eigen::Ref<const Eigen::VectorXd>&)>& g,
    const Eigen::VectorXd& x0, const AndersonConfig& config);

}  // namespace gphmc
