#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace gphmc {

// Per-chain record of a sampling run: row t of `thetas` is the state after
// t outer steps (row 0 is the initial point), so a T-step run stores T+1
// theta records. Wall times are kept separate from the deterministic fields
// when serialized.
struct ChainTrace {
    int chain_id = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd thetas;           // (T+1) x n
    std::vector<char> accepted;       // T entries
    Eigen::VectorXd delta_h;          // T
    Eigen::VectorXi phi_iterations;   // T, pole-expansion CG iterations
    Eigen::VectorXi theta_iterations; // T, CG iterations in the theta update
    Eigen::VectorXi anderson_iterations;  // T
    Eigen::VectorXd wall_seconds;     // T, nonnegative
    bool failed = false;
    std::string error;

    Eigen::Index steps() const { return delta_h.size(); }
    double acceptance_rate() const {
        if (accepted.empty()) return 0.0;
        double total = 0.0;
        for (char a : accepted) total += a ? 1.0 : 0.0;
        return total / static_cast<double>(accepted.size());
    }
};

}  // namespace gphmc
