#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gphmc/chain_trace.hpp"
#include "gphmc/samplers.hpp"
#include "gphmc/target.hpp"

namespace gphmc {

enum class SamplerKind { rwm, hmc_leapfrog, hmc_implicit };

struct SamplerSpec {
    SamplerKind kind = SamplerKind::hmc_leapfrog;
    double dt = 0.1;
    int n_int = 3;
    MassMatrix mass = MassMatrix::identity();
    AndersonConfig anderson;
};

struct BurnInSpec {
    int steps = 0;
    double dt = 0.01;
};

struct PrecondSpec {
    PrecondPolicy policy = PrecondPolicy::none;
    int rank = 5;
    int refresh = 2;  // rebuild after this many accept-reject updates
};

struct RunSpec {
    SamplerSpec sampler;
    BurnInSpec burn_in;
    int chains = 1;
    int steps = 100;
    std::uint64_t seed = 0;
    PrecondSpec precond;
    SolverOptions solver;
    std::optional<Eigen::VectorXd> theta0;  // default: all components 0.01
    double theta0_fill = 0.01;
    int threads = 0;  // 0 = hardware concurrency
};

struct RunResult {
    std::vector<ChainTrace> chains;
    std::vector<ChainTrace> burn_in;  // empty when no burn-in configured
    double wall_seconds = 0.0;
};

// Runs B independent chains of the Algorithm-1 outer loop (Gibbs phi update,
// then one theta update per step). Chain c uses RNG seed base_seed + c; chains
// never share mutable state, so traces are reproducible regardless of the
// thread schedule. A chain that throws is marked failed and excluded from
// aggregates; the others proceed.
RunResult run_chains(const TargetModel& target, const RunSpec& spec);

}  // namespace gphmc
