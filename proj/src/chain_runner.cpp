#include "gphmc/chain_runner.hpp"

#include <atomic>
#include <chrono>
#include <thread>

#include "gphmc/errors.hpp"

namespace gphmc {

namespace {

using Clock = std::chrono::steady_clock;

struct ChainWorkspace {
    ChainTrace main;
    ChainTrace warmup;
};

void resize_trace(ChainTrace& trace, int steps, Eigen::Index n, bool with_initial) {
    trace.thetas.resize(steps + (with_initial ? 1 : 0), n);
    trace.accepted.assign(steps, 0);
    trace.delta_h.setZero(steps);
    trace.phi_iterations.setZero(steps);
    trace.theta_iterations.setZero(steps);
    trace.anderson_iterations.setZero(steps);
    trace.wall_seconds.setZero(steps);
}

void run_one_chain(const TargetModel& target, const RunSpec& spec, int chain_index,
                   ChainWorkspace& out) {
    const Eigen::Index n = target.n();
    std::mt19937_64 rng(spec.seed + static_cast<std::uint64_t>(chain_index));

    Eigen::VectorXd theta0 = spec.theta0
                                 ? *spec.theta0
                                 : Eigen::VectorXd::Constant(n, spec.theta0_fill);
    ExtendedState state(theta0, Eigen::VectorXd::Zero(target.data_size()));

    SolverOptions solver = spec.solver;  // per-chain copy carries the preconditioner
    HMCConfig hmc;
    hmc.n_int = spec.sampler.n_int;
    hmc.mass = spec.sampler.mass;
    hmc.anderson = spec.sampler.anderson;
    hmc.integrator = spec.sampler.kind == SamplerKind::hmc_implicit
                         ? IntegratorKind::implicit_midpoint
                         : IntegratorKind::leapfrog;
    hmc.phi_precond = spec.precond.policy;

    out.main.chain_id = out.warmup.chain_id = chain_index;
    out.main.seed = out.warmup.seed = spec.seed + static_cast<std::uint64_t>(chain_index);
    resize_trace(out.warmup, spec.burn_in.steps, n, false);
    resize_trace(out.main, spec.steps, n, true);

    long updates_done = 0;
    const auto refresh_precond = [&]() {
        if (spec.precond.policy != PrecondPolicy::nystrom) return;
        if (updates_done % spec.precond.refresh != 0) return;
        const KernelOperator op = target.operator_for(state.theta());
        std::mt19937_64 sketch_rng(rng());
        solver.nystrom = std::make_shared<NystromPreconditioner>(
            nystrom_factorize(kernel_only_operator(op),
                              std::min<int>(spec.precond.rank, static_cast<int>(op.size())),
                              sketch_rng));
    };

    const auto run_step = [&](double dt, ChainTrace& trace, int row, bool record_theta_row) {
        const auto t0 = Clock::now();
        refresh_precond();
        GibbsStats gibbs{};
        if (target.kind == TargetKind::pseudofermion) {
            try {
                gibbs_update_phi(state, target, solver, rng, &gibbs);
            } catch (const SolverFailure&) {
                // Keep the previous phi; the step still counts.
            }
        }
        StepReport report;
        if (spec.sampler.kind == SamplerKind::rwm) {
            report = rwm_update(state, dt, target, solver, rng);
        } else {
            hmc.dt = dt;
            report = hmc_update(state, hmc, target, solver, rng);
        }
        ++updates_done;
        const auto t1 = Clock::now();

        trace.accepted[row] = report.accepted ? 1 : 0;
        trace.delta_h[row] = report.delta_h;
        trace.phi_iterations[row] = gibbs.solver_iterations;
        trace.theta_iterations[row] = report.solver_iterations;
        trace.anderson_iterations[row] = report.anderson_iterations;
        trace.wall_seconds[row] = std::chrono::duration<double>(t1 - t0).count();
        if (record_theta_row) trace.thetas.row(row + 1) = state.theta();
        else trace.thetas.row(row) = state.theta();
    };

    for (int step = 0; step < spec.burn_in.steps; ++step)
        run_step(spec.burn_in.dt, out.warmup, step, false);

    out.main.thetas.row(0) = state.theta();
    for (int step = 0; step < spec.steps; ++step)
        run_step(spec.sampler.dt, out.main, step, true);
}

}  // namespace

RunResult run_chains(const TargetModel& target, const RunSpec& spec) {
    if (spec.chains < 1 || spec.steps < 0)
        throw std::invalid_argument("run_chains: need chains >= 1 and steps >= 0");
    const auto t_start = Clock::now();

    std::vector<ChainWorkspace> work(spec.chains);
    std::atomic<int> next{0};
    const auto worker = [&]() {
        for (;;) {
            const int idx = next.fetch_add(1);
            if (idx >= spec.chains) return;
            try {
                run_one_chain(target, spec, idx, work[idx]);
            } catch (const std::exception& e) {
                work[idx].main.chain_id = idx;
                work[idx].main.failed = true;
                work[idx].main.error = e.what();
            }
        }
    };

    int threads = spec.threads > 0 ? spec.threads
                                   : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, spec.chains));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    RunResult result;
    result.chains.reserve(spec.chains);
    for (auto& w : work) result.chains.push_back(std::move(w.main));
    if (spec.burn_in.steps > 0) {
        result.burn_in.reserve(spec.chains);
        for (auto& w : work) result.burn_in.push_back(std::move(w.warmup));
    }
    result.wall_seconds = std::chrono::duration<double>(Clock::now() - t_start).count();
    return result;
}

}  // namespace gphmc
