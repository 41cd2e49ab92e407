#include "gphmc/experiments.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gphmc/diagnostics.hpp"
#include "gphmc/errors.hpp"
#include "gphmc/gp_posterior.hpp"
#include "gphmc/numeric_format.hpp"
#include "gphmc/quadrature.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gphmc {

namespace fs = std::filesystem;

ExperimentKind experiment_kind_from(const std::string& name) {
    if (name == "verify") return ExperimentKind::verify;
    if (name == "scale") return ExperimentKind::scale;
    if (name == "sample") return ExperimentKind::sample;
    if (name == "predict") return ExperimentKind::predict;
    if (name == "diagnose") return ExperimentKind::diagnose;
    throw ConfigError("unknown experiment '" + name + "'");
}

namespace {

// Exclusive ownership of an output directory for the process lifetime.
class DirectoryLock {
public:
    explicit DirectoryLock(const fs::path& dir) : path_(dir / ".lock") {
        const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0)
            throw IoError("output directory '" + dir.string() +
                          "' is locked by another run (remove .lock if stale)");
        const std::string pid = std::to_string(::getpid()) + "\n";
        [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
        ::close(fd);
    }
    ~DirectoryLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

private:
    fs::path path_;
};

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    return out;
}

SamplerKind sampler_kind_from(const std::string& name) {
    if (name == "rwm") return SamplerKind::rwm;
    if (name == "hmc-leapfrog") return SamplerKind::hmc_leapfrog;
    if (name == "hmc-implicit") return SamplerKind::hmc_implicit;
    throw ConfigError("sampler.kind must be rwm, hmc-leapfrog or hmc-implicit; got '" + name +
                      "'");
}

std::vector<long> parse_int_list(const std::string& text, const std::string& key) {
    std::vector<long> values;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            values.push_back(std::stol(item));
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "': bad integer list entry '" + item + "'");
        }
    }
    if (values.empty()) throw ConfigError("key '" + key + "': empty list");
    return values;
}

}  // namespace

Dataset dataset_from_config(const ExperimentConfig& config) {
    const std::string kind = config.get_string("data.kind", "equispaced");
    if (kind == "equispaced") {
        // Deterministic verification instance: equally spaced points on
        // [-1,1), unit observations.
        const Eigen::Index n = config.get_int("data.n", 10);
        if (n < 1) throw ConfigError("data.n must be >= 1");
        Dataset data;
        data.points.resize(n, 1);
        for (Eigen::Index i = 0; i < n; ++i)
            data.points(i, 0) = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n);
        data.observations = Eigen::VectorXd::Ones(n);
        return data;
    }
    if (kind == "synthetic") {
        return synth_dataset(static_cast<int>(config.get_int("data.d", 1)),
                             config.get_int("data.n", 1000),
                             config.get_double("data.eta", 0.1),
                             static_cast<std::uint64_t>(config.get_int("data.seed", 42)));
    }
    if (kind == "csv") {
        const std::string path = config.get_string("data.path", "");
        if (path.empty()) throw ConfigError("data.kind = csv requires data.path");
        RawDataset raw = load_csv(path, config.get_bool("data.strict", false));
        for (Eigen::Index line : raw.dropped_lines)
            std::cerr << "warning: dropped malformed row at line " << line << "\n";
        const long keep = config.get_int("data.subsample", 0);
        if (keep > 0 && keep < raw.points.rows())
            raw = subsample(raw, keep,
                            static_cast<std::uint64_t>(config.get_int("data.subsample_seed", 7)));
        return normalize(raw).data;
    }
    throw ConfigError("data.kind must be equispaced, synthetic or csv; got '" + kind + "'");
}

HyperParams prototype_from_config(const ExperimentConfig& config, int dim) {
    HyperParams proto;
    proto.dim = dim;
    proto.n_cheb = static_cast<int>(config.get_int("kernel.n_cheb", 2));
    if (proto.n_cheb < 1) throw ConfigError("kernel.n_cheb must be >= 1");
    Eigen::Index total = 1;
    for (int j = 0; j < dim; ++j) total *= proto.n_cheb;
    proto.cheb = Eigen::VectorXd::Zero(total);
    proto.infer_sigma = !config.get_bool("kernel.freeze_sigma", true);
    proto.infer_ell = !config.get_bool("kernel.freeze_ell", true);
    const double sigma_sq = config.get_double("kernel.sigma2", 0.1);
    if (sigma_sq <= 0.0) throw ConfigError("kernel.sigma2 must be > 0");
    proto.log_sigma = log_sigma_for(std::sqrt(sigma_sq));
    proto.log_ell = log_ell_for(config.get_double("kernel.two_ell2", 1.0));
    return proto;
}

namespace {

RunSpec run_spec_from_config(const ExperimentConfig& config) {
    RunSpec spec;
    spec.sampler.kind = sampler_kind_from(config.get_string("sampler.kind", "hmc-leapfrog"));
    spec.sampler.dt = config.get_double("sampler.dt", 0.1);
    spec.sampler.n_int = static_cast<int>(config.get_int("sampler.n_int", 3));
    if (spec.sampler.dt < 0.0 || spec.sampler.n_int < 1)
        throw ConfigError("sampler.dt must be >= 0 and sampler.n_int >= 1");
    spec.sampler.anderson.history = static_cast<int>(config.get_int("anderson.history", 10));
    spec.sampler.anderson.max_iter = static_cast<int>(config.get_int("anderson.max_iter", 200));
    spec.sampler.anderson.tol = config.get_double("anderson.tol", 1e-8);
    spec.sampler.anderson.ls_regularization =
        config.get_double("anderson.regularization", 0.0);
    spec.burn_in.steps = static_cast<int>(config.get_int("burnin.steps", 0));
    spec.burn_in.dt = config.get_double("burnin.dt", 0.01);
    spec.chains = static_cast<int>(config.get_int("chains.batch", 1));
    spec.steps = static_cast<int>(config.get_int("chains.steps", 100));
    spec.seed = static_cast<std::uint64_t>(config.get_int("chains.seed", 1));
    spec.threads = static_cast<int>(config.get_int("chains.threads", 0));
    spec.theta0_fill = config.get_double("init.theta", 0.01);

    const std::string precond = config.get_string("precond.kind", "none");
    if (precond == "none") spec.precond.policy = PrecondPolicy::none;
    else if (precond == "rescale") spec.precond.policy = PrecondPolicy::rescale;
    else if (precond == "nystrom") spec.precond.policy = PrecondPolicy::nystrom;
    else throw ConfigError("precond.kind must be none, rescale or nystrom");
    spec.precond.rank = static_cast<int>(config.get_int("precond.rank", 5));
    spec.precond.refresh = static_cast<int>(config.get_int("precond.refresh", 2));
    if (spec.precond.rank < 1 || spec.precond.refresh < 1)
        throw ConfigError("precond.rank and precond.refresh must be >= 1");

    spec.solver.cg.tol = config.get_double("solver.tol", 1e-6);
    spec.solver.cg.max_iter = static_cast<int>(config.get_int("solver.max_iter", 5000));
    const std::string shifted = config.get_string("solver.shifted", "independent");
    if (shifted == "shared") spec.solver.shared_krylov_shifts = true;
    else if (shifted != "independent")
        throw ConfigError("solver.shifted must be independent or shared");
    spec.solver.n_poles = static_cast<int>(config.get_int("pole.n_p", 15));
    spec.solver.power_iters = static_cast<int>(config.get_int("solver.power_iters", 10));
    spec.solver.bound_inflation = config.get_double("solver.bound_inflation", 1.1);
    if (spec.solver.cg.tol <= 0.0 || spec.solver.n_poles < 1)
        throw ConfigError("solver.tol must be > 0 and pole.n_p >= 1");
    return spec;
}

TargetKind target_kind_from(const ExperimentConfig& config) {
    const std::string kind = config.get_string("target.kind", "pseudofermion");
    if (kind == "pseudofermion") return TargetKind::pseudofermion;
    if (kind == "determinant") return TargetKind::determinant;
    throw ConfigError("target.kind must be pseudofermion or determinant");
}

}  // namespace

ExperimentSetup setup_from_config(const ExperimentConfig& config) {
    ExperimentSetup setup;
    setup.data = std::make_shared<Dataset>(dataset_from_config(config));
    const HyperParams proto =
        prototype_from_config(config, static_cast<int>(setup.data->dim()));
    setup.target = make_target(target_kind_from(config), *setup.data, proto,
                               config.get_int("kernel.tile", 1024),
                               config.get_int("target.dense_limit", 4096));
    setup.run = run_spec_from_config(config);
    return setup;
}

void write_trace(const fs::path& dir, const ChainTrace& trace) {
    char name[32];
    std::snprintf(name, sizeof(name), "chain_%04d.csv", trace.chain_id);
    auto out = open_out(dir / name);
    const Eigen::Index n = trace.thetas.cols();
    out << "step";
    for (Eigen::Index c = 0; c < n; ++c) out << ",theta_" << c;
    out << ",accepted,delta_h,phi_iters,cg_iters,anderson_iters\n";
    const bool has_initial = trace.thetas.rows() == trace.steps() + 1;
    for (Eigen::Index row = 0; row < trace.thetas.rows(); ++row) {
        out << row;
        for (Eigen::Index c = 0; c < n; ++c) out << ',' << format_double(trace.thetas(row, c));
        const Eigen::Index t = has_initial ? row - 1 : row;
        if (t < 0) {
            out << ",0,0,0,0,0\n";
        } else {
            out << ',' << int(trace.accepted[static_cast<std::size_t>(t)]) << ','
                << format_double(trace.delta_h[t]) << ',' << trace.phi_iterations[t] << ','
                << trace.theta_iterations[t] << ',' << trace.anderson_iterations[t] << '\n';
        }
    }
    std::snprintf(name, sizeof(name), "timing_%04d.csv", trace.chain_id);
    auto timing = open_out(dir / name);
    timing << "step,seconds\n";
    for (Eigen::Index t = 0; t < trace.wall_seconds.size(); ++t)
        timing << (t + 1) << ',' << format_double(trace.wall_seconds[t]) << '\n';
}

ChainTrace read_trace(const fs::path& chain_csv) {
    std::ifstream in(chain_csv);
    if (!in) throw IoError("cannot open '" + chain_csv.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw IoError("'" + chain_csv.string() + "': empty");
    Eigen::Index n = 0;
    {
        std::istringstream head(line);
        std::string field;
        while (std::getline(head, field, ','))
            if (field.rfind("theta_", 0) == 0) ++n;
    }
    if (n == 0) throw IoError("'" + chain_csv.string() + "': no theta columns");

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> fields;
        std::istringstream row(line);
        std::string field;
        while (std::getline(row, field, ',')) fields.push_back(parse_double(field));
        if (static_cast<Eigen::Index>(fields.size()) != n + 6)
            throw IoError("'" + chain_csv.string() + "': malformed row");
        rows.push_back(std::move(fields));
    }
    if (rows.size() < 2) throw IoError("'" + chain_csv.string() + "': too few rows");

    ChainTrace trace;
    const Eigen::Index records = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index steps = records - 1;
    trace.thetas.resize(records, n);
    trace.accepted.assign(steps, 0);
    trace.delta_h.resize(steps);
    trace.phi_iterations.resize(steps);
    trace.theta_iterations.resize(steps);
    trace.anderson_iterations.resize(steps);
    trace.wall_seconds = Eigen::VectorXd::Zero(steps);
    for (Eigen::Index r = 0; r < records; ++r) {
        for (Eigen::Index c = 0; c < n; ++c)
            trace.thetas(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c + 1)];
        if (r >= 1) {
            const auto& f = rows[static_cast<std::size_t>(r)];
            trace.accepted[static_cast<std::size_t>(r - 1)] =
                f[static_cast<std::size_t>(n + 1)] != 0.0;
            trace.delta_h[r - 1] = f[static_cast<std::size_t>(n + 2)];
            trace.phi_iterations[r - 1] = static_cast<int>(f[static_cast<std::size_t>(n + 3)]);
            trace.theta_iterations[r - 1] = static_cast<int>(f[static_cast<std::size_t>(n + 4)]);
            trace.anderson_iterations[r - 1] =
                static_cast<int>(f[static_cast<std::size_t>(n + 5)]);
        }
    }
    const std::string stem = chain_csv.stem().string();  // chain_NNNN
    trace.chain_id = std::stoi(stem.substr(stem.find('_') + 1));
    return trace;
}

std::vector<ChainTrace> read_traces(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("chain_", 0) == 0 && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no chain traces under '" + dir.string() + "'");
    std::vector<ChainTrace> traces;
    traces.reserve(files.size());
    for (const auto& f : files) traces.push_back(read_trace(f));
    return traces;
}

namespace {

void write_diagnostics(const fs::path& path, const std::vector<ChainTrace>& traces,
                       double wall_seconds, const IatConfig& iat_config) {
    std::vector<const ChainTrace*> ok;
    for (const auto& t : traces)
        if (!t.failed) ok.push_back(&t);
    auto out = open_out(path);
    out << "key,component,value\n";
    if (ok.empty()) {
        out << "failed_chains,," << traces.size() << '\n';
        return;
    }
    const Eigen::Index n = ok.front()->thetas.cols();
    const Eigen::Index steps = ok.front()->steps();
    std::vector<ChainTrace> ok_copies;
    for (const auto* t : ok) ok_copies.push_back(*t);
    const IatSummary iat = iat_summary(ok_copies, iat_config);

    double acceptance = 0.0, total_wall = 0.0;
    for (const auto* t : ok) {
        acceptance += t->acceptance_rate();
        total_wall += t->wall_seconds.sum();
    }
    acceptance /= static_cast<double>(ok.size());

    for (Eigen::Index c = 0; c < n; ++c) {
        std::vector<Eigen::VectorXd> comp;
        double pooled_mean = 0.0;
        for (const auto* t : ok) {
            comp.push_back(t->thetas.col(c));
            pooled_mean += moving_window_mean(t->thetas.col(c))[steps];
        }
        pooled_mean /= static_cast<double>(ok.size());
        out << "window_mean," << c << ',' << format_double(pooled_mean) << '\n';
        out << "iat_mean," << c << ',' << format_double(iat.mean_tau[c]) << '\n';
        out << "iat_max," << c << ',' << format_double(iat.max_tau[c]) << '\n';
        try {
            const double est =
                estimator_std(comp, steps, std::max(iat.mean_tau[c], 1e-12));
            out << "estimator_std," << c << ',' << format_double(est) << '\n';
        } catch (const std::domain_error&) {
            // degenerate window (frozen component); skip the row
        }
    }
    out << "acceptance,," << format_double(acceptance) << '\n';
    out << "chains,," << ok.size() << '\n';
    out << "failed_chains,," << (traces.size() - ok.size()) << '\n';
    out << "steps,," << steps << '\n';
    out << "wall_seconds,," << format_double(wall_seconds) << '\n';
    if (iat.mean > 0.0) {
        out << "wall_per_independent_sample,,"
            << format_double(wall_time_per_independent_sample(
                   wall_seconds, static_cast<Eigen::Index>(ok.size()), steps, iat.mean))
            << '\n';
    }
}

void write_config_snapshot(const fs::path& dir, const ExperimentConfig& config,
                           ExperimentKind kind) {
    auto out = open_out(dir / "config.snapshot");
    const char* names[] = {"verify", "scale", "sample", "predict", "diagnose"};
    out << "# experiment = " << names[static_cast<int>(kind)] << '\n' << config.serialize();
}

// ---------------------------------------------------------------- verify --

struct PooledWindow {
    Eigen::VectorXd values;  // window samples pooled over chains
};

Eigen::VectorXd pooled_window(const std::vector<ChainTrace>& traces, Eigen::Index component,
                              Eigen::Index i) {
    const Eigen::Index lo = i / 2;
    std::vector<double> pool;
    for (const auto& t : traces) {
        if (t.failed) continue;
        for (Eigen::Index r = lo; r <= i; ++r) pool.push_back(t.thetas(r, component));
    }
    return Eigen::Map<Eigen::VectorXd>(pool.data(), static_cast<Eigen::Index>(pool.size()));
}

void run_verify(const ExperimentConfig& config, const fs::path& dir) {
    ExperimentSetup setup = setup_from_config(config);
    if (setup.target.n() != 2)
        throw ConfigError("verify needs exactly two inferred hyperparameters");

    QuadratureGridSpec grid_spec;
    grid_spec.lo = config.get_double("quad.lo", -3.0);
    grid_spec.hi = config.get_double("quad.hi", 3.0);
    grid_spec.points = static_cast<int>(config.get_int("quad.points", 100));
    TargetModel det_target = setup.target;
    det_target.kind = TargetKind::determinant;
    const QuadratureReference ref = quadrature_reference(det_target, grid_spec);
    {
        auto out = open_out(dir / "quadrature.csv");
        out << "axis,theta,marginal_cdf\n";
        for (int axis = 0; axis < 2; ++axis)
            for (Eigen::Index i = 0; i < ref.axis0.size(); ++i)
                out << axis << ',' << format_double(ref.axis0[i]) << ','
                    << format_double(ref.marginal_cdf(axis, i)) << '\n';
        out << "# mean_theta0 = " << format_double(ref.means[0]) << '\n';
        out << "# mean_theta1 = " << format_double(ref.means[1]) << '\n';
    }

    struct SamplerRun {
        const char* name;
        SamplerKind kind;
        double dt;
    };
    const SamplerRun runs[] = {
        {"rwm", SamplerKind::rwm, config.get_double("verify.rwm_dt", 0.25)},
        {"leapfrog", SamplerKind::hmc_leapfrog, config.get_double("verify.leapfrog_dt", 0.4)},
        {"implicit", SamplerKind::hmc_implicit, config.get_double("verify.implicit_dt", 0.15)},
    };
    const Eigen::Index stride = std::max<long>(1, config.get_int("verify.stride", 25));

    auto errors_csv = open_out(dir / "cdf_error.csv");
    errors_csv << "sampler,step,sup_err_theta0,sup_err_theta1\n";
    auto means_csv = open_out(dir / "mean_error.csv");
    means_csv << "sampler,step,mean_err_theta0,mean_err_theta1\n";
    auto summary_csv = open_out(dir / "verify_summary.csv");
    summary_csv << "sampler,component,window_mean,quad_mean,abs_err,estimator_std,"
                   "cdf_sup_error,acceptance,iat_mean,wall_per_independent_sample\n";

    for (const auto& sampler : runs) {
        RunSpec spec = setup.run;
        spec.sampler.kind = sampler.kind;
        spec.sampler.dt = sampler.dt;
        const RunResult result = run_chains(setup.target, spec);

        const fs::path trace_dir = dir / "traces" / sampler.name;
        fs::create_directories(trace_dir);
        for (const auto& t : result.chains) write_trace(trace_dir, t);
        write_diagnostics(dir / (std::string("diagnostics_") + sampler.name + ".csv"),
                          result.chains, result.wall_seconds, {});

        const Eigen::Index steps = spec.steps;
        for (Eigen::Index i = stride; i <= steps; i += stride) {
            double cdf_err[2], mean_err[2];
            for (int c = 0; c < 2; ++c) {
                const Eigen::VectorXd window = pooled_window(result.chains, c, i);
                cdf_err[c] = ecdf_sup_error(window, ref.axis0, ref.marginal_cdf.row(c));
                mean_err[c] = std::abs(window.mean() - ref.means[c]);
            }
            errors_csv << sampler.name << ',' << i << ',' << format_double(cdf_err[0]) << ','
                       << format_double(cdf_err[1]) << '\n';
            means_csv << sampler.name << ',' << i << ',' << format_double(mean_err[0]) << ','
                      << format_double(mean_err[1]) << '\n';
        }

        const IatSummary iat = iat_summary(result.chains, {});
        double acceptance = 0.0;
        int ok_chains = 0;
        for (const auto& t : result.chains) {
            if (t.failed) continue;
            acceptance += t.acceptance_rate();
            ++ok_chains;
        }
        acceptance /= std::max(1, ok_chains);
        for (int c = 0; c < 2; ++c) {
            const Eigen::VectorXd window = pooled_window(result.chains, c, steps);
            std::vector<Eigen::VectorXd> comp;
            for (const auto& t : result.chains)
                if (!t.failed) comp.push_back(t.thetas.col(c));
            const double est = estimator_std(comp, steps, std::max(iat.mean_tau[c], 1e-12));
            summary_csv << sampler.name << ',' << c << ',' << format_double(window.mean())
                        << ',' << format_double(ref.means[c]) << ','
                        << format_double(std::abs(window.mean() - ref.means[c])) << ','
                        << format_double(est) << ','
                        << format_double(
                               ecdf_sup_error(window, ref.axis0, ref.marginal_cdf.row(c)))
                        << ',' << format_double(acceptance) << ','
                        << format_double(iat.mean_tau[c]) << ','
                        << format_double(wall_time_per_independent_sample(
                               result.wall_seconds, ok_chains, steps,
                               std::max(iat.mean, 1e-12)))
                        << '\n';
        }
    }
}

// ----------------------------------------------------------------- scale --

void run_scale(const ExperimentConfig& config, const fs::path& dir) {
    // Timing run: pin linear algebra to one thread so the log-log slope
    // reflects arithmetic growth, not thread-pool efficiency.
#ifdef _OPENMP
    const int omp_before = omp_get_max_threads();
    omp_set_num_threads(1);
#endif
    const int eigen_before = Eigen::nbThreads();
    Eigen::setNbThreads(1);

    const auto n_list = parse_int_list(
        config.get_string("scale.n_list", "500,1000,2000,4000"), "scale.n_list");
    const auto det_list = parse_int_list(
        config.get_string("scale.det_n_list", "250,500,1000"), "scale.det_n_list");
    const int steps = static_cast<int>(config.get_int("scale.steps", 4));
    const int warmup = static_cast<int>(config.get_int("scale.warmup", 1));
    const int dim = static_cast<int>(config.get_int("data.d", 1));

    auto table = open_out(dir / "scale.csv");
    table << "target,n,seconds_per_step\n";
    auto slopes = open_out(dir / "scale_slopes.csv");
    slopes << "target,slope\n";

    const auto measure = [&](TargetKind kind, const std::vector<long>& ns) {
        std::vector<double> log_n, log_t;
        for (long n : ns) {
            ExperimentConfig local = config;
            local.set("data.kind", "synthetic");
            local.set("data.n", std::to_string(n));
            local.set("data.d", std::to_string(dim));
            // Narrow the kernel as N grows to keep the conditioning flat.
            const double two_ell_sq =
                std::pow(static_cast<double>(n) / 1e4, -2.0 / static_cast<double>(dim));
            local.set("kernel.two_ell2", format_double(two_ell_sq));
            local.set("target.kind",
                      kind == TargetKind::determinant ? "determinant" : "pseudofermion");
            local.set("chains.batch", "1");
            local.set("chains.steps", std::to_string(steps + warmup));
            local.set("chains.threads", "1");
            ExperimentSetup setup = setup_from_config(local);
            const RunResult result = run_chains(setup.target, setup.run);
            const auto& wall = result.chains.front().wall_seconds;
            std::vector<double> per_step(wall.data() + warmup, wall.data() + wall.size());
            std::sort(per_step.begin(), per_step.end());
            const double median = per_step[per_step.size() / 2];
            table << (kind == TargetKind::determinant ? "determinant" : "pseudofermion") << ','
                  << n << ',' << format_double(median) << '\n';
            log_n.push_back(std::log(static_cast<double>(n)));
            log_t.push_back(std::log(median));
        }
        // Least-squares slope of log t against log N.
        const double k = static_cast<double>(log_n.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < log_n.size(); ++i) {
            sx += log_n[i];
            sy += log_t[i];
            sxx += log_n[i] * log_n[i];
            sxy += log_n[i] * log_t[i];
        }
        return (k * sxy - sx * sy) / (k * sxx - sx * sx);
    };

    slopes << "pseudofermion," << format_double(measure(TargetKind::pseudofermion, n_list))
           << '\n';
    slopes << "determinant," << format_double(measure(TargetKind::determinant, det_list))
           << '\n';

#ifdef _OPENMP
    omp_set_num_threads(omp_before);
#endif
    Eigen::setNbThreads(eigen_before);
}

// ---------------------------------------------------------------- sample --

std::vector<ChainTrace> run_sample(const ExperimentConfig& config, const fs::path& dir,
                                   ExperimentSetup& setup) {
    const RunResult result = run_chains(setup.target, setup.run);
    const fs::path trace_dir = dir / "traces";
    fs::create_directories(trace_dir);
    for (const auto& t : result.chains) write_trace(trace_dir, t);
    if (!result.burn_in.empty()) {
        const fs::path burn_dir = dir / "burnin";
        fs::create_directories(burn_dir);
        for (const auto& t : result.burn_in) write_trace(burn_dir, t);
    }
    IatConfig iat_config;
    iat_config.window_constant = config.get_double("iat.c", 5.0);
    iat_config.min_length_multiple = config.get_double("iat.min_multiple", 50.0);
    write_diagnostics(dir / "diagnostics.csv", result.chains, result.wall_seconds, iat_config);
    for (const auto& t : result.chains)
        if (t.failed) std::cerr << "warning: chain " << t.chain_id << " failed: " << t.error << "\n";
    return result.chains;
}

// --------------------------------------------------------------- predict --

void run_predict(const ExperimentConfig& config, const fs::path& dir) {
    ExperimentSetup setup = setup_from_config(config);
    const std::vector<ChainTrace> traces = run_sample(config, dir, setup);

    const long thin = config.get_int("predict.thin", 125);
    if (thin < 1) throw ConfigError("predict.thin must be >= 1");
    std::vector<std::vector<Eigen::VectorXd>> samples;
    for (const auto& t : traces) {
        if (t.failed) continue;
        std::vector<Eigen::VectorXd> chain;
        for (Eigen::Index r = thin; r < t.thetas.rows(); r += thin)
            chain.push_back(t.thetas.row(r).transpose());
        if (!chain.empty()) samples.push_back(std::move(chain));
    }

    const int per_axis = static_cast<int>(config.get_int("predict.grid", 50));
    const PredictionGrid grid = regular_grid(static_cast<int>(setup.data->dim()), per_axis);
    const PosteriorSummary summary =
        total_variance_summary(setup.target, samples, grid, setup.run.solver);
    if (summary.clamp_warnings > 0)
        std::cerr << "warning: " << summary.clamp_warnings
                  << " conditional variances clamped beyond 1e-6\n";

    auto out = open_out(dir / "grid.csv");
    for (Eigen::Index j = 0; j < setup.data->dim(); ++j) out << 'x' << (j + 1) << ',';
    out << "mean,expected_conditional_var,variance_of_mean,total_std,iat,ci_radius\n";
    for (Eigen::Index q = 0; q < grid.size(); ++q) {
        for (Eigen::Index j = 0; j < setup.data->dim(); ++j)
            out << format_double(grid.points(q, j)) << ',';
        out << format_double(summary.mean[q]) << ',' << format_double(summary.expected_var[q])
            << ',' << format_double(summary.variance_of_mean[q]) << ','
            << format_double(summary.total_std[q]) << ',' << format_double(summary.iat[q])
            << ',' << format_double(summary.ci_radius[q]) << '\n';
    }
}

// -------------------------------------------------------------- diagnose --

void run_diagnose(const ExperimentConfig& config, const fs::path& dir) {
    const fs::path trace_dir = dir / "traces";
    if (!fs::exists(trace_dir))
        throw IoError("diagnose: no traces under '" + dir.string() + "'");
    const std::vector<ChainTrace> traces = read_traces(trace_dir);
    IatConfig iat_config;
    iat_config.window_constant = config.get_double("iat.c", 5.0);
    iat_config.min_length_multiple = config.get_double("iat.min_multiple", 50.0);
    write_diagnostics(dir / "diagnostics.csv", traces, 0.0, iat_config);
}

}  // namespace

void run_experiment(ExperimentKind kind, const ExperimentConfig& config,
                    const fs::path& out_dir) {
    fs::create_directories(out_dir);
    if (kind == ExperimentKind::diagnose) {
        run_diagnose(config, out_dir);  // reuses an existing artifact directory
        return;
    }
    DirectoryLock lock(out_dir);
    try {
        write_config_snapshot(out_dir, config, kind);
        switch (kind) {
            case ExperimentKind::verify: run_verify(config, out_dir); break;
            case ExperimentKind::scale: run_scale(config, out_dir); break;
            case ExperimentKind::sample: {
                ExperimentSetup setup = setup_from_config(config);
                run_sample(config, out_dir, setup);
                break;
            }
            case ExperimentKind::predict: run_predict(config, out_dir); break;
            case ExperimentKind::diagnose: break;
        }
    } catch (const std::exception& e) {
        auto report = open_out(out_dir / "failure.txt");
        report << e.what() << '\n';
        throw;
    }
}

}  // namespace gphmc
