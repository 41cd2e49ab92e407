#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "gphmc/chain_runner.hpp"
#include "gphmc/config.hpp"
#include "gphmc/csv_io.hpp"
#include "gphmc/target.hpp"

namespace gphmc {

enum class ExperimentKind { verify, scale, sample, predict, diagnose };

ExperimentKind experiment_kind_from(const std::string& name);

// Everything a run needs, with the dataset kept alive alongside the target
// that points into it.
struct ExperimentSetup {
    std::shared_ptr<Dataset> data;
    TargetModel target;
    RunSpec run;
};

Dataset dataset_from_config(const ExperimentConfig& config);
HyperParams prototype_from_config(const ExperimentConfig& config, int dim);
ExperimentSetup setup_from_config(const ExperimentConfig& config);

// Trace serialization: deterministic fields in chain_NNNN.csv (byte-identical
// across reruns of the same config+seed), wall times in timing_NNNN.csv.
void write_trace(const std::filesystem::path& dir, const ChainTrace& trace);
ChainTrace read_trace(const std::filesystem::path& chain_csv);
std::vector<ChainTrace> read_traces(const std::filesystem::path& dir);

// Runs the selected experiment, writing a self-describing artifact directory
// (config snapshot, per-chain traces, diagnostics, experiment-specific
// tables). Throws on failure after writing a failure report.
void run_experiment(ExperimentKind kind, const ExperimentConfig& config,
                    const std::filesystem::path& out_dir);

}  // namespace gphmc
