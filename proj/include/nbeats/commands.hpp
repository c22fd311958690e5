#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nbeats/evaluation.hpp"
#include "nbeats/training.hpp"

namespace nbeats {

/// Block-sweep settings for cmd_sweep.
struct SweepConfig {
    std::vector<int> blocks = {1, 4, 16};
    std::vector<bool> sharings = {true};
    int resamples = 200;
};

/// Full experiment description. Every field defaults to the paper-scale
/// profile; the "desk" profile swaps in the reduced grid. Loaded from a
/// single JSON file whose explicit fields override the profile, and command
/// line flags override the file.
struct RunConfig {
    int schema = 1;
    std::string profile = "paper";
    std::string source_manifest;
    std::string target_manifest;
    std::string output_dir = "out";
    std::string ensembles_dir;  // defaults to output_dir + "/ensembles"
    int workers = 0;            // 0: keep the library default
    TrainConfig train;
    EnsembleSpec ensemble;
    SweepConfig sweep;
    int diagnostic_probes = 16;

    std::string resolved_ensembles_dir() const;
};

RunConfig paper_profile();
RunConfig desk_profile();

/// Parses a RunConfig JSON file. The profile named in the file is applied
/// first, then explicit fields. Unknown keys and schema mismatches throw.
RunConfig load_run_config(const std::string& path);

/// Converts an external dataset layout (m4, m3, tourism, generic) into the
/// corpus format and writes it under output_dir. Returns the manifest path.
/// Parse failures name the file and row. An input yielding no series is an
/// error and writes nothing.
std::string cmd_convert(const std::string& layout, const std::string& input,
                        const std::string& output_dir);

/// Trains one ensemble per needed source selection (derived from the target
/// corpus when given, identity otherwise) and checkpoints them under
/// ensembles_dir. Returns that directory.
std::string cmd_train(const RunConfig& cfg);

/// Loads checkpointed ensembles plus the target corpus, runs the zero-shot
/// protocol, and writes report.csv / report.json. Returns the JSON path.
std::string cmd_zeroshot(const RunConfig& cfg);

/// Trains and scores the block-count grid on the mapped (source, target)
/// split pair and writes sweep.csv. Returns its path.
std::string cmd_sweep(const RunConfig& cfg);

/// Probes a checkpointed model: shift-vector norms per block plus the
/// linearization residual table and its convergence order. Writes a JSON
/// report to out_path and returns it.
std::string cmd_diagnose(const std::string& checkpoint, const std::string& out_path, int probes);

/// Collects every report.json, sweep.csv and diagnostics JSON under
/// artifacts_dir into summary tables: table.csv (one row per evaluated
/// split), plot_blocks.csv (x = block count, y = metric, std) and
/// convergence.csv. Errors when nothing is found.
std::string cmd_report(const std::string& artifacts_dir, const std::string& output_dir);

/// Persisted ensembles round-trip through these; loading verifies the stored
/// weight digest.
void save_ensemble(const Ensemble& ensemble, const std::string& dir);
Ensemble load_ensemble(const std::string& dir);
std::vector<Ensemble> load_ensembles(const std::string& dir);

/// Whole command line surface; returns the process exit code (0 iff no
/// errors). Arguments exclude the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace nbeats
