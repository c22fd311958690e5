#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nbeats/mapping.hpp"
#include "nbeats/sampling.hpp"
#include "nbeats/training.hpp"

namespace nbeats {

/// One row of an evaluation report: all metrics for one frequency split,
/// plus the reference-method values the OWA ratios are built from. Means are
/// per-series except nd, which is pooled over every point of the split.
/// Series whose MASE scale is degenerate are skipped in the MASE means only
/// and counted in mase_skipped.
struct SplitMetrics {
    std::string label;
    int horizon = 0;
    std::size_t n_series = 0;
    double smape = 0.0;
    double smape_m3 = 0.0;
    double mape = 0.0;
    double mase = 0.0;
    double owa = 0.0;
    double nd = 0.0;
    double naive2_smape = 0.0;
    double naive2_mase = 0.0;
    double snaive_smape = 0.0;
    std::size_t mase_skipped = 0;
};

/// Per-series member forecasts retained for bootstrap resampling.
struct SeriesForecasts {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> targets;
    std::vector<std::vector<std::vector<double>>> member_forecasts;  // [series][member]
};

struct SplitEvaluation {
    SplitMetrics metrics;
    SeriesForecasts cache;
};

struct EvalReport {
    std::string source_name;
    std::string target_name;
    std::vector<SplitMetrics> rows;
    SplitMetrics aggregate;
    std::size_t member_count = 0;
    std::string config_digest;
    double wall_seconds = 0.0;
    std::vector<std::uint64_t> seeds;
    std::vector<OverlapHit> overlaps;
};

/// Series-count-weighted aggregate of per-frequency rows. The OWA is rebuilt
/// from the aggregated sMAPE/MASE ratios, the way the per-row OWA is built
/// from per-row means, so the aggregate is recomputable from the rows alone.
SplitMetrics aggregate_rows(const std::vector<SplitMetrics>& rows);

/// Scores an ensemble on the test region of one target split. The ensemble
/// only ever sees each series' history (everything before the test region).
SplitEvaluation evaluate_split(const Ensemble& ensemble, const CorpusSplit& target,
                               bool keep_cache = false);

/// Trains an ensemble for a mapped source selection: picks source's split
/// for the selection, upsamples it if the mapping asks for that, and trains
/// at the given horizon.
Ensemble train_for_selection(const Corpus& source, const SourceSelection& selection, int horizon,
                             TrainConfig base, const EnsembleSpec& spec);

/// The zero-shot protocol: every target split is scored with the ensemble
/// matching its mapped source selection, one series at a time, with no
/// parameter updates (weight digests are checked before and after and a
/// mismatch throws). When the source corpus is supplied, target series whose
/// final window occurs verbatim in it are reported (never dropped).
EvalReport zero_shot_eval(const std::vector<Ensemble>& ensembles, const Corpus& target,
                          const Corpus* source = nullptr);

struct SweepRow {
    int blocks = 0;
    bool share_weights = true;
    std::size_t members = 0;
    double smape = 0.0;
    double bootstrap_mean = 0.0;
    double bootstrap_std = 0.0;
};

/// Trains one ensemble per (block count, sharing) cell on the source split
/// and scores it zero-shot on the target split. Bootstrap statistics come
/// from resampling ensemble members with replacement and recombining their
/// cached forecasts.
std::vector<SweepRow> block_sweep(const CorpusSplit& source, const CorpusSplit& target,
                                  const std::vector<int>& block_counts,
                                  const std::vector<bool>& sharings, const TrainConfig& base,
                                  const EnsembleSpec& spec, int resamples = 200);

/// Atomic writers. Timestamps and wall-clock live in CLI sidecars, never
/// here, so identical inputs produce byte-identical files.
void write_report_csv(const EvalReport& report, const std::string& path);
void write_report_json(const EvalReport& report, const std::string& path);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& config_digest,
                     const std::vector<std::uint64_t>& seeds, const std::string& path);

}  // namespace nbeats
