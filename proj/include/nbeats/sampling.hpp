#pragma once

#include <cstdint>
#include <vector>

#include "nbeats/rng.hpp"
#include "nbeats/timeseries.hpp"

namespace nbeats {

enum class SplitMode { kTest, kValidation };

/// History/held-out partition of one frequency split. For kTest the held-out
/// part is the last horizon of each series and history is everything before
/// it. For kValidation the held-out part is the penultimate horizon and the
/// final (test) horizon is dropped from history entirely, so splitting the
/// test-mode history again with kTest reproduces the validation split.
struct SplitResult {
    CorpusSplit history;
    std::vector<std::vector<double>> held_out;  // aligned with history.series
};

SplitResult split(const CorpusSplit& data, SplitMode mode);

/// One training window: input immediately precedes target, target lies fully
/// inside the training region. Inputs shorter than the lookback are
/// left-padded with zeros; mask[i] is 1 for real values, 0 for padding.
struct WindowSample {
    std::vector<double> input;
    std::vector<double> target;
    std::vector<std::uint8_t> mask;
    int padding = 0;
    std::string series_id;
};

/// Builds the length-t input window ending just before position anchor
/// (exclusive), left-padded with zeros.
WindowSample make_window(const TimeSeries& series, std::size_t anchor, int lookback, int horizon);

/// Stratified uniform sampling: the series is chosen uniformly among series
/// long enough to hold a target, the anchor (first forecast point) uniformly
/// within the last 10 horizons of the training region. Call this on training
/// history only; the sampler has no knowledge of held-out data.
std::vector<WindowSample> sample_batch(const std::vector<TimeSeries>& training, int lookback,
                                       int horizon, int batch_size, Rng& rng);

/// Report-only screening for series that leak between corpora: a hit means
/// the last 2·H values of a target series occur verbatim inside a source
/// series.
struct OverlapHit {
    std::string target_id;
    std::string source_id;
};

std::vector<OverlapHit> screen_overlap(const Corpus& source, const CorpusSplit& target);

}  // namespace nbeats
