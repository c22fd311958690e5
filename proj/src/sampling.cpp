#include "nbeats/sampling.hpp"

#include <algorithm>
#include <stdexcept>

namespace nbeats {

SplitResult split(const CorpusSplit& data, SplitMode mode) {
    const std::size_t h = static_cast<std::size_t>(data.horizon);
    const std::size_t keep_back = mode == SplitMode::kTest ? h : 2 * h;

    SplitResult out;
    out.history.frequency = data.frequency;
    out.history.horizon = data.horizon;
    for (const TimeSeries& ts : data.series) {
        if (ts.values.size() < keep_back + 1) {
            throw std::invalid_argument("split: series '" + ts.id + "' has " +
                                        std::to_string(ts.values.size()) +
                                        " values, too short to hold out " +
                                        std::to_string(keep_back));
        }
        TimeSeries history = ts;
        history.values.assign(ts.values.begin(),
                              ts.values.end() - static_cast<std::ptrdiff_t>(keep_back));
        const auto held_begin = ts.values.end() - static_cast<std::ptrdiff_t>(keep_back);
        out.history.series.push_back(std::move(history));
        out.held_out.emplace_back(held_begin, held_begin + static_cast<std::ptrdiff_t>(h));
    }
    return out;
}

WindowSample make_window(const TimeSeries& series, std::size_t anchor, int lookback, int horizon) {
    if (lookback < 1 || horizon < 0) {
        throw std::invalid_argument("make_window: lookback must be positive");
    }
    if (anchor < 1 || anchor + static_cast<std::size_t>(horizon) > series.values.size()) {
        throw std::invalid_argument("make_window: anchor " + std::to_string(anchor) +
                                    " out of range for series '" + series.id + "'");
    }
    const auto t = static_cast<std::size_t>(lookback);
    WindowSample sample;
    sample.series_id = series.id;
    sample.input.assign(t, 0.0);
    sample.mask.assign(t, 0);
    const std::size_t available = std::min(anchor, t);
    sample.padding = static_cast<int>(t - available);
    for (std::size_t i = 0; i < available; ++i) {
        sample.input[t - available + i] = series.values[anchor - available + i];
        sample.mask[t - available + i] = 1;
    }
    sample.target.assign(series.values.begin() + static_cast<std::ptrdiff_t>(anchor),
                         series.values.begin() + static_cast<std::ptrdiff_t>(anchor) +
                             horizon);
    return sample;
}

std::vector<WindowSample> sample_batch(const std::vector<TimeSeries>& training, int lookback,
                                       int horizon, int batch_size, Rng& rng) {
    if (batch_size < 1) throw std::invalid_argument("sample_batch: batch_size must be positive");
    if (horizon < 1) throw std::invalid_argument("sample_batch: horizon must be positive");

    // A series must fit a full target plus at least one input point.
    std::vector<const TimeSeries*> usable;
    for (const TimeSeries& ts : training) {
        if (ts.values.size() >= static_cast<std::size_t>(horizon) + 1) usable.push_back(&ts);
    }
    if (usable.empty()) {
        throw std::invalid_argument("sample_batch: no series long enough for horizon " +
                                    std::to_string(horizon));
    }

    std::vector<WindowSample> batch;
    batch.reserve(static_cast<std::size_t>(batch_size));
    const std::size_t window = 10 * static_cast<std::size_t>(horizon);
    for (int b = 0; b < batch_size; ++b) {
        const TimeSeries& ts = *usable[rng.uniform_index(usable.size())];
        const std::size_t n = ts.values.size();
        const std::size_t hi = n - static_cast<std::size_t>(horizon);  // last valid anchor
        const std::size_t lo = hi > window ? std::max<std::size_t>(1, n - window) : 1;
        const std::size_t anchor = lo + rng.uniform_index(hi - lo + 1);
        batch.push_back(make_window(ts, anchor, lookback, horizon));
    }
    return batch;
}

std::vector<OverlapHit> screen_overlap(const Corpus& source, const CorpusSplit& target) {
    std::vector<OverlapHit> hits;
    const std::size_t tail = 2 * static_cast<std::size_t>(target.horizon);
    for (const TimeSeries& ts : target.series) {
        if (ts.values.size() < tail) continue;
        const auto needle_begin = ts.values.end() - static_cast<std::ptrdiff_t>(tail);
        for (const CorpusSplit& split : source.splits) {
            for (const TimeSeries& src : split.series) {
                if (src.values.size() < tail) continue;
                const auto it = std::search(src.values.begin(), src.values.end(), needle_begin,
                                            ts.values.end());
                if (it != src.values.end()) {
                    hits.push_back({ts.id, src.id});
                }
            }
        }
    }
    return hits;
}

}  // namespace nbeats
