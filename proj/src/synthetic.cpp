#include "nbeats/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include "nbeats/rng.hpp"

namespace nbeats {

Corpus synth_corpus(const SynthFamily& family, int n_series, std::uint64_t seed) {
    if (n_series < 1) throw std::invalid_argument("synth_corpus: n_series must be positive");
    if (family.min_length < 2 || family.max_length < family.min_length) {
        throw std::invalid_argument("synth_corpus: bad length range");
    }
    if (family.noise < 0.0) throw std::invalid_argument("synth_corpus: negative noise");

    constexpr double kTwoPi = 2.0 * 3.141592653589793238462643383279502884;
    const int m = seasonality(family.frequency);

    CorpusSplit split;
    split.frequency = family.frequency;
    split.horizon = family.horizon > 0 ? family.horizon : default_horizon(family.frequency);

    for (int i = 0; i < n_series; ++i) {
        Rng rng(Rng::derive_seed(seed, static_cast<std::uint64_t>(i)));
        const double level = rng.uniform(family.level_min, family.level_max);
        const double amplitude = rng.uniform(family.amplitude_min, family.amplitude_max);
        const double phase = rng.uniform(0.0, kTwoPi);
        const double trend = rng.uniform(family.trend_min, family.trend_max);
        const auto length = static_cast<std::size_t>(
            family.min_length +
            static_cast<int>(rng.uniform_index(
                static_cast<std::uint64_t>(family.max_length - family.min_length + 1))));

        TimeSeries ts;
        ts.frequency = family.frequency;
        std::string idx = std::to_string(i);
        if (idx.size() < 5) idx.insert(0, 5 - idx.size(), '0');
        ts.id = family.name + idx;
        ts.values.reserve(length);
        for (std::size_t k = 0; k < length; ++k) {
            const double seasonal =
                1.0 + amplitude * std::sin(kTwoPi * static_cast<double>(k % m) / m + phase);
            const double noise = level * rng.uniform(-family.noise, family.noise);
            const double v = level * seasonal + trend * static_cast<double>(k) + noise;
            if (!(v > 0.0)) {
                throw std::invalid_argument(
                    "synth_corpus: family '" + family.name +
                    "' produced a non-positive value; tighten the parameter ranges");
            }
            ts.values.push_back(v);
        }
        split.series.push_back(std::move(ts));
    }

    Corpus corpus;
    corpus.name = family.name;
    corpus.splits.push_back(std::move(split));
    return corpus;
}

}  // namespace nbeats
