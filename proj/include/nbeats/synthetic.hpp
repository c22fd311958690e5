#pragma once

#include <cstdint>
#include <string>

#include "nbeats/timeseries.hpp"

namespace nbeats {

/// Parameter ranges for one synthetic family. Each series draws its own
/// level, seasonal amplitude, phase, trend slope and length uniformly from
/// these ranges; the seasonal period is the frequency's conventional one.
///
///   value_k = level * (1 + amplitude * sin(2*pi*k/m + phase))
///           + trend * k + level * u_k,  u_k ~ U(-noise, noise)
struct SynthFamily {
    std::string name = "synth";
    Frequency frequency = Frequency::kMonthly;
    int horizon = 0;  // 0: use the frequency default
    int min_length = 90;
    int max_length = 140;
    double level_min = 50.0;
    double level_max = 150.0;
    double amplitude_min = 0.1;
    double amplitude_max = 0.4;
    double trend_min = 0.0;
    double trend_max = 0.3;
    double noise = 0.05;
};

/// Deterministic per (family, seed); series i depends only on seed and i.
/// Throws std::invalid_argument if the drawn parameters ever produce a
/// non-positive value.
Corpus synth_corpus(const SynthFamily& family, int n_series, std::uint64_t seed);

}  // namespace nbeats
