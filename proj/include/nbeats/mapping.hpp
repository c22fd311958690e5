#pragma once

#include <set>
#include <vector>

#include "nbeats/timeseries.hpp"

namespace nbeats {

/// Which source split a target frequency is forecast with. upsample > 1
/// means the source training series are bilinearly upsampled by that factor
/// first (the Hourly-from-Monthly case).
struct SourceSelection {
    Frequency frequency = Frequency::kYearly;
    int upsample = 1;

    friend bool operator==(const SourceSelection&, const SourceSelection&) = default;
};

/// Picks the source split for a target frequency. A source that carries the
/// target's own frequency is used directly; otherwise Other falls back to
/// Quarterly, Weekly and Daily fall back to Monthly, and Hourly falls back
/// to Monthly upsampled twice. Throws std::invalid_argument, listing the
/// available splits, when no rule applies.
SourceSelection map_frequency(const std::set<Frequency>& available, Frequency target);
SourceSelection map_frequency(const Corpus& source, Frequency target);

/// Linear interpolation onto a grid factor times finer: output length
/// factor*(n-1)+1, original points preserved at multiples of factor.
std::vector<double> upsample_bilinear(const std::vector<double>& series, int factor = 2);

}  // namespace nbeats
