#pragma once

#include <string>
#include <vector>

namespace nbeats {

enum class Frequency { kYearly, kQuarterly, kMonthly, kWeekly, kDaily, kHourly, kOther };

/// Forecast horizon conventionally attached to each frequency (the Other
/// bucket follows the M3 "Other" convention).
int default_horizon(Frequency f);

/// Seasonal period used by MASE and the seasonality test. Weekly and Daily
/// data are treated as non-seasonal, the M4 convention.
int seasonality(Frequency f);

std::string frequency_name(Frequency f);
Frequency parse_frequency(const std::string& name);

struct TimeSeries {
    std::string id;
    Frequency frequency = Frequency::kYearly;
    std::vector<double> values;
};

/// All series of one frequency, sharing a horizon.
struct CorpusSplit {
    Frequency frequency = Frequency::kYearly;
    int horizon = 0;
    std::vector<TimeSeries> series;
};

struct Corpus {
    std::string name;
    std::vector<CorpusSplit> splits;

    bool has(Frequency f) const;
    const CorpusSplit& at(Frequency f) const;
    CorpusSplit& at(Frequency f);
};

}  // namespace nbeats
