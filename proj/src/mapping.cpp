#include "nbeats/mapping.hpp"

#include <stdexcept>

namespace nbeats {

namespace {

std::string list_available(const std::set<Frequency>& available) {
    std::string out;
    for (Frequency f : available) {
        if (!out.empty()) out += ", ";
        out += frequency_name(f);
    }
    return out.empty() ? "<none>" : out;
}

}  // namespace

SourceSelection map_frequency(const std::set<Frequency>& available, Frequency target) {
    if (available.count(target)) return {target, 1};
    if (target == Frequency::kOther && available.count(Frequency::kQuarterly)) {
        return {Frequency::kQuarterly, 1};
    }
    if ((target == Frequency::kWeekly || target == Frequency::kDaily) &&
        available.count(Frequency::kMonthly)) {
        return {Frequency::kMonthly, 1};
    }
    if (target == Frequency::kHourly && available.count(Frequency::kMonthly)) {
        return {Frequency::kMonthly, 2};
    }
    throw std::invalid_argument("map_frequency: no source split for target " +
                                frequency_name(target) + "; available: " +
                                list_available(available));
}

SourceSelection map_frequency(const Corpus& source, Frequency target) {
    std::set<Frequency> available;
    for (const CorpusSplit& split : source.splits) available.insert(split.frequency);
    return map_frequency(available, target);
}

std::vector<double> upsample_bilinear(const std::vector<double>& series, int factor) {
    if (factor < 2) throw std::invalid_argument("upsample_bilinear: factor must be at least 2");
    if (series.size() < 2) {
        throw std::invalid_argument("upsample_bilinear: need at least two points");
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(factor) * (series.size() - 1) + 1);
    for (std::size_t i = 0; i + 1 < series.size(); ++i) {
        for (int s = 0; s < factor; ++s) {
            const double w = static_cast<double>(s) / factor;
            out.push_back(series[i] * (1.0 - w) + series[i + 1] * w);
        }
    }
    out.push_back(series.back());
    return out;
}

}  // namespace nbeats
