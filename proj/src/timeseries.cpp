#include "nbeats/timeseries.hpp"

#include <stdexcept>

namespace nbeats {

int default_horizon(Frequency f) {
    switch (f) {
        case Frequency::kYearly: return 6;
        case Frequency::kQuarterly: return 8;
        case Frequency::kMonthly: return 18;
        case Frequency::kWeekly: return 13;
        case Frequency::kDaily: return 14;
        case Frequency::kHourly: return 48;
        case Frequency::kOther: return 8;
    }
    throw std::logic_error("default_horizon: unknown frequency");
}

int seasonality(Frequency f) {
    switch (f) {
        case Frequency::kYearly: return 1;
        case Frequency::kQuarterly: return 4;
        case Frequency::kMonthly: return 12;
        case Frequency::kWeekly: return 1;
        case Frequency::kDaily: return 1;
        case Frequency::kHourly: return 24;
        case Frequency::kOther: return 1;
    }
    throw std::logic_error("seasonality: unknown frequency");
}

std::string frequency_name(Frequency f) {
    switch (f) {
        case Frequency::kYearly: return "Yearly";
        case Frequency::kQuarterly: return "Quarterly";
        case Frequency::kMonthly: return "Monthly";
        case Frequency::kWeekly: return "Weekly";
        case Frequency::kDaily: return "Daily";
        case Frequency::kHourly: return "Hourly";
        case Frequency::kOther: return "Other";
    }
    throw std::logic_error("frequency_name: unknown frequency");
}

Frequency parse_frequency(const std::string& name) {
    for (Frequency f : {Frequency::kYearly, Frequency::kQuarterly, Frequency::kMonthly,
                        Frequency::kWeekly, Frequency::kDaily, Frequency::kHourly,
                        Frequency::kOther}) {
        if (frequency_name(f) == name) return f;
    }
    throw std::invalid_argument("parse_frequency: unknown frequency '" + name + "'");
}

bool Corpus::has(Frequency f) const {
    for (const CorpusSplit& s : splits) {
        if (s.frequency == f) return true;
    }
    return false;
}

const CorpusSplit& Corpus::at(Frequency f) const {
    for (const CorpusSplit& s : splits) {
        if (s.frequency == f) return s;
    }
    throw std::out_of_range("Corpus::at: no " + frequency_name(f) + " split in corpus '" + name +
                            "'");
}

CorpusSplit& Corpus::at(Frequency f) {
    for (CorpusSplit& s : splits) {
        if (s.frequency == f) return s;
    }
    throw std::out_of_range("Corpus::at: no " + frequency_name(f) + " split in corpus '" + name +
                            "'");
}

}  // namespace nbeats
