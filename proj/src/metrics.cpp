#include "nbeats/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nbeats::metrics {

namespace {

void check_pair(std::span<const double> y, std::span<const double> forecast, const char* name) {
    if (y.empty()) throw std::invalid_argument(std::string(name) + ": empty series");
    if (y.size() != forecast.size()) {
        throw std::invalid_argument(std::string(name) + ": length mismatch, " +
                                    std::to_string(y.size()) + " vs " +
                                    std::to_string(forecast.size()));
    }
}

}  // namespace

double smape(std::span<const double> y, std::span<const double> forecast) {
    check_pair(y, forecast, "smape");
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double denom = std::abs(y[i]) + std::abs(forecast[i]);
        if (denom >= kDenomEpsilon) total += std::abs(y[i] - forecast[i]) / denom;
    }
    return 200.0 / static_cast<double>(y.size()) * total;
}

double smape_m3(std::span<const double> y, std::span<const double> forecast) {
    check_pair(y, forecast, "smape_m3");
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double denom = y[i] + forecast[i];
        if (std::abs(denom) >= kDenomEpsilon) total += std::abs(y[i] - forecast[i]) / denom;
    }
    return 200.0 / static_cast<double>(y.size()) * total;
}

double mape(std::span<const double> y, std::span<const double> forecast) {
    check_pair(y, forecast, "mape");
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double denom = std::abs(y[i]);
        if (denom >= kDenomEpsilon) total += std::abs(y[i] - forecast[i]) / denom;
    }
    return 100.0 / static_cast<double>(y.size()) * total;
}

double mase(std::span<const double> y, std::span<const double> forecast,
            std::span<const double> insample, int m) {
    check_pair(y, forecast, "mase");
    if (m < 1) throw std::invalid_argument("mase: seasonality must be at least 1");
    if (insample.empty()) throw std::invalid_argument("mase: empty insample history");

    // Seasonal naive MAE over the concatenation of insample and y.
    std::vector<double> z(insample.begin(), insample.end());
    z.insert(z.end(), y.begin(), y.end());
    if (z.size() <= static_cast<std::size_t>(m)) {
        throw std::invalid_argument("mase: history too short for seasonality " +
                                    std::to_string(m));
    }
    double scale = 0.0;
    for (std::size_t j = static_cast<std::size_t>(m); j < z.size(); ++j) {
        scale += std::abs(z[j] - z[j - static_cast<std::size_t>(m)]);
    }
    scale /= static_cast<double>(z.size() - static_cast<std::size_t>(m));
    if (scale < kDenomEpsilon) {
        throw std::invalid_argument("mase: flat seasonal history, scale is degenerate");
    }

    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) total += std::abs(y[i] - forecast[i]);
    return total / (static_cast<double>(y.size()) * scale);
}

double owa(double smape_value, double mase_value, double ref_smape, double ref_mase) {
    if (!(ref_smape > 0.0) || !(ref_mase > 0.0)) {
        throw std::invalid_argument("owa: reference metrics must be positive");
    }
    return 0.5 * (smape_value / ref_smape + mase_value / ref_mase);
}

double nd(const std::vector<std::vector<double>>& y,
          const std::vector<std::vector<double>>& forecast) {
    if (y.empty() || y.size() != forecast.size()) {
        throw std::invalid_argument("nd: need matching non-empty sets of series");
    }
    double num = 0.0;
    double denom = 0.0;
    for (std::size_t s = 0; s < y.size(); ++s) {
        if (y[s].size() != forecast[s].size()) {
            throw std::invalid_argument("nd: length mismatch in series " + std::to_string(s));
        }
        for (std::size_t i = 0; i < y[s].size(); ++i) {
            num += std::abs(y[s][i] - forecast[s][i]);
            denom += std::abs(y[s][i]);
        }
    }
    if (denom < kDenomEpsilon) throw std::invalid_argument("nd: denominator is degenerate");
    return num / denom;
}

}  // namespace nbeats::metrics
