#pragma once

#include <span>
#include <vector>

namespace nbeats {

// Classical multiplicative decomposition. When no seasonality is detected
// (or the series contains non-positive values, where multiplicative ratios
// are meaningless) the indices are all 1 and the series passes through.
struct DecompositionResult {
    std::vector<double> indices;
    std::vector<double> deseasonalized;
    bool seasonality_detected = false;
};

std::vector<double> naive(std::span<const double> insample, int horizon);

std::vector<double> seasonal_naive(std::span<const double> insample, int horizon, int period);

// 90% one-sided test on the lag-m autocorrelation. Series shorter than
// three periods are never flagged seasonal.
bool seasonality_test(std::span<const double> series, int period);

DecompositionResult decompose_multiplicative(std::span<const double> series, int period);

std::vector<double> naive2(std::span<const double> insample, int horizon, int period);

double fit_ses_alpha(std::span<const double> insample);

std::vector<double> ses(std::span<const double> insample, int horizon, double alpha);
std::vector<double> ses(std::span<const double> insample, int horizon);

std::vector<double> theta(std::span<const double> insample, int horizon, int period);

}  // namespace nbeats
