#pragma once

#include <span>
#include <vector>

namespace nbeats::metrics {

/// Shared guard for near-zero denominators in percentage-style errors and
/// their training-loss gradients.
inline constexpr double kDenomEpsilon = 1e-8;

/// Symmetric MAPE in percent: (200/H) * sum |y - f| / (|y| + |f|).
/// Guarded terms contribute zero; the divisor stays H.
double smape(std::span<const double> y, std::span<const double> forecast);

/// The M3 variant divides by (y + f) without absolute values.
double smape_m3(std::span<const double> y, std::span<const double> forecast);

/// (100/H) * sum |y - f| / |y|, guarded like smape.
double mape(std::span<const double> y, std::span<const double> forecast);

/// Mean absolute scaled error. The scale is the seasonal naive in-sample MAE
/// over the concatenation of insample and y with period m. Throws
/// std::invalid_argument when the scale is degenerate (flat seasonal
/// history) or when m < 1 or the concatenation is shorter than m + 1.
double mase(std::span<const double> y, std::span<const double> forecast,
            std::span<const double> insample, int m);

/// OWA against a reference method (Naive2 in the standard setup):
/// 0.5 * (smape / ref_smape + mase / ref_mase).
double owa(double smape_value, double mase_value, double ref_smape, double ref_mase);

/// Pooled normalized deviation over a whole evaluation set:
/// sum |y - f| / sum |y| across every point of every series.
double nd(const std::vector<std::vector<double>>& y,
          const std::vector<std::vector<double>>& forecast);

}  // namespace nbeats::metrics
