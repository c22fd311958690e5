#include "nbeats/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nbeats {

namespace {

void require_horizon(int horizon) {
    if (horizon < 1) throw std::invalid_argument("horizon must be positive");
}

void require_period(int period) {
    if (period < 1) throw std::invalid_argument("period must be positive");
}

}  // namespace

std::vector<double> naive(std::span<const double> insample, int horizon) {
    require_horizon(horizon);
    if (insample.empty()) throw std::invalid_argument("naive requires a non-empty series");
    return std::vector<double>(static_cast<std::size_t>(horizon), insample.back());
}

std::vector<double> seasonal_naive(std::span<const double> insample, int horizon, int period) {
    require_horizon(horizon);
    require_period(period);
    const std::size_t n = insample.size();
    const std::size_t m = static_cast<std::size_t>(period);
    if (n < m) throw std::invalid_argument("seasonal_naive requires at least one full period");
    std::vector<double> out(static_cast<std::size_t>(horizon));
    for (std::size_t i = 1; i <= out.size(); ++i) {
        const std::size_t cycles = (i + m - 1) / m;
        out[i - 1] = insample[n + i - m * cycles - 1];
    }
    return out;
}

bool seasonality_test(std::span<const double> series, int period) {
    require_period(period);
    const std::size_t n = series.size();
    const std::size_t m = static_cast<std::size_t>(period);
    if (m < 2 || n < 3 * m) return false;

    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    double denom = 0.0;
    for (double v : series) denom += (v - mean) * (v - mean);
    if (denom <= 0.0) return false;

    auto acf = [&](std::size_t lag) {
        double num = 0.0;
        for (std::size_t k = 0; k + lag < n; ++k) {
            num += (series[k] - mean) * (series[k + lag] - mean);
        }
        return num / denom;
    };

    double sumsq = 0.0;
    for (std::size_t lag = 1; lag < m; ++lag) {
        const double rho = acf(lag);
        sumsq += rho * rho;
    }
    const double limit =
        1.645 * std::sqrt((1.0 + 2.0 * sumsq) / static_cast<double>(n));
    return std::abs(acf(m)) > limit;
}

DecompositionResult decompose_multiplicative(std::span<const double> series, int period) {
    require_period(period);
    if (series.empty()) {
        throw std::invalid_argument("decomposition requires a non-empty series");
    }
    const std::size_t n = series.size();
    const std::size_t m = static_cast<std::size_t>(period);

    DecompositionResult result;
    result.indices.assign(m, 1.0);
    result.deseasonalized.assign(series.begin(), series.end());
    if (m < 2) return result;

    const bool positive = std::all_of(series.begin(), series.end(),
                                      [](double v) { return v > 0.0; });
    if (!positive || !seasonality_test(series, period)) return result;
    result.seasonality_detected = true;

    // Centered moving average: a 2xm average when the period is even.
    const std::size_t half = m / 2;
    std::vector<double> sums(m, 0.0);
    std::vector<std::size_t> counts(m, 0);
    for (std::size_t t = half; t + half < n; ++t) {
        double trend;
        if (m % 2 == 0) {
            trend = 0.5 * (series[t - half] + series[t + half]);
            for (std::size_t j = t - half + 1; j < t + half; ++j) trend += series[j];
            trend /= static_cast<double>(m);
        } else {
            trend = 0.0;
            for (std::size_t j = t - half; j <= t + half; ++j) trend += series[j];
            trend /= static_cast<double>(m);
        }
        sums[t % m] += series[t] / trend;
        counts[t % m] += 1;
    }
    double total = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
        if (counts[s] == 0) {
            throw std::invalid_argument("series too short to estimate every seasonal index");
        }
        result.indices[s] = sums[s] / static_cast<double>(counts[s]);
        total += result.indices[s];
    }
    const double norm = static_cast<double>(m) / total;
    for (double& idx : result.indices) idx *= norm;
    for (std::size_t t = 0; t < n; ++t) {
        result.deseasonalized[t] = series[t] / result.indices[t % m];
    }
    return result;
}

std::vector<double> naive2(std::span<const double> insample, int horizon, int period) {
    require_horizon(horizon);
    require_period(period);
    if (insample.empty()) throw std::invalid_argument("naive2 requires a non-empty series");
    const std::size_t n = insample.size();
    const std::size_t m = static_cast<std::size_t>(period);
    if (m > 1 && n < 2 * m) {
        throw std::invalid_argument("naive2 requires at least two full periods, got " +
                                    std::to_string(n) + " values");
    }
    const DecompositionResult dec = decompose_multiplicative(insample, period);
    std::vector<double> out = naive(dec.deseasonalized, horizon);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= dec.indices[(n + i) % m];
    }
    return out;
}

namespace {

struct SesFit {
    double level;
    double sse;
};

SesFit run_ses(std::span<const double> y, double alpha) {
    double level = y[0];
    double sse = 0.0;
    for (std::size_t t = 1; t < y.size(); ++t) {
        const double err = y[t] - level;
        sse += err * err;
        level += alpha * err;
    }
    return {level, sse};
}

}  // namespace

double fit_ses_alpha(std::span<const double> insample) {
    if (insample.size() < 3) {
        throw std::invalid_argument("ses alpha fit requires at least 3 values");
    }
    double best_alpha = 0.01;
    double best_sse = run_ses(insample, 0.01).sse;
    for (int grid = 2; grid <= 99; ++grid) {
        const double alpha = static_cast<double>(grid) / 100.0;
        const double sse = run_ses(insample, alpha).sse;
        if (sse < best_sse) {
            best_sse = sse;
            best_alpha = alpha;
        }
    }
    return best_alpha;
}

std::vector<double> ses(std::span<const double> insample, int horizon, double alpha) {
    require_horizon(horizon);
    if (insample.empty()) throw std::invalid_argument("ses requires a non-empty series");
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("alpha must lie in [0, 1]");
    }
    return std::vector<double>(static_cast<std::size_t>(horizon),
                               run_ses(insample, alpha).level);
}

std::vector<double> ses(std::span<const double> insample, int horizon) {
    return ses(insample, horizon, fit_ses_alpha(insample));
}

std::vector<double> theta(std::span<const double> insample, int horizon, int period) {
    require_horizon(horizon);
    require_period(period);
    const std::size_t n = insample.size();
    if (n < 4) throw std::invalid_argument("theta requires at least 4 values");
    const std::size_t m = static_cast<std::size_t>(period);

    const DecompositionResult dec = decompose_multiplicative(insample, period);
    const std::vector<double>& z = dec.deseasonalized;

    // Theta-0 line: least-squares fit of z against t = 0..n-1.
    const double tbar = 0.5 * static_cast<double>(n - 1);
    double zbar = 0.0;
    for (double v : z) zbar += v;
    zbar /= static_cast<double>(n);
    double sxx = 0.0, sxz = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double dt = static_cast<double>(t) - tbar;
        sxx += dt * dt;
        sxz += dt * (z[t] - zbar);
    }
    if (sxx <= 0.0) throw std::invalid_argument("theta regression is degenerate");
    const double slope = sxz / sxx;
    const double intercept = zbar - slope * tbar;

    // Theta-2 line, extrapolated by exponential smoothing.
    std::vector<double> z2(n);
    for (std::size_t t = 0; t < n; ++t) {
        z2[t] = 2.0 * z[t] - (intercept + slope * static_cast<double>(t));
    }
    const std::vector<double> ses2 = ses(z2, horizon);

    std::vector<double> out(static_cast<std::size_t>(horizon));
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double line = intercept + slope * static_cast<double>(n + i);
        out[i] = 0.5 * (line + ses2[i]) * dec.indices[(n + i) % m];
    }
    return out;
}

}  // namespace nbeats
