#include "nbeats/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <zlib.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nbeats/adam.hpp"
#include "nbeats/checkpoint.hpp"
#include "nbeats/kernels.hpp"
#include "nbeats/metrics.hpp"
#include "nbeats/rng.hpp"
#include "nbeats/sampling.hpp"
#include "nbeats/tape.hpp"

namespace nbeats {

std::string loss_name(Loss loss) {
    switch (loss) {
        case Loss::kSmape: return "smape";
        case Loss::kMape: return "mape";
        case Loss::kMase: return "mase";
    }
    throw std::invalid_argument("unknown loss");
}

Loss parse_loss(const std::string& name) {
    if (name == "smape") return Loss::kSmape;
    if (name == "mape") return Loss::kMape;
    if (name == "mase") return Loss::kMase;
    throw std::invalid_argument("unknown loss '" + name + "' (expected smape, mape or mase)");
}

namespace {

void validate_config(const TrainConfig& cfg) {
    if (cfg.horizon < 0) throw std::invalid_argument("horizon must be non-negative");
    if (cfg.iterations < 1) throw std::invalid_argument("iterations must be positive");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be positive");
    if (!(cfg.learning_rate >= 0.0)) {
        throw std::invalid_argument("learning_rate must be non-negative");
    }
    if (cfg.lookback_multiple < 2 || cfg.lookback_multiple > 7) {
        throw std::invalid_argument("lookback_multiple must lie in [2, 7]");
    }
    if (cfg.width < 1 || cfg.layers < 1 || cfg.blocks < 1) {
        throw std::invalid_argument("width, layers and blocks must be positive");
    }
}

// Seasonal naive in-sample MAE over the real (unpadded) scaled window
// values. Zero (a dropped loss row) when the window is too short or flat.
double window_mase_scale(const WindowSample& sample, double scale, int m) {
    const std::size_t start = static_cast<std::size_t>(sample.padding);
    const std::size_t n = sample.input.size();
    if (n - start <= static_cast<std::size_t>(m)) return 0.0;
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t j = start + static_cast<std::size_t>(m); j < n; ++j) {
        acc += std::abs(sample.input[j] - sample.input[j - static_cast<std::size_t>(m)]) / scale;
        ++count;
    }
    return acc / static_cast<double>(count);
}

}  // namespace

TrainResult train(const CorpusSplit& data, const TrainConfig& cfg) {
    validate_config(cfg);
    if (data.series.empty()) {
        throw std::invalid_argument("training split " + frequency_name(data.frequency) +
                                    " is empty");
    }
    const int horizon = cfg.horizon > 0 ? cfg.horizon : data.horizon;

    ModelConfig mc;
    mc.horizon = horizon;
    mc.lookback_multiple = cfg.lookback_multiple;
    mc.width = cfg.width;
    mc.layers = cfg.layers;
    mc.blocks = cfg.blocks;
    mc.share_weights = cfg.share_weights;
    NBeatsModel model = build_model(mc, cfg.seed);

    const SplitResult holdout = split(data, SplitMode::kTest);
    Rng sampler(Rng::derive_seed(cfg.seed, 1));

    const int t = mc.lookback();
    const int m = seasonality(data.frequency);
    std::vector<Matrix*> params = model.parameters();
    AdamState adam;
    adam_init(adam, params);

    std::vector<double> curve;
    curve.reserve(static_cast<std::size_t>(cfg.iterations));

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const std::vector<WindowSample> batch =
            sample_batch(holdout.history.series, t, horizon, cfg.batch_size, sampler);
        const std::size_t rows = batch.size();
        Matrix x(rows, static_cast<std::size_t>(t), 0.0);
        Matrix y(rows, static_cast<std::size_t>(horizon), 0.0);
        std::vector<double> denoms(rows, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            const WindowSample& s = batch[i];
            double scale = *std::max_element(s.input.begin(), s.input.end());
            if (!(scale > 0.0)) scale = 1.0;
            for (int j = 0; j < t; ++j) {
                x(i, static_cast<std::size_t>(j)) = s.input[static_cast<std::size_t>(j)] / scale;
            }
            for (int j = 0; j < horizon; ++j) {
                y(i, static_cast<std::size_t>(j)) = s.target[static_cast<std::size_t>(j)] / scale;
            }
            if (cfg.loss == Loss::kMase) denoms[i] = window_mase_scale(s, scale, m);
        }

        Tape tape;
        const TapedForward fwd = forward_on_tape(model, tape, std::move(x));
        ValId loss_id;
        switch (cfg.loss) {
            case Loss::kSmape: loss_id = tape.smape_loss(fwd.forecast, std::move(y)); break;
            case Loss::kMape: loss_id = tape.mape_loss(fwd.forecast, std::move(y)); break;
            case Loss::kMase:
                loss_id = tape.mase_loss(fwd.forecast, std::move(y), std::move(denoms));
                break;
        }
        const double loss_value = tape.value(loss_id)(0, 0);
        if (!std::isfinite(loss_value)) {
            throw std::runtime_error("non-finite training loss at iteration " +
                                     std::to_string(iter));
        }
        curve.push_back(loss_value);

        const std::vector<Matrix> grads = tape.backward(loss_id);
        std::vector<const Matrix*> grad_ptrs(params.size(), nullptr);
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Matrix& g = grads[fwd.param_ids[i]];
            if (!g.values().empty()) grad_ptrs[i] = &g;
        }
        adam_step(params, grad_ptrs, adam, cfg.learning_rate);
    }
    return TrainResult{std::move(model), std::move(curve)};
}

Ensemble train_ensemble(const CorpusSplit& data, const TrainConfig& base,
                        const EnsembleSpec& spec) {
    if (spec.lookbacks.empty() || spec.losses.empty() || spec.repeats < 1) {
        throw std::invalid_argument("ensemble spec must list lookbacks, losses and repeats >= 1");
    }
    std::vector<TrainConfig> configs;
    configs.reserve(static_cast<std::size_t>(spec.member_count()));
    for (int lookback : spec.lookbacks) {
        for (Loss loss : spec.losses) {
            for (int rep = 0; rep < spec.repeats; ++rep) {
                TrainConfig cfg = base;
                cfg.lookback_multiple = lookback;
                cfg.loss = loss;
                cfg.seed = Rng::derive_seed(base.seed, configs.size());
                configs.push_back(cfg);
            }
        }
    }

    Ensemble ensemble;
    ensemble.source_frequency = data.frequency;
    ensemble.horizon = base.horizon > 0 ? base.horizon : data.horizon;
    ensemble.members.resize(configs.size());

    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::min<int>(kernels::workers(), static_cast<int>(configs.size())))
    for (std::size_t i = 0; i < configs.size(); ++i) {
        try {
            TrainResult result = train(data, configs[i]);
            ensemble.members[i] =
                EnsembleMember{configs[i], std::move(result.model), std::move(result.loss_curve)};
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return ensemble;
}

std::uint32_t ensemble_digest(const Ensemble& ensemble) {
    uLong crc = crc32(0L, Z_NULL, 0);
    for (const EnsembleMember& member : ensemble.members) {
        const std::uint32_t digest = model_digest(member.model);
        unsigned char bytes[4];
        std::memcpy(bytes, &digest, sizeof bytes);
        crc = crc32(crc, bytes, sizeof bytes);
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<double> median_combine(const std::vector<std::vector<double>>& forecasts) {
    if (forecasts.empty()) throw std::invalid_argument("median of zero forecasts");
    const std::size_t h = forecasts.front().size();
    for (const std::vector<double>& f : forecasts) {
        if (f.size() != h) throw std::invalid_argument("forecast length mismatch in ensemble");
    }
    std::vector<double> out(h);
    std::vector<double> column(forecasts.size());
    for (std::size_t j = 0; j < h; ++j) {
        for (std::size_t i = 0; i < forecasts.size(); ++i) column[i] = forecasts[i][j];
        std::sort(column.begin(), column.end());
        const std::size_t mid = column.size() / 2;
        out[j] = column.size() % 2 == 1 ? column[mid] : 0.5 * (column[mid - 1] + column[mid]);
    }
    return out;
}

std::vector<double> model_forecast(const NBeatsModel& model, std::span<const double> history,
                                   int horizon) {
    if (history.empty()) throw std::invalid_argument("cannot forecast from an empty history");
    if (horizon < 1) throw std::invalid_argument("horizon must be positive");
    if (model.horizon() < horizon) {
        throw std::invalid_argument("model horizon " + std::to_string(model.horizon()) +
                                    " is shorter than the requested horizon " +
                                    std::to_string(horizon));
    }
    const std::size_t t = static_cast<std::size_t>(model.lookback());
    std::vector<double> window(t, 0.0);
    const std::size_t take = std::min(history.size(), t);
    std::copy(history.end() - static_cast<std::ptrdiff_t>(take), history.end(),
              window.end() - static_cast<std::ptrdiff_t>(take));
    std::vector<double> forecast = scaled_forecast(model, window);
    forecast.resize(static_cast<std::size_t>(horizon));
    return forecast;
}

std::vector<double> ensemble_forecast(const Ensemble& ensemble, std::span<const double> history,
                                      int horizon) {
    if (ensemble.members.empty()) throw std::invalid_argument("ensemble has no members");
    std::vector<std::vector<double>> forecasts;
    forecasts.reserve(ensemble.members.size());
    for (const EnsembleMember& member : ensemble.members) {
        forecasts.push_back(model_forecast(member.model, history, horizon));
    }
    return median_combine(forecasts);
}

}  // namespace nbeats
