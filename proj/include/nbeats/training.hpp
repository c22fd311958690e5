#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nbeats/model.hpp"
#include "nbeats/timeseries.hpp"

namespace nbeats {

enum class Loss { kSmape, kMape, kMase };

std::string loss_name(Loss loss);
Loss parse_loss(const std::string& name);

struct TrainConfig {
    int horizon = 0;  // 0: use the split's own horizon
    int iterations = 15000;
    int batch_size = 1024;
    double learning_rate = 1e-3;
    Loss loss = Loss::kSmape;
    int lookback_multiple = 2;
    std::uint64_t seed = 0;
    int width = 512;
    int layers = 4;
    int blocks = 30;
    bool share_weights = true;
};

struct TrainResult {
    NBeatsModel model;
    std::vector<double> loss_curve;
};

/// Trains one model on a frequency split. The final horizon of every series
/// is held out internally and never sampled, so the returned model has not
/// seen the split's test region. Losses operate in scaled space: each input
/// window and its target are divided by the window maximum, matching the
/// scaling scaled_forecast applies at inference time. Deterministic per
/// seed. Throws when the loss turns non-finite, naming the iteration.
TrainResult train(const CorpusSplit& data, const TrainConfig& cfg);

struct EnsembleSpec {
    std::vector<int> lookbacks = {2, 3, 4, 5, 6, 7};
    std::vector<Loss> losses = {Loss::kSmape, Loss::kMape, Loss::kMase};
    int repeats = 5;

    int member_count() const {
        return static_cast<int>(lookbacks.size() * losses.size()) * repeats;
    }
};

struct EnsembleMember {
    TrainConfig config;
    NBeatsModel model;
    std::vector<double> loss_curve;
};

/// A frozen set of trained members plus the provenance needed to pick the
/// right ensemble for a target frequency.
struct Ensemble {
    std::string source_name;
    Frequency source_frequency = Frequency::kOther;
    int upsample = 1;
    int horizon = 0;
    std::vector<EnsembleMember> members;
};

/// Trains lookbacks x losses x repeats members. Member seeds derive from
/// base.seed and the member index; members train in parallel, one thread per
/// member, and the result is independent of the thread count.
Ensemble train_ensemble(const CorpusSplit& data, const TrainConfig& base,
                        const EnsembleSpec& spec);

/// CRC32 chained over every member's weight digest, in member order.
std::uint32_t ensemble_digest(const Ensemble& ensemble);

/// Elementwise median; an even member count averages the two middle values.
std::vector<double> median_combine(const std::vector<std::vector<double>>& forecasts);

/// Forecast from a raw history of any length: the last lookback() values are
/// windowed (zero left-padding when the history is shorter), scaled,
/// forecast, and truncated to `horizon`. The model horizon must cover it.
std::vector<double> model_forecast(const NBeatsModel& model, std::span<const double> history,
                                   int horizon);

std::vector<double> ensemble_forecast(const Ensemble& ensemble, std::span<const double> history,
                                      int horizon);

}  // namespace nbeats
