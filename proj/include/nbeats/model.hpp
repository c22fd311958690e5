#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nbeats/dense.hpp"
#include "nbeats/matrix.hpp"
#include "nbeats/tape.hpp"

namespace nbeats {

/// One doubly-residual block: a fully connected trunk followed by two
/// bias-free linear heads mapping the trunk output to a backcast of the
/// input window and a partial forecast.
struct BlockWeights {
    std::vector<DenseLayer> fc;
    Matrix backcast_head;  // lookback x width
    Matrix forecast_head;  // horizon x width
};

struct ModelConfig {
    int horizon = 0;
    int lookback_multiple = 0;  // lookback = lookback_multiple * horizon
    int width = 512;
    int layers = 4;
    int blocks = 30;
    bool share_weights = true;
    Activation activation = Activation::kRelu;

    int lookback() const { return lookback_multiple * horizon; }
};

class NBeatsModel {
public:
    NBeatsModel() = default;
    NBeatsModel(ModelConfig config, std::vector<BlockWeights> blocks, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    std::uint64_t seed() const { return seed_; }
    int lookback() const { return config_.lookback(); }
    int horizon() const { return config_.horizon; }

    /// Number of distinct weight sets held (1 when weights are shared).
    std::size_t stored_blocks() const { return blocks_.size(); }

    /// Weights used by logical block l, resolving sharing.
    const BlockWeights& block(int l) const;
    BlockWeights& stored_block(std::size_t i) { return blocks_[i]; }
    const BlockWeights& stored_block(std::size_t i) const { return blocks_[i]; }

    /// All trainable parameters in canonical order: per stored block, fc
    /// weights and biases in depth order, then the backcast and forecast
    /// heads. Checkpoints and optimizer state rely on this ordering.
    std::vector<Matrix*> parameters();
    std::vector<std::pair<std::string, const Matrix*>> named_parameters() const;

private:
    ModelConfig config_;
    std::vector<BlockWeights> blocks_;
    std::uint64_t seed_ = 0;
};

/// Glorot-uniform weights (zero biases) drawn from a single deterministic
/// stream in canonical parameter order.
NBeatsModel build_model(const ModelConfig& config, std::uint64_t seed);

struct BlockOutput {
    Matrix backcast;
    Matrix forecast;
};

/// Runs one block on a batch of (already scaled) input windows.
BlockOutput block_forward(const BlockWeights& block, const Matrix& x);

/// Everything the diagnostics need from a forward pass. block_inputs[l] is
/// the residual input consumed by block l, so block_inputs[0] == input and
/// block_inputs[l] == block_inputs[l-1] - backcasts[l-1].
struct ForwardTrace {
    Matrix input;
    std::vector<Matrix> block_inputs;
    std::vector<Matrix> backcasts;
    std::vector<Matrix> partial_forecasts;
    Matrix forecast;
};

ForwardTrace model_forward(const NBeatsModel& model, const Matrix& x);

/// Tape ids produced by forward_on_tape. param_ids is aligned with
/// NBeatsModel::parameters(); with shared weights every logical block reuses
/// the same leaves, so gradients accumulate across blocks automatically.
struct TapedForward {
    std::vector<ValId> param_ids;
    ValId input = 0;
    ValId forecast = 0;
};

TapedForward forward_on_tape(const NBeatsModel& model, Tape& tape, Matrix x);

/// Forecast for one raw history window of exactly lookback() values:
/// divides by the window maximum (1 when the maximum is not positive), runs
/// the model, multiplies back. Throws on non-finite input or output.
std::vector<double> scaled_forecast(const NBeatsModel& model, std::span<const double> window);

}  // namespace nbeats
