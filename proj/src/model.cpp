#include "nbeats/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nbeats/kernels.hpp"
#include "nbeats/rng.hpp"

namespace nbeats {

namespace {

void check_config(const ModelConfig& c) {
    if (c.horizon < 1) throw std::invalid_argument("ModelConfig: horizon must be positive");
    if (c.lookback_multiple < 1) {
        throw std::invalid_argument("ModelConfig: lookback_multiple must be positive");
    }
    if (c.width < 1 || c.layers < 1 || c.blocks < 1) {
        throw std::invalid_argument("ModelConfig: width, layers and blocks must be positive");
    }
}

Matrix glorot(std::size_t out, std::size_t in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix w(out, in);
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-limit, limit);
    return w;
}

}  // namespace

NBeatsModel::NBeatsModel(ModelConfig config, std::vector<BlockWeights> blocks, std::uint64_t seed)
    : config_(config), blocks_(std::move(blocks)), seed_(seed) {
    check_config(config_);
    const std::size_t expected = config_.share_weights ? 1 : static_cast<std::size_t>(config_.blocks);
    if (blocks_.size() != expected) {
        throw std::invalid_argument("NBeatsModel: expected " + std::to_string(expected) +
                                    " stored blocks, got " + std::to_string(blocks_.size()));
    }
}

const BlockWeights& NBeatsModel::block(int l) const {
    if (l < 0 || l >= config_.blocks) {
        throw std::out_of_range("NBeatsModel::block: index " + std::to_string(l) + " out of " +
                                std::to_string(config_.blocks));
    }
    return blocks_[config_.share_weights ? 0 : static_cast<std::size_t>(l)];
}

std::vector<Matrix*> NBeatsModel::parameters() {
    std::vector<Matrix*> out;
    for (BlockWeights& b : blocks_) {
        for (DenseLayer& layer : b.fc) {
            out.push_back(&layer.weight);
            out.push_back(&layer.bias);
        }
        out.push_back(&b.backcast_head);
        out.push_back(&b.forecast_head);
    }
    return out;
}

std::vector<std::pair<std::string, const Matrix*>> NBeatsModel::named_parameters() const {
    std::vector<std::pair<std::string, const Matrix*>> out;
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        const std::string prefix = "block" + std::to_string(bi) + ".";
        const BlockWeights& b = blocks_[bi];
        for (std::size_t li = 0; li < b.fc.size(); ++li) {
            out.emplace_back(prefix + "fc" + std::to_string(li) + ".weight", &b.fc[li].weight);
            out.emplace_back(prefix + "fc" + std::to_string(li) + ".bias", &b.fc[li].bias);
        }
        out.emplace_back(prefix + "backcast", &b.backcast_head);
        out.emplace_back(prefix + "forecast", &b.forecast_head);
    }
    return out;
}

NBeatsModel build_model(const ModelConfig& config, std::uint64_t seed) {
    check_config(config);
    Rng rng(seed);
    const std::size_t stored = config.share_weights ? 1 : static_cast<std::size_t>(config.blocks);
    const auto width = static_cast<std::size_t>(config.width);
    const auto lookback = static_cast<std::size_t>(config.lookback());
    const auto horizon = static_cast<std::size_t>(config.horizon);

    std::vector<BlockWeights> blocks(stored);
    for (BlockWeights& b : blocks) {
        b.fc.resize(static_cast<std::size_t>(config.layers));
        for (std::size_t li = 0; li < b.fc.size(); ++li) {
            const std::size_t in = li == 0 ? lookback : width;
            b.fc[li].weight = glorot(width, in, rng);
            b.fc[li].bias = Matrix(1, width);
            b.fc[li].activation = config.activation;
        }
        b.backcast_head = glorot(lookback, width, rng);
        b.forecast_head = glorot(horizon, width, rng);
    }
    return NBeatsModel(config, std::move(blocks), seed);
}

BlockOutput block_forward(const BlockWeights& block, const Matrix& x) {
    if (block.fc.empty()) throw std::invalid_argument("block_forward: block has no layers");
    Matrix hidden = dense_value(block.fc[0], x);
    for (std::size_t li = 1; li < block.fc.size(); ++li) {
        hidden = dense_value(block.fc[li], hidden);
    }
    BlockOutput out;
    out.backcast = Matrix(hidden.rows(), block.backcast_head.rows());
    kernels::gemm_nt(hidden, block.backcast_head, out.backcast);
    out.forecast = Matrix(hidden.rows(), block.forecast_head.rows());
    kernels::gemm_nt(hidden, block.forecast_head, out.forecast);
    return out;
}

ForwardTrace model_forward(const NBeatsModel& model, const Matrix& x) {
    if (x.cols() != static_cast<std::size_t>(model.lookback())) {
        throw std::invalid_argument("model_forward: input has " + std::to_string(x.cols()) +
                                    " columns, lookback is " + std::to_string(model.lookback()));
    }
    ForwardTrace trace;
    trace.input = x;
    Matrix current = x;
    Matrix total(x.rows(), static_cast<std::size_t>(model.horizon()));
    for (int l = 0; l < model.config().blocks; ++l) {
        trace.block_inputs.push_back(current);
        BlockOutput out = block_forward(model.block(l), current);
        for (std::size_t i = 0; i < current.size(); ++i) {
            current.data()[i] -= out.backcast.data()[i];
        }
        for (std::size_t i = 0; i < total.size(); ++i) {
            total.data()[i] += out.forecast.data()[i];
        }
        trace.backcasts.push_back(std::move(out.backcast));
        trace.partial_forecasts.push_back(std::move(out.forecast));
    }
    trace.forecast = std::move(total);
    return trace;
}

TapedForward forward_on_tape(const NBeatsModel& model, Tape& tape, Matrix x) {
    if (x.cols() != static_cast<std::size_t>(model.lookback())) {
        throw std::invalid_argument("forward_on_tape: input has " + std::to_string(x.cols()) +
                                    " columns, lookback is " + std::to_string(model.lookback()));
    }
    TapedForward out;
    out.input = tape.leaf(std::move(x));

    // One leaf per stored parameter, in canonical order.
    struct BlockIds {
        std::vector<std::pair<ValId, ValId>> fc;  // weight, bias
        ValId backcast = 0;
        ValId forecast = 0;
    };
    std::vector<BlockIds> block_ids(model.stored_blocks());
    for (std::size_t bi = 0; bi < model.stored_blocks(); ++bi) {
        const BlockWeights& b = model.stored_block(bi);
        BlockIds& ids = block_ids[bi];
        for (const DenseLayer& layer : b.fc) {
            ValId w = tape.leaf(layer.weight);
            ValId bias = tape.leaf(layer.bias);
            ids.fc.emplace_back(w, bias);
            out.param_ids.push_back(w);
            out.param_ids.push_back(bias);
        }
        ids.backcast = tape.leaf(b.backcast_head);
        ids.forecast = tape.leaf(b.forecast_head);
        out.param_ids.push_back(ids.backcast);
        out.param_ids.push_back(ids.forecast);
    }

    ValId current = out.input;
    ValId total = 0;
    bool have_total = false;
    for (int l = 0; l < model.config().blocks; ++l) {
        const std::size_t bi = model.config().share_weights ? 0 : static_cast<std::size_t>(l);
        const BlockWeights& b = model.stored_block(bi);
        const BlockIds& ids = block_ids[bi];
        ValId hidden = current;
        for (std::size_t li = 0; li < ids.fc.size(); ++li) {
            hidden = apply_dense(tape, hidden, ids.fc[li].first, ids.fc[li].second,
                                 b.fc[li].activation);
        }
        ValId backcast = tape.matmul_nt(hidden, ids.backcast);
        ValId part = tape.matmul_nt(hidden, ids.forecast);
        current = tape.sub(current, backcast);
        total = have_total ? tape.add(total, part) : part;
        have_total = true;
    }
    out.forecast = total;
    return out;
}

std::vector<double> scaled_forecast(const NBeatsModel& model, std::span<const double> window) {
    if (window.size() != static_cast<std::size_t>(model.lookback())) {
        throw std::invalid_argument("scaled_forecast: window has " +
                                    std::to_string(window.size()) + " values, lookback is " +
                                    std::to_string(model.lookback()));
    }
    double scale = 0.0;
    for (double v : window) {
        if (!std::isfinite(v)) throw std::invalid_argument("scaled_forecast: non-finite input");
        scale = std::max(scale, v);
    }
    if (!(scale > 0.0)) scale = 1.0;

    Matrix x(1, window.size());
    for (std::size_t i = 0; i < window.size(); ++i) x(0, i) = window[i] / scale;
    ForwardTrace trace = model_forward(model, x);
    std::vector<double> forecast(trace.forecast.cols());
    for (std::size_t i = 0; i < forecast.size(); ++i) {
        forecast[i] = trace.forecast(0, i) * scale;
        if (!std::isfinite(forecast[i])) {
            throw std::runtime_error("scaled_forecast: model produced a non-finite value");
        }
    }
    return forecast;
}

}  // namespace nbeats
