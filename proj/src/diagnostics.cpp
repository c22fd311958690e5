#include "nbeats/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "nbeats/kernels.hpp"
#include "nbeats/rng.hpp"

namespace nbeats {

namespace {

constexpr double kKinkMargin = 1e-6;
constexpr double kJitter = 1e-4;

Matrix row_matrix(std::span<const double> x) {
    return Matrix(1, x.size(), std::vector<double>(x.begin(), x.end()));
}

// Smallest |pre-activation| across every ReLU in the trunk at x, restricted
// to units an input perturbation can actually move. A unit fed only by dead
// ReLUs or zero weights has a locally constant pre-activation, so it cannot
// sit near a crossable kink and is exempt.
double kink_distance(const BlockWeights& block, const Matrix& x) {
    double dist = std::numeric_limits<double>::infinity();
    Matrix h = x;
    std::vector<char> live(h.cols(), 1);
    for (const DenseLayer& layer : block.fc) {
        Matrix pre(h.rows(), layer.out_features(), 0.0);
        kernels::gemm_nt(h, layer.weight, pre);
        std::vector<char> next_live(pre.cols(), 0);
        for (std::size_t j = 0; j < pre.cols(); ++j) {
            pre(0, j) += layer.bias(0, j);
            for (std::size_t k = 0; k < layer.in_features(); ++k) {
                if (live[k] && layer.weight(j, k) != 0.0) {
                    next_live[j] = 1;
                    break;
                }
            }
        }
        if (layer.activation == Activation::kRelu) {
            for (std::size_t j = 0; j < pre.cols(); ++j) {
                if (next_live[j]) dist = std::min(dist, std::abs(pre(0, j)));
                if (pre(0, j) <= 0.0) next_live[j] = 0;
                pre(0, j) = std::max(pre(0, j), 0.0);
            }
        }
        h = std::move(pre);
        live = std::move(next_live);
    }
    return dist;
}

}  // namespace

ShiftSequence extract_shifts(const ForwardTrace& trace) {
    if (trace.input.rows() != 1) {
        throw std::invalid_argument("shift extraction expects a single-window trace");
    }
    const std::size_t t = trace.input.cols();
    const std::size_t blocks = trace.backcasts.size();
    ShiftSequence out;
    out.mu.assign(blocks + 1, std::vector<double>(t, 0.0));
    std::vector<double> residual(trace.input.row(0).begin(), trace.input.row(0).end());
    for (std::size_t l = 0; l < blocks; ++l) {
        for (std::size_t j = 0; j < t; ++j) {
            residual[j] -= trace.backcasts[l](0, j);
            out.mu[l + 1][j] = trace.input(0, j) - residual[j];
        }
    }
    return out;
}

std::vector<double> trunk_value(const BlockWeights& block, std::span<const double> x) {
    Matrix h = row_matrix(x);
    for (const DenseLayer& layer : block.fc) {
        h = dense_value(layer, h);
    }
    return std::vector<double>(h.row(0).begin(), h.row(0).end());
}

JacobianEstimate jacobian_f(const BlockWeights& block, std::span<const double> x0, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("step must be positive");
    if (block.fc.empty()) throw std::invalid_argument("block has no trunk layers");
    if (x0.size() != block.fc.front().in_features()) {
        throw std::invalid_argument("probe point does not match the trunk input size");
    }

    // Jitter draws hash the probe point so retries are decorrelated across
    // points yet the estimate stays reproducible per (point, h).
    std::uint64_t point_hash = 0xD1A6;
    for (const double v : x0) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        point_hash = (point_hash ^ bits) * 0x100000001B3ULL;
    }
    std::vector<double> point(x0.begin(), x0.end());
    bool clear = kink_distance(block, row_matrix(point)) >= kKinkMargin;
    for (int attempt = 0; !clear && attempt < 3; ++attempt) {
        Rng rng(Rng::derive_seed(point_hash, static_cast<std::size_t>(attempt)));
        for (std::size_t j = 0; j < point.size(); ++j) {
            point[j] = x0[j] + rng.uniform(-kJitter, kJitter);
        }
        clear = kink_distance(block, row_matrix(point)) >= kKinkMargin;
    }
    if (!clear) {
        throw std::runtime_error("probe point still within a ReLU kink margin after 3 jitters");
    }

    const std::size_t t = point.size();
    const std::size_t width = block.fc.back().out_features();
    JacobianEstimate est;
    est.step = h;
    est.point = point;
    est.jacobian = Matrix(width, t, 0.0);
    std::vector<double> probe = point;
    for (std::size_t j = 0; j < t; ++j) {
        probe[j] = point[j] + h;
        const std::vector<double> plus = trunk_value(block, probe);
        probe[j] = point[j] - h;
        const std::vector<double> minus = trunk_value(block, probe);
        probe[j] = point[j];
        for (std::size_t i = 0; i < width; ++i) {
            est.jacobian(i, j) = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    return est;
}

LinearizationResult linearized_forecast(const NBeatsModel& model, std::span<const double> x,
                                        double eps_scale, double h) {
    if (!model.config().share_weights) {
        throw std::invalid_argument("linearization expects a shared-weights model");
    }
    if (static_cast<int>(x.size()) != model.lookback()) {
        throw std::invalid_argument("input length does not match the model lookback");
    }

    NBeatsModel scaled = model;
    for (std::size_t i = 0; i < scaled.stored_blocks(); ++i) {
        Matrix& q = scaled.stored_block(i).backcast_head;
        for (std::size_t r = 0; r < q.rows(); ++r) {
            for (std::size_t c = 0; c < q.cols(); ++c) q(r, c) *= eps_scale;
        }
    }

    const ForwardTrace trace = model_forward(scaled, row_matrix(x));
    const BlockWeights& block = scaled.block(0);
    const Matrix& q = block.backcast_head;    // lookback x width, already scaled
    const Matrix& g = block.forecast_head;    // horizon x width
    const std::size_t width = g.cols();
    const std::size_t horizon = g.rows();
    const int blocks = model.config().blocks;

    const Matrix f_row = [&] {
        const std::vector<double> f = trunk_value(block, x);
        return Matrix(1, f.size(), f);
    }();

    LinearizationResult out;
    out.full.assign(trace.forecast.row(0).begin(), trace.forecast.row(0).end());
    out.linearized.assign(horizon, 0.0);

    Matrix g_eff = g;
    for (int l = 0; l < blocks; ++l) {
        if (l > 0) {
            // G'_l = G'_{l-1} (I - J_f(x_{l-1}) Q) at the previous residual input.
            const JacobianEstimate jac =
                jacobian_f(block, trace.block_inputs[static_cast<std::size_t>(l - 1)].row(0), h);
            Matrix jq(width, width, 0.0);
            kernels::gemm_nn(jac.jacobian, q, jq);
            Matrix step(width, width, 0.0);
            for (std::size_t i = 0; i < width; ++i) {
                for (std::size_t j = 0; j < width; ++j) {
                    step(i, j) = (i == j ? 1.0 : 0.0) - jq(i, j);
                }
            }
            Matrix next(horizon, width, 0.0);
            kernels::gemm_nn(g_eff, step, next);
            g_eff = std::move(next);
        }
        out.projections.push_back(g_eff);
        Matrix contrib(1, horizon, 0.0);
        kernels::gemm_nt(f_row, g_eff, contrib);
        for (std::size_t j = 0; j < horizon; ++j) out.linearized[j] += contrib(0, j);
    }

    out.residual = 0.0;
    for (std::size_t j = 0; j < horizon; ++j) {
        out.residual = std::max(out.residual, std::abs(out.linearized[j] - out.full[j]));
    }
    return out;
}

CollapseResult linear_collapse_check(const NBeatsModel& model, std::span<const double> x) {
    if (model.config().activation != Activation::kIdentity) {
        throw std::invalid_argument("collapse check expects Identity activations");
    }
    if (static_cast<int>(x.size()) != model.lookback()) {
        throw std::invalid_argument("input length does not match the model lookback");
    }
    for (std::size_t b = 0; b < model.stored_blocks(); ++b) {
        for (const DenseLayer& layer : model.stored_block(b).fc) {
            for (double v : layer.bias.values()) {
                if (v != 0.0) {
                    throw std::invalid_argument("collapse check expects zero biases");
                }
            }
        }
    }
    if (!model.config().share_weights) {
        throw std::invalid_argument("collapse check expects a shared-weights model");
    }

    const BlockWeights& block = model.block(0);
    // F = W_K ... W_1, built left to right as ((W_2 W_1), ...).
    Matrix f = block.fc.front().weight;
    for (std::size_t k = 1; k < block.fc.size(); ++k) {
        Matrix next(block.fc[k].weight.rows(), f.cols(), 0.0);
        kernels::gemm_nn(block.fc[k].weight, f, next);
        f = std::move(next);
    }
    const Matrix& q = block.backcast_head;   // t x w
    const Matrix& g = block.forecast_head;   // H x w
    const std::size_t width = f.rows();
    const std::size_t horizon = g.rows();

    // v_1 = F x; v_{l+1} = v_l - F (Q v_l); closed = sum_l G v_l.
    const Matrix x_col(x.size(), 1, std::vector<double>(x.begin(), x.end()));
    Matrix v(width, 1, 0.0);
    kernels::gemm_nn(f, x_col, v);
    std::vector<double> closed(horizon, 0.0);
    for (int l = 0; l < model.config().blocks; ++l) {
        Matrix gv(horizon, 1, 0.0);
        kernels::gemm_nn(g, v, gv);
        for (std::size_t j = 0; j < horizon; ++j) closed[j] += gv(j, 0);
        Matrix qv(q.rows(), 1, 0.0);
        kernels::gemm_nn(q, v, qv);
        Matrix fqv(width, 1, 0.0);
        kernels::gemm_nn(f, qv, fqv);
        for (std::size_t i = 0; i < width; ++i) v(i, 0) -= fqv(i, 0);
    }

    const ForwardTrace trace = model_forward(model, row_matrix(x));
    CollapseResult out;
    out.network.assign(trace.forecast.row(0).begin(), trace.forecast.row(0).end());
    out.closed_form = closed;
    double scale = 0.0;
    double diff = 0.0;
    for (std::size_t j = 0; j < horizon; ++j) {
        scale = std::max(scale, std::abs(closed[j]));
        diff = std::max(diff, std::abs(out.network[j] - closed[j]));
    }
    out.max_rel_error = scale > 0.0 ? diff / scale : diff;
    return out;
}

double fit_order(std::span<const double> scales, std::span<const double> residuals) {
    if (scales.size() != residuals.size() || scales.size() < 2) {
        throw std::invalid_argument("order fit needs at least two (scale, residual) pairs");
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(scales.size());
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (!(scales[i] > 0.0) || !(residuals[i] > 0.0)) {
            throw std::invalid_argument("order fit needs positive scales and residuals");
        }
        const double lx = std::log(scales[i]);
        const double ly = std::log(residuals[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceStudy linearization_order(const NBeatsModel& model, std::span<const double> x,
                                     std::vector<double> scales, double h) {
    ConvergenceStudy study;
    study.scales = std::move(scales);
    for (double s : study.scales) {
        study.residuals.push_back(linearized_forecast(model, x, s, h).residual);
    }
    study.order = fit_order(study.scales, study.residuals);
    return study;
}

}  // namespace nbeats
