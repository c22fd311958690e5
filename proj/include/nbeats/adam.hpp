#pragma once

#include <cstdint>
#include <vector>

#include "nbeats/matrix.hpp"

namespace nbeats {

/// Adam with bias-corrected moment estimates. State slots are aligned with
/// the parameter list passed to adam_init; the same ordering must be used on
/// every step.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

void adam_init(AdamState& state, const std::vector<Matrix*>& params);

/// One update step. grads[i] may be null or empty (treated as zero) but when
/// present must match the parameter's shape.
void adam_step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
               AdamState& state, double learning_rate);

}  // namespace nbeats
