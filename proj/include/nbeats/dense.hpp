#pragma once

#include "nbeats/matrix.hpp"
#include "nbeats/tape.hpp"

namespace nbeats {

enum class Activation { kRelu, kIdentity };

/// Fully connected layer y = act(x W^T + b) with weight stored out x in and
/// bias 1 x out.
struct DenseLayer {
    Matrix weight;
    Matrix bias;
    Activation activation = Activation::kRelu;

    std::size_t in_features() const { return weight.cols(); }
    std::size_t out_features() const { return weight.rows(); }
};

/// Tape ids of one dense layer's parameters and output.
struct DenseIds {
    ValId weight = 0;
    ValId bias = 0;
    ValId out = 0;
};

/// Applies a dense layer whose parameters already live on the tape (used for
/// weight sharing, where several applications reuse one pair of leaves).
ValId apply_dense(Tape& tape, ValId input, ValId weight, ValId bias, Activation activation);

/// Copies the layer's parameters onto the tape as fresh leaves and applies it.
DenseIds forward_dense(Tape& tape, const DenseLayer& layer, ValId input);

/// Value-only forward pass, no tape involved.
Matrix dense_value(const DenseLayer& layer, const Matrix& input);

}  // namespace nbeats
