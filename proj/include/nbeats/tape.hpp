#pragma once

#include <cstdint>
#include <vector>

#include "nbeats/matrix.hpp"

namespace nbeats {

using ValId = std::uint32_t;

/// Reverse-mode gradient tape. Operations append nodes and eagerly compute
/// values; backward() replays the tape in reverse and returns one gradient
/// matrix per node (empty matrices stand for zero gradients of nodes the
/// root does not depend on).
///
/// Node values are computed with the deterministic kernels, so taping the
/// same graph twice yields bit-identical values and gradients.
class Tape {
public:
    Tape() = default;

    std::size_t size() const { return nodes_.size(); }
    const Matrix& value(ValId id) const { return values_.at(id); }

    /// Inputs and parameters. Gradients are collected for leaves like for
    /// any other node.
    ValId leaf(Matrix value);

    /// c = a * b^T. With activations laid out batch-major (rows = batch) and
    /// weights out x in, this is the natural dense-layer product.
    ValId matmul_nt(ValId a, ValId b);

    /// Adds a 1 x n bias row to every row of a.
    ValId add_bias(ValId a, ValId bias);

    ValId relu(ValId a);
    ValId add(ValId a, ValId b);
    ValId sub(ValId a, ValId b);
    ValId scale(ValId a, double factor);

    /// Scalar training losses, averaged over batch rows. Terms whose
    /// denominator falls below the shared epsilon contribute zero while the
    /// per-row divisor stays fixed at the horizon length.
    ValId smape_loss(ValId pred, Matrix target);
    ValId mape_loss(ValId pred, Matrix target);
    /// denominators holds one in-sample naive-error scale per batch row;
    /// rows with a degenerate scale are dropped from the loss.
    ValId mase_loss(ValId pred, Matrix target, std::vector<double> denominators);

    /// Reverse pass from a scalar (1x1) root. Returns gradients indexed by
    /// ValId. Throws if the tape is empty or the root is not scalar.
    std::vector<Matrix> backward(ValId root, double seed = 1.0) const;

private:
    enum class Op : std::uint8_t {
        kLeaf,
        kMatMulNT,
        kAddBias,
        kRelu,
        kAdd,
        kSub,
        kScale,
        kSmapeLoss,
        kMapeLoss,
        kMaseLoss,
    };

    struct Node {
        Op op;
        ValId a = 0;
        ValId b = 0;
        double factor = 0.0;
        Matrix target;                  // loss nodes
        std::vector<double> denoms;     // mase loss
    };

    ValId push(Node node, Matrix value);
    void check_id(ValId id, const char* ctx) const;

    std::vector<Node> nodes_;
    std::vector<Matrix> values_;
};

}  // namespace nbeats
