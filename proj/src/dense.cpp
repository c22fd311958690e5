#include "nbeats/dense.hpp"

#include "nbeats/kernels.hpp"

namespace nbeats {

ValId apply_dense(Tape& tape, ValId input, ValId weight, ValId bias, Activation activation) {
    ValId out = tape.matmul_nt(input, weight);
    out = tape.add_bias(out, bias);
    if (activation == Activation::kRelu) out = tape.relu(out);
    return out;
}

DenseIds forward_dense(Tape& tape, const DenseLayer& layer, ValId input) {
    DenseIds ids;
    ids.weight = tape.leaf(layer.weight);
    ids.bias = tape.leaf(layer.bias);
    ids.out = apply_dense(tape, input, ids.weight, ids.bias, layer.activation);
    return ids;
}

Matrix dense_value(const DenseLayer& layer, const Matrix& input) {
    Matrix out(input.rows(), layer.weight.rows());
    kernels::gemm_nt(input, layer.weight, out);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* row = out.data() + i * out.cols();
        for (std::size_t j = 0; j < out.cols(); ++j) {
            row[j] += layer.bias.data()[j];
            if (layer.activation == Activation::kRelu && row[j] < 0.0) row[j] = 0.0;
        }
    }
    return out;
}

}  // namespace nbeats
