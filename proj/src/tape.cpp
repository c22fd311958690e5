#include "nbeats/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "nbeats/kernels.hpp"
#include "nbeats/metrics.hpp"

namespace nbeats {

namespace {

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_same_shape(const Matrix& a, const Matrix& b, const char* ctx) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(ctx) + ": shape mismatch, " + a.shape_str() +
                                    " vs " + b.shape_str());
    }
}

}  // namespace

ValId Tape::push(Node node, Matrix value) {
    nodes_.push_back(std::move(node));
    values_.push_back(std::move(value));
    return static_cast<ValId>(nodes_.size() - 1);
}

void Tape::check_id(ValId id, const char* ctx) const {
    if (id >= nodes_.size()) {
        throw std::out_of_range(std::string(ctx) + ": value id " + std::to_string(id) +
                                " not on tape");
    }
}

ValId Tape::leaf(Matrix value) {
    if (value.empty()) throw std::invalid_argument("Tape::leaf: empty matrix");
    return push({Op::kLeaf}, std::move(value));
}

ValId Tape::matmul_nt(ValId a, ValId b) {
    check_id(a, "matmul_nt");
    check_id(b, "matmul_nt");
    const Matrix& va = values_[a];
    const Matrix& vb = values_[b];
    Matrix out(va.rows(), vb.rows());
    kernels::gemm_nt(va, vb, out);
    return push({Op::kMatMulNT, a, b}, std::move(out));
}

ValId Tape::add_bias(ValId a, ValId bias) {
    check_id(a, "add_bias");
    check_id(bias, "add_bias");
    const Matrix& va = values_[a];
    const Matrix& vb = values_[bias];
    if (vb.rows() != 1 || vb.cols() != va.cols()) {
        throw std::invalid_argument("add_bias: bias must be 1x" + std::to_string(va.cols()) +
                                    ", got " + vb.shape_str());
    }
    Matrix out = va;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* row = out.data() + i * out.cols();
        for (std::size_t j = 0; j < out.cols(); ++j) row[j] += vb.data()[j];
    }
    return push({Op::kAddBias, a, bias}, std::move(out));
}

ValId Tape::relu(ValId a) {
    check_id(a, "relu");
    Matrix out = values_[a];
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out.data()[i] < 0.0) out.data()[i] = 0.0;
    }
    return push({Op::kRelu, a}, std::move(out));
}

ValId Tape::add(ValId a, ValId b) {
    check_id(a, "add");
    check_id(b, "add");
    check_same_shape(values_[a], values_[b], "add");
    Matrix out = values_[a];
    const double* pb = values_[b].data();
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += pb[i];
    return push({Op::kAdd, a, b}, std::move(out));
}

ValId Tape::sub(ValId a, ValId b) {
    check_id(a, "sub");
    check_id(b, "sub");
    check_same_shape(values_[a], values_[b], "sub");
    Matrix out = values_[a];
    const double* pb = values_[b].data();
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= pb[i];
    return push({Op::kSub, a, b}, std::move(out));
}

ValId Tape::scale(ValId a, double factor) {
    check_id(a, "scale");
    Matrix out = values_[a];
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= factor;
    Node node{Op::kScale, a};
    node.factor = factor;
    return push(std::move(node), std::move(out));
}

ValId Tape::smape_loss(ValId pred, Matrix target) {
    check_id(pred, "smape_loss");
    const Matrix& p = values_[pred];
    check_same_shape(p, target, "smape_loss");
    const std::size_t batch = p.rows();
    const std::size_t h = p.cols();
    double total = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < h; ++j) {
            const double y = target(i, j);
            const double f = p(i, j);
            const double denom = std::abs(y) + std::abs(f);
            if (denom >= metrics::kDenomEpsilon) row += std::abs(y - f) / denom;
        }
        total += 200.0 / static_cast<double>(h) * row;
    }
    Node node{Op::kSmapeLoss, pred};
    node.target = std::move(target);
    return push(std::move(node), Matrix(1, 1, total / static_cast<double>(batch)));
}

ValId Tape::mape_loss(ValId pred, Matrix target) {
    check_id(pred, "mape_loss");
    const Matrix& p = values_[pred];
    check_same_shape(p, target, "mape_loss");
    const std::size_t batch = p.rows();
    const std::size_t h = p.cols();
    double total = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < h; ++j) {
            const double y = target(i, j);
            const double ay = std::abs(y);
            if (ay >= metrics::kDenomEpsilon) row += std::abs(y - p(i, j)) / ay;
        }
        total += 100.0 / static_cast<double>(h) * row;
    }
    Node node{Op::kMapeLoss, pred};
    node.target = std::move(target);
    return push(std::move(node), Matrix(1, 1, total / static_cast<double>(batch)));
}

ValId Tape::mase_loss(ValId pred, Matrix target, std::vector<double> denominators) {
    check_id(pred, "mase_loss");
    const Matrix& p = values_[pred];
    check_same_shape(p, target, "mase_loss");
    if (denominators.size() != p.rows()) {
        throw std::invalid_argument("mase_loss: need one denominator per batch row");
    }
    const std::size_t batch = p.rows();
    const std::size_t h = p.cols();
    double total = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const double q = denominators[i];
        if (q < metrics::kDenomEpsilon) continue;
        double row = 0.0;
        for (std::size_t j = 0; j < h; ++j) row += std::abs(target(i, j) - p(i, j));
        total += row / (q * static_cast<double>(h));
    }
    Node node{Op::kMaseLoss, pred};
    node.target = std::move(target);
    node.denoms = std::move(denominators);
    return push(std::move(node), Matrix(1, 1, total / static_cast<double>(batch)));
}

std::vector<Matrix> Tape::backward(ValId root, double seed) const {
    if (nodes_.empty()) throw std::logic_error("Tape::backward: tape is empty");
    check_id(root, "backward");
    const Matrix& rv = values_[root];
    if (rv.rows() != 1 || rv.cols() != 1) {
        throw std::invalid_argument("Tape::backward: root must be scalar, got " + rv.shape_str());
    }

    std::vector<Matrix> grads(nodes_.size());
    auto grad_of = [&](ValId id) -> Matrix& {
        if (grads[id].empty()) grads[id] = Matrix(values_[id].rows(), values_[id].cols());
        return grads[id];
    };
    grad_of(root)(0, 0) = seed;

    for (std::size_t idx = nodes_.size(); idx-- > 0;) {
        const ValId id = static_cast<ValId>(idx);
        if (grads[id].empty()) continue;
        const Node& node = nodes_[idx];
        const Matrix& g = grads[id];
        switch (node.op) {
            case Op::kLeaf:
                break;
            case Op::kMatMulNT: {
                // c = a * b^T: da = g * b, db = g^T * a
                Matrix da(values_[node.a].rows(), values_[node.a].cols());
                kernels::gemm_nn(g, values_[node.b], da);
                Matrix& ga = grad_of(node.a);
                for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += da.data()[i];
                Matrix db(values_[node.b].rows(), values_[node.b].cols());
                kernels::gemm_tn(g, values_[node.a], db);
                Matrix& gb = grad_of(node.b);
                for (std::size_t i = 0; i < gb.size(); ++i) gb.data()[i] += db.data()[i];
                break;
            }
            case Op::kAddBias: {
                Matrix& ga = grad_of(node.a);
                for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g.data()[i];
                std::vector<double> col;
                kernels::colsum(g, col);
                Matrix& gb = grad_of(node.b);
                for (std::size_t j = 0; j < col.size(); ++j) gb.data()[j] += col[j];
                break;
            }
            case Op::kRelu: {
                const Matrix& in = values_[node.a];
                Matrix& ga = grad_of(node.a);
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    if (in.data()[i] > 0.0) ga.data()[i] += g.data()[i];
                }
                break;
            }
            case Op::kAdd: {
                Matrix& ga = grad_of(node.a);
                for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g.data()[i];
                Matrix& gb = grad_of(node.b);
                for (std::size_t i = 0; i < gb.size(); ++i) gb.data()[i] += g.data()[i];
                break;
            }
            case Op::kSub: {
                Matrix& ga = grad_of(node.a);
                for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g.data()[i];
                Matrix& gb = grad_of(node.b);
                for (std::size_t i = 0; i < gb.size(); ++i) gb.data()[i] -= g.data()[i];
                break;
            }
            case Op::kScale: {
                Matrix& ga = grad_of(node.a);
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    ga.data()[i] += node.factor * g.data()[i];
                }
                break;
            }
            case Op::kSmapeLoss: {
                const double gout = g(0, 0);
                const Matrix& p = values_[node.a];
                const std::size_t batch = p.rows();
                const std::size_t h = p.cols();
                const double coef = gout * 200.0 / (static_cast<double>(h) * batch);
                Matrix& ga = grad_of(node.a);
                for (std::size_t i = 0; i < batch; ++i) {
                    for (std::size_t j = 0; j < h; ++j) {
                        const double y = node.target(i, j);
                        const double f = p(i, j);
                        const double denom = std::abs(y) + std::abs(f);
                        if (denom < metrics::kDenomEpsilon) continue;
                        const double num = std::abs(y - f);
                        ga(i, j) += coef * (sgn(f - y) * denom - num * sgn(f)) / (denom * denom);
                    }
                }
                break;
            }
            case Op::kMapeLoss: {
                const double gout = g(0, 0);
                const Matrix& p = values_[node.a];
                const std::size_t batch = p.rows();
                const std::size_t h = p.cols();
                const double coef = gout * 100.0 / (static_cast<double>(h) * batch);
                Matrix& ga = grad_of(node.a);
                for (std::size_t i = 0; i < batch; ++i) {
                    for (std::size_t j = 0; j < h; ++j) {
                        const double y = node.target(i, j);
                        const double ay = std::abs(y);
                        if (ay < metrics::kDenomEpsilon) continue;
                        ga(i, j) += coef * sgn(p(i, j) - y) / ay;
                    }
                }
                break;
            }
            case Op::kMaseLoss: {
                const double gout = g(0, 0);
                const Matrix& p = values_[node.a];
                const std::size_t batch = p.rows();
                const std::size_t h = p.cols();
                const double coef = gout / (static_cast<double>(h) * batch);
                Matrix& ga = grad_of(node.a);
                for (std::size_t i = 0; i < batch; ++i) {
                    const double q = node.denoms[i];
                    if (q < metrics::kDenomEpsilon) continue;
                    for (std::size_t j = 0; j < h; ++j) {
                        ga(i, j) += coef * sgn(p(i, j) - node.target(i, j)) / q;
                    }
                }
                break;
            }
        }
    }
    return grads;
}

}  // namespace nbeats
