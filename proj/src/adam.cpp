#include "nbeats/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace nbeats {

void adam_init(AdamState& state, const std::vector<Matrix*>& params) {
    state.step = 0;
    state.m.clear();
    state.v.clear();
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const Matrix* p : params) {
        state.m.emplace_back(p->size(), 0.0);
        state.v.emplace_back(p->size(), 0.0);
    }
}

void adam_step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
               AdamState& state, double learning_rate) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: parameter, gradient and state counts differ");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& p = *params[i];
        const Matrix* g = grads[i];
        if (g == nullptr || g->empty()) continue;
        if (!g->same_shape(p)) {
            throw std::invalid_argument("adam_step: gradient shape " + g->shape_str() +
                                        " does not match parameter " + p.shape_str());
        }
        std::vector<double>& m = state.m[i];
        std::vector<double>& v = state.v[i];
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double gk = g->data()[k];
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            p.data()[k] -= learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

}  // namespace nbeats
