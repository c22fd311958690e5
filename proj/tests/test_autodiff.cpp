#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "nbeats/adam.hpp"
#include "nbeats/dense.hpp"
#include "nbeats/matrix.hpp"
#include "nbeats/metrics.hpp"
#include "nbeats/rng.hpp"
#include "nbeats/tape.hpp"

using nbeats::Matrix;
using nbeats::Rng;
using nbeats::Tape;
using nbeats::ValId;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

// Builds the graph from leaf values and returns the scalar root.
using GraphBuilder = std::function<ValId(Tape&, const std::vector<Matrix>&, std::vector<ValId>&)>;

double eval_graph(const GraphBuilder& build, const std::vector<Matrix>& leaves) {
    Tape tape;
    std::vector<ValId> ids;
    ValId root = build(tape, leaves, ids);
    return tape.value(root)(0, 0);
}

// Central finite differences against the tape gradient, entry by entry.
void check_gradients(const GraphBuilder& build, std::vector<Matrix> leaves, double tol,
                     double h = 1e-6) {
    Tape tape;
    std::vector<ValId> ids;
    ValId root = build(tape, leaves, ids);
    std::vector<Matrix> grads = tape.backward(root);

    for (std::size_t li = 0; li < leaves.size(); ++li) {
        const Matrix& g = grads[ids[li]];
        REQUIRE_FALSE(g.empty());
        for (std::size_t i = 0; i < leaves[li].size(); ++i) {
            std::vector<Matrix> plus = leaves;
            std::vector<Matrix> minus = leaves;
            plus[li].data()[i] += h;
            minus[li].data()[i] -= h;
            const double fd = (eval_graph(build, plus) - eval_graph(build, minus)) / (2.0 * h);
            const double scale = std::max({1.0, std::abs(fd), std::abs(g.data()[i])});
            CHECK(std::abs(g.data()[i] - fd) <= tol * scale);
        }
    }
}

}  // namespace

TEST_CASE("elementwise op values") {
    Tape tape;
    ValId a = tape.leaf(Matrix(2, 2, {1.0, -2.0, 3.0, -4.0}));
    ValId b = tape.leaf(Matrix(2, 2, {0.5, 0.5, 0.5, 0.5}));
    CHECK(tape.value(tape.relu(a)) == Matrix(2, 2, {1.0, 0.0, 3.0, 0.0}));
    CHECK(tape.value(tape.add(a, b)) == Matrix(2, 2, {1.5, -1.5, 3.5, -3.5}));
    CHECK(tape.value(tape.sub(a, b)) == Matrix(2, 2, {0.5, -2.5, 2.5, -4.5}));
    CHECK(tape.value(tape.scale(a, -2.0)) == Matrix(2, 2, {-2.0, 4.0, -6.0, 8.0}));
    ValId bias = tape.leaf(Matrix(1, 2, {10.0, 20.0}));
    CHECK(tape.value(tape.add_bias(a, bias)) == Matrix(2, 2, {11.0, 18.0, 13.0, 16.0}));
}

TEST_CASE("loss values agree with the metric functions") {
    Rng rng(21);
    Matrix pred = random_matrix(4, 6, rng, 0.5, 2.0);
    Matrix target = random_matrix(4, 6, rng, 0.5, 2.0);

    Tape tape;
    ValId p = tape.leaf(pred);

    double want_smape = 0.0, want_mape = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        want_smape += nbeats::metrics::smape(target.row(i), pred.row(i)) / 4.0;
        want_mape += nbeats::metrics::mape(target.row(i), pred.row(i)) / 4.0;
    }
    CHECK(tape.value(tape.smape_loss(p, target))(0, 0) == doctest::Approx(want_smape).epsilon(1e-12));
    CHECK(tape.value(tape.mape_loss(p, target))(0, 0) == doctest::Approx(want_mape).epsilon(1e-12));

    std::vector<double> denoms = {0.5, 1.0, 2.0, 4.0};
    double want_mase = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        double mae = 0.0;
        for (std::size_t j = 0; j < 6; ++j) mae += std::abs(target(i, j) - pred(i, j)) / 6.0;
        want_mase += mae / denoms[i] / 4.0;
    }
    CHECK(tape.value(tape.mase_loss(p, target, denoms))(0, 0) ==
          doctest::Approx(want_mase).epsilon(1e-12));
}

TEST_CASE("guarded loss terms contribute zero") {
    Tape tape;
    ValId p = tape.leaf(Matrix(1, 2, {0.0, 1.0}));
    Matrix target(1, 2, {0.0, 1.5});
    // First column has |y| + |f| = 0: only the second contributes, divisor stays 2.
    const double expect = 200.0 / 2.0 * (0.5 / 2.5);
    CHECK(tape.value(tape.smape_loss(p, target))(0, 0) == doctest::Approx(expect));

    ValId p2 = tape.leaf(Matrix(1, 2, {2.0, 1.0}));
    Matrix target2(1, 2, {0.0, 2.0});
    const double expect_mape = 100.0 / 2.0 * (1.0 / 2.0);
    CHECK(tape.value(tape.mape_loss(p2, target2))(0, 0) == doctest::Approx(expect_mape));

    // Degenerate per-row scale drops the whole row.
    ValId p3 = tape.leaf(Matrix(2, 2, {1.0, 1.0, 3.0, 3.0}));
    Matrix target3(2, 2, {2.0, 2.0, 4.0, 4.0});
    const double got = tape.value(tape.mase_loss(p3, target3, {0.0, 2.0}))(0, 0);
    CHECK(got == doctest::Approx(0.5 * (1.0 / 2.0)));
}

TEST_CASE("gradients match central finite differences through a dense chain") {
    Rng rng(33);
    // Keep preactivations away from the relu kink and targets well above the
    // denominator guard so finite differences are clean.
    Matrix x = random_matrix(3, 4, rng, 0.5, 1.5);
    Matrix w1 = random_matrix(5, 4, rng, 0.2, 0.9);
    Matrix b1 = random_matrix(1, 5, rng, 0.3, 0.8);
    Matrix g = random_matrix(6, 5, rng, 0.2, 0.9);
    Matrix target = random_matrix(3, 6, rng, 2.0, 4.0);

    for (int which : {0, 1, 2}) {
        GraphBuilder build = [&, which](Tape& tape, const std::vector<Matrix>& leaves,
                                        std::vector<ValId>& ids) {
            ids.push_back(tape.leaf(leaves[0]));
            ids.push_back(tape.leaf(leaves[1]));
            ids.push_back(tape.leaf(leaves[2]));
            ids.push_back(tape.leaf(leaves[3]));
            ValId h1 = tape.relu(tape.add_bias(tape.matmul_nt(ids[0], ids[1]), ids[2]));
            ValId p1 = tape.matmul_nt(h1, ids[3]);
            ValId p2 = tape.add(tape.scale(p1, 0.75), tape.scale(p1, 0.5));
            ValId pred = tape.sub(p2, tape.scale(p1, 0.25));
            switch (which) {
                case 0: return tape.smape_loss(pred, target);
                case 1: return tape.mape_loss(pred, target);
                default: return tape.mase_loss(pred, target, {0.7, 1.3, 2.1});
            }
        };
        check_gradients(build, {x, w1, b1, g}, 1e-6);
    }
}

TEST_CASE("relu gradient is zero at exactly zero input") {
    Tape tape;
    ValId x = tape.leaf(Matrix(1, 3, {0.0, 1.0, -1.0}));
    ValId r = tape.relu(x);
    ValId loss = tape.mape_loss(r, Matrix(1, 3, {2.0, 2.0, 2.0}));
    std::vector<Matrix> grads = tape.backward(loss);
    CHECK(grads[x](0, 0) == 0.0);
    CHECK(grads[x](0, 1) != 0.0);
    CHECK(grads[x](0, 2) == 0.0);
}

TEST_CASE("shared leaves accumulate gradients") {
    // f(w) = sum over both uses of w; gradient doubles relative to one use.
    Matrix x(1, 2, {1.0, 2.0});
    Matrix w(2, 2, {0.3, 0.4, 0.1, 0.2});
    Matrix target(1, 2, {5.0, 5.0});

    Tape tape;
    ValId xi = tape.leaf(x);
    ValId wi = tape.leaf(w);
    ValId once = tape.matmul_nt(xi, wi);
    ValId twice = tape.add(once, tape.matmul_nt(xi, wi));
    ValId loss = tape.mape_loss(twice, target);
    std::vector<Matrix> grads = tape.backward(loss);

    Tape tape2;
    ValId xi2 = tape2.leaf(x);
    ValId wi2 = tape2.leaf(w);
    ValId single = tape2.scale(tape2.matmul_nt(xi2, wi2), 2.0);
    ValId loss2 = tape2.mape_loss(single, target);
    std::vector<Matrix> grads2 = tape2.backward(loss2);

    REQUIRE_FALSE(grads[wi].empty());
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(grads[wi].data()[i] == doctest::Approx(grads2[wi2].data()[i]).epsilon(1e-13));
    }
}

TEST_CASE("taping the same graph twice is bit-identical") {
    Rng rng(55);
    Matrix x = random_matrix(4, 6, rng);
    Matrix w = random_matrix(8, 6, rng);
    Matrix b = random_matrix(1, 8, rng);
    Matrix head = random_matrix(3, 8, rng);
    Matrix target = random_matrix(4, 3, rng, 1.0, 2.0);

    auto run = [&](std::vector<double>& values, std::vector<Matrix>& grads) {
        Tape tape;
        ValId xi = tape.leaf(x);
        ValId wi = tape.leaf(w);
        ValId bi = tape.leaf(b);
        ValId hi = tape.leaf(head);
        ValId pred = tape.matmul_nt(tape.relu(tape.add_bias(tape.matmul_nt(xi, wi), bi)), hi);
        ValId loss = tape.smape_loss(pred, target);
        values.push_back(tape.value(loss)(0, 0));
        grads = tape.backward(loss);
    };
    std::vector<double> v1, v2;
    std::vector<Matrix> g1, g2;
    run(v1, g1);
    run(v2, g2);
    CHECK(v1 == v2);
    REQUIRE(g1.size() == g2.size());
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("backward error contracts") {
    Tape empty;
    CHECK_THROWS_AS(empty.backward(0), std::logic_error);

    Tape tape;
    ValId x = tape.leaf(Matrix(2, 2, 1.0));
    CHECK_THROWS_AS(tape.backward(x), std::invalid_argument);
    CHECK_THROWS_AS(tape.backward(57), std::out_of_range);
    CHECK_THROWS_AS(tape.matmul_nt(x, 9), std::out_of_range);

    ValId p = tape.leaf(Matrix(2, 3, 1.0));
    CHECK_THROWS_AS(tape.smape_loss(p, Matrix(2, 2, 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(tape.mase_loss(p, Matrix(2, 3, 1.0), {1.0}), std::invalid_argument);
}

TEST_CASE("forward_dense wires a layer onto the tape") {
    nbeats::DenseLayer layer;
    layer.weight = Matrix(2, 3, {1.0, 0.0, 0.0, 0.0, 1.0, 0.0});
    layer.bias = Matrix(1, 2, {0.5, -10.0});
    layer.activation = nbeats::Activation::kRelu;

    Tape tape;
    ValId x = tape.leaf(Matrix(1, 3, {1.0, 2.0, 3.0}));
    nbeats::DenseIds ids = nbeats::forward_dense(tape, layer, x);
    const Matrix& out = tape.value(ids.out);
    CHECK(out(0, 0) == doctest::Approx(1.5));
    CHECK(out(0, 1) == doctest::Approx(0.0));

    nbeats::DenseLayer identity = layer;
    identity.activation = nbeats::Activation::kIdentity;
    Matrix value = nbeats::dense_value(identity, Matrix(1, 3, {1.0, 2.0, 3.0}));
    CHECK(value(0, 1) == doctest::Approx(-8.0));
}

TEST_CASE("adam converges on a quadratic and respects the step size") {
    Matrix w(1, 3, {5.0, -4.0, 2.5});
    const Matrix c(1, 3, {1.0, 2.0, -3.0});
    std::vector<Matrix*> params = {&w};
    nbeats::AdamState state;
    nbeats::adam_init(state, params);

    Matrix grad(1, 3);
    for (int step = 0; step < 4000; ++step) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            grad.data()[i] = 2.0 * (w.data()[i] - c.data()[i]);
        }
        std::vector<const Matrix*> grads = {&grad};
        nbeats::adam_step(params, grads, state, 1e-2);
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
        CHECK(w.data()[i] == doctest::Approx(c.data()[i]).epsilon(1e-3));
    }

    // With bias correction the very first update has magnitude close to the
    // learning rate when the gradient is far from zero.
    Matrix w2(1, 1, {10.0});
    std::vector<Matrix*> params2 = {&w2};
    nbeats::AdamState state2;
    nbeats::adam_init(state2, params2);
    Matrix g2(1, 1, {3.0});
    std::vector<const Matrix*> grads2 = {&g2};
    nbeats::adam_step(params2, grads2, state2, 1e-3);
    CHECK(std::abs(10.0 - w2(0, 0)) == doctest::Approx(1e-3).epsilon(1e-4));
}
