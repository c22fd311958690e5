#pragma once

#include <span>
#include <vector>

#include "nbeats/model.hpp"

namespace nbeats {

/// Cumulative input shifts of the residual recursion: mu_0 = 0 and
/// mu_l = x - x_{l+1}, which equals mu_{l-1} + backcast_l.
struct ShiftSequence {
    std::vector<std::vector<double>> mu;  // mu_0 .. mu_L, each of lookback length
};

/// Requires a single-window trace (one batch row).
ShiftSequence extract_shifts(const ForwardTrace& trace);

/// Trunk output f(x) of one block (the fc stack, heads excluded) for a
/// single window.
std::vector<double> trunk_value(const BlockWeights& block, std::span<const double> x);

struct JacobianEstimate {
    Matrix jacobian;            // width x lookback
    double step = 0.0;
    std::vector<double> point;  // evaluation point actually used (after jitter)
};

/// Central-difference Jacobian of the trunk at x0. Points whose ReLU
/// pre-activations sit within 1e-6 of a kink are jittered by up to 1e-4, at
/// most three times, then rejected.
JacobianEstimate jacobian_f(const BlockWeights& block, std::span<const double> x0,
                            double h = 1e-5);

struct LinearizationResult {
    std::vector<double> linearized;
    std::vector<double> full;
    std::vector<Matrix> projections;  // effective G'_1..G'_L, horizon x width
    double residual = 0.0;            // max abs difference
};

/// Scales the backcast heads by eps_scale to enter the small-backcast regime,
/// then compares the network forward against the first-order series
/// y_lin = sum_l G'_l f(x), where G'_1 = G and
/// G'_l = G'_{l-1} (I - J_f(x_{l-1}) Q) along the scaled model's residuals.
/// Shared-weights models only.
LinearizationResult linearized_forecast(const NBeatsModel& model, std::span<const double> x,
                                        double eps_scale, double h = 1e-5);

struct CollapseResult {
    std::vector<double> network;
    std::vector<double> closed_form;
    double max_rel_error = 0.0;  // inf-norm of the difference over the closed form's
};

/// With Identity activations and zero biases the forward collapses to the
/// closed form sum_{l=1..L} G (I - F Q)^{l-1} F x, F being the product of the
/// trunk weight matrices.
CollapseResult linear_collapse_check(const NBeatsModel& model, std::span<const double> x);

/// Least-squares slope of log(residual) against log(scale); the empirical
/// convergence order of the linearization.
double fit_order(std::span<const double> scales, std::span<const double> residuals);

struct ConvergenceStudy {
    std::vector<double> scales;
    std::vector<double> residuals;
    double order = 0.0;
};

ConvergenceStudy linearization_order(const NBeatsModel& model, std::span<const double> x,
                                     std::vector<double> scales, double h = 1e-5);

}  // namespace nbeats
