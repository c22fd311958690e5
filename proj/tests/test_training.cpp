#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "nbeats/checkpoint.hpp"
#include "nbeats/evaluation.hpp"
#include "nbeats/kernels.hpp"
#include "nbeats/metrics.hpp"
#include "nbeats/synthetic.hpp"
#include "nbeats/training.hpp"

using nbeats::Corpus;
using nbeats::CorpusSplit;
using nbeats::Ensemble;
using nbeats::EnsembleSpec;
using nbeats::Frequency;
using nbeats::Loss;
using nbeats::TrainConfig;

namespace {

Corpus small_corpus(int n_series, std::uint64_t seed, double level_lo = 50.0,
                    double level_hi = 150.0) {
    nbeats::SynthFamily family;
    family.name = "train";
    family.frequency = Frequency::kMonthly;
    family.horizon = 12;
    family.level_min = level_lo;
    family.level_max = level_hi;
    return nbeats::synth_corpus(family, n_series, seed);
}

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.iterations = 30;
    cfg.batch_size = 8;
    cfg.lookback_multiple = 2;
    cfg.width = 16;
    cfg.layers = 2;
    cfg.blocks = 2;
    cfg.seed = 11;
    return cfg;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("nbeats_train_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("loss names") {
    CHECK(nbeats::loss_name(Loss::kSmape) == "smape");
    CHECK(nbeats::parse_loss("mase") == Loss::kMase);
    CHECK(nbeats::parse_loss(nbeats::loss_name(Loss::kMape)) == Loss::kMape);
    CHECK_THROWS_AS(nbeats::parse_loss("mse"), std::invalid_argument);
}

TEST_CASE("training reduces the loss and is reproducible") {
    Corpus corpus = small_corpus(50, 401);
    TrainConfig cfg = tiny_config();
    cfg.iterations = 200;
    cfg.batch_size = 16;
    cfg.width = 32;

    nbeats::TrainResult a = nbeats::train(corpus.splits[0], cfg);
    REQUIRE(a.loss_curve.size() == 200);
    CHECK(a.loss_curve.back() < a.loss_curve.front());
    for (double v : a.loss_curve) CHECK(std::isfinite(v));
    CHECK(a.model.horizon() == 12);
    CHECK(a.model.lookback() == 24);

    nbeats::TrainResult b = nbeats::train(corpus.splits[0], cfg);
    CHECK(nbeats::model_digest(a.model) == nbeats::model_digest(b.model));
    CHECK(a.loss_curve == b.loss_curve);

    TrainConfig other = cfg;
    other.seed = cfg.seed + 1;
    nbeats::TrainResult c = nbeats::train(corpus.splits[0], other);
    CHECK(nbeats::model_digest(a.model) != nbeats::model_digest(c.model));
}

TEST_CASE("zero learning rate leaves the initial weights untouched") {
    Corpus corpus = small_corpus(10, 77);
    TrainConfig cfg = tiny_config();
    cfg.learning_rate = 0.0;
    cfg.iterations = 5;
    nbeats::TrainResult result = nbeats::train(corpus.splits[0], cfg);

    nbeats::ModelConfig mc;
    mc.horizon = 12;
    mc.lookback_multiple = cfg.lookback_multiple;
    mc.width = cfg.width;
    mc.layers = cfg.layers;
    mc.blocks = cfg.blocks;
    mc.share_weights = cfg.share_weights;
    nbeats::NBeatsModel untouched = nbeats::build_model(mc, cfg.seed);
    CHECK(nbeats::model_digest(result.model) == nbeats::model_digest(untouched));
}

TEST_CASE("diverging training aborts with the iteration index") {
    Corpus corpus = small_corpus(10, 78);
    TrainConfig cfg = tiny_config();
    cfg.loss = Loss::kMape;
    cfg.learning_rate = 1e200;
    cfg.iterations = 50;
    CHECK_THROWS_WITH_AS(nbeats::train(corpus.splits[0], cfg), doctest::Contains("iteration"),
                         std::runtime_error);
}

TEST_CASE("config validation") {
    Corpus corpus = small_corpus(5, 79);
    TrainConfig cfg = tiny_config();
    cfg.lookback_multiple = 1;
    CHECK_THROWS_AS(nbeats::train(corpus.splits[0], cfg), std::invalid_argument);
    cfg = tiny_config();
    cfg.iterations = 0;
    CHECK_THROWS_AS(nbeats::train(corpus.splits[0], cfg), std::invalid_argument);
    cfg = tiny_config();
    CorpusSplit empty;
    empty.frequency = Frequency::kMonthly;
    empty.horizon = 12;
    CHECK_THROWS_AS(nbeats::train(empty, cfg), std::invalid_argument);
}

TEST_CASE("mase training runs on every loss") {
    Corpus corpus = small_corpus(10, 80);
    for (Loss loss : {Loss::kSmape, Loss::kMape, Loss::kMase}) {
        TrainConfig cfg = tiny_config();
        cfg.loss = loss;
        cfg.iterations = 10;
        nbeats::TrainResult result = nbeats::train(corpus.splits[0], cfg);
        for (double v : result.loss_curve) CHECK(std::isfinite(v));
    }
}

TEST_CASE("median combination") {
    using V = std::vector<double>;
    CHECK(nbeats::median_combine({V{1}, V{2}, V{9}}) == V{2});
    CHECK(nbeats::median_combine({V{1}, V{3}}) == V{2});
    CHECK(nbeats::median_combine({V{4, 7}}) == V{4, 7});
    CHECK(nbeats::median_combine({V{1, 10}, V{2, 20}, V{3, 30}, V{4, 40}}) == V{2.5, 25});
    // Permutation invariance.
    CHECK(nbeats::median_combine({V{3, 30}, V{1, 10}, V{4, 40}, V{2, 20}}) == V{2.5, 25});
    // Identical members collapse to the member itself.
    CHECK(nbeats::median_combine({V{5, 6}, V{5, 6}, V{5, 6}}) == V{5, 6});
    CHECK_THROWS_AS(nbeats::median_combine({}), std::invalid_argument);
    CHECK_THROWS_AS(nbeats::median_combine({V{1}, V{1, 2}}), std::invalid_argument);
}

TEST_CASE("ensemble training and forecasting") {
    Corpus corpus = small_corpus(12, 500);
    TrainConfig base = tiny_config();
    EnsembleSpec spec;
    spec.lookbacks = {2, 3};
    spec.losses = {Loss::kSmape};
    spec.repeats = 2;
    CHECK(spec.member_count() == 4);

    Ensemble ens = nbeats::train_ensemble(corpus.splits[0], base, spec);
    REQUIRE(ens.members.size() == 4);
    CHECK(ens.source_frequency == Frequency::kMonthly);
    CHECK(ens.horizon == 12);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(ens.members[i].config.seed == nbeats::Rng::derive_seed(base.seed, i));
    }
    CHECK(ens.members[0].config.lookback_multiple == 2);
    CHECK(ens.members[3].config.lookback_multiple == 3);

    SUBCASE("results do not depend on the worker count") {
        const int saved = nbeats::kernels::workers();
        nbeats::kernels::set_workers(3);
        Ensemble again = nbeats::train_ensemble(corpus.splits[0], base, spec);
        nbeats::kernels::set_workers(saved);
        CHECK(nbeats::ensemble_digest(again) == nbeats::ensemble_digest(ens));
    }

    SUBCASE("ensemble forecast matches a hand-built median") {
        const std::vector<double>& history = corpus.splits[0].series[0].values;
        std::vector<std::vector<double>> per_member;
        for (const nbeats::EnsembleMember& member : ens.members) {
            per_member.push_back(nbeats::model_forecast(member.model, history, 12));
        }
        CHECK(nbeats::ensemble_forecast(ens, history, 12) ==
              nbeats::median_combine(per_member));
    }

    SUBCASE("single-member ensemble is that member") {
        Ensemble solo = ens;
        solo.members.resize(1);
        const std::vector<double>& history = corpus.splits[0].series[1].values;
        CHECK(nbeats::ensemble_forecast(solo, history, 12) ==
              nbeats::model_forecast(ens.members[0].model, history, 12));
    }
}

TEST_CASE("model_forecast windowing") {
    nbeats::ModelConfig mc;
    mc.horizon = 8;
    mc.lookback_multiple = 3;
    mc.width = 16;
    mc.layers = 2;
    mc.blocks = 2;
    nbeats::NBeatsModel model = nbeats::build_model(mc, 9);

    std::vector<double> history(40);
    for (std::size_t i = 0; i < history.size(); ++i) history[i] = 10.0 + 0.5 * i;

    // Long history: agrees with scaled_forecast on the exact trailing window.
    std::vector<double> window(history.end() - 24, history.end());
    CHECK(nbeats::model_forecast(model, history, 8) == nbeats::scaled_forecast(model, window));

    // Short history: zero left-padding.
    std::vector<double> shorty(history.begin(), history.begin() + 10);
    std::vector<double> padded(24, 0.0);
    std::copy(shorty.begin(), shorty.end(), padded.begin() + 14);
    CHECK(nbeats::model_forecast(model, shorty, 8) == nbeats::scaled_forecast(model, padded));

    // Truncation keeps the leading values.
    std::vector<double> full = nbeats::model_forecast(model, history, 8);
    std::vector<double> cut = nbeats::model_forecast(model, history, 5);
    CHECK(cut == std::vector<double>(full.begin(), full.begin() + 5));

    CHECK_THROWS_AS(nbeats::model_forecast(model, history, 9), std::invalid_argument);
    CHECK_THROWS_AS(nbeats::model_forecast(model, std::vector<double>{}, 4),
                    std::invalid_argument);
}

TEST_CASE("split evaluation scores against an independent recomputation") {
    Corpus corpus = small_corpus(8, 900);
    TrainConfig base = tiny_config();
    EnsembleSpec spec;
    spec.lookbacks = {2};
    spec.losses = {Loss::kSmape};
    spec.repeats = 3;
    Ensemble ens = nbeats::train_ensemble(corpus.splits[0], base, spec);

    nbeats::SplitEvaluation eval = nbeats::evaluate_split(ens, corpus.splits[0], true);
    const nbeats::SplitMetrics& mt = eval.metrics;
    CHECK(mt.label == "Monthly");
    CHECK(mt.horizon == 12);
    CHECK(mt.n_series == 8);
    CHECK(mt.mase_skipped == 0);

    double smape_acc = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
        const nbeats::TimeSeries& ts = corpus.splits[0].series[i];
        std::vector<double> truth(ts.values.end() - 12, ts.values.end());
        REQUIRE(eval.cache.targets[i] == truth);
        // Elementwise median of the cached member forecasts, by hand.
        std::vector<double> median(12);
        for (int j = 0; j < 12; ++j) {
            std::vector<double> col;
            for (const std::vector<double>& f : eval.cache.member_forecasts[i]) {
                col.push_back(f[static_cast<std::size_t>(j)]);
            }
            std::sort(col.begin(), col.end());
            median[static_cast<std::size_t>(j)] = col[1];
        }
        double s = 0.0;
        for (int j = 0; j < 12; ++j) {
            s += 200.0 / 12.0 * std::abs(truth[j] - median[j]) /
                 (std::abs(truth[j]) + std::abs(median[j]));
        }
        smape_acc += s / 8.0;
    }
    CHECK(mt.smape == doctest::Approx(smape_acc).epsilon(1e-12));
    CHECK(mt.owa == doctest::Approx(0.5 * (mt.smape / mt.naive2_smape +
                                           mt.mase / mt.naive2_mase)).epsilon(1e-12));
    CHECK(mt.nd > 0.0);
}

TEST_CASE("aggregate is recomputable from the rows") {
    nbeats::SplitMetrics a;
    a.label = "Yearly";
    a.n_series = 2;
    a.smape = 10.0;
    a.smape_m3 = 9.0;
    a.mape = 12.0;
    a.mase = 1.0;
    a.nd = 0.1;
    a.naive2_smape = 20.0;
    a.naive2_mase = 2.0;
    a.snaive_smape = 21.0;
    nbeats::SplitMetrics b = a;
    b.label = "Monthly";
    b.n_series = 6;
    b.smape = 30.0;
    b.smape_m3 = 29.0;
    b.mape = 32.0;
    b.mase = 3.0;
    b.nd = 0.3;
    b.naive2_smape = 40.0;
    b.naive2_mase = 4.0;
    b.snaive_smape = 41.0;

    nbeats::SplitMetrics agg = nbeats::aggregate_rows({a, b});
    CHECK(agg.n_series == 8);
    CHECK(agg.smape == doctest::Approx((2 * 10.0 + 6 * 30.0) / 8.0));
    CHECK(agg.mase == doctest::Approx((2 * 1.0 + 6 * 3.0) / 8.0));
    CHECK(agg.naive2_smape == doctest::Approx(35.0));
    CHECK(agg.owa == doctest::Approx(0.5 * (25.0 / 35.0 + 2.5 / 3.5)));
    CHECK_THROWS_AS(nbeats::aggregate_rows({}), std::invalid_argument);
}

TEST_CASE("zero-shot protocol") {
    Corpus source = small_corpus(12, 1000);
    source.name = "source";
    TrainConfig base = tiny_config();
    EnsembleSpec spec;
    spec.lookbacks = {2};
    spec.losses = {Loss::kSmape};
    spec.repeats = 2;
    Ensemble ens =
        nbeats::train_for_selection(source, {Frequency::kMonthly, 1}, 12, base, spec);
    CHECK(ens.source_name == "source");
    CHECK(ens.upsample == 1);

    SUBCASE("on the source itself it reduces to standard evaluation") {
        const std::uint32_t before = nbeats::ensemble_digest(ens);
        nbeats::EvalReport report = nbeats::zero_shot_eval({ens}, source, &source);
        CHECK(nbeats::ensemble_digest(ens) == before);
        REQUIRE(report.rows.size() == 1);
        nbeats::SplitMetrics direct = nbeats::evaluate_split(ens, source.splits[0]).metrics;
        CHECK(report.rows[0].smape == direct.smape);
        CHECK(report.rows[0].mase == direct.mase);
        CHECK(report.rows[0].owa == direct.owa);
        CHECK(report.rows[0].nd == direct.nd);
        CHECK(report.member_count == 2);
        CHECK(report.seeds.size() == 2);
        CHECK(report.config_digest.size() == 8);
        CHECK(report.aggregate.smape == doctest::Approx(report.rows[0].smape));
        // Every source series trivially contains its own tail.
        CHECK(report.overlaps.size() == 12);
    }

    SUBCASE("frequency mapping picks the trained split") {
        Corpus target = small_corpus(4, 2000);
        target.name = "target";
        target.splits[0].frequency = Frequency::kOther;
        target.splits[0].horizon = 8;
        for (nbeats::TimeSeries& ts : target.splits[0].series) {
            ts.frequency = Frequency::kOther;
        }
        // Other maps to Quarterly, which no ensemble covers; the error lists
        // what is available.
        CHECK_THROWS_WITH_AS(nbeats::zero_shot_eval({ens}, target),
                             doctest::Contains("available: Monthly"), std::invalid_argument);

        Ensemble quarterly = ens;
        quarterly.source_frequency = Frequency::kQuarterly;
        nbeats::EvalReport report = nbeats::zero_shot_eval({quarterly}, target);
        REQUIRE(report.rows.size() == 1);
        CHECK(report.rows[0].label == "Other");
        CHECK(report.rows[0].horizon == 8);
    }

    SUBCASE("horizon shortfall is an error") {
        Corpus target = small_corpus(3, 3000);
        target.splits[0].horizon = 18;
        CHECK_THROWS_WITH_AS(nbeats::zero_shot_eval({ens}, target),
                             doctest::Contains("horizon"), std::invalid_argument);
    }
}

TEST_CASE("block sweep") {
    Corpus source = small_corpus(10, 4000);
    Corpus target = small_corpus(6, 5000);
    TrainConfig base = tiny_config();
    base.iterations = 20;
    EnsembleSpec spec;
    spec.lookbacks = {2};
    spec.losses = {Loss::kSmape};
    spec.repeats = 1;

    std::vector<nbeats::SweepRow> rows = nbeats::block_sweep(
        source.splits[0], target.splits[0], {1, 2}, {true, false}, base, spec, 50);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].blocks == 1);
    CHECK(rows[0].share_weights);
    CHECK(rows[3].blocks == 2);
    CHECK_FALSE(rows[3].share_weights);
    for (const nbeats::SweepRow& row : rows) {
        CHECK(row.members == 1);
        // Resampling a single member always reproduces it.
        CHECK(row.bootstrap_std == 0.0);
        CHECK(row.bootstrap_mean == doctest::Approx(row.smape));
        CHECK(std::isfinite(row.smape));
    }

    CHECK_THROWS_AS(nbeats::block_sweep(source.splits[0], target.splits[0], {}, {true}, base,
                                        spec, 50),
                    std::invalid_argument);
}

TEST_CASE("report writers are deterministic") {
    TempDir dir;
    nbeats::EvalReport report;
    report.source_name = "src";
    report.target_name = "tgt";
    nbeats::SplitMetrics row;
    row.label = "Monthly";
    row.horizon = 12;
    row.n_series = 3;
    row.smape = 11.25;
    row.smape_m3 = 11.0;
    row.mape = 13.5;
    row.mase = 0.9;
    row.owa = 0.8;
    row.nd = 0.07;
    row.naive2_smape = 14.0;
    row.naive2_mase = 1.1;
    row.snaive_smape = 15.0;
    report.rows.push_back(row);
    report.aggregate = nbeats::aggregate_rows(report.rows);
    report.member_count = 4;
    report.config_digest = "0012abcd";
    report.seeds = {1, 2, 3, 4};
    report.wall_seconds = 123.0;

    const std::string csv = (dir.path / "report.csv").string();
    const std::string json = (dir.path / "report.json").string();
    nbeats::write_report_csv(report, csv);
    nbeats::write_report_json(report, json);
    const std::string csv_once = slurp(csv);
    const std::string json_once = slurp(json);
    CHECK(csv_once.find("# config_digest=0012abcd") == 0);
    CHECK(csv_once.find("1 2 3 4") != std::string::npos);
    CHECK(csv_once.find("Monthly,12,3,11.25") != std::string::npos);
    CHECK(json_once.find("\"wall\"") == std::string::npos);

    report.wall_seconds = 456.0;  // timestamps and wall-clock never reach the artifacts
    nbeats::write_report_csv(report, csv);
    nbeats::write_report_json(report, json);
    CHECK(slurp(csv) == csv_once);
    CHECK(slurp(json) == json_once);
    CHECK_FALSE(std::filesystem::exists(csv + ".tmp"));

    std::vector<nbeats::SweepRow> sweep(2);
    sweep[0] = {1, true, 6, 12.5, 12.4, 0.3};
    sweep[1] = {16, true, 6, 10.5, 10.6, 0.2};
    const std::string sweep_csv = (dir.path / "sweep.csv").string();
    nbeats::write_sweep_csv(sweep, "00c0ffee", {9, 10}, sweep_csv);
    const std::string sweep_once = slurp(sweep_csv);
    CHECK(sweep_once.find("# config_digest=00c0ffee") == 0);
    CHECK(sweep_once.find("# seeds=9 10") != std::string::npos);
    CHECK(sweep_once.find("blocks,share_weights") != std::string::npos);
    CHECK(sweep_once.find("16,true,6,10.5") != std::string::npos);
    nbeats::write_sweep_csv(sweep, "00c0ffee", {9, 10}, sweep_csv);
    CHECK(slurp(sweep_csv) == sweep_once);
}
