#include "nbeats/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "nbeats/baselines.hpp"
#include "nbeats/kernels.hpp"
#include "nbeats/metrics.hpp"
#include "nbeats/rng.hpp"
#include "internal_io.hpp"

namespace nbeats {

namespace {

double ratio_owa(double smape_value, double mase_value, double ref_smape, double ref_mase) {
    if (!(ref_smape > 0.0) || !(ref_mase > 0.0)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return metrics::owa(smape_value, mase_value, ref_smape, ref_mase);
}

using detail::atomic_write;
using detail::digest_hex;
using detail::fmt_double;

}  // namespace

SplitMetrics aggregate_rows(const std::vector<SplitMetrics>& rows) {
    if (rows.empty()) throw std::invalid_argument("cannot aggregate an empty report");
    SplitMetrics agg;
    agg.label = "aggregate";
    double mase_weight = 0.0;
    for (const SplitMetrics& row : rows) {
        const double w = static_cast<double>(row.n_series);
        const double wm = static_cast<double>(row.n_series - row.mase_skipped);
        agg.n_series += row.n_series;
        agg.mase_skipped += row.mase_skipped;
        agg.smape += w * row.smape;
        agg.smape_m3 += w * row.smape_m3;
        agg.mape += w * row.mape;
        agg.nd += w * row.nd;
        agg.naive2_smape += w * row.naive2_smape;
        agg.snaive_smape += w * row.snaive_smape;
        agg.mase += wm * row.mase;
        agg.naive2_mase += wm * row.naive2_mase;
        mase_weight += wm;
    }
    const double total = static_cast<double>(agg.n_series);
    agg.smape /= total;
    agg.smape_m3 /= total;
    agg.mape /= total;
    agg.nd /= total;
    agg.naive2_smape /= total;
    agg.snaive_smape /= total;
    if (mase_weight > 0.0) {
        agg.mase /= mase_weight;
        agg.naive2_mase /= mase_weight;
    }
    agg.owa = ratio_owa(agg.smape, agg.mase, agg.naive2_smape, agg.naive2_mase);
    return agg;
}

SplitEvaluation evaluate_split(const Ensemble& ensemble, const CorpusSplit& target,
                               bool keep_cache) {
    if (ensemble.members.empty()) throw std::invalid_argument("ensemble has no members");
    if (ensemble.horizon < target.horizon) {
        throw std::invalid_argument("ensemble horizon " + std::to_string(ensemble.horizon) +
                                    " cannot serve target horizon " +
                                    std::to_string(target.horizon));
    }
    const SplitResult holdout = split(target, SplitMode::kTest);
    const std::size_t n = holdout.history.series.size();
    const int h = target.horizon;
    const int m = seasonality(target.frequency);

    struct SeriesScore {
        std::vector<std::vector<double>> member_forecasts;
        std::vector<double> forecast;
        double smape = 0.0, smape_m3 = 0.0, mape = 0.0;
        double naive2_smape = 0.0, snaive_smape = 0.0;
        double mase = 0.0, naive2_mase = 0.0;
        bool mase_ok = false;
    };
    std::vector<SeriesScore> scores(n);

    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8) num_threads(kernels::workers())
    for (std::size_t i = 0; i < n; ++i) {
        try {
            const std::vector<double>& history = holdout.history.series[i].values;
            const std::vector<double>& truth = holdout.held_out[i];
            SeriesScore& sc = scores[i];
            sc.member_forecasts.reserve(ensemble.members.size());
            for (const EnsembleMember& member : ensemble.members) {
                sc.member_forecasts.push_back(model_forecast(member.model, history, h));
            }
            sc.forecast = median_combine(sc.member_forecasts);

            const std::vector<double> ref2 = naive2(history, h, m);
            const std::vector<double> snaive = seasonal_naive(history, h, m);
            sc.smape = metrics::smape(truth, sc.forecast);
            sc.smape_m3 = metrics::smape_m3(truth, sc.forecast);
            sc.mape = metrics::mape(truth, sc.forecast);
            sc.naive2_smape = metrics::smape(truth, ref2);
            sc.snaive_smape = metrics::smape(truth, snaive);
            try {
                sc.mase = metrics::mase(truth, sc.forecast, history, m);
                sc.naive2_mase = metrics::mase(truth, ref2, history, m);
                sc.mase_ok = true;
            } catch (const std::invalid_argument&) {
                sc.mase_ok = false;
            }
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    SplitEvaluation out;
    SplitMetrics& mt = out.metrics;
    mt.label = frequency_name(target.frequency);
    mt.horizon = h;
    mt.n_series = n;
    std::vector<std::vector<double>> truths, forecasts;
    std::size_t mase_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const SeriesScore& sc = scores[i];
        mt.smape += sc.smape;
        mt.smape_m3 += sc.smape_m3;
        mt.mape += sc.mape;
        mt.naive2_smape += sc.naive2_smape;
        mt.snaive_smape += sc.snaive_smape;
        if (sc.mase_ok) {
            mt.mase += sc.mase;
            mt.naive2_mase += sc.naive2_mase;
            ++mase_count;
        }
        truths.push_back(holdout.held_out[i]);
        forecasts.push_back(sc.forecast);
    }
    const double dn = static_cast<double>(n);
    mt.smape /= dn;
    mt.smape_m3 /= dn;
    mt.mape /= dn;
    mt.naive2_smape /= dn;
    mt.snaive_smape /= dn;
    if (mase_count > 0) {
        mt.mase /= static_cast<double>(mase_count);
        mt.naive2_mase /= static_cast<double>(mase_count);
    }
    mt.mase_skipped = n - mase_count;
    mt.nd = metrics::nd(truths, forecasts);
    mt.owa = ratio_owa(mt.smape, mt.mase, mt.naive2_smape, mt.naive2_mase);

    if (keep_cache) {
        out.cache.ids.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            out.cache.ids.push_back(holdout.history.series[i].id);
            out.cache.targets.push_back(holdout.held_out[i]);
            out.cache.member_forecasts.push_back(std::move(scores[i].member_forecasts));
        }
    }
    return out;
}

Ensemble train_for_selection(const Corpus& source, const SourceSelection& selection, int horizon,
                             TrainConfig base, const EnsembleSpec& spec) {
    CorpusSplit split = source.at(selection.frequency);
    if (selection.upsample > 1) {
        for (TimeSeries& series : split.series) {
            series.values = upsample_bilinear(series.values, selection.upsample);
        }
    }
    base.horizon = horizon;
    Ensemble ensemble = train_ensemble(split, base, spec);
    ensemble.source_name = source.name;
    ensemble.upsample = selection.upsample;
    return ensemble;
}

EvalReport zero_shot_eval(const std::vector<Ensemble>& ensembles, const Corpus& target,
                          const Corpus* source) {
    if (ensembles.empty()) throw std::invalid_argument("no ensembles supplied");
    if (target.splits.empty()) throw std::invalid_argument("target corpus has no splits");
    const auto start = std::chrono::steady_clock::now();

    std::vector<std::uint32_t> before;
    before.reserve(ensembles.size());
    for (const Ensemble& e : ensembles) before.push_back(ensemble_digest(e));

    std::set<Frequency> available;
    for (const Ensemble& e : ensembles) available.insert(e.source_frequency);

    EvalReport report;
    report.target_name = target.name;
    std::set<std::size_t> used;
    for (const CorpusSplit& split : target.splits) {
        const SourceSelection sel = map_frequency(available, split.frequency);
        const Ensemble* chosen = nullptr;
        std::size_t chosen_index = 0;
        for (std::size_t i = 0; i < ensembles.size(); ++i) {
            const Ensemble& e = ensembles[i];
            if (e.source_frequency != sel.frequency || e.upsample != sel.upsample) continue;
            if (e.horizon < split.horizon) continue;
            if (chosen == nullptr || e.horizon < chosen->horizon) {
                chosen = &e;
                chosen_index = i;
            }
        }
        if (chosen == nullptr) {
            throw std::invalid_argument(
                "no trained ensemble for source " + frequency_name(sel.frequency) +
                (sel.upsample > 1 ? " upsampled x" + std::to_string(sel.upsample) : "") +
                " with horizon >= " + std::to_string(split.horizon) + " (target " +
                frequency_name(split.frequency) + ")");
        }
        used.insert(chosen_index);
        report.rows.push_back(evaluate_split(*chosen, split).metrics);
        if (report.source_name.empty()) report.source_name = chosen->source_name;
        if (source != nullptr) {
            for (OverlapHit hit : screen_overlap(*source, split)) {
                report.overlaps.push_back(std::move(hit));
            }
        }
    }
    report.aggregate = aggregate_rows(report.rows);
    for (std::size_t i : used) {
        report.member_count += ensembles[i].members.size();
        for (const EnsembleMember& member : ensembles[i].members) {
            report.seeds.push_back(member.config.seed);
        }
    }

    std::uint32_t combined = 0;
    for (std::size_t i = 0; i < ensembles.size(); ++i) {
        const std::uint32_t after = ensemble_digest(ensembles[i]);
        if (after != before[i]) {
            throw std::logic_error("ensemble weights changed during zero-shot evaluation");
        }
        combined = combined * 2654435761u + after;
    }
    report.config_digest = digest_hex(combined);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::vector<SweepRow> block_sweep(const CorpusSplit& source, const CorpusSplit& target,
                                  const std::vector<int>& block_counts,
                                  const std::vector<bool>& sharings, const TrainConfig& base,
                                  const EnsembleSpec& spec, int resamples) {
    if (block_counts.empty()) throw std::invalid_argument("block sweep needs block counts");
    if (sharings.empty()) throw std::invalid_argument("block sweep needs sharing settings");
    if (resamples < 1) throw std::invalid_argument("resamples must be positive");

    std::vector<SweepRow> rows;
    for (bool share : sharings) {
        for (int blocks : block_counts) {
            TrainConfig cfg = base;
            cfg.blocks = blocks;
            cfg.share_weights = share;
            Ensemble ensemble = train_ensemble(source, cfg, spec);
            SplitEvaluation eval = evaluate_split(ensemble, target, true);

            SweepRow row;
            row.blocks = blocks;
            row.share_weights = share;
            row.members = ensemble.members.size();
            row.smape = eval.metrics.smape;

            const std::size_t n_series = eval.cache.targets.size();
            const std::size_t n_members = ensemble.members.size();
            if (n_members < 2) {
                // Resampling a single member is the identity.
                row.bootstrap_mean = row.smape;
                row.bootstrap_std = 0.0;
                rows.push_back(row);
                continue;
            }
            Rng boot(Rng::derive_seed(base.seed, 0xB0075 + rows.size()));
            std::vector<double> stats(static_cast<std::size_t>(resamples));
            std::vector<std::size_t> picks(n_members);
            std::vector<std::vector<double>> sample(n_members);
            for (int r = 0; r < resamples; ++r) {
                for (std::size_t k = 0; k < n_members; ++k) {
                    picks[k] = boot.uniform_index(n_members);
                }
                double acc = 0.0;
                for (std::size_t i = 0; i < n_series; ++i) {
                    for (std::size_t k = 0; k < n_members; ++k) {
                        sample[k] = eval.cache.member_forecasts[i][picks[k]];
                    }
                    acc += metrics::smape(eval.cache.targets[i], median_combine(sample));
                }
                stats[static_cast<std::size_t>(r)] = acc / static_cast<double>(n_series);
            }
            double mean = 0.0;
            for (double s : stats) mean += s;
            mean /= static_cast<double>(resamples);
            double var = 0.0;
            for (double s : stats) var += (s - mean) * (s - mean);
            row.bootstrap_mean = mean;
            row.bootstrap_std = resamples > 1
                                    ? std::sqrt(var / static_cast<double>(resamples - 1))
                                    : 0.0;
            rows.push_back(row);
        }
    }
    return rows;
}

namespace {

void append_metrics_row(std::string& out, const SplitMetrics& row) {
    char buf[32];
    out += row.label;
    out += ',' + std::to_string(row.horizon);
    out += ',' + std::to_string(row.n_series);
    out += ',';
    out += fmt_double(buf, sizeof buf, row.smape);
    out += ',';
    out += fmt_double(buf, sizeof buf, row.smape_m3);
    out += ',';
    out += fmt_double(buf, sizeof buf, row.mape);
    out += ',';
    out += fmt_double(buf, sizeof buf, row.mase);
    out += ',';
    out += fmt_double(buf, sizeof buf, row.owa);
    out += ',';
    out += fmt_double(buf, sizeof buf, row.nd);
    out += ',';
    out += fmt_double(buf, sizeof buf, row.naive2_smape);
    out += ',';
    out += fmt_double(buf, sizeof buf, row.naive2_mase);
    out += ',';
    out += fmt_double(buf, sizeof buf, row.snaive_smape);
    out += ',' + std::to_string(row.mase_skipped);
    out += '\n';
}

nlohmann::json metrics_json(const SplitMetrics& row) {
    return nlohmann::json{{"label", row.label},
                          {"horizon", row.horizon},
                          {"n_series", row.n_series},
                          {"smape", row.smape},
                          {"smape_m3", row.smape_m3},
                          {"mape", row.mape},
                          {"mase", row.mase},
                          {"owa", row.owa},
                          {"nd", row.nd},
                          {"naive2_smape", row.naive2_smape},
                          {"naive2_mase", row.naive2_mase},
                          {"snaive_smape", row.snaive_smape},
                          {"mase_skipped", row.mase_skipped}};
}

std::string seeds_string(const std::vector<std::uint64_t>& seeds) {
    std::string out;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (i > 0) out += ' ';
        out += std::to_string(seeds[i]);
    }
    return out;
}

}  // namespace

void write_report_csv(const EvalReport& report, const std::string& path) {
    std::string out;
    out += "# config_digest=" + report.config_digest + "\n";
    out += "# seeds=" + seeds_string(report.seeds) + "\n";
    out += "label,horizon,n_series,smape,smape_m3,mape,mase,owa,nd,naive2_smape,naive2_mase,"
           "snaive_smape,mase_skipped\n";
    for (const SplitMetrics& row : report.rows) append_metrics_row(out, row);
    append_metrics_row(out, report.aggregate);
    atomic_write(path, out);
}

void write_report_json(const EvalReport& report, const std::string& path) {
    nlohmann::json doc;
    doc["source"] = report.source_name;
    doc["target"] = report.target_name;
    doc["config_digest"] = report.config_digest;
    doc["member_count"] = report.member_count;
    doc["seeds"] = report.seeds;
    doc["rows"] = nlohmann::json::array();
    for (const SplitMetrics& row : report.rows) doc["rows"].push_back(metrics_json(row));
    doc["aggregate"] = metrics_json(report.aggregate);
    doc["overlaps"] = nlohmann::json::array();
    for (const OverlapHit& hit : report.overlaps) {
        doc["overlaps"].push_back({{"target_id", hit.target_id}, {"source_id", hit.source_id}});
    }
    atomic_write(path, doc.dump(2) + "\n");
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& config_digest,
                     const std::vector<std::uint64_t>& seeds, const std::string& path) {
    std::string out;
    out += "# config_digest=" + config_digest + "\n";
    out += "# seeds=" + seeds_string(seeds) + "\n";
    out += "blocks,share_weights,members,smape,bootstrap_mean,bootstrap_std\n";
    char buf[32];
    for (const SweepRow& row : rows) {
        out += std::to_string(row.blocks);
        out += ',';
        out += row.share_weights ? "true" : "false";
        out += ',' + std::to_string(row.members);
        out += ',';
        out += fmt_double(buf, sizeof buf, row.smape);
        out += ',';
        out += fmt_double(buf, sizeof buf, row.bootstrap_mean);
        out += ',';
        out += fmt_double(buf, sizeof buf, row.bootstrap_std);
        out += '\n';
    }
    atomic_write(path, out);
}

}  // namespace nbeats
