#include "nbeats/commands.hpp"

#include <zlib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "internal_io.hpp"
#include "nbeats/checkpoint.hpp"
#include "nbeats/corpus_io.hpp"
#include "nbeats/diagnostics.hpp"
#include "nbeats/evaluation.hpp"
#include "nbeats/kernels.hpp"
#include "nbeats/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace nbeats {
namespace {

using detail::atomic_write;
using detail::digest_hex;
using detail::fmt_double;

json load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

/// Unknown keys are configuration typos; silently ignoring them would make a
/// run quietly fall back to defaults.
void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                  const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end()) {
            throw std::invalid_argument("unknown key '" + key + "' in " + where);
        }
    }
}

std::string iso_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Wall-clock and timestamps live in this sidecar so the main artifacts stay
/// byte-identical across reruns.
void write_meta(const std::string& path, const std::string& command, double wall_seconds) {
    json doc;
    doc["command"] = command;
    doc["finished_at"] = iso_utc_now();
    doc["wall_seconds"] = wall_seconds;
    atomic_write(path, doc.dump(2) + "\n");
}

std::string crc_hex(const std::string& text) {
    const uLong crc =
        crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size()));
    return digest_hex(static_cast<std::uint32_t>(crc));
}

double elapsed_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

RunConfig named_profile(const std::string& name) {
    if (name == "paper") return paper_profile();
    if (name == "desk") return desk_profile();
    throw std::invalid_argument("unknown profile '" + name + "'; expected paper or desk");
}

std::vector<Loss> parse_losses(const std::vector<std::string>& names) {
    std::vector<Loss> losses;
    losses.reserve(names.size());
    for (const std::string& name : names) losses.push_back(parse_loss(name));
    return losses;
}

std::string ensemble_dir_name(Frequency frequency, int upsample) {
    std::string name = frequency_name(frequency);
    if (upsample > 1) name += "_x" + std::to_string(upsample);
    return name;
}

std::string compact(double v) {
    char buf[32];
    return fmt_double(buf, sizeof buf, v);
}

}  // namespace

std::string RunConfig::resolved_ensembles_dir() const {
    return ensembles_dir.empty() ? output_dir + "/ensembles" : ensembles_dir;
}

RunConfig paper_profile() {
    RunConfig cfg;
    cfg.profile = "paper";
    return cfg;
}

/// Small enough to finish on a laptop core while keeping every moving part of
/// the paper profile: multiple lookbacks, multiple losses, repeats, a real
/// block stack.
RunConfig desk_profile() {
    RunConfig cfg;
    cfg.profile = "desk";
    cfg.train.iterations = 2000;
    cfg.train.batch_size = 64;
    cfg.train.width = 128;
    cfg.train.blocks = 8;
    cfg.ensemble.lookbacks = {2, 3, 4};
    cfg.ensemble.losses = {Loss::kSmape, Loss::kMase};
    cfg.ensemble.repeats = 3;
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    const json doc = load_json(path);
    if (!doc.is_object()) throw std::invalid_argument(path + ": config must be a JSON object");
    try {
        require_keys(doc,
                     {"schema", "profile", "source", "target", "output", "ensembles", "seed",
                      "workers", "train", "ensemble", "sweep", "diagnostics"},
                     path);
        if (doc.value("schema", 1) != 1) {
            throw std::invalid_argument(path + ": unsupported config schema " +
                                        doc["schema"].dump());
        }
        RunConfig cfg = named_profile(doc.value("profile", "paper"));
        cfg.source_manifest = doc.value("source", cfg.source_manifest);
        cfg.target_manifest = doc.value("target", cfg.target_manifest);
        cfg.output_dir = doc.value("output", cfg.output_dir);
        cfg.ensembles_dir = doc.value("ensembles", cfg.ensembles_dir);
        cfg.train.seed = doc.value("seed", cfg.train.seed);
        cfg.workers = doc.value("workers", cfg.workers);

        if (doc.contains("train")) {
            const json& t = doc["train"];
            require_keys(t,
                         {"iterations", "batch_size", "learning_rate", "loss", "width", "layers",
                          "blocks", "share_weights"},
                         path + " train");
            cfg.train.iterations = t.value("iterations", cfg.train.iterations);
            cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
            cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
            if (t.contains("loss")) cfg.train.loss = parse_loss(t["loss"].get<std::string>());
            cfg.train.width = t.value("width", cfg.train.width);
            cfg.train.layers = t.value("layers", cfg.train.layers);
            cfg.train.blocks = t.value("blocks", cfg.train.blocks);
            cfg.train.share_weights = t.value("share_weights", cfg.train.share_weights);
        }
        if (doc.contains("ensemble")) {
            const json& e = doc["ensemble"];
            require_keys(e, {"lookbacks", "losses", "repeats"}, path + " ensemble");
            if (e.contains("lookbacks")) {
                cfg.ensemble.lookbacks = e["lookbacks"].get<std::vector<int>>();
            }
            if (e.contains("losses")) {
                cfg.ensemble.losses = parse_losses(e["losses"].get<std::vector<std::string>>());
            }
            cfg.ensemble.repeats = e.value("repeats", cfg.ensemble.repeats);
        }
        if (doc.contains("sweep")) {
            const json& s = doc["sweep"];
            require_keys(s, {"blocks", "sharings", "resamples"}, path + " sweep");
            if (s.contains("blocks")) cfg.sweep.blocks = s["blocks"].get<std::vector<int>>();
            if (s.contains("sharings")) {
                cfg.sweep.sharings = s["sharings"].get<std::vector<bool>>();
            }
            cfg.sweep.resamples = s.value("resamples", cfg.sweep.resamples);
        }
        if (doc.contains("diagnostics")) {
            const json& d = doc["diagnostics"];
            require_keys(d, {"probes"}, path + " diagnostics");
            cfg.diagnostic_probes = d.value("probes", cfg.diagnostic_probes);
        }

        if (cfg.train.iterations < 1 || cfg.train.batch_size < 1 || cfg.train.width < 1 ||
            cfg.train.layers < 1 || cfg.train.blocks < 1 ||
            !(cfg.train.learning_rate > 0.0)) {
            throw std::invalid_argument(path + ": train settings must be positive");
        }
        if (cfg.ensemble.lookbacks.empty() || cfg.ensemble.losses.empty() ||
            cfg.ensemble.repeats < 1) {
            throw std::invalid_argument(path +
                                        ": ensemble needs lookbacks, losses and repeats >= 1");
        }
        for (const int m : cfg.ensemble.lookbacks) {
            if (m < 1) throw std::invalid_argument(path + ": lookback multiples must be >= 1");
        }
        if (cfg.sweep.blocks.empty() || cfg.sweep.sharings.empty() || cfg.sweep.resamples < 1) {
            throw std::invalid_argument(path + ": sweep needs blocks, sharings and resamples");
        }
        if (cfg.diagnostic_probes < 1) {
            throw std::invalid_argument(path + ": diagnostics probes must be >= 1");
        }
        return cfg;
    } catch (const json::exception& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

void save_ensemble(const Ensemble& ensemble, const std::string& dir) {
    if (ensemble.members.empty()) {
        throw std::invalid_argument("refusing to save an ensemble with no members");
    }
    fs::create_directories(dir);

    json doc;
    doc["schema"] = 1;
    doc["source_name"] = ensemble.source_name;
    doc["frequency"] = frequency_name(ensemble.source_frequency);
    doc["upsample"] = ensemble.upsample;
    doc["horizon"] = ensemble.horizon;
    doc["config_digest"] = digest_hex(ensemble_digest(ensemble));
    doc["members"] = json::array();
    for (std::size_t i = 0; i < ensemble.members.size(); ++i) {
        const EnsembleMember& member = ensemble.members[i];
        char name[32];
        std::snprintf(name, sizeof name, "member_%03zu.ckpt", i);
        save_model((fs::path(dir) / name).string(), member.model);
        const TrainConfig& tc = member.config;
        doc["members"].push_back({{"file", name},
                                  {"seed", tc.seed},
                                  {"loss", loss_name(tc.loss)},
                                  {"lookback_multiple", tc.lookback_multiple},
                                  {"horizon", tc.horizon},
                                  {"iterations", tc.iterations},
                                  {"batch_size", tc.batch_size},
                                  {"learning_rate", tc.learning_rate},
                                  {"width", tc.width},
                                  {"layers", tc.layers},
                                  {"blocks", tc.blocks},
                                  {"share_weights", tc.share_weights}});
    }
    // Manifest last: a crash mid-save never leaves a loadable ensemble.
    atomic_write((fs::path(dir) / "ensemble.json").string(), doc.dump(2) + "\n");
}

Ensemble load_ensemble(const std::string& dir) {
    const std::string manifest = (fs::path(dir) / "ensemble.json").string();
    const json doc = load_json(manifest);
    try {
        require_keys(doc,
                     {"schema", "source_name", "frequency", "upsample", "horizon",
                      "config_digest", "members"},
                     manifest);
        if (doc.at("schema").get<int>() != 1) {
            throw std::invalid_argument(manifest + ": unsupported ensemble schema");
        }
        Ensemble ensemble;
        ensemble.source_name = doc.at("source_name").get<std::string>();
        ensemble.source_frequency = parse_frequency(doc.at("frequency").get<std::string>());
        ensemble.upsample = doc.at("upsample").get<int>();
        ensemble.horizon = doc.at("horizon").get<int>();
        for (const json& entry : doc.at("members")) {
            EnsembleMember member;
            TrainConfig& tc = member.config;
            tc.seed = entry.at("seed").get<std::uint64_t>();
            tc.loss = parse_loss(entry.at("loss").get<std::string>());
            tc.lookback_multiple = entry.at("lookback_multiple").get<int>();
            tc.horizon = entry.at("horizon").get<int>();
            tc.iterations = entry.at("iterations").get<int>();
            tc.batch_size = entry.at("batch_size").get<int>();
            tc.learning_rate = entry.at("learning_rate").get<double>();
            tc.width = entry.at("width").get<int>();
            tc.layers = entry.at("layers").get<int>();
            tc.blocks = entry.at("blocks").get<int>();
            tc.share_weights = entry.at("share_weights").get<bool>();
            const std::string file = entry.at("file").get<std::string>();
            member.model = load_model((fs::path(dir) / file).string());
            const ModelConfig& mc = member.model.config();
            if (mc.horizon != tc.horizon || mc.lookback_multiple != tc.lookback_multiple ||
                mc.width != tc.width || mc.layers != tc.layers || mc.blocks != tc.blocks ||
                mc.share_weights != tc.share_weights) {
                throw std::invalid_argument(manifest + ": checkpoint " + file +
                                            " does not match its manifest entry");
            }
            ensemble.members.push_back(std::move(member));
        }
        if (ensemble.members.empty()) {
            throw std::invalid_argument(manifest + ": ensemble has no members");
        }
        const std::string digest = digest_hex(ensemble_digest(ensemble));
        if (digest != doc.at("config_digest").get<std::string>()) {
            throw std::invalid_argument(manifest + ": ensemble digest mismatch (manifest says " +
                                        doc.at("config_digest").get<std::string>() +
                                        ", weights hash to " + digest + ")");
        }
        return ensemble;
    } catch (const json::exception& e) {
        throw std::invalid_argument(manifest + ": " + e.what());
    }
}

std::vector<Ensemble> load_ensembles(const std::string& dir) {
    if (!fs::is_directory(dir)) {
        throw std::invalid_argument("no ensembles directory at " + dir);
    }
    std::vector<std::string> found;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "ensemble.json")) {
            found.push_back(entry.path().string());
        }
    }
    std::sort(found.begin(), found.end());
    std::vector<Ensemble> ensembles;
    ensembles.reserve(found.size());
    for (const std::string& path : found) ensembles.push_back(load_ensemble(path));
    if (ensembles.empty()) throw std::invalid_argument("no ensembles found under " + dir);
    return ensembles;
}

std::string cmd_train(const RunConfig& cfg) {
    if (cfg.source_manifest.empty()) {
        throw std::invalid_argument("train needs a source corpus manifest");
    }
    if (cfg.workers > 0) kernels::set_workers(cfg.workers);
    const auto start = std::chrono::steady_clock::now();
    const Corpus source = load_corpus(cfg.source_manifest);

    // One ensemble per distinct source selection. When several target splits
    // share a selection the largest horizon wins; evaluation truncates.
    struct Plan {
        SourceSelection selection;
        int horizon = 0;
    };
    std::vector<Plan> plans;
    const auto add = [&plans](const SourceSelection& sel, int horizon) {
        for (Plan& plan : plans) {
            if (plan.selection == sel) {
                plan.horizon = std::max(plan.horizon, horizon);
                return;
            }
        }
        plans.push_back({sel, horizon});
    };
    if (!cfg.target_manifest.empty()) {
        const Corpus target = load_corpus(cfg.target_manifest);
        for (const CorpusSplit& split : target.splits) {
            add(map_frequency(source, split.frequency), split.horizon);
        }
    } else {
        for (const CorpusSplit& split : source.splits) {
            add({split.frequency, 1}, split.horizon);
        }
    }
    std::sort(plans.begin(), plans.end(), [](const Plan& a, const Plan& b) {
        if (a.selection.frequency != b.selection.frequency) {
            return a.selection.frequency < b.selection.frequency;
        }
        return a.selection.upsample < b.selection.upsample;
    });

    const std::string root = cfg.resolved_ensembles_dir();
    std::size_t members = 0;
    for (const Plan& plan : plans) {
        const Ensemble ensemble =
            train_for_selection(source, plan.selection, plan.horizon, cfg.train, cfg.ensemble);
        members += ensemble.members.size();
        save_ensemble(ensemble, (fs::path(root) /
                                 ensemble_dir_name(plan.selection.frequency,
                                                   plan.selection.upsample))
                                    .string());
    }

    fs::create_directories(cfg.output_dir);
    write_meta((fs::path(cfg.output_dir) / "train_meta.json").string(), "train",
               elapsed_since(start));
    return "trained " + std::to_string(plans.size()) + " ensemble(s), " +
           std::to_string(members) + " member(s), into " + root;
}

std::string cmd_zeroshot(const RunConfig& cfg) {
    if (cfg.target_manifest.empty()) {
        throw std::invalid_argument("zeroshot needs a target corpus manifest");
    }
    if (cfg.workers > 0) kernels::set_workers(cfg.workers);
    const std::vector<Ensemble> ensembles = load_ensembles(cfg.resolved_ensembles_dir());
    const Corpus target = load_corpus(cfg.target_manifest);
    std::optional<Corpus> source;
    if (!cfg.source_manifest.empty()) source = load_corpus(cfg.source_manifest);

    const EvalReport report = zero_shot_eval(ensembles, target, source ? &*source : nullptr);

    fs::create_directories(cfg.output_dir);
    const fs::path out(cfg.output_dir);
    write_report_csv(report, (out / "report.csv").string());
    write_report_json(report, (out / "report.json").string());
    write_meta((out / "zeroshot_meta.json").string(), "zeroshot", report.wall_seconds);
    return "wrote " + (out / "report.csv").string() + " and report.json; aggregate smape=" +
           compact(report.aggregate.smape) + " owa=" + compact(report.aggregate.owa) + " over " +
           std::to_string(report.aggregate.n_series) + " series";
}

std::string cmd_sweep(const RunConfig& cfg) {
    if (cfg.source_manifest.empty() || cfg.target_manifest.empty()) {
        throw std::invalid_argument("sweep needs source and target corpus manifests");
    }
    if (cfg.workers > 0) kernels::set_workers(cfg.workers);
    const auto start = std::chrono::steady_clock::now();
    const Corpus source = load_corpus(cfg.source_manifest);
    const Corpus target = load_corpus(cfg.target_manifest);
    if (target.splits.size() != 1) {
        throw std::invalid_argument("sweep expects a single-split target corpus, got " +
                                    std::to_string(target.splits.size()) + " splits");
    }
    const CorpusSplit& target_split = target.splits.front();
    const SourceSelection sel = map_frequency(source, target_split.frequency);
    if (sel.upsample != 1) {
        throw std::invalid_argument("sweep does not support upsampled source selections (target " +
                                    frequency_name(target_split.frequency) + " maps to " +
                                    frequency_name(sel.frequency) + " x" +
                                    std::to_string(sel.upsample) + ")");
    }

    TrainConfig base = cfg.train;
    base.horizon = target_split.horizon;
    const std::vector<SweepRow> rows =
        block_sweep(source.at(sel.frequency), target_split, cfg.sweep.blocks, cfg.sweep.sharings,
                    base, cfg.ensemble, cfg.sweep.resamples);

    std::ostringstream canon;
    canon << "sweep|source=" << frequency_name(sel.frequency) << "|h=" << base.horizon
          << "|iter=" << base.iterations << "|batch=" << base.batch_size << "|lr="
          << std::setprecision(17) << base.learning_rate << "|width=" << base.width
          << "|layers=" << base.layers << "|seed=" << base.seed << "|lookbacks=";
    for (const int m : cfg.ensemble.lookbacks) canon << m << ',';
    canon << "|losses=";
    for (const Loss loss : cfg.ensemble.losses) canon << loss_name(loss) << ',';
    canon << "|repeats=" << cfg.ensemble.repeats << "|blocks=";
    for (const int b : cfg.sweep.blocks) canon << b << ',';
    canon << "|sharings=";
    for (const bool s : cfg.sweep.sharings) canon << (s ? 1 : 0) << ',';
    canon << "|resamples=" << cfg.sweep.resamples;

    fs::create_directories(cfg.output_dir);
    const fs::path out(cfg.output_dir);
    write_sweep_csv(rows, crc_hex(canon.str()), {cfg.train.seed}, (out / "sweep.csv").string());
    write_meta((out / "sweep_meta.json").string(), "sweep", elapsed_since(start));
    return "wrote " + (out / "sweep.csv").string() + " with " + std::to_string(rows.size()) +
           " row(s)";
}

std::string cmd_diagnose(const std::string& checkpoint, const std::string& out_path, int probes) {
    if (probes < 1) throw std::invalid_argument("diagnose needs at least one probe");
    const NBeatsModel model = load_model(checkpoint);
    const ModelConfig& mc = model.config();

    json doc;
    doc["schema"] = 1;
    doc["digest"] = digest_hex(model_digest(model));
    doc["model"] = {{"horizon", mc.horizon},
                    {"lookback_multiple", mc.lookback_multiple},
                    {"width", mc.width},
                    {"layers", mc.layers},
                    {"blocks", mc.blocks},
                    {"share_weights", mc.share_weights},
                    {"seed", model.seed()}};

    // Probe windows reproduce deterministically from the model seed.
    const auto probe_window = [&](int p) {
        Rng rng(Rng::derive_seed(model.seed() * 77 + 5, static_cast<std::uint64_t>(p)));
        std::vector<double> x(static_cast<std::size_t>(model.lookback()));
        for (double& v : x) v = rng.uniform(0.5, 1.5);
        return x;
    };

    // Mean inf-norm of each cumulative shift mu_0..mu_L over the probes.
    std::vector<double> shift_norms(static_cast<std::size_t>(mc.blocks) + 1, 0.0);
    for (int p = 0; p < probes; ++p) {
        const std::vector<double> x = probe_window(p);
        const ShiftSequence shifts =
            extract_shifts(model_forward(model, Matrix(1, x.size(), x)));
        for (std::size_t l = 0; l < shifts.mu.size(); ++l) {
            double norm = 0.0;
            for (const double v : shifts.mu[l]) norm = std::max(norm, std::abs(v));
            shift_norms[l] += norm / probes;
        }
    }
    doc["shift_norms"] = shift_norms;
    doc["probes"] = probes;

    std::string order_note;
    if (mc.share_weights) {
        const std::vector<double> scales = {1e-1, 1e-2, 1e-3};
        std::vector<double> sums(scales.size(), 0.0);
        int used = 0;
        for (int p = 0; p < probes; ++p) {
            const std::vector<double> x = probe_window(p);
            std::vector<double> residuals(scales.size());
            bool ok = true;
            try {
                for (std::size_t s = 0; s < scales.size(); ++s) {
                    residuals[s] = linearized_forecast(model, x, scales[s]).residual;
                }
            } catch (const std::runtime_error&) {
                ok = false;  // kink-stuck probe: dropped at every scale
            }
            if (!ok) continue;
            for (std::size_t s = 0; s < scales.size(); ++s) sums[s] += residuals[s];
            ++used;
        }
        if (used == 0) {
            throw std::runtime_error("every probe was rejected near a kink; try more probes");
        }
        std::vector<double> means(scales.size());
        for (std::size_t s = 0; s < scales.size(); ++s) means[s] = sums[s] / used;
        json lin;
        lin["scales"] = scales;
        lin["mean_residuals"] = means;
        lin["probes_used"] = used;
        lin["order"] = fit_order(scales, means);
        doc["linearization"] = lin;
        order_note = "order=" + compact(doc["linearization"]["order"].get<double>());
    } else {
        doc["linearization"] = {{"note", "skipped: linearization requires shared weights"}};
        order_note = "linearization skipped (unshared weights)";
    }

    if (!fs::path(out_path).parent_path().empty()) {
        fs::create_directories(fs::path(out_path).parent_path());
    }
    atomic_write(out_path, doc.dump(2) + "\n");
    return "wrote " + out_path + " (digest=" + doc["digest"].get<std::string>() + ", " +
           order_note + ")";
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (const char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    return cells;
}

}  // namespace

std::string cmd_report(const std::string& artifacts_dir, const std::string& output_dir) {
    if (!fs::is_directory(artifacts_dir)) {
        throw std::invalid_argument("no artifacts directory at " + artifacts_dir);
    }
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(artifacts_dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());

    const auto rel = [&](const std::string& path) {
        return fs::relative(path, artifacts_dir).generic_string();
    };

    std::string table = "file,source,target,config_digest,member_count,smape,mase,owa,nd\n";
    std::size_t n_reports = 0;
    std::string plot = "file,blocks,share_weights,members,smape,bootstrap_mean,bootstrap_std\n";
    std::size_t n_sweep_rows = 0;
    std::string conv = "file,digest,scale,mean_residual,order\n";
    std::size_t n_conv_rows = 0;

    for (const std::string& file : files) {
        const std::string name = fs::path(file).filename().string();
        if (name == "report.json") {
            const json doc = load_json(file);
            const json& agg = doc.at("aggregate");
            table += rel(file) + ',' + doc.at("source").get<std::string>() + ',' +
                     doc.at("target").get<std::string>() + ',' +
                     doc.at("config_digest").get<std::string>() + ',' +
                     std::to_string(doc.at("member_count").get<std::size_t>()) + ',' +
                     compact(agg.at("smape").get<double>()) + ',' +
                     compact(agg.at("mase").get<double>()) + ',' +
                     compact(agg.at("owa").get<double>()) + ',' +
                     compact(agg.at("nd").get<double>()) + '\n';
            ++n_reports;
        } else if (name == "sweep.csv") {
            std::ifstream in(file);
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty() || line[0] == '#') continue;
                if (line.rfind("blocks,", 0) == 0) continue;
                plot += rel(file) + ',' + line + '\n';
                ++n_sweep_rows;
            }
        } else if (name.size() > 5 && name.rfind(".json") == name.size() - 5) {
            const json doc = load_json(file);
            if (!doc.is_object() || !doc.contains("shift_norms")) continue;
            const json& lin = doc.at("linearization");
            if (!lin.contains("scales")) continue;
            const std::vector<double> scales = lin.at("scales").get<std::vector<double>>();
            const std::vector<double> means =
                lin.at("mean_residuals").get<std::vector<double>>();
            for (std::size_t s = 0; s < scales.size(); ++s) {
                conv += rel(file) + ',' + doc.at("digest").get<std::string>() + ',' +
                        compact(scales[s]) + ',' + compact(means[s]) + ',' +
                        compact(lin.at("order").get<double>()) + '\n';
                ++n_conv_rows;
            }
        }
    }

    if (n_reports == 0 && n_sweep_rows == 0 && n_conv_rows == 0) {
        throw std::invalid_argument("no artifacts found under " + artifacts_dir);
    }
    fs::create_directories(output_dir);
    const fs::path out(output_dir);
    std::vector<std::string> written;
    if (n_reports > 0) {
        atomic_write((out / "table.csv").string(), table);
        written.push_back("table.csv (" + std::to_string(n_reports) + " report(s))");
    }
    if (n_sweep_rows > 0) {
        atomic_write((out / "plot_blocks.csv").string(), plot);
        written.push_back("plot_blocks.csv (" + std::to_string(n_sweep_rows) + " row(s))");
    }
    if (n_conv_rows > 0) {
        atomic_write((out / "convergence.csv").string(), conv);
        written.push_back("convergence.csv (" + std::to_string(n_conv_rows) + " row(s))");
    }
    std::string summary = "wrote ";
    for (std::size_t i = 0; i < written.size(); ++i) {
        if (i > 0) summary += ", ";
        summary += written[i];
    }
    return summary + " into " + output_dir;
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Zero-shot univariate forecasting with doubly-residual stacks"};
    app.require_subcommand(1);

    std::string layout, conv_input, conv_output;
    CLI::App* convert =
        app.add_subcommand("convert", "Convert a public dataset layout into a corpus");
    convert->add_option("--layout", layout, "m4, m3, tourism or generic")->required();
    convert->add_option("--input", conv_input, "Input file or directory")->required();
    convert->add_option("--output", conv_output, "Corpus output directory")->required();

    std::string config_path, profile, source, target, output, ensembles;
    std::uint64_t seed = 0;
    int workers = 0;
    const auto add_run_options = [&](CLI::App* sub) {
        CLI::Option* c = sub->add_option("--config", config_path, "JSON run configuration");
        sub->add_option("--profile", profile, "Built-in profile: paper or desk")->excludes(c);
        sub->add_option("--source", source, "Source corpus manifest");
        sub->add_option("--target", target, "Target corpus manifest");
        sub->add_option("--output", output, "Output directory");
        sub->add_option("--ensembles", ensembles, "Ensemble directory");
        sub->add_option("--seed", seed, "Base training seed");
        sub->add_option("--workers", workers, "Worker thread count");
    };
    CLI::App* train = app.add_subcommand("train", "Train one ensemble per source selection");
    CLI::App* zeroshot =
        app.add_subcommand("zeroshot", "Score saved ensembles on an unseen corpus");
    CLI::App* sweep = app.add_subcommand("sweep", "Block-count sweep with bootstrap bands");
    add_run_options(train);
    add_run_options(zeroshot);
    add_run_options(sweep);

    std::string checkpoint, diag_output;
    int probes = 16;
    CLI::App* diagnose =
        app.add_subcommand("diagnose", "Shift and linearization diagnostics for a checkpoint");
    diagnose->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
    diagnose->add_option("--output", diag_output, "Output JSON path")->required();
    diagnose->add_option("--probes", probes, "Probe window count");

    std::string artifacts, report_output;
    CLI::App* report =
        app.add_subcommand("report", "Collect run artifacts into plot-ready tables");
    report->add_option("--artifacts", artifacts, "Directory holding run outputs")->required();
    report->add_option("--output", report_output, "Output directory")->required();

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    const auto build_config = [&](CLI::App* sub) {
        RunConfig cfg;
        if (sub->count("--config") > 0) {
            cfg = load_run_config(config_path);
        } else if (sub->count("--profile") > 0) {
            cfg = named_profile(profile);
        }
        if (sub->count("--source") > 0) cfg.source_manifest = source;
        if (sub->count("--target") > 0) cfg.target_manifest = target;
        if (sub->count("--output") > 0) cfg.output_dir = output;
        if (sub->count("--ensembles") > 0) cfg.ensembles_dir = ensembles;
        if (sub->count("--seed") > 0) cfg.train.seed = seed;
        if (sub->count("--workers") > 0) cfg.workers = workers;
        return cfg;
    };

    try {
        std::string summary;
        if (app.got_subcommand(convert)) {
            summary = "wrote " + cmd_convert(layout, conv_input, conv_output);
        } else if (app.got_subcommand(train)) {
            summary = cmd_train(build_config(train));
        } else if (app.got_subcommand(zeroshot)) {
            summary = cmd_zeroshot(build_config(zeroshot));
        } else if (app.got_subcommand(sweep)) {
            summary = cmd_sweep(build_config(sweep));
        } else if (app.got_subcommand(diagnose)) {
            summary = cmd_diagnose(checkpoint, diag_output, probes);
        } else if (app.got_subcommand(report)) {
            summary = cmd_report(artifacts, report_output);
        }
        std::cout << summary << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace nbeats
