#include "nbeats/corpus_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace nbeats {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

double parse_value(const std::string& cell, const std::string& file, std::size_t line) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw std::runtime_error("load_corpus: bad number '" + cell + "' in " + file + " line " +
                                 std::to_string(line));
    }
    return v;
}

std::vector<TimeSeries> load_split_csv(const fs::path& path, Frequency frequency, int horizon) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_corpus: cannot open " + path.string());

    std::vector<TimeSeries> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        TimeSeries ts;
        ts.frequency = frequency;
        std::stringstream fields(line);
        std::string cell;
        bool first = true;
        while (std::getline(fields, cell, ',')) {
            if (first) {
                ts.id = cell;
                first = false;
                continue;
            }
            const double v = parse_value(cell, path.filename().string(), lineno);
            if (!std::isfinite(v)) {
                throw std::runtime_error("load_corpus: non-finite value in series '" + ts.id +
                                         "' (" + path.filename().string() + ")");
            }
            ts.values.push_back(v);
        }
        if (ts.id.empty()) {
            throw std::runtime_error("load_corpus: missing series id at " +
                                     path.filename().string() + " line " + std::to_string(lineno));
        }
        if (ts.values.size() < static_cast<std::size_t>(horizon) + 1) {
            throw std::runtime_error("load_corpus: series '" + ts.id + "' has " +
                                     std::to_string(ts.values.size()) +
                                     " values, need at least horizon+1 = " +
                                     std::to_string(horizon + 1));
        }
        out.push_back(std::move(ts));
    }
    return out;
}

}  // namespace

Corpus load_corpus(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("load_corpus: cannot open manifest " + manifest_path);
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_corpus: manifest parse error: " + std::string(e.what()));
    }

    Corpus corpus;
    corpus.name = manifest.at("name").get<std::string>();
    const fs::path base = fs::path(manifest_path).parent_path();

    std::set<std::string> seen_ids;
    for (const json& entry : manifest.at("splits")) {
        CorpusSplit split;
        split.frequency = parse_frequency(entry.at("frequency").get<std::string>());
        split.horizon = entry.contains("horizon") ? entry.at("horizon").get<int>()
                                                  : default_horizon(split.frequency);
        if (split.horizon < 1) {
            throw std::runtime_error("load_corpus: non-positive horizon for " +
                                     frequency_name(split.frequency));
        }
        for (const CorpusSplit& existing : corpus.splits) {
            if (existing.frequency == split.frequency) {
                throw std::runtime_error("load_corpus: duplicate split " +
                                         frequency_name(split.frequency));
            }
        }
        const fs::path file = base / entry.at("file").get<std::string>();
        split.series = load_split_csv(file, split.frequency, split.horizon);
        for (const TimeSeries& ts : split.series) {
            if (!seen_ids.insert(ts.id).second) {
                throw std::runtime_error("load_corpus: duplicate series id '" + ts.id + "'");
            }
        }
        corpus.splits.push_back(std::move(split));
    }
    if (corpus.splits.empty()) throw std::runtime_error("load_corpus: corpus has no splits");
    std::size_t total = 0;
    for (const CorpusSplit& s : corpus.splits) total += s.series.size();
    if (total == 0) throw std::runtime_error("load_corpus: corpus has no series");
    return corpus;
}

std::string save_corpus(const Corpus& corpus, const std::string& dir) {
    const fs::path base(dir);
    fs::create_directories(base);

    json manifest;
    manifest["name"] = corpus.name;
    json splits = json::array();
    for (const CorpusSplit& split : corpus.splits) {
        const std::string filename = frequency_name(split.frequency) + ".csv";
        json entry;
        entry["frequency"] = frequency_name(split.frequency);
        entry["horizon"] = split.horizon;
        entry["file"] = filename;
        splits.push_back(std::move(entry));

        const fs::path tmp = base / (filename + ".tmp");
        {
            std::ofstream out(tmp, std::ios::trunc);
            if (!out) throw std::runtime_error("save_corpus: cannot write " + tmp.string());
            out.precision(17);
            for (const TimeSeries& ts : split.series) {
                out << ts.id;
                for (double v : ts.values) out << ',' << v;
                out << '\n';
            }
            if (!out) throw std::runtime_error("save_corpus: short write to " + tmp.string());
        }
        fs::rename(tmp, base / filename);
    }
    manifest["splits"] = std::move(splits);

    const fs::path manifest_file = base / "manifest.json";
    const fs::path tmp = base / "manifest.json.tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw std::runtime_error("save_corpus: cannot write " + tmp.string());
        out << manifest.dump(2) << '\n';
    }
    fs::rename(tmp, manifest_file);
    return manifest_file.string();
}

}  // namespace nbeats
