#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nbeats/commands.hpp"
#include "nbeats/corpus_io.hpp"
#include "nbeats/timeseries.hpp"

namespace fs = std::filesystem;

namespace nbeats {
namespace {

[[noreturn]] void parse_error(const std::string& file, std::size_t row, const std::string& msg) {
    throw std::invalid_argument(file + ":" + std::to_string(row) + ": " + msg);
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

/// Splits one CSV line; double quotes wrap cells, never nest.
std::vector<std::string> split_csv(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
        if (quoted) {
            if (c == '"') {
                quoted = false;
            } else {
                cell.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    return cells;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::optional<double> parse_double(const std::string& cell) {
    const std::string t = trim(cell);
    if (t.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<long> parse_long(const std::string& cell) {
    const std::string t = trim(cell);
    if (t.empty()) return std::nullopt;
    long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

/// Reads the value cells of one row, requiring every non-empty cell to be a
/// finite number and allowing only trailing blanks.
std::vector<double> parse_values(const std::vector<std::string>& cells, std::size_t first,
                                 const std::string& file, std::size_t row) {
    std::vector<double> values;
    bool seen_blank = false;
    for (std::size_t i = first; i < cells.size(); ++i) {
        const std::optional<double> v = parse_double(cells[i]);
        if (!v) {
            if (trim(cells[i]).empty()) {
                seen_blank = true;
                continue;
            }
            parse_error(file, row, "cannot parse value '" + cells[i] + "' in column " +
                                       std::to_string(i + 1));
        }
        if (seen_blank) {
            parse_error(file, row, "blank cell before value in column " + std::to_string(i + 1));
        }
        values.push_back(*v);
    }
    return values;
}

struct SplitBuilder {
    std::map<Frequency, CorpusSplit> splits;

    void add(Frequency freq, int horizon, TimeSeries series) {
        auto [it, inserted] = splits.try_emplace(freq);
        if (inserted) {
            it->second.frequency = freq;
            it->second.horizon = horizon;
        }
        it->second.series.push_back(std::move(series));
    }

    Corpus corpus(std::string name, const std::string& described_input) const {
        Corpus out;
        out.name = std::move(name);
        std::size_t total = 0;
        for (const auto& [freq, split] : splits) {
            for (const TimeSeries& series : split.series) {
                if (series.values.size() <= static_cast<std::size_t>(split.horizon)) {
                    throw std::invalid_argument(
                        "series '" + series.id + "' has " + std::to_string(series.values.size()) +
                        " values; the " + frequency_name(freq) + " horizon " +
                        std::to_string(split.horizon) + " needs at least one more");
                }
            }
            total += split.series.size();
            out.splits.push_back(split);
        }
        if (total == 0) {
            throw std::invalid_argument("no series found in " + described_input);
        }
        return out;
    }
};

// Layout: one row per series, "id,frequency,v1,v2,...", no header.
Corpus convert_generic(const std::string& input) {
    const std::vector<std::string> lines = read_lines(input);
    SplitBuilder builder;
    std::map<std::string, std::size_t> seen;
    for (std::size_t r = 0; r < lines.size(); ++r) {
        if (trim(lines[r]).empty()) continue;
        const std::vector<std::string> cells = split_csv(lines[r], ',');
        if (cells.size() < 3) parse_error(input, r + 1, "expected id,frequency,values...");
        const std::string id = trim(cells[0]);
        if (id.empty()) parse_error(input, r + 1, "empty series id");
        if (!seen.emplace(id, r + 1).second) {
            parse_error(input, r + 1, "duplicate series id '" + id + "'");
        }
        Frequency freq;
        try {
            freq = parse_frequency(trim(cells[1]));
        } catch (const std::exception& e) {
            parse_error(input, r + 1, e.what());
        }
        TimeSeries series;
        series.id = id;
        series.frequency = freq;
        series.values = parse_values(cells, 2, input, r + 1);
        if (series.values.empty()) parse_error(input, r + 1, "series has no values");
        builder.add(freq, default_horizon(freq), std::move(series));
    }
    return builder.corpus(fs::path(input).stem().string(), input);
}

bool is_m4_header(const std::vector<std::string>& cells) {
    return !cells.empty() && (trim(cells[0]).empty() || trim(cells[0]) == "V1");
}

/// One M4-style file: header "V1","V2",..., then one series per row with the
/// id in the first column. Returns id -> values preserving file order.
std::vector<std::pair<std::string, std::vector<double>>> read_m4_rows(const std::string& path) {
    const std::vector<std::string> lines = read_lines(path);
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    std::map<std::string, std::size_t> seen;
    for (std::size_t r = 0; r < lines.size(); ++r) {
        if (trim(lines[r]).empty()) continue;
        const std::vector<std::string> cells = split_csv(lines[r], ',');
        if (r == 0 && is_m4_header(cells)) continue;
        const std::string id = trim(cells[0]);
        if (id.empty()) parse_error(path, r + 1, "empty series id");
        if (!seen.emplace(id, r + 1).second) {
            parse_error(path, r + 1, "duplicate series id '" + id + "'");
        }
        std::vector<double> values = parse_values(cells, 1, path, r + 1);
        if (values.empty()) parse_error(path, r + 1, "series has no values");
        rows.emplace_back(id, std::move(values));
    }
    return rows;
}

Frequency frequency_from_filename(const std::string& path) {
    const std::string stem = fs::path(path).filename().string();
    const std::size_t dash = stem.find('-');
    if (dash == std::string::npos) {
        throw std::invalid_argument("m4 layout expects <Frequency>-train.csv, got " + stem);
    }
    return parse_frequency(stem.substr(0, dash));
}

void convert_m4_file(const std::string& train_path, SplitBuilder& builder) {
    const Frequency freq = frequency_from_filename(train_path);
    auto rows = read_m4_rows(train_path);
    std::set<std::string> train_ids;
    for (const auto& [id, values] : rows) train_ids.insert(id);

    std::map<std::string, std::vector<double>> future;
    std::string test_path = train_path;
    const std::size_t pos = test_path.rfind("-train.csv");
    if (pos != std::string::npos) {
        test_path.replace(pos, std::string::npos, "-test.csv");
        if (fs::exists(test_path)) {
            const std::size_t horizon = static_cast<std::size_t>(default_horizon(freq));
            for (auto& [id, values] : read_m4_rows(test_path)) {
                if (!train_ids.count(id)) {
                    throw std::invalid_argument(test_path + ": id '" + id +
                                                "' has no training series");
                }
                if (values.size() != horizon) {
                    throw std::invalid_argument(test_path + ": id '" + id + "' has " +
                                                std::to_string(values.size()) +
                                                " future values, expected " +
                                                std::to_string(horizon));
                }
                future[id] = std::move(values);
            }
        }
    }

    for (auto& [id, values] : rows) {
        TimeSeries series;
        series.id = id;
        series.frequency = freq;
        series.values = std::move(values);
        const auto it = future.find(id);
        if (it != future.end()) {
            series.values.insert(series.values.end(), it->second.begin(), it->second.end());
        }
        builder.add(freq, default_horizon(freq), std::move(series));
    }
}

// Layout: <Frequency>-train.csv (+ optional <Frequency>-test.csv holding the
// values after the training cut), either one file or a directory of them.
Corpus convert_m4(const std::string& input) {
    SplitBuilder builder;
    if (fs::is_directory(input)) {
        std::vector<std::string> train_files;
        for (const auto& entry : fs::directory_iterator(input)) {
            const std::string name = entry.path().filename().string();
            if (name.size() > 10 && name.rfind("-train.csv") == name.size() - 10) {
                train_files.push_back(entry.path().string());
            }
        }
        std::sort(train_files.begin(), train_files.end());
        for (const std::string& file : train_files) convert_m4_file(file, builder);
    } else {
        convert_m4_file(input, builder);
    }
    return builder.corpus("m4", input);
}

Frequency m3_frequency(const std::string& id, const std::string& file, std::size_t row) {
    if (id.empty()) parse_error(file, row, "empty series id");
    switch (id[0]) {
        case 'Y':
            return Frequency::kYearly;
        case 'Q':
            return Frequency::kQuarterly;
        case 'M':
            return Frequency::kMonthly;
        case 'O':
            return Frequency::kOther;
        default:
            parse_error(file, row, "cannot infer frequency from id '" + id + "'");
    }
}

// Layout: one CSV with a header naming at least Series and N; values follow
// the last meta column. Frequency comes from the id prefix (Y/Q/M/O).
Corpus convert_m3(const std::string& input) {
    const std::vector<std::string> lines = read_lines(input);
    if (lines.empty()) throw std::invalid_argument("no series found in " + input);
    const char delim = lines[0].find(';') != std::string::npos ? ';' : ',';

    const std::vector<std::string> header = split_csv(lines[0], delim);
    std::size_t series_col = header.size(), n_col = header.size();
    std::size_t last_meta = 0;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = trim(header[i]);
        std::string lower(name);
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        const bool numbered = parse_long(name).has_value();
        if (lower == "series") series_col = i;
        if (lower == "n") n_col = i;
        if (!name.empty() && !numbered) last_meta = std::max(last_meta, i);
    }
    if (series_col == header.size()) {
        parse_error(input, 1, "m3 layout expects a 'Series' column");
    }

    SplitBuilder builder;
    std::map<std::string, std::size_t> seen;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (trim(lines[r]).empty()) continue;
        const std::vector<std::string> cells = split_csv(lines[r], delim);
        if (cells.size() <= last_meta) parse_error(input, r + 1, "row has too few columns");
        const std::string id = trim(cells[series_col]);
        if (!seen.emplace(id, r + 1).second) {
            parse_error(input, r + 1, "duplicate series id '" + id + "'");
        }
        const Frequency freq = m3_frequency(id, input, r + 1);
        TimeSeries series;
        series.id = id;
        series.frequency = freq;
        series.values = parse_values(cells, last_meta + 1, input, r + 1);
        if (series.values.empty()) parse_error(input, r + 1, "series has no values");
        if (n_col < header.size()) {
            const std::optional<long> n = parse_long(cells[n_col]);
            if (!n) parse_error(input, r + 1, "cannot parse N");
            if (static_cast<std::size_t>(*n) != series.values.size()) {
                parse_error(input, r + 1,
                            "N=" + std::to_string(*n) + " but row has " +
                                std::to_string(series.values.size()) + " values");
            }
        }
        builder.add(freq, default_horizon(freq), std::move(series));
    }
    return builder.corpus("m3", input);
}

struct TourismFile {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> columns;
};

/// Column-major tourism file: header row of ids, `meta_rows` rows of
/// per-series integers (the first being the series length), then values.
TourismFile read_tourism_file(const std::string& path, std::size_t meta_rows) {
    const std::vector<std::string> lines = read_lines(path);
    if (lines.size() < meta_rows + 2) {
        throw std::invalid_argument(path + ": expected header, " + std::to_string(meta_rows) +
                                    " meta rows and values");
    }
    TourismFile out;
    for (const std::string& cell : split_csv(lines[0], ',')) {
        out.ids.push_back(trim(cell));
    }
    while (!out.ids.empty() && out.ids.back().empty()) out.ids.pop_back();
    if (out.ids.empty()) parse_error(path, 1, "no series ids in header");

    std::vector<long> lengths;
    const std::vector<std::string> length_row = split_csv(lines[1], ',');
    for (std::size_t j = 0; j < out.ids.size(); ++j) {
        const std::optional<long> n = j < length_row.size() ? parse_long(length_row[j])
                                                            : std::nullopt;
        if (!n || *n < 1) parse_error(path, 2, "bad length for series " + out.ids[j]);
        lengths.push_back(*n);
    }

    std::vector<std::vector<std::string>> value_rows;
    for (std::size_t r = 1 + meta_rows; r < lines.size(); ++r) {
        value_rows.push_back(split_csv(lines[r], ','));
    }
    for (std::size_t j = 0; j < out.ids.size(); ++j) {
        std::vector<double> column;
        for (std::size_t r = 0; r < value_rows.size(); ++r) {
            if (static_cast<long>(column.size()) == lengths[j]) break;
            const std::string cell = j < value_rows[r].size() ? value_rows[r][j] : "";
            const std::optional<double> v = parse_double(cell);
            if (!v) {
                parse_error(path, r + meta_rows + 2,
                            "cannot parse value for series " + out.ids[j]);
            }
            column.push_back(*v);
        }
        if (static_cast<long>(column.size()) != lengths[j]) {
            throw std::invalid_argument(path + ": series " + out.ids[j] + " declares " +
                                        std::to_string(lengths[j]) + " values but has " +
                                        std::to_string(column.size()));
        }
        out.columns.push_back(std::move(column));
    }
    return out;
}

// Layout: directory with {yearly,quarterly,monthly}_{in,oos}.csv. History and
// future parts are matched by id; the horizon is the uniform oos length.
Corpus convert_tourism(const std::string& input) {
    if (!fs::is_directory(input)) {
        throw std::invalid_argument("tourism layout expects a directory, got " + input);
    }
    struct Part {
        const char* stem;
        Frequency frequency;
        std::size_t meta_rows;
    };
    const Part parts[] = {
        {"yearly", Frequency::kYearly, 2},
        {"quarterly", Frequency::kQuarterly, 3},
        {"monthly", Frequency::kMonthly, 3},
    };

    SplitBuilder builder;
    for (const Part& part : parts) {
        const std::string in_path = (fs::path(input) / (std::string(part.stem) + "_in.csv")).string();
        const std::string oos_path =
            (fs::path(input) / (std::string(part.stem) + "_oos.csv")).string();
        if (!fs::exists(in_path)) continue;
        if (!fs::exists(oos_path)) {
            throw std::invalid_argument(in_path + " has no matching " + oos_path);
        }
        const TourismFile history = read_tourism_file(in_path, part.meta_rows);
        const TourismFile future = read_tourism_file(oos_path, part.meta_rows);

        std::map<std::string, std::size_t> future_index;
        for (std::size_t j = 0; j < future.ids.size(); ++j) future_index[future.ids[j]] = j;

        std::size_t horizon = 0;
        for (std::size_t j = 0; j < future.columns.size(); ++j) {
            if (j == 0) horizon = future.columns[j].size();
            if (future.columns[j].size() != horizon) {
                throw std::invalid_argument(oos_path + ": oos lengths differ between series");
            }
        }

        for (std::size_t j = 0; j < history.ids.size(); ++j) {
            const auto it = future_index.find(history.ids[j]);
            if (it == future_index.end()) {
                throw std::invalid_argument(oos_path + ": missing series " + history.ids[j]);
            }
            TimeSeries series;
            series.id = history.ids[j];
            series.frequency = part.frequency;
            series.values = history.columns[j];
            const std::vector<double>& tail = future.columns[it->second];
            series.values.insert(series.values.end(), tail.begin(), tail.end());
            builder.add(part.frequency, static_cast<int>(horizon), std::move(series));
        }
    }
    return builder.corpus("tourism", input);
}

}  // namespace

std::string cmd_convert(const std::string& layout, const std::string& input,
                        const std::string& output_dir) {
    Corpus corpus;
    if (layout == "generic") {
        corpus = convert_generic(input);
    } else if (layout == "m4") {
        corpus = convert_m4(input);
    } else if (layout == "m3") {
        corpus = convert_m3(input);
    } else if (layout == "tourism") {
        corpus = convert_tourism(input);
    } else {
        throw std::invalid_argument("unknown layout '" + layout +
                                    "'; expected m4, m3, tourism or generic");
    }
    return save_corpus(corpus, output_dir);
}

}  // namespace nbeats
