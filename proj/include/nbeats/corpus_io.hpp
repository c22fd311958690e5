#pragma once

#include <string>

#include "nbeats/timeseries.hpp"

namespace nbeats {

/// Corpus on disk: a JSON manifest naming one CSV per frequency split,
///
///   { "name": "...", "splits": [
///       { "frequency": "Monthly", "horizon": 18, "file": "monthly.csv" }, ... ] }
///
/// where each CSV row is "id,v1,v2,..." with one series per row (no header).
/// File paths are resolved relative to the manifest's directory.
Corpus load_corpus(const std::string& manifest_path);

/// Writes manifest.json plus one CSV per split into dir (created if absent).
/// Files are written to a temporary name and renamed into place. Returns the
/// manifest path.
std::string save_corpus(const Corpus& corpus, const std::string& dir);

}  // namespace nbeats
