#pragma once

#include <cstdint>
#include <string>

#include "nbeats/model.hpp"

namespace nbeats {

/// Checkpoint container: an 8-byte magic, a little-endian u64 with the JSON
/// manifest length, the manifest, then one raw blob per parameter matrix
/// (little-endian f64, row-major). The manifest records model geometry plus
/// per-blob byte offsets (relative to the payload section) and CRC32s, so a
/// reader can locate and verify any blob without trusting the rest of the
/// file. Writes go to a temporary file first and are renamed into place.
inline constexpr char kCheckpointMagic[8] = {'N', 'B', 'C', 'K', 'P', 'T', '0', '1'};
inline constexpr int kCheckpointSchemaVersion = 1;

void save_model(const std::string& path, const NBeatsModel& model);

/// Rejects bad magic, unknown schema versions, geometry that does not match
/// the blob table, and any blob whose CRC32 disagrees with the manifest.
NBeatsModel load_model(const std::string& path);

/// CRC32 over every parameter's bytes in canonical order. Two models with
/// identical weights and shapes share a digest; any weight flip changes it.
std::uint32_t model_digest(const NBeatsModel& model);

}  // namespace nbeats
