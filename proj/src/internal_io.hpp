#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

namespace nbeats::detail {

inline std::string digest_hex(std::uint32_t digest) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", digest);
    return std::string(buf);
}

/// Writes via a temp file and renames into place, so readers never observe a
/// partial artifact. Parent directories are created as needed.
inline void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("failed writing " + tmp.string());
    }
    fs::rename(tmp, target);
}

inline char* fmt_double(char* buf, std::size_t n, double v) {
    std::snprintf(buf, n, "%.10g", v);
    return buf;
}

}  // namespace nbeats::detail
