#include "nbeats/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>
#include <zlib.h>

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace nbeats {

namespace {

using nlohmann::json;

std::uint32_t crc32_bytes(const void* data, std::size_t bytes) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(bytes)));
}

std::string activation_name(Activation a) {
    return a == Activation::kRelu ? "relu" : "identity";
}

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::kRelu;
    if (name == "identity") return Activation::kIdentity;
    throw std::runtime_error("checkpoint: unknown activation '" + name + "'");
}

}  // namespace

void save_model(const std::string& path, const NBeatsModel& model) {
    const auto named = model.named_parameters();
    json manifest;
    manifest["schema_version"] = kCheckpointSchemaVersion;
    manifest["blocks"] = model.config().blocks;
    manifest["layers"] = model.config().layers;
    manifest["width"] = model.config().width;
    manifest["lookback"] = model.lookback();
    manifest["horizon"] = model.horizon();
    manifest["lookback_multiple"] = model.config().lookback_multiple;
    manifest["share_weights"] = model.config().share_weights;
    manifest["activation"] = activation_name(model.config().activation);
    manifest["seed"] = model.seed();

    json blobs = json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, param] : named) {
        json blob;
        blob["name"] = name;
        blob["rows"] = param->rows();
        blob["cols"] = param->cols();
        blob["offset"] = offset;
        const std::uint64_t bytes = param->size() * sizeof(double);
        blob["bytes"] = bytes;
        blob["crc32"] = crc32_bytes(param->data(), bytes);
        blobs.push_back(std::move(blob));
        offset += bytes;
    }
    manifest["blobs"] = std::move(blobs);
    const std::string manifest_text = manifest.dump();

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("checkpoint: cannot open " + tmp + " for writing");
        out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
        const std::uint64_t len = manifest_text.size();
        out.write(reinterpret_cast<const char*>(&len), sizeof(len));
        out.write(manifest_text.data(), static_cast<std::streamsize>(manifest_text.size()));
        for (const auto& [name, param] : named) {
            out.write(reinterpret_cast<const char*>(param->data()),
                      static_cast<std::streamsize>(param->size() * sizeof(double)));
        }
        if (!out) throw std::runtime_error("checkpoint: short write to " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

NBeatsModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path);

    char magic[sizeof(kCheckpointMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw std::runtime_error("checkpoint: bad magic in " + path);
    }
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in || len == 0 || len > (1ull << 30)) {
        throw std::runtime_error("checkpoint: implausible manifest length in " + path);
    }
    std::string manifest_text(len, '\0');
    in.read(manifest_text.data(), static_cast<std::streamsize>(len));
    if (!in) throw std::runtime_error("checkpoint: truncated manifest in " + path);

    json manifest;
    try {
        manifest = json::parse(manifest_text);
    } catch (const json::exception& e) {
        throw std::runtime_error("checkpoint: manifest is not valid JSON: " + std::string(e.what()));
    }
    if (manifest.at("schema_version").get<int>() != kCheckpointSchemaVersion) {
        throw std::runtime_error("checkpoint: unsupported schema version in " + path);
    }

    ModelConfig cfg;
    cfg.blocks = manifest.at("blocks").get<int>();
    cfg.layers = manifest.at("layers").get<int>();
    cfg.width = manifest.at("width").get<int>();
    cfg.horizon = manifest.at("horizon").get<int>();
    cfg.lookback_multiple = manifest.at("lookback_multiple").get<int>();
    cfg.share_weights = manifest.at("share_weights").get<bool>();
    cfg.activation = parse_activation(manifest.at("activation").get<std::string>());
    const auto seed = manifest.at("seed").get<std::uint64_t>();
    if (manifest.at("lookback").get<int>() != cfg.lookback()) {
        throw std::runtime_error("checkpoint: lookback disagrees with multiple * horizon");
    }

    // Build a correctly shaped model, then overwrite every parameter from
    // its blob. The blob table must cover exactly the canonical parameters.
    NBeatsModel model = build_model(cfg, seed);
    auto params = model.parameters();
    const auto named = model.named_parameters();
    const json& blobs = manifest.at("blobs");
    if (blobs.size() != params.size()) {
        throw std::runtime_error("checkpoint: blob count does not match model geometry");
    }

    const std::streamoff payload_start = in.tellg();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const json& blob = blobs[i];
        if (blob.at("name").get<std::string>() != named[i].first) {
            throw std::runtime_error("checkpoint: blob order mismatch at '" +
                                     blob.at("name").get<std::string>() + "'");
        }
        Matrix& param = *params[i];
        if (blob.at("rows").get<std::size_t>() != param.rows() ||
            blob.at("cols").get<std::size_t>() != param.cols()) {
            throw std::runtime_error("checkpoint: blob shape mismatch for " + named[i].first);
        }
        const auto bytes = blob.at("bytes").get<std::uint64_t>();
        if (bytes != param.size() * sizeof(double)) {
            throw std::runtime_error("checkpoint: blob size mismatch for " + named[i].first);
        }
        in.seekg(payload_start + static_cast<std::streamoff>(blob.at("offset").get<std::uint64_t>()));
        in.read(reinterpret_cast<char*>(param.data()), static_cast<std::streamsize>(bytes));
        if (!in) throw std::runtime_error("checkpoint: truncated blob for " + named[i].first);
        const std::uint32_t got = crc32_bytes(param.data(), bytes);
        if (got != blob.at("crc32").get<std::uint32_t>()) {
            throw std::runtime_error("checkpoint: crc mismatch in blob " + named[i].first);
        }
    }
    return model;
}

std::uint32_t model_digest(const NBeatsModel& model) {
    uLong crc = ::crc32(0L, nullptr, 0);
    for (const auto& [name, param] : model.named_parameters()) {
        crc = ::crc32(crc, reinterpret_cast<const Bytef*>(param->data()),
                      static_cast<uInt>(param->size() * sizeof(double)));
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace nbeats
