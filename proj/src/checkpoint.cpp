#include "egospeak/error.hpp"
#include "egospeak/model.hpp"

#include "binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace egospeak {

namespace {
constexpr char kCheckpointMagic[4] = {'E', 'G', 'C', 'K'};
}

void write_checkpoint(const GruParams &params, const std::filesystem::path &path) {
    validate(params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FileFormatError(FileErrc::Io, "cannot open " + path.string() + " for writing");
    }
    out.write(kCheckpointMagic, 4);
    detail::put_le<std::uint32_t>(out, kCheckpointVersion);
    const ModelConfig &cfg = params.cfg;
    for (std::size_t v : {cfg.d_in, cfg.d_embed, cfg.d_hidden, cfg.horizon, cfg.num_classes}) {
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v));
    }
    params.for_each_block([&](std::string_view, const std::vector<float> &block, BlockKind) {
        detail::put_f32_span(out, block);
    });
    if (!out) {
        throw FileFormatError(FileErrc::Io, "write failed: " + path.string());
    }
}

GruParams read_checkpoint(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileFormatError(FileErrc::Io, "cannot open " + path.string());
    }
    char magic[4];
    detail::get_bytes(in, magic, 4, "magic");
    if (!std::equal(magic, magic + 4, kCheckpointMagic)) {
        throw FileFormatError(FileErrc::BadMagic, path.string() + " is not a checkpoint");
    }
    const auto version = detail::get_le<std::uint32_t>(in, "version");
    if (version != kCheckpointVersion) {
        throw FileFormatError(FileErrc::VersionMismatch,
                              "checkpoint version " + std::to_string(version));
    }
    ModelConfig cfg;
    cfg.d_in = detail::get_le<std::uint32_t>(in, "d_in");
    cfg.d_embed = detail::get_le<std::uint32_t>(in, "d_embed");
    cfg.d_hidden = detail::get_le<std::uint32_t>(in, "d_hidden");
    cfg.horizon = detail::get_le<std::uint32_t>(in, "horizon");
    cfg.num_classes = detail::get_le<std::uint32_t>(in, "num_classes");
    try {
        validate(cfg);
    } catch (const DomainError &e) {
        throw FileFormatError(FileErrc::BadHeader, e.what());
    }
    if (cfg.d_in > 65536 || cfg.d_embed > 65536 || cfg.d_hidden > 65536 || cfg.horizon > 4096) {
        throw FileFormatError(FileErrc::BadHeader, "implausible checkpoint dimensions");
    }

    GruParams params = zero_params<float>(cfg);
    params.for_each_block([&](std::string_view name, std::vector<float> &block, BlockKind) {
        detail::get_f32_span(in, block, "parameters");
        for (float v : block) {
            if (!std::isfinite(v)) {
                throw FileFormatError(FileErrc::NonFinite,
                                      "non-finite value in block " + std::string(name));
            }
        }
    });
    detail::expect_eof(in, "parameters");
    return params;
}

} // namespace egospeak
