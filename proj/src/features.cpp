#include "egospeak/features.hpp"

#include "binary_io.hpp"
#include "egospeak/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace egospeak {

FeatureStream::FeatureStream(FrameClock clock, std::size_t dim, std::vector<float> frames,
                             std::string modality_tag)
    : clock_(clock), dim_(dim), frames_(std::move(frames)), tag_(std::move(modality_tag)) {
    if (dim_ == 0) {
        throw DomainError("feature dimension must be >= 1");
    }
    if (frames_.empty() || frames_.size() % dim_ != 0) {
        throw DomainError("feature payload must hold a whole, non-zero number of frames");
    }
    for (std::size_t i = 0; i < frames_.size(); ++i) {
        if (!std::isfinite(frames_[i])) {
            throw DomainError("non-finite feature at frame " + std::to_string(i / dim_));
        }
    }
}

FeatureStream FeatureStream::slice(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > num_frames()) {
        throw DomainError("invalid frame slice");
    }
    std::vector<float> sub(frames_.begin() + static_cast<std::ptrdiff_t>(begin * dim_),
                           frames_.begin() + static_cast<std::ptrdiff_t>(end * dim_));
    return FeatureStream(clock_, dim_, std::move(sub), tag_);
}

namespace {
constexpr char kFeatureMagic[4] = {'E', 'G', 'F', '1'};
}

void write_feature_file(const FeatureStream &stream, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw FileFormatError(FileErrc::Io, "cannot open " + path.string() + " for writing");
    }
    out.write(kFeatureMagic, 4);
    detail::put_le<std::uint32_t>(out, kFeatureFileVersion);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stream.dim()));
    detail::put_le<std::uint64_t>(out, stream.num_frames());
    detail::put_f32(out, static_cast<float>(stream.clock().fps()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stream.modality_tag().size()));
    out.write(stream.modality_tag().data(),
              static_cast<std::streamsize>(stream.modality_tag().size()));
    detail::put_f32_span(out, stream.data());
    if (!out) {
        throw FileFormatError(FileErrc::Io, "write failed: " + path.string());
    }
}

FeatureStream read_feature_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FileFormatError(FileErrc::Io, "cannot open " + path.string());
    }
    char magic[4];
    detail::get_bytes(in, magic, 4, "magic");
    if (!std::equal(magic, magic + 4, kFeatureMagic)) {
        throw FileFormatError(FileErrc::BadMagic, path.string() + " is not a feature file");
    }
    const auto version = detail::get_le<std::uint32_t>(in, "version");
    if (version != kFeatureFileVersion) {
        throw FileFormatError(FileErrc::VersionMismatch,
                              "feature file version " + std::to_string(version));
    }
    const auto dim = detail::get_le<std::uint32_t>(in, "dim");
    const auto num_frames = detail::get_le<std::uint64_t>(in, "num_frames");
    const float fps = detail::get_f32(in, "fps");
    const auto tag_len = detail::get_le<std::uint32_t>(in, "tag_len");
    if (dim == 0 || num_frames == 0) {
        throw FileFormatError(FileErrc::BadHeader, "empty feature matrix");
    }
    if (!(fps >= 1.0f) || fps != std::floor(fps) || fps > 1e6f) {
        throw FileFormatError(FileErrc::BadHeader, "frame rate must be a positive integer");
    }
    if (tag_len > 4096) {
        throw FileFormatError(FileErrc::BadHeader, "modality tag too long");
    }
    std::string tag(tag_len, '\0');
    detail::get_bytes(in, tag.data(), tag_len, "tag");

    // Check the payload size before allocating for it.
    const auto payload_start = in.tellg();
    in.seekg(0, std::ios::end);
    const auto available = static_cast<std::uint64_t>(in.tellg() - payload_start);
    in.seekg(payload_start);
    const std::uint64_t expected = num_frames * dim * sizeof(float);
    if (num_frames > (std::uint64_t{1} << 40) / dim || available < expected) {
        throw FileFormatError(FileErrc::Truncated,
                              "payload holds " + std::to_string(available) + " bytes, header needs " +
                                  std::to_string(expected));
    }
    std::vector<float> frames(num_frames * dim);
    detail::get_f32_span(in, frames, "payload");
    detail::expect_eof(in, "payload");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!std::isfinite(frames[i])) {
            throw FileFormatError(FileErrc::NonFinite,
                                  "non-finite value at frame " + std::to_string(i / dim));
        }
    }
    return FeatureStream(FrameClock(static_cast<std::uint32_t>(fps)), dim, std::move(frames),
                         std::move(tag));
}

FeatureStream concat_modalities(const FeatureStream &a, const FeatureStream &b) {
    if (a.clock() != b.clock()) {
        throw DomainError("cannot concatenate streams with different frame rates");
    }
    const std::size_t frames = std::min(a.num_frames(), b.num_frames());
    const std::size_t dim = a.dim() + b.dim();
    std::vector<float> out;
    out.reserve(frames * dim);
    for (std::size_t t = 0; t < frames; ++t) {
        auto fa = a.frame(t);
        auto fb = b.frame(t);
        out.insert(out.end(), fa.begin(), fa.end());
        out.insert(out.end(), fb.begin(), fb.end());
    }
    return FeatureStream(a.clock(), dim, std::move(out), a.modality_tag() + "+" + b.modality_tag());
}

// ─── Synthesis ───────────────────────────────────────────────────────────────

void validate(const SynthConfig &cfg) {
    for (int c = 0; c < kNumClasses; ++c) {
        if (!(cfg.dwell_mean_frames[c] >= 1.0)) {
            throw DomainError("dwell means must be >= 1 frame");
        }
        double sum = 0.0;
        for (int k = 0; k < kNumClasses; ++k) {
            const double w = cfg.transition_weights[c][k];
            if (!(w >= 0.0)) throw DomainError("transition weights must be non-negative");
            sum += w;
        }
        if (cfg.transition_weights[c][c] != 0.0) {
            throw DomainError("transition matrix must have a zero diagonal");
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw DomainError("transition row " + std::to_string(c) + " does not sum to 1");
        }
    }
    if (cfg.dim < static_cast<std::size_t>(kNumClasses)) {
        throw DomainError("synthetic features need dim >= 3 for orthogonal class means");
    }
    if (!(cfg.noise_sigma > 0.0)) throw DomainError("noise sigma must be positive");
    if (!(cfg.class_mean_separation >= 0.0)) throw DomainError("class separation must be >= 0");
    if (cfg.fps == 0) throw DomainError("fps must be positive");
}

SynthClip synth_conversation(const SynthConfig &cfg, std::size_t num_frames) {
    validate(cfg);
    if (num_frames == 0) throw DomainError("num_frames must be >= 1");

    std::mt19937_64 rng(cfg.seed);
    auto draw_dwell = [&](int c) {
        std::geometric_distribution<std::size_t> geo(1.0 / cfg.dwell_mean_frames[c]);
        return 1 + geo(rng);
    };
    auto draw_next = [&](int c) {
        const auto &row = cfg.transition_weights[c];
        std::discrete_distribution<int> pick(row.begin(), row.end());
        return pick(rng);
    };

    // Runs of (class, length), generated one past the clip end so every
    // in-clip frame knows its successor state.
    struct Run {
        int cls;
        std::size_t length;
    };
    std::vector<Run> runs;
    std::uniform_int_distribution<int> first_state(0, kNumClasses - 1);
    int state = first_state(rng);
    std::size_t covered = 0;
    while (covered < num_frames) {
        const std::size_t len = draw_dwell(state);
        runs.push_back({state, len});
        covered += len;
        state = draw_next(state);
    }
    runs.push_back({state, 1});

    LabelTrack labels{FrameClock(cfg.fps), {}};
    labels.labels.reserve(num_frames);
    std::vector<float> frames(num_frames * cfg.dim);
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    const double s = cfg.class_mean_separation;
    const double lead = static_cast<double>(cfg.cue_lead_frames);

    std::size_t t = 0;
    for (std::size_t r = 0; r + 1 < runs.size() && t < num_frames; ++r) {
        const int cur = runs[r].cls;
        const int next = runs[r + 1].cls;
        for (std::size_t k = 0; k < runs[r].length && t < num_frames; ++k, ++t) {
            labels.labels.push_back(static_cast<ClassId>(cur));
            const std::size_t until = runs[r].length - k; // 1 on the run's last frame
            double w = 0.0;
            if (until <= cfg.cue_lead_frames) {
                w = (lead - static_cast<double>(until) + 1.0) / (lead + 1.0);
            }
            float *row = frames.data() + t * cfg.dim;
            for (std::size_t d = 0; d < cfg.dim; ++d) {
                double mean = 0.0;
                if (d == static_cast<std::size_t>(cur)) mean += (1.0 - w) * s;
                if (d == static_cast<std::size_t>(next)) mean += w * s;
                row[d] = static_cast<float>(mean + noise(rng));
            }
        }
    }
    return {FeatureStream(FrameClock(cfg.fps), cfg.dim, std::move(frames), "synthetic"),
            std::move(labels)};
}

} // namespace egospeak
