#pragma once

#include "egospeak/timebase.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace egospeak {

// ─── Feature Streams ─────────────────────────────────────────────────────────

// T x D row-major matrix of per-frame features.
class FeatureStream {
public:
    FeatureStream(FrameClock clock, std::size_t dim, std::vector<float> frames,
                  std::string modality_tag);

    const FrameClock &clock() const noexcept { return clock_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t num_frames() const noexcept { return frames_.size() / dim_; }
    const std::string &modality_tag() const noexcept { return tag_; }

    std::span<const float> frame(std::size_t t) const {
        return {frames_.data() + t * dim_, dim_};
    }
    std::span<const float> data() const noexcept { return frames_; }
    std::span<float> mutable_data() noexcept { return frames_; }

    // Frames [begin, end) as a new stream.
    FeatureStream slice(std::size_t begin, std::size_t end) const;

    friend bool operator==(const FeatureStream &, const FeatureStream &) = default;

private:
    FrameClock clock_;
    std::size_t dim_;
    std::vector<float> frames_;
    std::string tag_;
};

// Layout (little-endian): "EGF1" | u32 version=1 | u32 dim | u64 num_frames |
// f32 fps | u32 tag_len | tag bytes | num_frames*dim f32 row-major.
inline constexpr std::uint32_t kFeatureFileVersion = 1;

void write_feature_file(const FeatureStream &stream, const std::filesystem::path &path);
FeatureStream read_feature_file(const std::filesystem::path &path);

// Frame-wise concatenation; the longer stream is truncated.
FeatureStream concat_modalities(const FeatureStream &a, const FeatureStream &b);

// ─── Synthetic conversations ─────────────────────────────────────────────────

struct SynthConfig {
    std::array<double, kNumClasses> dwell_mean_frames{10.0, 10.0, 10.0};
    // Row-stochastic with zero diagonal, indexed [from][to].
    std::array<std::array<double, kNumClasses>, kNumClasses> transition_weights{{
        {0.0, 0.5, 0.5},
        {0.5, 0.0, 0.5},
        {0.5, 0.5, 0.0},
    }};
    std::size_t dim = 16;
    double class_mean_separation = 3.0;
    double noise_sigma = 1.0;
    std::size_t cue_lead_frames = 3;
    std::uint64_t seed = 0;
    std::uint32_t fps = 5;
};

void validate(const SynthConfig &cfg); // throws DomainError

struct SynthClip {
    FeatureStream features;
    LabelTrack labels;
};

// Semi-Markov label chain with geometric dwell; features are the class mean
// (s * e_c) plus isotropic Gaussian noise, with the mean sliding linearly
// toward the next state's over the last cue_lead_frames of every run.
SynthClip synth_conversation(const SynthConfig &cfg, std::size_t num_frames);

} // namespace egospeak
