#pragma once

#include "egospeak/scores.hpp"
#include "egospeak/timebase.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace egospeak {

// Uniformly random one-hot class per frame and offset.
ScoreSequence random_baseline_scores(std::size_t num_frames, std::size_t horizon,
                                     std::uint64_t seed);

struct TriggerEvent {
    std::size_t frame = 0;
    friend bool operator==(const TriggerEvent &, const TriggerEvent &) = default;
};

inline constexpr int kDefaultSilenceMs = 600;
inline constexpr std::size_t kDefaultGraceFrames = 3;

// Fires at frame t when the silence_ms preceding t is all background and the
// frame just before that silence is other-speaker speech. Any non-background
// frame during the countdown cancels it.
std::vector<TriggerEvent> silence_triggers(const LabelTrack &track,
                                           int silence_ms = kDefaultSilenceMs);

// Generous scoring of triggers against ground truth: a trigger inside a
// target segment, or one that target segment starts within grace_frames
// after, credits the whole segment; any other trigger scores only itself.
std::vector<double> generous_score_track(const std::vector<TriggerEvent> &triggers,
                                         const LabelTrack &gt,
                                         std::size_t grace_frames = kDefaultGraceFrames);

// Score tensor for a binary target-score track: at frame t every offset
// carries score[t] on the target class and zero elsewhere.
ScoreSequence target_track_scores(const std::vector<double> &target_scores, std::size_t horizon);

// CSV `frame`.
void write_triggers_csv(const std::vector<TriggerEvent> &triggers,
                        const std::filesystem::path &path);

} // namespace egospeak
